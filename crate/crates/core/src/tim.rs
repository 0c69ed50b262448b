//! DTIM / TIM beacon signaling and the station sleep rule.
//!
//! DTIM beacons page at TIM-group granularity and carry the access-window
//! geometry for the cycle; TIM beacons page individual stations of one group.
//! With more than one page, non-TIM-offset mode repeats each block position's
//! bitmaps for every page inside a single beacon, while TIM-offset mode gives
//! every (page, block) group its own beacon slot addressed by a 5-bit offset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aid::{Aid, GroupId, BLOCKS_PER_PAGE, PAGES, STATIONS_PER_BLOCK};
use crate::error::{Error, Result};

/// Width of the TIM-offset field in the DTIM beacon.
pub const TIM_OFFSET_BITS: u32 = 5;
pub const MAX_TIM_OFFSET: usize = (1 << TIM_OFFSET_BITS) - 1;

/// Advanced signaling mode used when laying out TIM beacons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalingMode {
    /// One TIM beacon per block position; the beacon repeats that block's
    /// bitmap once per network page. Default mode.
    #[default]
    NonTimOffset,
    /// One TIM beacon per (page, block) group at its own offset slot.
    TimOffset,
}

/// Group-level pending map carried by a DTIM beacon.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DtimBitmap {
    /// One 32-bit mask per page; bit b set means group (page, b) has pending
    /// downlink data at the AP.
    pending: [u32; PAGES as usize],
    /// Offset slot per group, present only in TIM-offset mode.
    pub tim_offsets: Option<BTreeMap<GroupId, u8>>,
    /// Segment geometry announced for the upcoming cycle.
    pub geometry: RawGeometry,
}

/// Per-cycle access-window geometry summarized in the DTIM beacon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RawGeometry {
    pub tim_interval_us: u64,
    pub multicast_us: u64,
    pub dl_us: u64,
    pub ul_us: u64,
}

impl DtimBitmap {
    pub fn set_group(&mut self, group: GroupId) {
        self.pending[group.page as usize] |= 1 << group.block;
    }

    pub fn group_pending(&self, group: GroupId) -> bool {
        self.pending[group.page as usize] & (1 << group.block) != 0
    }

    pub fn pending_groups(&self) -> Vec<GroupId> {
        let mut out = Vec::new();
        for page in 0..PAGES as u8 {
            for block in 0..BLOCKS_PER_PAGE as u8 {
                let g = GroupId { page, block };
                if self.group_pending(g) {
                    out.push(g);
                }
            }
        }
        out
    }

    /// Hex rendering of the group bitmap, most-significant bit first: bit 0
    /// of the string is group ordinal 0 (page 0, block 0).
    pub fn groups_hex(&self) -> String {
        let mut bytes = [0u8; (PAGES as usize * BLOCKS_PER_PAGE as usize) / 8];
        for g in self.pending_groups() {
            let ord = g.ordinal() as usize;
            bytes[ord / 8] |= 0x80 >> (ord % 8);
        }
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Station-level pending map for a single TIM group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimBitmap {
    pub group: GroupId,
    /// Bit k set means the station at slot k (subblock*8 + index) is paged.
    bits: u64,
}

impl TimBitmap {
    pub fn new(group: GroupId) -> Self {
        TimBitmap { group, bits: 0 }
    }

    pub fn set(&mut self, aid: Aid) {
        debug_assert_eq!(aid.group(), self.group);
        self.bits |= 1 << aid.slot_in_group();
    }

    pub fn contains(&self, aid: Aid) -> bool {
        aid.group() == self.group && self.bits & (1 << aid.slot_in_group()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn paged_slots(&self) -> impl Iterator<Item = u8> + '_ {
        (0..STATIONS_PER_BLOCK as u8).filter(|s| self.bits & (1 << s) != 0)
    }

    /// Hex rendering, most-significant bit first: bit 0 is station slot 0.
    pub fn stations_hex(&self) -> String {
        let mut bytes = [0u8; 8];
        for slot in self.paged_slots() {
            bytes[slot as usize / 8] |= 0x80 >> (slot % 8);
        }
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One beacon of the per-cycle sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum BeaconFrame {
    Dtim(DtimBitmap),
    Tim {
        /// TIM-interval slot this beacon occupies within the cycle.
        position: u8,
        /// One bitmap per page sharing this position (non-TIM-offset), or a
        /// single group's bitmap (TIM-offset).
        bitmaps: Vec<TimBitmap>,
    },
}

/// Map from group to the AIDs with pending downlink data.
pub type PendingMap = BTreeMap<GroupId, Vec<Aid>>;

/// Builds the DTIM + TIM beacon sequence for one cycle.
///
/// `groups` is the full set of groups defined in the network, pending or not;
/// beacon positions exist for every defined group so the cycle length does
/// not depend on traffic.
pub fn build_beacon_sequence(
    groups: &[GroupId],
    mode: SignalingMode,
    pending: &PendingMap,
) -> Result<Vec<BeaconFrame>> {
    if groups.is_empty() {
        return Err(Error::ConfigInvalid("no TIM groups defined".into()));
    }
    let mut dtim = DtimBitmap::default();
    for (&group, aids) in pending {
        if !aids.is_empty() {
            dtim.set_group(group);
        }
    }

    let mut beacons = Vec::new();
    match mode {
        SignalingMode::NonTimOffset => {
            let mut positions: Vec<u8> = groups.iter().map(|g| g.block).collect();
            positions.sort_unstable();
            positions.dedup();
            beacons.push(BeaconFrame::Dtim(dtim));
            for (slot, &block) in positions.iter().enumerate() {
                let bitmaps = groups
                    .iter()
                    .filter(|g| g.block == block)
                    .map(|&g| {
                        let mut bm = TimBitmap::new(g);
                        if let Some(aids) = pending.get(&g) {
                            for &aid in aids {
                                bm.set(aid);
                            }
                        }
                        bm
                    })
                    .collect();
                beacons.push(BeaconFrame::Tim {
                    position: slot as u8,
                    bitmaps,
                });
            }
        }
        SignalingMode::TimOffset => {
            if groups.len() - 1 > MAX_TIM_OFFSET {
                return Err(Error::OffsetOverflow {
                    needed: groups.len() - 1,
                    max: MAX_TIM_OFFSET,
                });
            }
            let mut sorted = groups.to_vec();
            sorted.sort_unstable();
            dtim.tim_offsets = Some(
                sorted
                    .iter()
                    .enumerate()
                    .map(|(off, &g)| (g, off as u8))
                    .collect(),
            );
            beacons.push(BeaconFrame::Dtim(dtim));
            for (off, &g) in sorted.iter().enumerate() {
                let mut bm = TimBitmap::new(g);
                if let Some(aids) = pending.get(&g) {
                    for &aid in aids {
                        bm.set(aid);
                    }
                }
                beacons.push(BeaconFrame::Tim {
                    position: off as u8,
                    bitmaps: vec![bm],
                });
            }
        }
    }
    Ok(beacons)
}

/// Whether a station may spend the whole access-window period asleep.
///
/// A station sleeps iff it has nothing to transmit and either its group is
/// not paged in the DTIM or its own bit is clear in the group's TIM bitmap.
/// A station paged in its TIM beacon stays awake to contend.
pub fn station_may_sleep(
    aid: Aid,
    dtim: &DtimBitmap,
    tim: Option<&TimBitmap>,
    has_uplink: bool,
) -> Result<bool> {
    if has_uplink {
        return Ok(false);
    }
    let group = aid.group();
    if !dtim.group_pending(group) {
        return Ok(true);
    }
    match tim {
        Some(bm) if bm.group == group => Ok(!bm.contains(aid)),
        _ => Err(Error::MissingTim {
            page: group.page,
            block: group.block,
        }),
    }
}
