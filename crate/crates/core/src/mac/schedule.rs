//! Restricted-access-window layout for one DTIM cycle.
//!
//! A cycle is a run of equal TIM intervals, one per beacon position. The
//! first interval opens with the DTIM beacon and the multicast slot (sized
//! for one data packet), every interval carries its TIM beacon, and the
//! remainder splits into a downlink then an uplink segment proportionally to
//! the traffic fractions. Durations are whole microseconds; the division
//! remainder goes to uplink.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aid::{Aid, GroupId};
use crate::error::{Error, Result};
use crate::tim::SignalingMode;

/// Half-open window `[start, start + len)`, offsets relative to cycle start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentWindow {
    pub start: u64,
    pub len: u64,
}

impl SegmentWindow {
    pub fn end(&self) -> u64 {
        self.start + self.len
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.start && t < self.end()
    }

    pub fn overlaps(&self, other: &SegmentWindow) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// One TIM-interval slot of the cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeaconPosition {
    pub index: u8,
    /// Groups paged by this position's beacon and admitted to its segments.
    /// Non-TIM-offset mode co-schedules the same block of every page here.
    pub owners: Vec<GroupId>,
    pub beacon_at: u64,
    pub beacon_air_us: u64,
    pub dl: SegmentWindow,
    pub ul: SegmentWindow,
    /// Unreserved tail of the interval, if segment caps leave one.
    pub free: Option<SegmentWindow>,
}

/// Airtimes of the signaling frames, precomputed from the PHY profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeaconAirtimes {
    pub dtim_us: u64,
    pub tim_us: u64,
    /// Multicast slot length: one data packet at the beacon rate.
    pub multicast_us: u64,
}

/// The full time plan for one DTIM cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSchedule {
    pub tim_interval_us: u64,
    pub dtim_interval_us: u64,
    pub beta_dl: f64,
    pub dtim_air_us: u64,
    pub multicast: SegmentWindow,
    pub positions: Vec<BeaconPosition>,
    pub subslots_dl: u32,
    pub subslots_ul: u32,
}

impl RawSchedule {
    pub fn position_of_group(&self, group: GroupId) -> Option<u8> {
        self.positions
            .iter()
            .find(|p| p.owners.contains(&group))
            .map(|p| p.index)
    }

    /// All reserved windows (beacons, multicast, DL/UL segments) of a cycle.
    pub fn reserved_windows(&self) -> Vec<SegmentWindow> {
        let mut out = vec![
            SegmentWindow { start: 0, len: self.dtim_air_us },
            self.multicast,
        ];
        for p in &self.positions {
            out.push(SegmentWindow { start: p.beacon_at, len: p.beacon_air_us });
            out.push(p.dl);
            out.push(p.ul);
        }
        out.retain(|w| w.len > 0);
        out
    }

    pub fn free_windows(&self) -> Vec<SegmentWindow> {
        self.positions.iter().filter_map(|p| p.free).collect()
    }

    /// Packets per cycle each direction could carry if every exchange ran
    /// uncontended at the top MCS rate.
    pub fn capacity_per_cycle(&self, min_dl_exchange_us: u64, min_ul_exchange_us: u64) -> (u64, u64) {
        let mut dl = 0;
        let mut ul = 0;
        for p in &self.positions {
            dl += p.dl.len / min_dl_exchange_us.max(1);
            ul += p.ul.len / min_ul_exchange_us.max(1);
        }
        (dl, ul)
    }
}

/// Segment caps; `None` lets the split fill the whole residual.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCaps {
    pub dl_max_us: Option<u64>,
    pub ul_max_us: Option<u64>,
}

/// Splits a residual into (downlink, uplink) whole-microsecond durations.
pub fn split_residual(residual_us: u64, beta_dl: f64) -> (u64, u64) {
    let dl = (residual_us as f64 * beta_dl).floor() as u64;
    (dl, residual_us - dl)
}

/// Traffic fraction carried downlink, from the two inter-arrival periods.
pub fn beta_dl_from_periods(ul_interarrival_s: f64, dl_interarrival_s: f64) -> f64 {
    let ul_rate = 1.0 / ul_interarrival_s;
    let dl_rate = 1.0 / dl_interarrival_s;
    dl_rate / (ul_rate + dl_rate)
}

#[allow(clippy::too_many_arguments)]
pub fn build_raw_schedule(
    groups: &[GroupId],
    mode: SignalingMode,
    tim_interval_us: u64,
    beta_dl: f64,
    beacons: BeaconAirtimes,
    caps: SegmentCaps,
    subslots_dl: u32,
    subslots_ul: u32,
) -> Result<RawSchedule> {
    if groups.is_empty() {
        return Err(Error::ConfigInvalid("no TIM groups".into()));
    }
    if !(0.0 < beta_dl && beta_dl < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "beta_dl must be in (0, 1), got {beta_dl}"
        )));
    }
    if subslots_dl == 0 || subslots_ul == 0 {
        return Err(Error::ConfigInvalid("sub-slot counts must be at least 1".into()));
    }

    // One beacon position per block in non-offset mode, one per group with
    // TIM offsets.
    let owners_by_position: Vec<Vec<GroupId>> = match mode {
        SignalingMode::NonTimOffset => {
            let mut blocks: Vec<u8> = groups.iter().map(|g| g.block).collect();
            blocks.sort_unstable();
            blocks.dedup();
            blocks
                .into_iter()
                .map(|b| groups.iter().copied().filter(|g| g.block == b).collect())
                .collect()
        }
        SignalingMode::TimOffset => {
            if groups.len() - 1 > crate::tim::MAX_TIM_OFFSET {
                return Err(Error::OffsetOverflow {
                    needed: groups.len() - 1,
                    max: crate::tim::MAX_TIM_OFFSET,
                });
            }
            let mut sorted = groups.to_vec();
            sorted.sort_unstable();
            sorted.into_iter().map(|g| vec![g]).collect()
        }
    };

    let first_overhead = beacons.dtim_us + beacons.multicast_us + beacons.tim_us;
    if first_overhead >= tim_interval_us {
        return Err(Error::Infeasible(format!(
            "beacon and multicast airtime ({first_overhead} us) does not fit in the \
             TIM interval ({tim_interval_us} us)"
        )));
    }

    let n = owners_by_position.len() as u64;
    let dtim_interval_us = tim_interval_us * n;
    let multicast = SegmentWindow {
        start: beacons.dtim_us,
        len: beacons.multicast_us,
    };

    let mut positions = Vec::with_capacity(owners_by_position.len());
    for (i, owners) in owners_by_position.into_iter().enumerate() {
        let interval_start = i as u64 * tim_interval_us;
        let beacon_at = if i == 0 {
            interval_start + beacons.dtim_us + beacons.multicast_us
        } else {
            interval_start
        };
        let seg_start = beacon_at + beacons.tim_us;
        let residual = interval_start + tim_interval_us - seg_start;
        let (mut dl_len, mut ul_len) = split_residual(residual, beta_dl);
        if let Some(cap) = caps.dl_max_us {
            dl_len = dl_len.min(cap);
        }
        if let Some(cap) = caps.ul_max_us {
            ul_len = ul_len.min(cap);
        }
        let dl = SegmentWindow { start: seg_start, len: dl_len };
        let ul = SegmentWindow { start: dl.end(), len: ul_len };
        let free_len = interval_start + tim_interval_us - ul.end();
        let free = (free_len > 0).then_some(SegmentWindow { start: ul.end(), len: free_len });
        positions.push(BeaconPosition {
            index: i as u8,
            owners,
            beacon_at,
            beacon_air_us: beacons.tim_us,
            dl,
            ul,
            free,
        });
    }

    Ok(RawSchedule {
        tim_interval_us,
        dtim_interval_us,
        beta_dl,
        dtim_air_us: beacons.dtim_us,
        multicast,
        positions,
        subslots_dl,
        subslots_ul,
    })
}

/// Round-robin sub-slot assignment over AID order.
pub fn assign_subslots(members: &[Aid], n_subslots: u32) -> BTreeMap<Aid, u32> {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, aid)| (aid, i as u32 % n_subslots))
        .collect()
}

/// Splits a segment into `n` sub-slot windows; leftover microseconds go to
/// the earliest sub-slots one each.
pub fn subslot_windows(segment: SegmentWindow, n: u32) -> Vec<SegmentWindow> {
    let n = n.max(1) as u64;
    let base = segment.len / n;
    let extra = segment.len % n;
    let mut out = Vec::with_capacity(n as usize);
    let mut start = segment.start;
    for i in 0..n {
        let len = base + if i < extra { 1 } else { 0 };
        out.push(SegmentWindow { start, len });
        start += len;
    }
    out
}
