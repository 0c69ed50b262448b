//! Hierarchical association identifiers.
//!
//! An AID is a 13-bit value split into page (2 bits), block (5 bits),
//! sub-block (3 bits) and station index (3 bits). The block level doubles as
//! the TIM group used for paging and channel-access restriction, so up to
//! 8,191 stations (AID 0 is reserved) hang off a single access point.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAGE_BITS: u32 = 2;
pub const BLOCK_BITS: u32 = 5;
pub const SUBBLOCK_BITS: u32 = 3;
pub const INDEX_BITS: u32 = 3;

pub const PAGES: u16 = 1 << PAGE_BITS;
pub const BLOCKS_PER_PAGE: u16 = 1 << BLOCK_BITS;
pub const SUBBLOCKS_PER_BLOCK: u16 = 1 << SUBBLOCK_BITS;
pub const STATIONS_PER_SUBBLOCK: u16 = 1 << INDEX_BITS;
pub const STATIONS_PER_BLOCK: u16 = SUBBLOCKS_PER_BLOCK * STATIONS_PER_SUBBLOCK;

/// Highest legal AID: all 13 bits set.
pub const MAX_AID: u16 = (1 << (PAGE_BITS + BLOCK_BITS + SUBBLOCK_BITS + INDEX_BITS)) - 1;

/// A validated association identifier (1..=8191).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Aid(u16);

impl Aid {
    pub fn new(raw: u16) -> Result<Self> {
        if raw == 0 {
            return Err(Error::ZeroAid);
        }
        if raw > MAX_AID {
            return Err(Error::OutOfRange {
                what: "aid",
                value: raw as i64,
                min: 1,
                max: MAX_AID as i64,
            });
        }
        Ok(Aid(raw))
    }

    pub fn raw(self) -> u16 {
        self.0
    }

    pub fn page(self) -> u8 {
        (self.0 >> (BLOCK_BITS + SUBBLOCK_BITS + INDEX_BITS)) as u8
    }

    pub fn block(self) -> u8 {
        ((self.0 >> (SUBBLOCK_BITS + INDEX_BITS)) & (BLOCKS_PER_PAGE - 1)) as u8
    }

    pub fn subblock(self) -> u8 {
        ((self.0 >> INDEX_BITS) & (SUBBLOCKS_PER_BLOCK - 1)) as u8
    }

    pub fn index(self) -> u8 {
        (self.0 & (STATIONS_PER_SUBBLOCK - 1)) as u8
    }

    pub fn group(self) -> GroupId {
        GroupId {
            page: self.page(),
            block: self.block(),
        }
    }

    /// Position of the station inside its TIM group (0..=63).
    pub fn slot_in_group(self) -> u8 {
        (self.0 & (STATIONS_PER_BLOCK - 1)) as u8
    }
}

impl fmt::Debug for Aid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Aid({})", self.0)
    }
}

impl fmt::Display for Aid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A TIM group: one block within one page.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId {
    pub page: u8,
    pub block: u8,
}

impl GroupId {
    /// Page-major ordinal, used for bitmap rendering and offset assignment.
    pub fn ordinal(self) -> u16 {
        self.page as u16 * BLOCKS_PER_PAGE + self.block as u16
    }
}

impl fmt::Debug for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}b{}", self.page, self.block)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}b{}", self.page, self.block)
    }
}

fn check_component(what: &'static str, value: u16, bits: u32) -> Result<()> {
    let max = (1u16 << bits) - 1;
    if value > max {
        return Err(Error::OutOfRange {
            what,
            value: value as i64,
            min: 0,
            max: max as i64,
        });
    }
    Ok(())
}

/// Packs the four hierarchy levels into a 13-bit AID.
pub fn encode_aid(page: u16, block: u16, subblock: u16, index: u16) -> Result<Aid> {
    check_component("page", page, PAGE_BITS)?;
    check_component("block", block, BLOCK_BITS)?;
    check_component("subblock", subblock, SUBBLOCK_BITS)?;
    check_component("index", index, INDEX_BITS)?;
    let raw = (page << (BLOCK_BITS + SUBBLOCK_BITS + INDEX_BITS))
        | (block << (SUBBLOCK_BITS + INDEX_BITS))
        | (subblock << INDEX_BITS)
        | index;
    Aid::new(raw)
}

/// Splits a raw AID back into (page, block, subblock, index).
pub fn decode_aid(raw: u16) -> Result<(u8, u8, u8, u8)> {
    let aid = Aid::new(raw)?;
    Ok((aid.page(), aid.block(), aid.subblock(), aid.index()))
}

/// How the AP spreads stations over the AID space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum GroupingPolicy {
    /// Fill index, then sub-block, then block, then page. AIDs come out as
    /// the contiguous range 1..=n.
    #[default]
    Dense,
    /// Deal stations round-robin across the first `blocks` block positions,
    /// spilling into higher pages as blocks fill up.
    RoundRobin { blocks: u8 },
}

/// Allocates `n_stations` distinct AIDs, sorted ascending.
pub fn assign_aids(n_stations: usize, policy: GroupingPolicy) -> Result<Vec<Aid>> {
    if n_stations > MAX_AID as usize {
        return Err(Error::CapacityExceeded {
            requested: n_stations,
            capacity: MAX_AID as usize,
        });
    }
    let mut aids = match policy {
        GroupingPolicy::Dense => (1..=n_stations as u16)
            .map(|raw| Aid::new(raw).expect("dense range is valid"))
            .collect::<Vec<_>>(),
        GroupingPolicy::RoundRobin { blocks } => {
            if blocks == 0 || blocks as u16 > BLOCKS_PER_PAGE {
                return Err(Error::ConfigInvalid(format!(
                    "round-robin blocks must be in 1..={BLOCKS_PER_PAGE}, got {blocks}"
                )));
            }
            let mut out = Vec::with_capacity(n_stations);
            for rank in 0..n_stations {
                let block = (rank % blocks as usize) as u16;
                let member = rank / blocks as usize;
                // Block 0 of page 0 loses one slot to the reserved AID 0.
                let slot = if block == 0 { member + 1 } else { member };
                let page = (slot / STATIONS_PER_BLOCK as usize) as u16;
                let rem = (slot % STATIONS_PER_BLOCK as usize) as u16;
                if page >= PAGES {
                    return Err(Error::CapacityExceeded {
                        requested: n_stations,
                        capacity: out.len(),
                    });
                }
                out.push(encode_aid(
                    page,
                    block,
                    rem / STATIONS_PER_SUBBLOCK,
                    rem % STATIONS_PER_SUBBLOCK,
                )?);
            }
            out
        }
    };
    aids.sort_unstable();
    Ok(aids)
}

/// Distinct TIM groups present in an assignment, ascending.
pub fn groups_of(aids: &[Aid]) -> Vec<GroupId> {
    let mut groups: Vec<GroupId> = aids.iter().map(|a| a.group()).collect();
    groups.sort_unstable();
    groups.dedup();
    groups
}
