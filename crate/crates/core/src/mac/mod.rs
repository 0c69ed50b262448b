//! MAC-layer building blocks: DCF contention, the RAW time plan, radio power
//! states, and reservation access for non-TIM and unscheduled stations.

pub mod dcf;
pub mod power;
pub mod praw;
pub mod schedule;

pub use crate::engine::segment::{
    run_downlink_segment, run_uplink_segment, ExchangeOutcome, ExchangeResult, SegContender,
    SegmentOutcome, SegmentParams,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::aid::Aid;
use crate::mac::power::RadioState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationKind {
    Tim,
    NonTim,
    Unscheduled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Downlink,
    Uplink,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Downlink => "downlink",
            Direction::Uplink => "uplink",
        }
    }
}

/// One queued data packet and its contention bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketState {
    pub id: u64,
    pub generated_us: u64,
    /// Failed attempts so far; the contention window derives from this.
    pub retries: u32,
    /// Remaining backoff slots, kept across freezes and deferrals.
    pub backoff: Option<u32>,
    /// Set once the payload has reached its destination, even if the final
    /// acknowledgment is still outstanding.
    pub delivered_at: Option<u64>,
}

impl PacketState {
    pub fn new(id: u64, generated_us: u64) -> Self {
        PacketState {
            id,
            generated_us,
            retries: 0,
            backoff: None,
            delivered_at: None,
        }
    }
}

/// Per-station MAC state owned by the simulation engine.
#[derive(Clone, Debug)]
pub struct StationState {
    pub aid: Aid,
    pub kind: StationKind,
    pub radio: RadioState,
    pub distance_m: f64,
    pub rate_kbps: u32,
    pub dl_pending: VecDeque<PacketState>,
    pub ul_pending: VecDeque<PacketState>,
    /// While set, the station skips beacon listening entirely.
    pub long_doze_until: Option<u64>,
}

impl StationState {
    pub fn new(aid: Aid, kind: StationKind, distance_m: f64, rate_kbps: u32) -> Self {
        StationState {
            aid,
            kind,
            radio: RadioState::Sleeping,
            distance_m,
            rate_kbps,
            dl_pending: VecDeque::new(),
            ul_pending: VecDeque::new(),
            long_doze_until: None,
        }
    }

    pub fn queue(&mut self, direction: Direction) -> &mut VecDeque<PacketState> {
        match direction {
            Direction::Downlink => &mut self.dl_pending,
            Direction::Uplink => &mut self.ul_pending,
        }
    }
}
