//! Radio power states and the per-station time ledger.
//!
//! Every microsecond of a station's simulated life is attributed to exactly
//! one of four states. All engine state changes funnel through
//! [`advance_power_state`], so an impossible event sequence is a simulator
//! bug that surfaces as [`Error::IllegalTransition`] instead of silently
//! skewing the energy books.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadioState {
    Receiving,
    Transmitting,
    Idle,
    Sleeping,
}

/// Events that move a station between radio states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerEvent {
    /// A beacon the station must listen to is on the air.
    BeaconDue,
    /// An incoming or overheard frame starts.
    RxStart,
    /// The frame ends; `stay_awake` keeps the radio on (idle) instead of
    /// dozing off.
    RxEnd { stay_awake: bool },
    TxStart,
    TxEnd { stay_awake: bool },
    /// One idle backoff slot or inter-frame space elapses.
    BackoffTick,
    /// The station's access window opened; the radio turns on to contend.
    SegmentStart,
    /// The station's access window closed with work left over.
    SegmentEnd,
    DozeStart,
    /// Scheduled wake ahead of a target beacon; the radio turns on to listen.
    DozeEnd,
}

impl std::fmt::Display for PowerEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Deterministic transition table.
pub fn advance_power_state(state: RadioState, event: PowerEvent) -> Result<RadioState> {
    use PowerEvent::*;
    use RadioState::*;
    let next = match (state, event) {
        (Sleeping, BeaconDue) | (Idle, BeaconDue) => Receiving,
        (Sleeping, RxStart) | (Idle, RxStart) => Receiving,
        (Receiving, RxEnd { stay_awake: true }) => Idle,
        (Receiving, RxEnd { stay_awake: false }) => Sleeping,
        (Idle, TxStart) => Transmitting,
        (Transmitting, TxEnd { stay_awake: true }) => Idle,
        (Transmitting, TxEnd { stay_awake: false }) => Sleeping,
        (Idle, BackoffTick) => Idle,
        (Sleeping, SegmentStart) => Idle,
        (Idle, SegmentEnd) => Sleeping,
        (Idle, DozeStart) => Sleeping,
        (Sleeping, DozeEnd) => Receiving,
        (s, e) => {
            return Err(Error::IllegalTransition {
                state: s,
                event: e.to_string(),
            })
        }
    };
    Ok(next)
}

/// Integer-microsecond time spent in each radio state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLedger {
    pub rx_us: u64,
    pub tx_us: u64,
    pub idle_us: u64,
    pub sleep_us: u64,
}

impl StateLedger {
    pub fn total_us(&self) -> u64 {
        self.rx_us + self.tx_us + self.idle_us + self.sleep_us
    }

    pub fn add(&mut self, state: RadioState, us: u64) {
        match state {
            RadioState::Receiving => self.rx_us += us,
            RadioState::Transmitting => self.tx_us += us,
            RadioState::Idle => self.idle_us += us,
            RadioState::Sleeping => self.sleep_us += us,
        }
    }

    pub fn sleep_fraction(&self) -> f64 {
        let total = self.total_us();
        if total == 0 {
            return 1.0;
        }
        self.sleep_us as f64 / total as f64
    }
}

/// Tracks one station's radio state over time and accumulates the ledger.
#[derive(Clone, Debug)]
pub struct PowerTracker {
    state: RadioState,
    since_us: u64,
    pub ledger: StateLedger,
}

impl PowerTracker {
    pub fn new(start_us: u64) -> Self {
        PowerTracker {
            state: RadioState::Sleeping,
            since_us: start_us,
            ledger: StateLedger::default(),
        }
    }

    pub fn state(&self) -> RadioState {
        self.state
    }

    /// Time of the last applied transition.
    pub fn since_us(&self) -> u64 {
        self.since_us
    }

    /// Applies `event` at absolute time `at_us`, attributing the elapsed
    /// interval to the state being left.
    pub fn apply(&mut self, event: PowerEvent, at_us: u64) -> Result<()> {
        debug_assert!(at_us >= self.since_us, "time went backwards");
        let next = advance_power_state(self.state, event)?;
        self.ledger.add(self.state, at_us - self.since_us);
        self.state = next;
        self.since_us = at_us;
        Ok(())
    }

    /// Closes the books at the end of the simulation.
    pub fn finish(&mut self, end_us: u64) {
        debug_assert!(end_us >= self.since_us);
        self.ledger.add(self.state, end_us - self.since_us);
        self.since_us = end_us;
    }
}
