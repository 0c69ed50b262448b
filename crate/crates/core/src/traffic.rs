//! Periodic traffic with per-station random phase.
//!
//! Every station generates one uplink packet per uplink period and receives
//! one downlink packet per downlink period. Packet spacing is clamped so a
//! station never sources more than one packet per direction per DTIM cycle.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mac::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrival {
    pub at_us: u64,
    pub station: u32,
    pub direction: Direction,
}

/// Deterministic arrival plan: phases are drawn once at setup.
#[derive(Clone, Debug)]
pub struct TrafficPlan {
    ul_phase_us: Vec<u64>,
    dl_phase_us: Vec<u64>,
    ul_step_us: u64,
    dl_step_us: u64,
    duration_us: u64,
}

impl TrafficPlan {
    pub fn new(
        n_stations: u32,
        ul_interarrival_us: u64,
        dl_interarrival_us: u64,
        min_spacing_us: u64,
        duration_us: u64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if ul_interarrival_us == 0 || dl_interarrival_us == 0 {
            return Err(Error::ConfigInvalid(
                "inter-arrival periods must be positive".into(),
            ));
        }
        let mut ul_phase_us = Vec::with_capacity(n_stations as usize);
        let mut dl_phase_us = Vec::with_capacity(n_stations as usize);
        for _ in 0..n_stations {
            ul_phase_us.push((rng.gen::<f64>() * ul_interarrival_us as f64) as u64);
            dl_phase_us.push((rng.gen::<f64>() * dl_interarrival_us as f64) as u64);
        }
        Ok(TrafficPlan {
            ul_phase_us,
            dl_phase_us,
            // One packet per direction per DTIM interval, enforced at the source.
            ul_step_us: ul_interarrival_us.max(min_spacing_us),
            dl_step_us: dl_interarrival_us.max(min_spacing_us),
            duration_us,
        })
    }

    pub fn n_stations(&self) -> u32 {
        self.ul_phase_us.len() as u32
    }

    /// k-th arrival of a station in one direction, if it lands inside the run.
    pub fn arrival(&self, station: u32, direction: Direction, k: u64) -> Option<u64> {
        let (phase, step) = match direction {
            Direction::Uplink => (self.ul_phase_us[station as usize], self.ul_step_us),
            Direction::Downlink => (self.dl_phase_us[station as usize], self.dl_step_us),
        };
        let at = phase + k * step;
        (at < self.duration_us).then_some(at)
    }

    /// First arrival of a station strictly after `after_us`.
    pub fn next_after(&self, station: u32, direction: Direction, after_us: u64) -> Option<u64> {
        let (phase, step) = match direction {
            Direction::Uplink => (self.ul_phase_us[station as usize], self.ul_step_us),
            Direction::Downlink => (self.dl_phase_us[station as usize], self.dl_step_us),
        };
        let k = if after_us < phase {
            0
        } else {
            (after_us - phase) / step + 1
        };
        self.arrival(station, direction, k)
    }
}

/// Full arrival stream, sorted by (time, station, direction).
pub fn generate_traffic(plan: &TrafficPlan) -> Vec<Arrival> {
    let mut out = Vec::new();
    for station in 0..plan.n_stations() {
        for direction in [Direction::Uplink, Direction::Downlink] {
            let mut k = 0;
            while let Some(at_us) = plan.arrival(station, direction, k) {
                out.push(Arrival { at_us, station, direction });
                k += 1;
            }
        }
    }
    out.sort_by_key(|a| (a.at_us, a.station, a.direction as u8));
    out
}
