//! Run metrics: delivery ratio, delivery delay, channel occupancy, and the
//! per-station energy ledgers everything downstream is derived from.

use std::io::Write;

use serde::Serialize;

use crate::aid::Aid;
use crate::energy::{
    average_current, battery_lifetime, energy_consumed, energy_per_bit, BatterySpec, EnergyLedger,
    RadioPowerProfile,
};
use crate::error::{Error, Result};
use crate::mac::Direction;
use crate::scalar::Real;

/// Mean packet delivery delay in seconds and in DTIM-beacon counts.
pub fn compute_pdd<F: Real>(delays_us: &[u64], dtim_interval_us: u64) -> Result<(F, F)> {
    if delays_us.is_empty() {
        return Err(Error::NoDeliveries);
    }
    let sum: u128 = delays_us.iter().map(|&d| d as u128).sum();
    let mean_us = sum as f64 / delays_us.len() as f64;
    let seconds = F::from_f64_lossy(mean_us / 1e6);
    let beacons = F::from_f64_lossy(mean_us / dtim_interval_us as f64);
    Ok((seconds, beacons))
}

/// Delivered packets against the theoretical capacity, as a percentage.
pub fn compute_occupancy<F: Real>(delivered: u64, capacity: u64) -> Result<F> {
    if capacity == 0 {
        return Err(Error::ZeroCapacity("theoretical"));
    }
    Ok(F::from_u64_lossy(delivered) / F::from_u64_lossy(capacity) * F::from_f64_lossy(100.0))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DirectionMetrics<F> {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Generated but neither delivered nor dropped when the run ended.
    pub in_flight: u64,
    /// Deliveries of packets generated inside the measurement window.
    pub delivered_measured: u64,
    /// Theoretical capacity of the measurement window, in packets.
    pub capacity_measured: u64,
    pub pdr_pct: F,
    pub pdd_s: Option<F>,
    pub pdd_beacons: Option<F>,
    pub eta_pct: F,
}

impl<F: Real> DirectionMetrics<F> {
    pub fn finalize(&mut self, delays_us: &[u64], dtim_interval_us: u64) {
        let denom = self.generated.saturating_sub(self.in_flight);
        self.pdr_pct = if denom == 0 {
            F::from_f64_lossy(100.0)
        } else {
            F::from_u64_lossy(self.delivered) / F::from_u64_lossy(denom) * F::from_f64_lossy(100.0)
        };
        if let Ok((s, b)) = compute_pdd::<F>(delays_us, dtim_interval_us) {
            self.pdd_s = Some(s);
            self.pdd_beacons = Some(b);
        }
        self.eta_pct = compute_occupancy(self.delivered_measured, self.capacity_measured)
            .unwrap_or_else(|_| F::zero());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StationMetrics<F> {
    pub aid: Aid,
    pub distance_m: F,
    pub rate_kbps: u32,
    pub ledger: EnergyLedger,
    pub energy_mj: F,
    pub avg_current_ma: F,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport<F> {
    pub scenario: String,
    pub seed: u64,
    pub duration_us: u64,
    pub dtim_interval_us: u64,
    pub cycles: u64,
    pub warmup_cycles: u64,
    pub downlink: DirectionMetrics<F>,
    pub uplink: DirectionMetrics<F>,
    pub collisions: u64,
    pub retransmissions: u64,
    pub stations: Vec<StationMetrics<F>>,
}

impl<F: Real> MetricsReport<F> {
    pub fn direction(&self, d: Direction) -> &DirectionMetrics<F> {
        match d {
            Direction::Downlink => &self.downlink,
            Direction::Uplink => &self.uplink,
        }
    }

    /// Station with the highest energy use; ties break on the lower AID.
    pub fn worst_station(&self) -> Option<&StationMetrics<F>> {
        self.stations.iter().fold(None, |best: Option<&StationMetrics<F>>, s| match best {
            Some(b) if b.energy_mj >= s.energy_mj => Some(b),
            _ => Some(s),
        })
    }

    pub fn min_sleep_fraction(&self) -> f64 {
        self.stations
            .iter()
            .map(|s| s.ledger.times.sleep_fraction())
            .fold(1.0, f64::min)
    }

    /// Average share of time per state over all stations, in percent:
    /// (rx, tx, idle, sleep).
    pub fn state_shares_pct(&self) -> (f64, f64, f64, f64) {
        let mut sums = [0u128; 4];
        let mut total = 0u128;
        for s in &self.stations {
            let t = &s.ledger.times;
            sums[0] += t.rx_us as u128;
            sums[1] += t.tx_us as u128;
            sums[2] += t.idle_us as u128;
            sums[3] += t.sleep_us as u128;
            total += t.total_us() as u128;
        }
        if total == 0 {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let pct = |x: u128| x as f64 / total as f64 * 100.0;
        (pct(sums[0]), pct(sums[1]), pct(sums[2]), pct(sums[3]))
    }

    /// Network-wide energy per delivered bit in uJ/bit.
    pub fn aggregate_energy_per_bit(&self, profile: &RadioPowerProfile<F>) -> Result<F> {
        let mut merged = EnergyLedger::default();
        for s in &self.stations {
            merged.times.rx_us += s.ledger.times.rx_us;
            merged.times.tx_us += s.ledger.times.tx_us;
            merged.times.idle_us += s.ledger.times.idle_us;
            merged.times.sleep_us += s.ledger.times.sleep_us;
            merged.bits_delivered += s.ledger.bits_delivered;
        }
        energy_per_bit(&merged, profile)
    }

    /// Worst-case lifetimes per battery, from the highest-energy station.
    pub fn battery_table(
        &self,
        profile: &RadioPowerProfile<F>,
        batteries: &[BatterySpec<F>],
    ) -> Vec<BatteryLifetime<F>> {
        let Some(worst) = self.worst_station() else {
            return Vec::new();
        };
        let current = average_current(&worst.ledger, profile);
        batteries
            .iter()
            .map(|b| BatteryLifetime {
                battery: b.name.clone(),
                capacity_mah: b.capacity_mah,
                worst_aid: worst.aid,
                avg_current_ma: current,
                lifetime_years: battery_lifetime(current, b),
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryLifetime<F> {
    pub battery: String,
    pub capacity_mah: F,
    pub worst_aid: Aid,
    pub avg_current_ma: F,
    pub lifetime_years: F,
}

pub fn station_metrics<F: Real>(
    aid: Aid,
    distance_m: F,
    rate_kbps: u32,
    ledger: EnergyLedger,
    profile: &RadioPowerProfile<F>,
) -> StationMetrics<F> {
    StationMetrics {
        aid,
        distance_m,
        rate_kbps,
        energy_mj: energy_consumed(&ledger, profile),
        avg_current_ma: average_current(&ledger, profile),
        ledger,
    }
}

pub const METRICS_CSV_HEADER: &str = "scenario,seed,direction,generated,delivered,dropped,\
in_flight,pdr_pct,pdd_s,pdd_beacons,eta_pct,collisions,retransmissions";

fn opt<F: Real>(v: Option<F>) -> String {
    v.map(|x| format!("{:.6}", x.as_f64())).unwrap_or_default()
}

pub fn write_metrics_csv<F: Real, W: Write>(report: &MetricsReport<F>, mut w: W) -> Result<()> {
    writeln!(w, "{METRICS_CSV_HEADER}")?;
    for (label, m) in [("downlink", &report.downlink), ("uplink", &report.uplink)] {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.4},{},{},{:.4},{},{}",
            report.scenario,
            report.seed,
            label,
            m.generated,
            m.delivered,
            m.dropped,
            m.in_flight,
            m.pdr_pct.as_f64(),
            opt(m.pdd_s),
            opt(m.pdd_beacons),
            m.eta_pct.as_f64(),
            report.collisions,
            report.retransmissions,
        )?;
    }
    Ok(())
}

pub const ENERGY_CSV_HEADER: &str =
    "aid,distance_m,rate_kbps,t_rx_us,t_tx_us,t_idle_us,t_sleep_us,bits_delivered,\
energy_mj,avg_current_ma,energy_per_bit_uj";

pub fn write_energy_csv<F: Real, W: Write>(
    report: &MetricsReport<F>,
    profile: &RadioPowerProfile<F>,
    mut w: W,
) -> Result<()> {
    writeln!(w, "{ENERGY_CSV_HEADER}")?;
    for s in &report.stations {
        let per_bit = energy_per_bit(&s.ledger, profile)
            .map(|v| format!("{:.6}", v.as_f64()))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{:.2},{},{},{},{},{},{},{:.6},{:.6},{}",
            s.aid,
            s.distance_m.as_f64(),
            s.rate_kbps,
            s.ledger.times.rx_us,
            s.ledger.times.tx_us,
            s.ledger.times.idle_us,
            s.ledger.times.sleep_us,
            s.ledger.bits_delivered,
            s.energy_mj.as_f64(),
            s.avg_current_ma.as_f64(),
            per_bit,
        )?;
    }
    Ok(())
}
