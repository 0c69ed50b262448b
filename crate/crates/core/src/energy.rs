//! Energy accounting: state-time ledgers to consumed charge, energy per
//! delivered bit, and battery-lifetime projection.
//!
//! State transitions are free; only dwell time counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::power::StateLedger;
use crate::scalar::Real;

/// Supply currents of the transceiver in each radio state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioPowerProfile<F> {
    pub i_rx_ma: F,
    pub i_tx_ma: F,
    pub i_idle_ma: F,
    pub i_sleep_ma: F,
    pub voltage_v: F,
}

impl<F: Real> RadioPowerProfile<F> {
    /// Sub-GHz transceiver class defaults at 3.0 V.
    pub fn default_cc1100() -> Self {
        RadioPowerProfile {
            i_rx_ma: F::from_f64_lossy(15.4),
            i_tx_ma: F::from_f64_lossy(16.9),
            i_idle_ma: F::from_f64_lossy(1.7),
            i_sleep_ma: F::from_f64_lossy(0.0004),
            voltage_v: F::from_f64_lossy(3.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.i_rx_ma, self.i_tx_ma, self.i_idle_ma, self.i_sleep_ma, self.voltage_v];
        if vals.iter().any(|v| *v <= F::zero()) {
            return Err(Error::ConfigInvalid("radio currents and voltage must be positive".into()));
        }
        if !(self.i_sleep_ma < self.i_idle_ma
            && self.i_idle_ma < self.i_rx_ma.min(self.i_tx_ma))
        {
            return Err(Error::ConfigInvalid(
                "expected i_sleep < i_idle < min(i_rx, i_tx)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-station state times plus the payload bits it moved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub times: StateLedger,
    pub bits_delivered: u64,
}

/// Charge-weighted time integral: millicoulombs spent over the ledger.
fn charge_mc<F: Real>(ledger: &StateLedger, profile: &RadioPowerProfile<F>) -> F {
    let us = |t: u64| F::from_u64_lossy(t) / F::from_f64_lossy(1e6);
    profile.i_rx_ma * us(ledger.rx_us)
        + profile.i_tx_ma * us(ledger.tx_us)
        + profile.i_idle_ma * us(ledger.idle_us)
        + profile.i_sleep_ma * us(ledger.sleep_us)
}

/// Total energy in millijoules.
pub fn energy_consumed<F: Real>(ledger: &EnergyLedger, profile: &RadioPowerProfile<F>) -> F {
    profile.voltage_v * charge_mc(&ledger.times, profile)
}

/// Mean supply current over the ledger duration, in mA.
pub fn average_current<F: Real>(ledger: &EnergyLedger, profile: &RadioPowerProfile<F>) -> F {
    let total_us = ledger.times.total_us();
    if total_us == 0 {
        return F::zero();
    }
    charge_mc(&ledger.times, profile) * F::from_f64_lossy(1e6) / F::from_u64_lossy(total_us)
}

/// Microjoules per delivered payload bit.
pub fn energy_per_bit<F: Real>(ledger: &EnergyLedger, profile: &RadioPowerProfile<F>) -> Result<F> {
    if ledger.bits_delivered == 0 {
        return Err(Error::NoTraffic);
    }
    let mj = energy_consumed(ledger, profile);
    Ok(mj * F::from_f64_lossy(1e3) / F::from_u64_lossy(ledger.bits_delivered))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec<F> {
    pub name: String,
    pub capacity_mah: F,
}

impl<F: Real> BatterySpec<F> {
    pub fn validate(&self) -> Result<()> {
        if self.capacity_mah <= F::zero() {
            return Err(Error::ConfigInvalid(format!(
                "battery '{}' capacity must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

/// Default battery set: coin cell, AA pair, D pair.
pub fn default_batteries<F: Real>() -> Vec<BatterySpec<F>> {
    vec![
        BatterySpec { name: "coin-cell".into(), capacity_mah: F::from_f64_lossy(230.0) },
        BatterySpec { name: "aa-pair".into(), capacity_mah: F::from_f64_lossy(2000.0) },
        BatterySpec { name: "d-pair".into(), capacity_mah: F::from_f64_lossy(12000.0) },
    ]
}

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Years the battery sustains the given mean current. Self-discharge is not
/// modeled.
pub fn battery_lifetime<F: Real>(average_current_ma: F, battery: &BatterySpec<F>) -> F {
    battery.capacity_mah / average_current_ma / F::from_f64_lossy(HOURS_PER_YEAR)
}
