//! Deterministic discrete-event simulator for the IEEE 802.11ah MAC layer.
//!
//! The crate models dense power-constrained sensor networks under the
//! TIM/DTIM restricted-access-window regime: hierarchical association
//! identifiers, group-level beacon signaling, DCF contention inside per-group
//! downlink/uplink windows, a link-budget PHY abstraction, and a four-state
//! radio energy model with battery-lifetime projection.
//!
//! Everything measured in dB, mA, or joules is generic over [`scalar::Real`]
//! (`f32` or `f64`); simulated time is always integer microseconds. The
//! aliases below pin the `f64` instantiation the CLI and built-in scenarios
//! use.

pub mod aid;
pub mod config;
pub mod energy;
pub mod engine;
pub mod error;
pub mod eventlog;
pub mod mac;
pub mod metrics;
pub mod phy;
pub mod scalar;
pub mod tim;
pub mod traffic;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default scalar for configs, reports, and the CLI.
pub type DefaultScalar = f64;

pub type Config = config::ScenarioConfig<DefaultScalar>;
pub type Phy = phy::PhyProfile<DefaultScalar>;
pub type RadioPower = energy::RadioPowerProfile<DefaultScalar>;
pub type Battery = energy::BatterySpec<DefaultScalar>;
pub type Report = metrics::MetricsReport<DefaultScalar>;
pub type Output = engine::RunOutput<DefaultScalar>;

/// Runs one scenario with the default scalar.
pub fn run(cfg: &Config, options: engine::RunOptions) -> Result<Output> {
    engine::run(cfg, options)
}
