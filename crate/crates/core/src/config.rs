//! Scenario configuration: the TOML schema, the four built-in scenarios, and
//! dotted-key overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aid::GroupingPolicy;
use crate::energy::{default_batteries, BatterySpec, RadioPowerProfile};
use crate::error::{Error, Result};
use crate::mac::dcf::DcfTimings;
use crate::phy::{select_rate, Environment, PhyProfile};
use crate::scalar::Real;
use crate::tim::SignalingMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    pub tim_interval_us: u64,
    /// Downlink share of each access window; derived from the traffic
    /// periods when absent.
    pub beta_dl: Option<f64>,
    pub dcf: DcfTimings,
    pub subslots_dl: u32,
    pub subslots_ul: u32,
    /// Control frames as null-data-packet (PHY header only) frames.
    pub ndp_control: bool,
    pub speed_frame_exchange: bool,
    /// Optional per-interval segment caps; capped intervals leave a tail of
    /// unreserved time for PRAW grants and unscheduled access.
    pub dl_max_us: Option<u64>,
    pub ul_max_us: Option<u64>,
    /// Idle stations skip beacons once their next packet is more than this
    /// many cycles away. Off by default.
    pub long_doze_idle_cycles: Option<u32>,
    /// Early-wake guard against clock drift when returning from a long doze.
    pub doze_wake_guard_us: u64,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            tim_interval_us: 200_000,
            beta_dl: None,
            dcf: DcfTimings::default(),
            subslots_dl: 1,
            subslots_ul: 1,
            ndp_control: true,
            speed_frame_exchange: false,
            dl_max_us: None,
            ul_max_us: None,
            long_doze_idle_cycles: None,
            doze_wake_guard_us: 2_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig<F> {
    pub ul_interarrival_s: F,
    pub dl_interarrival_s: F,
    pub payload_bytes: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig<F> {
    pub radio: RadioPowerProfile<F>,
    pub batteries: Vec<BatterySpec<F>>,
}

impl<F: Real> Default for EnergyConfig<F> {
    fn default() -> Self {
        EnergyConfig {
            radio: RadioPowerProfile::default_cc1100(),
            batteries: default_batteries(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig<F> {
    pub schema_version: u32,
    pub name: String,
    pub n_stations: u32,
    pub area_radius_m: F,
    pub duration_s: u64,
    pub seed: u64,
    /// Leading cycles excluded from delay and occupancy statistics.
    pub warmup_cycles: u32,
    pub signaling_mode: SignalingMode,
    pub grouping: GroupingPolicy,
    pub traffic: TrafficConfig<F>,
    pub phy: PhyProfile<F>,
    pub mac: MacConfig,
    pub energy: EnergyConfig<F>,
}

impl<F: Real> ScenarioConfig<F> {
    pub fn beta_dl(&self) -> f64 {
        self.mac.beta_dl.unwrap_or_else(|| {
            crate::mac::schedule::beta_dl_from_periods(
                self.traffic.ul_interarrival_s.as_f64(),
                self.traffic.dl_interarrival_s.as_f64(),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_stations as usize > crate::aid::MAX_AID as usize {
            return Err(Error::ConfigInvalid(format!(
                "n_stations {} exceeds the {} addressable stations",
                self.n_stations,
                crate::aid::MAX_AID
            )));
        }
        if self.traffic.ul_interarrival_s <= F::zero() || self.traffic.dl_interarrival_s <= F::zero()
        {
            return Err(Error::ConfigInvalid("inter-arrival periods must be positive".into()));
        }
        if self.traffic.payload_bytes == 0 {
            return Err(Error::ConfigInvalid("payload_bytes must be positive".into()));
        }
        let beta = self.beta_dl();
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::ConfigInvalid(format!("beta_dl must be in (0,1), got {beta}")));
        }
        self.phy.validate()?;
        self.mac.dcf.validate()?;
        if self.mac.subslots_dl == 0 || self.mac.subslots_ul == 0 {
            return Err(Error::ConfigInvalid("sub-slot counts must be at least 1".into()));
        }
        self.energy.radio.validate()?;
        for b in &self.energy.batteries {
            b.validate()?;
        }
        // Coverage check: the farthest possible station must still get a rate.
        if self.n_stations > 0 {
            if self.area_radius_m <= F::zero() {
                return Err(Error::ConfigInvalid("area_radius_m must be positive".into()));
            }
            select_rate(self.area_radius_m, &self.phy)?;
        }
        Ok(())
    }
}

/// Names of the built-in scenarios.
pub const BUILTIN_SCENARIOS: [&str; 4] =
    ["agriculture", "smart-metering", "industrial", "animal"];

fn base_config<F: Real>(
    name: &str,
    n_stations: u32,
    radius_m: f64,
    environment: Environment,
    ul_s: f64,
    dl_s: f64,
    tim_interval_us: u64,
) -> ScenarioConfig<F> {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        n_stations,
        area_radius_m: F::from_f64_lossy(radius_m),
        duration_s: 7_200,
        seed: 1,
        warmup_cycles: 2,
        signaling_mode: SignalingMode::NonTimOffset,
        grouping: GroupingPolicy::Dense,
        traffic: TrafficConfig {
            ul_interarrival_s: F::from_f64_lossy(ul_s),
            dl_interarrival_s: F::from_f64_lossy(dl_s),
            payload_bytes: 100,
        },
        phy: PhyProfile::default_2mhz(environment),
        mac: MacConfig { tim_interval_us, ..MacConfig::default() },
        energy: EnergyConfig::default(),
    }
}

/// Built-in scenario by name, or None.
pub fn builtin_scenario<F: Real>(name: &str) -> Option<ScenarioConfig<F>> {
    // Station counts, traffic periods, and environments follow the four
    // reference deployments; TIM intervals are sized so every cycle is short
    // enough for sub-second delivery but long enough for the slowest
    // exchange to fit its segment.
    match name {
        "agriculture" => Some(base_config(
            "agriculture", 3_500, 850.0, Environment::Outdoor, 120.0, 240.0, 12_000,
        )),
        "smart-metering" => Some(base_config(
            "smart-metering", 15, 50.0, Environment::Indoor, 50.0, 240.0, 550_000,
        )),
        "industrial" => Some(base_config(
            "industrial", 500, 150.0, Environment::Indoor, 180.0, 240.0, 60_000,
        )),
        "animal" => Some(base_config(
            "animal", 250, 1_000.0, Environment::Outdoor, 60.0, 240.0, 80_000,
        )),
        _ => None,
    }
}

pub fn to_toml<F: Real + Serialize>(cfg: &ScenarioConfig<F>) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::ConfigInvalid(e.to_string()))
}

pub fn from_toml<F: Real + serde::de::DeserializeOwned>(text: &str) -> Result<ScenarioConfig<F>> {
    let cfg: ScenarioConfig<F> = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(cfg)
}

/// Loads a scenario by built-in name or from a TOML file path.
pub fn load_scenario<F: Real + serde::de::DeserializeOwned>(
    name_or_path: &str,
) -> Result<ScenarioConfig<F>> {
    if let Some(cfg) = builtin_scenario(name_or_path) {
        cfg.validate()?;
        return Ok(cfg);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(Error::UnknownScenario(name_or_path.to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    let cfg = from_toml(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Applies `key=value` overrides with dotted paths (`mac.tim_interval_us`).
/// The key must already exist in the serialized config; values are parsed as
/// TOML scalars.
pub fn apply_overrides<F: Real + Serialize + serde::de::DeserializeOwned>(
    cfg: &ScenarioConfig<F>,
    overrides: &[(String, String)],
) -> Result<ScenarioConfig<F>> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let text = to_toml(cfg)?;
    let mut value: toml::Value =
        toml::from_str(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    for (key, raw) in overrides {
        set_key(&mut value, key, raw)?;
    }
    let text = toml::to_string(&value).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let cfg = from_toml(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::ConfigInvalid(format!("override produced invalid config: {msg}")),
        other => other,
    })?;
    Ok(cfg)
}

fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

fn set_key(root: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::ConfigInvalid(format!("override key '{key}' does not address a table"))
        })?;
        if i + 1 == parts.len() {
            // Optional fields are absent from the serialized form; allow
            // introducing them at a leaf position.
            table.insert(part.to_string(), parse_scalar(raw));
            return Ok(());
        }
        node = table
            .get_mut(*part)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown override key '{key}'")))?;
    }
    Ok(())
}
