//! Abstract PHY: log-distance path loss, link-budget rate selection, frame
//! airtime arithmetic and the per-frame Bernoulli error process.
//!
//! No waveform is modeled. A transmission is a duration plus a coin flip.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Frame check sequence appended to every non-NDP frame.
pub const FCS_BYTES: u32 = 4;

/// Short MAC header used by data frames.
pub const DATA_MAC_HEADER_BYTES: u32 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Environment {
    Outdoor,
    Indoor,
}

impl Environment {
    /// Default log-distance model: `PL(d) = a + b*log10(d)` with d in meters.
    pub fn default_path_loss_params<F: Real>(self) -> (F, F) {
        match self {
            Environment::Outdoor => (F::from_f64_lossy(8.0), F::from_f64_lossy(37.6)),
            Environment::Indoor => (F::from_f64_lossy(38.0), F::from_f64_lossy(30.0)),
        }
    }
}

/// Path loss in dB for the environment's default model.
pub fn path_loss<F: Real>(distance_m: F, environment: Environment) -> Result<F> {
    let (a, b) = environment.default_path_loss_params::<F>();
    path_loss_with(distance_m, a, b)
}

pub fn path_loss_with<F: Real>(distance_m: F, ref_db: F, log_coeff: F) -> Result<F> {
    if distance_m <= F::zero() {
        return Err(Error::NonPositiveDistance(distance_m.as_f64()));
    }
    Ok(ref_db + log_coeff * distance_m.log10())
}

/// One rate step of the MCS table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McsEntry<F> {
    pub rate_kbps: u32,
    pub min_rx_dbm: F,
}

/// Radio profile: link budget, rate table and error process parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhyProfile<F> {
    pub environment: Environment,
    pub channel_width_mhz: u8,
    pub tx_power_dbm: F,
    pub noise_floor_dbm: F,
    /// Sorted by rate ascending; thresholds strictly decreasing as the rate
    /// decreases.
    pub mcs_table: Vec<McsEntry<F>>,
    pub preamble_us: u32,
    /// Rate used for beacons and for sizing the multicast slot. Must be
    /// decodable by every associated station, so it defaults to the lowest
    /// table rate.
    pub beacon_rate_kbps: u32,
    /// Per-frame corruption probability for all non-beacon frames.
    pub per: F,
    /// Path-loss model `a + b*log10(d)`.
    pub path_loss_ref_db: F,
    pub path_loss_log_coeff: F,
}

impl<F: Real> PhyProfile<F> {
    /// 2 MHz profile: 650/1300/1950/2600 kbps.
    pub fn default_2mhz(environment: Environment) -> Self {
        let (a, b) = environment.default_path_loss_params();
        let tx = match environment {
            Environment::Outdoor => 30.0,
            Environment::Indoor => 15.0,
        };
        PhyProfile {
            environment,
            channel_width_mhz: 2,
            tx_power_dbm: F::from_f64_lossy(tx),
            noise_floor_dbm: F::from_f64_lossy(-98.0),
            mcs_table: vec![
                McsEntry { rate_kbps: 650, min_rx_dbm: F::from_f64_lossy(-92.0) },
                McsEntry { rate_kbps: 1300, min_rx_dbm: F::from_f64_lossy(-89.0) },
                McsEntry { rate_kbps: 1950, min_rx_dbm: F::from_f64_lossy(-86.0) },
                McsEntry { rate_kbps: 2600, min_rx_dbm: F::from_f64_lossy(-83.0) },
            ],
            preamble_us: 240,
            beacon_rate_kbps: 650,
            per: F::from_f64_lossy(0.10),
            path_loss_ref_db: a,
            path_loss_log_coeff: b,
        }
    }

    /// 1 MHz profile: 300/600/900 kbps plus the 150 kbps repetition mode,
    /// thresholds 3 dB more sensitive than the 2 MHz table. The longer 1 MHz
    /// preamble dominates short frames.
    pub fn default_1mhz(environment: Environment) -> Self {
        let mut p = Self::default_2mhz(environment);
        p.channel_width_mhz = 1;
        p.noise_floor_dbm = F::from_f64_lossy(-101.0);
        p.mcs_table = vec![
            McsEntry { rate_kbps: 150, min_rx_dbm: F::from_f64_lossy(-98.0) },
            McsEntry { rate_kbps: 300, min_rx_dbm: F::from_f64_lossy(-95.0) },
            McsEntry { rate_kbps: 600, min_rx_dbm: F::from_f64_lossy(-92.0) },
            McsEntry { rate_kbps: 900, min_rx_dbm: F::from_f64_lossy(-89.0) },
        ];
        p.preamble_us = 560;
        p.beacon_rate_kbps = 150;
        p
    }

    pub fn path_loss(&self, distance_m: F) -> Result<F> {
        path_loss_with(distance_m, self.path_loss_ref_db, self.path_loss_log_coeff)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mcs_table.is_empty() {
            return Err(Error::ConfigInvalid("mcs_table is empty".into()));
        }
        for w in self.mcs_table.windows(2) {
            if w[1].rate_kbps <= w[0].rate_kbps {
                return Err(Error::ConfigInvalid(
                    "mcs_table must be sorted by rate ascending".into(),
                ));
            }
            if w[1].min_rx_dbm <= w[0].min_rx_dbm {
                return Err(Error::ConfigInvalid(
                    "mcs thresholds must increase with rate".into(),
                ));
            }
        }
        if self.mcs_table[0].rate_kbps < 100 {
            return Err(Error::ConfigInvalid(
                "lowest MCS rate must be at least 100 kbps".into(),
            ));
        }
        if !self.mcs_table.iter().any(|m| m.rate_kbps == self.beacon_rate_kbps) {
            return Err(Error::ConfigInvalid(format!(
                "beacon rate {} kbps is not in the MCS table",
                self.beacon_rate_kbps
            )));
        }
        let per = self.per.as_f64();
        if !(0.0..=1.0).contains(&per) {
            return Err(Error::ConfigInvalid(format!("per must be in [0,1], got {per}")));
        }
        if self.preamble_us == 0 {
            return Err(Error::ConfigInvalid("preamble_us must be positive".into()));
        }
        Ok(())
    }
}

/// Highest rate whose threshold the link budget clears at this distance.
pub fn select_rate<F: Real>(distance_m: F, profile: &PhyProfile<F>) -> Result<u32> {
    let rx = profile.tx_power_dbm - profile.path_loss(distance_m)?;
    profile
        .mcs_table
        .iter()
        .rev()
        .find(|m| m.min_rx_dbm <= rx)
        .map(|m| m.rate_kbps)
        .ok_or(Error::BeyondCoverage {
            rx_dbm: rx.as_f64(),
            min_dbm: profile.mcs_table[0].min_rx_dbm.as_f64(),
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    Data,
    PsPoll,
    Rts,
    Cts,
    Ack,
    NdpCtrl,
    BeaconDtim,
    BeaconTim,
}

/// Sizes of a single frame on the air.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSpec {
    pub kind: FrameKind,
    pub mac_header_bytes: u32,
    pub payload_bytes: u32,
}

impl FrameSpec {
    pub fn data(payload_bytes: u32) -> Self {
        FrameSpec {
            kind: FrameKind::Data,
            mac_header_bytes: DATA_MAC_HEADER_BYTES,
            payload_bytes,
        }
    }

    /// Control frame. NDP control frames are a bare PHY header; legacy
    /// control frames carry the classic short MAC bodies.
    pub fn control(kind: FrameKind, ndp: bool) -> Self {
        let mac_header_bytes = if ndp {
            0
        } else {
            match kind {
                FrameKind::Rts | FrameKind::PsPoll => 16,
                FrameKind::Cts | FrameKind::Ack => 10,
                _ => 0,
            }
        };
        FrameSpec { kind, mac_header_bytes, payload_bytes: 0 }
    }

    pub fn beacon(kind: FrameKind, body_bytes: u32) -> Self {
        FrameSpec {
            kind,
            mac_header_bytes: DATA_MAC_HEADER_BYTES,
            payload_bytes: body_bytes,
        }
    }

    fn is_ndp(&self) -> bool {
        self.mac_header_bytes == 0 && self.payload_bytes == 0
    }
}

/// Time on air in whole microseconds.
///
/// `preamble + ceil(8 * (header + payload + fcs) * 1000 / rate_kbps)`;
/// NDP frames are the preamble alone.
pub fn airtime<F: Real>(frame: &FrameSpec, rate_kbps: u32, profile: &PhyProfile<F>) -> Result<u64> {
    if rate_kbps == 0 {
        return Err(Error::ConfigInvalid("rate must be positive".into()));
    }
    if frame.is_ndp() {
        return Ok(profile.preamble_us as u64);
    }
    let bits = 8 * (frame.mac_header_bytes + frame.payload_bytes + FCS_BYTES) as u64;
    let us = (bits * 1000).div_ceil(rate_kbps as u64);
    Ok(profile.preamble_us as u64 + us)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxOutcome {
    Ok,
    Corrupted,
}

/// Draws whether one frame is corrupted, independently per frame.
pub fn transmission_outcome<F: Real>(rng: &mut impl Rng, per: F) -> TxOutcome {
    if rng.gen_bool(per.as_f64()) {
        TxOutcome::Corrupted
    } else {
        TxOutcome::Ok
    }
}
