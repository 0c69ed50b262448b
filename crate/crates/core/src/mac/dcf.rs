//! DCF contention parameters and backoff draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcfTimings {
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    /// How long a transmitter waits for a missing response frame.
    pub response_timeout_us: u64,
}

impl Default for DcfTimings {
    fn default() -> Self {
        let slot_us = 52;
        let sifs_us = 160;
        DcfTimings {
            slot_us,
            sifs_us,
            difs_us: sifs_us + 2 * slot_us,
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 7,
            response_timeout_us: sifs_us + slot_us,
        }
    }
}

impl DcfTimings {
    pub fn validate(&self) -> Result<()> {
        if self.slot_us == 0 || self.sifs_us == 0 {
            return Err(Error::ConfigInvalid("slot and SIFS must be positive".into()));
        }
        if self.cw_min == 0 || self.cw_max < self.cw_min {
            return Err(Error::ConfigInvalid(format!(
                "contention window bounds invalid: [{}, {}]",
                self.cw_min, self.cw_max
            )));
        }
        Ok(())
    }

    /// Contention window after `retries` failed attempts: doubles from
    /// `cw_min`, capped at `cw_max`.
    pub fn cw_for_retries(&self, retries: u32) -> u32 {
        let mut cw = self.cw_min;
        for _ in 0..retries {
            cw = (2 * cw + 1).min(self.cw_max);
        }
        cw
    }
}

/// Uniform integer backoff in [0, cw].
pub fn dcf_draw_backoff(rng: &mut impl Rng, cw: u32) -> u32 {
    if cw == 0 {
        return 0;
    }
    rng.gen_range(0..=cw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_window_draws_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(dcf_draw_backoff(&mut rng, 0), 0);
    }

    #[test]
    fn draw_mean_matches_uniform() {
        // cw = 15, 1e5 draws: mean 7.5; 3 sigma of the sample mean is 0.044.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000u64;
        let sum: u64 = (0..n).map(|_| dcf_draw_backoff(&mut rng, 15) as u64).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 7.5).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn draw_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert!(dcf_draw_backoff(&mut rng, 31) <= 31);
        }
    }

    #[test]
    fn window_doubles_and_caps() {
        let t = DcfTimings::default();
        assert_eq!(t.cw_for_retries(0), 15);
        assert_eq!(t.cw_for_retries(1), 31);
        assert_eq!(t.cw_for_retries(2), 63);
        assert_eq!(t.cw_for_retries(6), 1023);
        assert_eq!(t.cw_for_retries(12), 1023);
    }

    #[test]
    fn default_difs_is_sifs_plus_two_slots() {
        let t = DcfTimings::default();
        assert_eq!(t.difs_us, t.sifs_us + 2 * t.slot_us);
    }
}
