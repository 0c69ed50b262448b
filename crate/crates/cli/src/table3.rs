//! Per-scenario band checks against the reference simulation results.

use ahsim_core::Config;

use crate::output::RunArtifacts;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Evaluates the bands that apply to a single scenario's batch. Cross-scenario
/// orderings (occupancy, battery) need all four scenarios and live in the
/// acceptance suite.
pub fn check(cfg: &Config, runs: &[RunArtifacts]) -> bool {
    let mut checks = Vec::new();
    let scenario = cfg.name.as_str();

    for run in runs {
        let r = &run.report;
        let ul_floor = match scenario {
            "industrial" | "animal" => 99.8,
            _ => 99.9,
        };
        checks.push(Check {
            name: "pdr",
            pass: r.downlink.pdr_pct >= 99.9 && r.uplink.pdr_pct >= ul_floor,
            detail: format!(
                "seed {}: dl {:.4}% (>=99.9), ul {:.4}% (>={ul_floor})",
                run.seed, r.downlink.pdr_pct, r.uplink.pdr_pct
            ),
        });

        let dl_pdd = r.downlink.pdd_s.unwrap_or(f64::NAN);
        let ul_pdd = r.uplink.pdd_s.unwrap_or(f64::NAN);
        let in_band = |v: f64| (0.1..=0.6).contains(&v);
        let ordered = match scenario {
            "industrial" | "animal" => ul_pdd >= dl_pdd,
            _ => true,
        };
        checks.push(Check {
            name: "pdd",
            pass: in_band(dl_pdd) && in_band(ul_pdd) && ordered,
            detail: format!(
                "seed {}: dl {dl_pdd:.3} s, ul {ul_pdd:.3} s (band [0.1, 0.6])",
                run.seed
            ),
        });

        let eta_ul = r.uplink.eta_pct;
        let (eta_pass, eta_band) = match scenario {
            "agriculture" => ((4.0..=16.0).contains(&eta_ul), "[4, 16]"),
            "smart-metering" => (eta_ul < 0.1, "< 0.1"),
            _ => (eta_ul > 0.0 && eta_ul < 4.0, "(0, 4)"),
        };
        checks.push(Check {
            name: "eta",
            pass: eta_pass,
            detail: format!("seed {}: ul eta {eta_ul:.4}% (band {eta_band})", run.seed),
        });

        let min_sleep = r.min_sleep_fraction() * 100.0;
        checks.push(Check {
            name: "sleep",
            pass: min_sleep >= 99.0,
            detail: format!("seed {}: min sleep {min_sleep:.3}% (>=99)", run.seed),
        });
    }

    let mut ok = true;
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("table3 {} {}: {verdict} ({})", scenario, c.name, c.detail);
        ok &= c.pass;
    }
    ok
}
