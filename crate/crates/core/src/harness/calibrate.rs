use std::fmt;

use rayon::prelude::*;

use super::config::{Pipeline, RunConfig};
use super::metrics::Summary;
use super::run::run_simulation;

pub const DEFAULT_TAUS: [f64; 3] = [0.0, 0.25, 1.0];
/// Shortest horizon on which the checks mean anything.
pub const MIN_HORIZON: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub tau: Option<f64>,
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub horizon: u32,
    pub insufficient_horizon: bool,
    pub runs: Vec<(f64, Result<Summary, String>)>,
    pub checks: Vec<Check>,
}

impl CalibrationReport {
    pub fn passed(&self) -> bool {
        !self.insufficient_horizon && self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.insufficient_horizon {
            writeln!(f, "WARN  horizon {} is below {MIN_HORIZON} years; results are not meaningful", self.horizon)?;
        }
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "SKIP",
            };
            match c.tau {
                Some(t) => writeln!(f, "{status}  tau={t:<5} {:<32} {}", c.name, c.detail)?,
                None => writeln!(f, "{status}  {:<42} {}", c.name, c.detail)?,
            }
        }
        write!(f, "{}", if self.passed() { "calibration OK" } else { "calibration FAILED" })
    }
}

fn check(tau: f64, name: &'static str, ok: bool, detail: String) -> Check {
    Check {
        tau: Some(tau),
        name,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        detail,
    }
}

/// Runs the expert pipeline at every tau and checks the tragedy pattern at
/// tau = 0 and the sustainable pattern at tau > 0.
pub fn calibrate_check(config: &RunConfig, taus: &[f64]) -> CalibrationReport {
    let runs: Vec<(f64, Result<Summary, String>)> = taus
        .par_iter()
        .map(|&tau| {
            let cfg = RunConfig {
                pipeline: Pipeline::ExpertEgta,
                tau,
                ..config.clone()
            };
            let result = run_simulation(&cfg)
                .map_err(|e| e.to_string())
                .and_then(|art| art.summary.ok_or_else(|| "run produced no records".to_string()));
            (tau, result)
        })
        .collect();

    let mut checks = Vec::new();
    for (tau, result) in &runs {
        let tau = *tau;
        let s = match result {
            Ok(s) => s,
            Err(e) => {
                checks.push(check(tau, "run", false, e.clone()));
                continue;
            }
        };
        if tau == 0.0 {
            checks.push(check(
                tau,
                "some_final_budget_negative",
                s.min_budget_final < 0.0,
                format!("min final budget {:.2}", s.min_budget_final),
            ));
            checks.push(check(tau, "pct_both_below_50", s.pct_both < 50.0, format!("pct_both {:.2}", s.pct_both)));
        } else {
            checks.push(check(
                tau,
                "all_final_budgets_nonnegative",
                s.min_budget_final >= 0.0,
                format!("min final budget {:.2}", s.min_budget_final),
            ));
            checks.push(check(tau, "pct_both_is_100", s.pct_both >= 100.0 - 1e-9, format!("pct_both {:.2}", s.pct_both)));
        }
    }
    let skipped = |name: &'static str, why: &str| Check {
        tau: None,
        name,
        status: CheckStatus::Skipped,
        detail: why.to_string(),
    };
    if !taus.contains(&0.0) {
        checks.push(skipped("tragedy_checks", "no tau = 0 run requested"));
    }
    if !taus.iter().any(|&t| t > 0.0) {
        checks.push(skipped("sustainability_checks", "no tau > 0 run requested"));
    }

    CalibrationReport {
        horizon: config.horizon,
        insufficient_horizon: config.horizon < MIN_HORIZON,
        runs,
        checks,
    }
}
