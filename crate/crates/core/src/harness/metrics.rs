use serde::Serialize;

use super::config::{Pipeline, RunConfig};
use super::run::RunArtifacts;
use crate::ecology::{ActivityClass, YearRecord};
use crate::policies::BehaviourKind;

/// Final-year budget range and whole-run activity shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min_budget_final: f64,
    pub max_budget_final: f64,
    pub pct_both: f64,
    pub pct_irrig_only: f64,
    pub pct_fish_only: f64,
    pub pct_none: f64,
}

/// Summarizes run records. Returns `None` when there are no records.
pub fn summarize(records: &[YearRecord]) -> Option<Summary> {
    let final_year = records.iter().map(|r| r.year).max()?;
    let finals = records.iter().filter(|r| r.year == final_year).map(|r| r.budget);
    let (min, max) = finals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b), hi.max(b)));

    let total = records.len() as f64;
    let pct = |class: ActivityClass| 100.0 * records.iter().filter(|r| r.activity == class).count() as f64 / total;
    Some(Summary {
        min_budget_final: min,
        max_budget_final: max,
        pct_both: pct(ActivityClass::Both),
        pct_irrig_only: pct(ActivityClass::FarmingOnly),
        pct_fish_only: pct(ActivityClass::FishingOnly),
        pct_none: pct(ActivityClass::None),
    })
}

/// One line of a summary table: the cell that was run and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub pipeline: Pipeline,
    pub tau: f64,
    pub profile: BehaviourKind,
    pub seed: u64,
    pub summary: Option<Summary>,
    pub fallback_events: usize,
    pub error: Option<String>,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 13] = [
        "pipeline",
        "tau",
        "profile",
        "seed",
        "status",
        "min_budget_final",
        "max_budget_final",
        "pct_both",
        "pct_irrig_only",
        "pct_fish_only",
        "pct_none",
        "fallback_events",
        "error",
    ];

    pub fn from_artifacts(art: &RunArtifacts) -> Self {
        Self {
            summary: art.summary,
            fallback_events: art.fallback_count(),
            error: None,
            ..Self::failed(&art.config, String::new())
        }
    }

    pub fn failed(cfg: &RunConfig, error: String) -> Self {
        Self {
            pipeline: cfg.pipeline,
            tau: cfg.tau,
            profile: cfg.profile,
            seed: cfg.seed,
            summary: None,
            fallback_events: 0,
            error: Some(error),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn fields(&self) -> Vec<String> {
        let num = |f: fn(&Summary) -> f64| self.summary.as_ref().map(|s| f(s).to_string()).unwrap_or_default();
        vec![
            self.pipeline.to_string(),
            self.tau.to_string(),
            self.profile.to_string(),
            self.seed.to_string(),
            if self.is_failed() { "failed" } else { "ok" }.to_string(),
            num(|s| s.min_budget_final),
            num(|s| s.max_budget_final),
            num(|s| s.pct_both),
            num(|s| s.pct_irrig_only),
            num(|s| s.pct_fish_only),
            num(|s| s.pct_none),
            self.fallback_events.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Share of households in each activity class for every year, in year order.
pub fn activity_by_year(records: &[YearRecord]) -> Vec<(u32, [f64; 4])> {
    let mut out: Vec<(u32, [f64; 4])> = Vec::new();
    let mut counts: Vec<(u32, [usize; 4], usize)> = Vec::new();
    for r in records {
        let slot = match counts.iter_mut().find(|c| c.0 == r.year) {
            Some(s) => s,
            None => {
                counts.push((r.year, [0; 4], 0));
                counts.last_mut().unwrap()
            }
        };
        let k = match r.activity {
            ActivityClass::Both => 0,
            ActivityClass::FarmingOnly => 1,
            ActivityClass::FishingOnly => 2,
            ActivityClass::None => 3,
        };
        slot.1[k] += 1;
        slot.2 += 1;
    }
    counts.sort_by_key(|c| c.0);
    for (year, c, n) in counts {
        let n = n as f64;
        out.push((year, c.map(|v| 100.0 * v as f64 / n)));
    }
    out
}
