use std::path::Path;

use rayon::prelude::*;

use super::config::{Pipeline, RunConfig};
use super::metrics::SummaryRow;
use super::output::emit_outputs;
use super::run::run_simulation;
use crate::policies::BehaviourKind;

/// Axes of a sweep. An empty axis keeps the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub pipelines: Vec<Pipeline>,
    pub taus: Vec<f64>,
    pub profiles: Vec<BehaviourKind>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    /// Cell configurations in pipeline, tau, profile, seed order.
    pub fn cells(&self, base: &RunConfig) -> Vec<RunConfig> {
        fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
            if axis.is_empty() {
                vec![base]
            } else {
                axis.to_vec()
            }
        }
        let pipelines = or_base(&self.pipelines, base.pipeline);
        let taus = or_base(&self.taus, base.tau);
        let profiles = or_base(&self.profiles, base.profile);
        let seeds = or_base(&self.seeds, base.seed);
        let mut cells = Vec::with_capacity(pipelines.len() * taus.len() * profiles.len() * seeds.len());
        for &pipeline in &pipelines {
            for &tau in &taus {
                for &profile in &profiles {
                    for &seed in &seeds {
                        cells.push(RunConfig {
                            pipeline,
                            tau,
                            profile,
                            seed,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        cells
    }
}

/// Directory name for one sweep cell.
pub fn cell_dir_name(cfg: &RunConfig) -> String {
    format!("{}_tau{}_{}_seed{}", cfg.pipeline, cfg.tau, cfg.profile, cfg.seed)
}

/// Runs every cell in parallel. Failed cells become flagged rows; when
/// `out_dir` is given each successful cell's outputs go to its own subdirectory.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, out_dir: Option<&Path>) -> Vec<SummaryRow> {
    grid.cells(base)
        .into_par_iter()
        .map(|cfg| {
            let result = run_simulation(&cfg).and_then(|art| {
                if let Some(dir) = out_dir {
                    emit_outputs(&art, &dir.join(cell_dir_name(&cfg)))?;
                }
                Ok(art)
            });
            match result {
                Ok(art) => SummaryRow::from_artifacts(&art),
                Err(e) => {
                    log::warn!("sweep cell {} failed: {e}", cell_dir_name(&cfg));
                    SummaryRow::failed(&cfg, e.to_string())
                }
            }
        })
        .collect()
}
