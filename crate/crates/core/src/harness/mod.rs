//! Configuration, the yearly simulation loop, sweeps, metrics and output files.

mod calibrate;
mod config;
mod inflow;
mod metrics;
mod output;
mod run;
mod sweep;

pub use calibrate::{calibrate_check, CalibrationReport, Check, CheckStatus, DEFAULT_TAUS, MIN_HORIZON};
pub use config::{load_config, InflowConfig, Pipeline, RunConfig};
pub use inflow::{inflow_series, read_inflow_csv, synthetic_inflows};
pub use metrics::{activity_by_year, summarize, Summary, SummaryRow};
pub use output::{activity_svg, budgets_svg, ecology_csv, emit_outputs, records_csv, summary_csv, write_atomic};
pub use run::{run_simulation, run_with, DecideFn, RunArtifacts};
pub use sweep::{cell_dir_name, sweep, SweepGrid};
