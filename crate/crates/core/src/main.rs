use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commons_egta::equilibrium::{enumerate_pure_ne, select_equilibrium, solve_bimatrix, BimatrixGame, SelectedEquilibrium};
use commons_egta::harness::{
    calibrate_check, emit_outputs, load_config, run_simulation, summary_csv, sweep, write_atomic, Pipeline, SummaryRow,
    SweepGrid, DEFAULT_TAUS,
};
use commons_egta::policies::BehaviourKind;
use commons_egta::{Error, Result};

#[derive(Parser)]
#[command(name = "commons-egta", version, about = "Irrigation and fishing commons simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid of simulations in parallel and print the summary table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        profiles: Vec<BehaviourKind>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        pipelines: Vec<Pipeline>,
        /// Also write every cell's outputs and summary.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a bimatrix game given as JSON.
    SolveGame {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        eps: f64,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Check the expert pipeline against the expected tax pattern.
    CalibrateCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        taus: Vec<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let art = run_simulation(&cfg)?;
            for path in emit_outputs(&art, &out)? {
                println!("wrote {}", path.display());
            }
            print!("{}", String::from_utf8_lossy(&summary_csv(&[SummaryRow::from_artifacts(&art)])));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            taus,
            profiles,
            seeds,
            pipelines,
            out,
        } => {
            let base = load_config(&config)?;
            let grid = SweepGrid {
                pipelines,
                taus,
                profiles,
                seeds,
            };
            let rows = sweep(&base, &grid, out.as_deref());
            let table = summary_csv(&rows);
            if let Some(dir) = &out {
                write_atomic(&dir.join("summary.csv"), &table)?;
            }
            print!("{}", String::from_utf8_lossy(&table));
            let failed = rows.iter().filter(|r| r.is_failed()).count();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", rows.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveGame { game, eps, json } => solve_game(&game, eps, json),
        Command::CalibrateCheck { config, taus } => {
            let cfg = load_config(&config)?;
            let taus = if taus.is_empty() { DEFAULT_TAUS.to_vec() } else { taus };
            let report = calibrate_check(&cfg, &taus);
            println!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn solve_game(path: &Path, eps: f64, as_json: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let game = BimatrixGame::from_json(&text)?;
    let pure = enumerate_pure_ne(&game);
    let mixed = solve_bimatrix(&game, 0, eps)?;
    let selected = select_equilibrium(&pure, Some(mixed.clone()));
    let label = |r: usize, c: usize| (game.row_actions[r].clone(), game.col_actions[c].clone());

    if as_json {
        let pure_json: Vec<_> = pure
            .iter()
            .map(|&(r, c)| {
                let (rl, cl) = label(r, c);
                json!({"row": r, "col": c, "row_action": rl, "col_action": cl,
                       "payoffs": [game.row_payoffs[r][c], game.col_payoffs[r][c]]})
            })
            .collect();
        let selected_json = match &selected {
            Some(SelectedEquilibrium::Pure { row, col }) => json!({"pure": [row, col]}),
            Some(SelectedEquilibrium::Mixed(p)) => json!({"mixed": p}),
            None => json!(null),
        };
        let doc = json!({
            "pure_equilibria": pure_json,
            "lemke_howson": mixed,
            "lemke_howson_payoffs": game.expected_payoffs(&mixed),
            "selected": selected_json,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(ExitCode::SUCCESS);
    }

    println!("{}x{} game", game.rows(), game.cols());
    if pure.is_empty() {
        println!("pure equilibria: none");
    } else {
        println!("pure equilibria:");
        for &(r, c) in &pure {
            let (rl, cl) = label(r, c);
            println!(
                "  ({rl}, {cl})  payoffs ({}, {})",
                game.row_payoffs[r][c], game.col_payoffs[r][c]
            );
        }
    }
    let (u, v) = game.expected_payoffs(&mixed);
    println!("lemke-howson: row {:?} col {:?} payoffs ({u}, {v})", mixed.row_dist, mixed.col_dist);
    match selected {
        Some(SelectedEquilibrium::Pure { row, col }) => {
            let (rl, cl) = label(row, col);
            println!("selected: ({rl}, {cl})");
        }
        Some(SelectedEquilibrium::Mixed(p)) => println!("selected: mixed row {:?} col {:?}", p.row_dist, p.col_dist),
        None => println!("selected: none"),
    }
    Ok(ExitCode::SUCCESS)
}
