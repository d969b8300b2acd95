#![allow(dead_code)]

use std::path::PathBuf;

use commons_egta::games::IrrigationGameSpec;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

/// Two-farmer instance used across the oracle tests.
pub fn g1(tau: f64) -> IrrigationGameSpec {
    IrrigationGameSpec {
        budget_up: 1000.0,
        budget_down: 1000.0,
        c: 10.0,
        water: 60.0,
        w: 10.0,
        y0: 50.0,
        ys: 25.0,
        stress_threshold: 6.0,
        kappa: 50.0,
        tau,
        fish_income_up: 0.0,
        fish_income_down: 0.0,
        max_fields: 10,
    }
}

/// Straight transcription of the pair payoff rule, kept apart from the library.
pub fn oracle_pair(s_u: i64, s_d: i64, g: &IrrigationGameSpec) -> ((i64, i64), (f64, f64)) {
    let cap = |s: i64, budget: f64, water: f64| -> i64 {
        let mut f = 0;
        while f < s && ((f + 1) as f64) * g.c <= budget + 1e-9 && ((f + 1) as f64) * g.w <= water + 1e-9 {
            f += 1;
        }
        f
    };
    let f_u = cap(s_u, g.budget_up, g.water);
    let f_d = cap(s_d, g.budget_down, (g.water - f_u as f64 * g.w).max(0.0));
    let y = if ((f_u + f_d) as f64) <= g.stress_threshold { g.y0 } else { g.ys };
    let pay = |f: i64, fish: f64, s: i64| f as f64 * y + fish - f as f64 * g.c - g.kappa - g.tau * (s_u + s_d) as f64 * s as f64;
    ((f_u, f_d), (pay(f_u, g.fish_income_up, s_u), pay(f_d, g.fish_income_down, s_d)))
}

/// Every pure profile where neither player strictly gains by deviating.
pub fn oracle_pure_ne(rows: &[Vec<f64>], cols: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let m = rows.len();
    let n = rows[0].len();
    let mut out = Vec::new();
    for r in 0..m {
        for c in 0..n {
            let row_ok = (0..m).all(|r2| rows[r2][c] <= rows[r][c] + 1e-9);
            let col_ok = (0..n).all(|c2| cols[r][c2] <= cols[r][c] + 1e-9);
            if row_ok && col_ok {
                out.push((r, c));
            }
        }
    }
    out
}

/// Payoff matrices of the pair game built from [`oracle_pair`].
pub fn oracle_matrices(g: &IrrigationGameSpec) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let k = g.max_fields as usize + 1;
    let mut rows = vec![vec![0.0; k]; k];
    let mut cols = vec![vec![0.0; k]; k];
    for u in 0..k {
        for d in 0..k {
            let (_, (a, b)) = oracle_pair(u as i64, d as i64, g);
            rows[u][d] = a;
            cols[u][d] = b;
        }
    }
    (rows, cols)
}

/// Oracle equilibrium with the smallest action sum, then smallest row.
pub fn oracle_selected(g: &IrrigationGameSpec) -> Option<(usize, usize)> {
    let (rows, cols) = oracle_matrices(g);
    oracle_pure_ne(&rows, &cols).into_iter().min_by_key(|&(r, c)| (r + c, r))
}
