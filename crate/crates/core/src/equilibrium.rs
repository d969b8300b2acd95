//! Finite-game solvers: Lemke-Howson for bimatrix games, exhaustive pure
//! equilibrium enumeration, epsilon-Nash verification and a symmetric solver
//! for the N-player extraction game.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two-player normal-form game. Rows belong to the first (upstream) player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimatrixGame {
    #[serde(default)]
    pub row_actions: Vec<String>,
    #[serde(default)]
    pub col_actions: Vec<String>,
    pub row_payoffs: Vec<Vec<f64>>,
    pub col_payoffs: Vec<Vec<f64>>,
}

impl BimatrixGame {
    /// Builds a game with numeric labels `0..m` and `0..n`.
    pub fn new(row_payoffs: Vec<Vec<f64>>, col_payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let m = row_payoffs.len();
        let n = row_payoffs.first().map_or(0, Vec::len);
        let game = Self {
            row_actions: (0..m).map(|i| i.to_string()).collect(),
            col_actions: (0..n).map(|j| j.to_string()).collect(),
            row_payoffs,
            col_payoffs,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn with_labels(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<Self> {
        self.row_actions = rows;
        self.col_actions = cols;
        self.validate()?;
        Ok(self)
    }

    /// Parses the JSON exchange format, filling in numeric labels when absent.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut game: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidGame(format!("cannot parse game JSON: {e}")))?;
        if game.row_actions.is_empty() {
            game.row_actions = (0..game.row_payoffs.len()).map(|i| i.to_string()).collect();
        }
        if game.col_actions.is_empty() {
            let n = game.row_payoffs.first().map_or(0, Vec::len);
            game.col_actions = (0..n).map(|j| j.to_string()).collect();
        }
        game.validate()?;
        Ok(game)
    }

    pub fn rows(&self) -> usize {
        self.row_payoffs.len()
    }

    pub fn cols(&self) -> usize {
        self.row_payoffs.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.row_payoffs.len();
        if m == 0 {
            return Err(Error::InvalidGame("game needs at least one row".into()));
        }
        let n = self.row_payoffs[0].len();
        if n == 0 {
            return Err(Error::InvalidGame("game needs at least one column".into()));
        }
        if self.col_payoffs.len() != m {
            return Err(Error::InvalidGame(format!(
                "row payoffs have {m} rows but column payoffs have {}",
                self.col_payoffs.len()
            )));
        }
        for (i, (a, b)) in self.row_payoffs.iter().zip(&self.col_payoffs).enumerate() {
            if a.len() != n || b.len() != n {
                return Err(Error::InvalidGame(format!("row {i} is not {n} entries wide")));
            }
            if a.iter().chain(b).any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("row {i} holds a non-finite payoff")));
            }
        }
        if self.row_actions.len() != m || self.col_actions.len() != n {
            return Err(Error::InvalidGame(format!(
                "expected {m}x{n} action labels, got {}x{}",
                self.row_actions.len(),
                self.col_actions.len()
            )));
        }
        Ok(())
    }

    fn magnitude(&self) -> f64 {
        self.row_payoffs
            .iter()
            .chain(&self.col_payoffs)
            .flatten()
            .fold(1.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Expected payoffs `(row, col)` under a mixed profile.
    pub fn expected_payoffs(&self, profile: &MixedProfile) -> (f64, f64) {
        let mut u = 0.0;
        let mut v = 0.0;
        for (i, &p) in profile.row_dist.iter().enumerate() {
            for (j, &q) in profile.col_dist.iter().enumerate() {
                u += p * q * self.row_payoffs[i][j];
                v += p * q * self.col_payoffs[i][j];
            }
        }
        (u, v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile {
    pub row_dist: Vec<f64>,
    pub col_dist: Vec<f64>,
}

impl MixedProfile {
    pub fn pure(m: usize, n: usize, row: usize, col: usize) -> Self {
        let mut row_dist = vec![0.0; m];
        let mut col_dist = vec![0.0; n];
        row_dist[row] = 1.0;
        col_dist[col] = 1.0;
        Self { row_dist, col_dist }
    }

    /// Returns the cell when both distributions are degenerate.
    pub fn as_pure(&self) -> Option<(usize, usize)> {
        let pick = |d: &[f64]| d.iter().position(|&p| (p - 1.0).abs() < 1e-12);
        Some((pick(&self.row_dist)?, pick(&self.col_dist)?))
    }
}

/// Integer pivot columns are indexed by label: `0..m` are row strategies,
/// `m..m+n` column strategies.
struct Tableau {
    coeffs: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Labels of the slack variables, which carry the inverse basis used for the
    /// lexicographic ratio test.
    slack_labels: Vec<usize>,
}

impl Tableau {
    /// Returns the label that left the basis.
    fn pivot_in(&mut self, entering: usize) -> Result<usize> {
        const TOL: f64 = 1e-12;
        let mut best: Option<usize> = None;
        for r in 0..self.rhs.len() {
            let t = self.coeffs[r][entering];
            if t <= TOL {
                continue;
            }
            best = Some(match best {
                None => r,
                Some(b) => {
                    if self.lex_ratio_cmp(r, b, entering) == Ordering::Less {
                        r
                    } else {
                        b
                    }
                }
            });
        }
        let row = best.ok_or_else(|| {
            Error::InvalidGame(format!("unbounded pivot on label {entering}"))
        })?;

        let pivot = self.coeffs[row][entering];
        for v in &mut self.coeffs[row] {
            *v /= pivot;
        }
        self.rhs[row] /= pivot;
        let pivot_row = self.coeffs[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rhs.len() {
            if r == row {
                continue;
            }
            let factor = self.coeffs[r][entering];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in self.coeffs[r].iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            self.coeffs[r][entering] = 0.0;
            self.rhs[r] -= factor * pivot_rhs;
        }
        let leaving = std::mem::replace(&mut self.basis[row], entering);
        Ok(leaving)
    }

    fn lex_ratio_cmp(&self, a: usize, b: usize, entering: usize) -> Ordering {
        const TOL: f64 = 1e-12;
        let ta = self.coeffs[a][entering];
        let tb = self.coeffs[b][entering];
        let keys_a = std::iter::once(self.rhs[a]).chain(self.slack_labels.iter().map(|&l| self.coeffs[a][l]));
        let keys_b = std::iter::once(self.rhs[b]).chain(self.slack_labels.iter().map(|&l| self.coeffs[b][l]));
        for (ka, kb) in keys_a.zip(keys_b) {
            let (ra, rb) = (ka / ta, kb / tb);
            if (ra - rb).abs() > TOL * (1.0 + ra.abs().max(rb.abs())) {
                return ra.partial_cmp(&rb).unwrap_or(Ordering::Equal);
            }
        }
        Ordering::Equal
    }

    fn value_of(&self, label: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == label)
            .map_or(0.0, |r| self.rhs[r].max(0.0))
    }
}

fn positive_scaled(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let min = matrix.iter().flatten().fold(f64::INFINITY, |a, &v| a.min(v));
    let shifted: Vec<Vec<f64>> = matrix
        .iter()
        .map(|row| row.iter().map(|v| v - min + 1.0).collect())
        .collect();
    let max = shifted.iter().flatten().fold(1.0f64, |a, &v| a.max(v));
    shifted
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / max).collect())
        .collect()
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

/// Lemke-Howson complementary pivoting starting by dropping `initial_label`
/// (`0..m` row strategies, `m..m+n` column strategies).
///
/// Ties in the ratio test are broken lexicographically, so the path is well
/// defined on degenerate games too.
pub fn lemke_howson(game: &BimatrixGame, initial_label: usize) -> Result<MixedProfile> {
    game.validate()?;
    let (m, n) = (game.rows(), game.cols());
    if initial_label >= m + n {
        return Err(Error::InvalidGame(format!(
            "initial label {initial_label} out of range 0..{}",
            m + n
        )));
    }
    let a = positive_scaled(&game.row_payoffs);
    let b = positive_scaled(&game.col_payoffs);

    // P = { x >= 0 : B^T x <= 1 }: one row per column strategy j, slack label m + j.
    let mut p = Tableau {
        coeffs: (0..n)
            .map(|j| {
                let mut row = vec![0.0; m + n];
                for i in 0..m {
                    row[i] = b[i][j];
                }
                row[m + j] = 1.0;
                row
            })
            .collect(),
        rhs: vec![1.0; n],
        basis: (m..m + n).collect(),
        slack_labels: (m..m + n).collect(),
    };
    // Q = { y >= 0 : A y <= 1 }: one row per row strategy i, slack label i.
    let mut q = Tableau {
        coeffs: (0..m)
            .map(|i| {
                let mut row = vec![0.0; m + n];
                row[i] = 1.0;
                row[m..].copy_from_slice(&a[i]);
                row
            })
            .collect(),
        rhs: vec![1.0; m],
        basis: (0..m).collect(),
        slack_labels: (0..m).collect(),
    };

    // Dropping a row-strategy label means x_i enters P; otherwise y_j enters Q.
    let mut in_p = initial_label < m;
    let mut entering = initial_label;
    let max_steps = 10_000 + 50 * (m + n) * (m + n);
    for _ in 0..max_steps {
        let leaving = if in_p {
            p.pivot_in(entering)?
        } else {
            q.pivot_in(entering)?
        };
        if leaving == initial_label {
            let x = normalize((0..m).map(|i| p.value_of(i)).collect());
            let y = normalize((m..m + n).map(|l| q.value_of(l)).collect());
            return Ok(MixedProfile {
                row_dist: x,
                col_dist: y,
            });
        }
        entering = leaving;
        in_p = !in_p;
    }
    Err(Error::InvalidGame("Lemke-Howson exceeded its step budget".into()))
}

/// Runs Lemke-Howson from `initial_label` and, should floating-point error
/// leave the result outside the epsilon-Nash tolerance, from the other labels.
pub fn solve_bimatrix(game: &BimatrixGame, initial_label: usize, eps: f64) -> Result<MixedProfile> {
    let k = game.rows() + game.cols();
    let mut last = None;
    for offset in 0..k {
        let label = (initial_label + offset) % k;
        let profile = lemke_howson(game, label)?;
        if is_epsilon_ne(game, &profile, eps) {
            return Ok(profile);
        }
        last = Some(profile);
    }
    log::warn!("no Lemke-Howson start met eps={eps}; returning last profile");
    last.ok_or_else(|| Error::InvalidGame("empty game".into()))
}

/// Cells where each player's action is a best response to the other's.
/// Ties count as best responses.
pub fn enumerate_pure_ne(game: &BimatrixGame) -> Vec<(usize, usize)> {
    let (m, n) = (game.rows(), game.cols());
    let tol = 1e-9 * game.magnitude();
    let col_best: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| game.row_payoffs[i][j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let row_best: Vec<f64> = (0..m)
        .map(|i| game.col_payoffs[i].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if game.row_payoffs[i][j] >= col_best[j] - tol && game.col_payoffs[i][j] >= row_best[i] - tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// True iff no unilateral pure deviation gains more than `eps`.
pub fn is_epsilon_ne(game: &BimatrixGame, profile: &MixedProfile, eps: f64) -> bool {
    let (m, n) = (game.rows(), game.cols());
    if profile.row_dist.len() != m || profile.col_dist.len() != n {
        return false;
    }
    let (u, v) = game.expected_payoffs(profile);
    let row_dev = (0..m)
        .map(|i| (0..n).map(|j| profile.col_dist[j] * game.row_payoffs[i][j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let col_dev = (0..n)
        .map(|j| (0..m).map(|i| profile.row_dist[i] * game.col_payoffs[i][j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    row_dev - u <= eps && col_dev - v <= eps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SelectedEquilibrium {
    Pure { row: usize, col: usize },
    Mixed(MixedProfile),
}

/// Picks the pure equilibrium with the smallest action sum, breaking ties by
/// the smaller row action; falls back to `fallback` when there is none.
///
/// Action indices double as action values, which holds for the field-count
/// games where action `k` means `k` fields.
pub fn select_equilibrium(candidates: &[(usize, usize)], fallback: Option<MixedProfile>) -> Option<SelectedEquilibrium> {
    candidates
        .iter()
        .min_by_key(|&&(r, c)| (r + c, r))
        .map(|&(row, col)| SelectedEquilibrium::Pure { row, col })
        .or(fallback.map(SelectedEquilibrium::Mixed))
}

/// Pure equilibria first, Lemke-Howson only when none exist.
pub fn solve_and_select(game: &BimatrixGame, eps: f64) -> Result<SelectedEquilibrium> {
    let pure = enumerate_pure_ne(game);
    if !pure.is_empty() {
        return Ok(select_equilibrium(&pure, None).expect("non-empty candidates"));
    }
    let mixed = solve_bimatrix(game, 0, eps)?;
    Ok(SelectedEquilibrium::Mixed(mixed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CprSolution {
    pub level: u32,
    pub is_equilibrium: bool,
}

/// Symmetric pure equilibrium of an N-player extraction game.
///
/// `payoff(e, others)` is one player's payoff for extracting `e` while the other
/// players extract `others` in total. Returns the smallest `e*` that is a best
/// response to everyone else playing `e*`; otherwise iterates best responses
/// from zero and flags the result.
pub fn solve_symmetric_cpr<F>(payoff: F, n_players: u32, e_max: u32) -> CprSolution
where
    F: Fn(u32, u32) -> f64,
{
    let others = n_players.saturating_sub(1);
    let best_response = |o: u32| -> (u32, f64) {
        let mut best = (0, payoff(0, o));
        for e in 1..=e_max {
            let u = payoff(e, o);
            if u > best.1 {
                best = (e, u);
            }
        }
        best
    };
    for e in 0..=e_max {
        let o = others * e;
        let own = payoff(e, o);
        let (_, best) = best_response(o);
        if own >= best - 1e-12 * best.abs().max(1.0) {
            return CprSolution {
                level: e,
                is_equilibrium: true,
            };
        }
    }
    let mut e = 0;
    for _ in 0..1000 {
        let (next, _) = best_response(others * e);
        if next == e {
            break;
        }
        e = next;
    }
    CprSolution {
        level: e,
        is_equilibrium: false,
    }
}
