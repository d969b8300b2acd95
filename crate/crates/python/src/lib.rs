//! Python bindings for the commons simulator.

use pyo3::prelude::*;

#[pymodule]
mod commons_egta {
    use std::path::{Path, PathBuf};

    use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    use ::commons_egta::equilibrium::{
        enumerate_pure_ne, is_epsilon_ne, solve_and_select, solve_bimatrix, BimatrixGame, MixedProfile,
        SelectedEquilibrium,
    };
    use ::commons_egta::games::{build_irrigation_game, IrrigationGameSpec};
    use ::commons_egta::harness::{self, load_config, run_simulation, RunConfig, DEFAULT_TAUS};
    use ::commons_egta::policies::moving_average_predict;
    use ::commons_egta::Error;

    fn to_py(e: Error) -> PyErr {
        match e {
            Error::Io { .. } => PyIOError::new_err(e.to_string()),
            Error::Config(_) | Error::InvalidGame(_) | Error::Schema { .. } | Error::Template { .. } => {
                PyValueError::new_err(e.to_string())
            }
            _ => PyRuntimeError::new_err(e.to_string()),
        }
    }

    /// Two-player game in normal form.
    #[pyclass(name = "Game", frozen)]
    pub struct Game {
        inner: BimatrixGame,
    }

    #[pymethods]
    impl Game {
        #[new]
        #[pyo3(signature = (row_payoffs, col_payoffs, row_actions=None, col_actions=None))]
        fn new(
            row_payoffs: Vec<Vec<f64>>,
            col_payoffs: Vec<Vec<f64>>,
            row_actions: Option<Vec<String>>,
            col_actions: Option<Vec<String>>,
        ) -> PyResult<Self> {
            let mut inner = BimatrixGame::new(row_payoffs, col_payoffs).map_err(to_py)?;
            if row_actions.is_some() || col_actions.is_some() {
                let rows = row_actions.unwrap_or_else(|| inner.row_actions.clone());
                let cols = col_actions.unwrap_or_else(|| inner.col_actions.clone());
                inner = inner.with_labels(rows, cols).map_err(to_py)?;
            }
            Ok(Self { inner })
        }

        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            Ok(Self {
                inner: BimatrixGame::from_json(text).map_err(to_py)?,
            })
        }

        #[getter]
        fn row_payoffs(&self) -> Vec<Vec<f64>> {
            self.inner.row_payoffs.clone()
        }

        #[getter]
        fn col_payoffs(&self) -> Vec<Vec<f64>> {
            self.inner.col_payoffs.clone()
        }

        #[getter]
        fn row_actions(&self) -> Vec<String> {
            self.inner.row_actions.clone()
        }

        #[getter]
        fn col_actions(&self) -> Vec<String> {
            self.inner.col_actions.clone()
        }

        /// Pure equilibria as `(row, col)` index pairs.
        fn pure_equilibria(&self) -> Vec<(usize, usize)> {
            enumerate_pure_ne(&self.inner)
        }

        /// One equilibrium from Lemke-Howson as `(row_dist, col_dist)`.
        #[pyo3(signature = (initial_label=0, eps=1e-9))]
        fn lemke_howson(&self, initial_label: usize, eps: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
            let p = solve_bimatrix(&self.inner, initial_label, eps).map_err(to_py)?;
            Ok((p.row_dist, p.col_dist))
        }

        /// Selected equilibrium: `("pure", row, col)` or `("mixed", row_dist, col_dist)`.
        #[pyo3(signature = (eps=1e-9))]
        fn select<'py>(&self, py: Python<'py>, eps: f64) -> PyResult<Bound<'py, PyAny>> {
            let chosen = solve_and_select(&self.inner, eps).map_err(to_py)?;
            let obj = match chosen {
                SelectedEquilibrium::Pure { row, col } => ("pure", row, col).into_pyobject(py)?.into_any(),
                SelectedEquilibrium::Mixed(p) => ("mixed", p.row_dist, p.col_dist).into_pyobject(py)?.into_any(),
            };
            Ok(obj)
        }

        #[pyo3(signature = (row_dist, col_dist, eps=1e-9))]
        fn is_equilibrium(&self, row_dist: Vec<f64>, col_dist: Vec<f64>, eps: f64) -> PyResult<bool> {
            if row_dist.len() != self.inner.rows() || col_dist.len() != self.inner.cols() {
                return Err(PyValueError::new_err("distribution lengths do not match the game"));
            }
            Ok(is_epsilon_ne(&self.inner, &MixedProfile { row_dist, col_dist }, eps))
        }

        fn __repr__(&self) -> String {
            format!("Game({}x{})", self.inner.rows(), self.inner.cols())
        }
    }

    /// Two-farmer irrigation game on a shared canal.
    #[pyfunction]
    #[pyo3(signature = (
        water, tau=0.0, budget_up=1000.0, budget_down=1000.0, c=10.0, w=10.0, y0=30.0, ys=18.0,
        stress_threshold=6.0, kappa=50.0, fish_income_up=0.0, fish_income_down=0.0, max_fields=10,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn irrigation_game(
        water: f64,
        tau: f64,
        budget_up: f64,
        budget_down: f64,
        c: f64,
        w: f64,
        y0: f64,
        ys: f64,
        stress_threshold: f64,
        kappa: f64,
        fish_income_up: f64,
        fish_income_down: f64,
        max_fields: u32,
    ) -> PyResult<Game> {
        let spec = IrrigationGameSpec {
            budget_up,
            budget_down,
            c,
            water,
            w,
            y0,
            ys,
            stress_threshold,
            kappa,
            tau,
            fish_income_up,
            fish_income_down,
            max_fields,
        };
        Ok(Game {
            inner: build_irrigation_game(&spec).map_err(to_py)?,
        })
    }

    fn config_from(path: Option<PathBuf>, toml: Option<&str>) -> PyResult<RunConfig> {
        match (path, toml) {
            (Some(p), None) => load_config(&p).map_err(to_py),
            (None, Some(text)) => RunConfig::from_toml_str(text, Path::new(".")).map_err(to_py),
            (None, None) => Ok(RunConfig::default()),
            (Some(_), Some(_)) => Err(PyValueError::new_err("pass either config or toml, not both")),
        }
    }

    /// Runs one simulation; writes outputs when `out` is given and returns the summary.
    #[pyfunction]
    #[pyo3(signature = (config=None, toml=None, out=None))]
    fn run<'py>(
        py: Python<'py>,
        config: Option<PathBuf>,
        toml: Option<&str>,
        out: Option<PathBuf>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = config_from(config, toml)?;
        let art = py.detach(|| run_simulation(&cfg)).map_err(to_py)?;
        if let Some(dir) = out {
            harness::emit_outputs(&art, &dir).map_err(to_py)?;
        }
        let d = PyDict::new(py);
        d.set_item("pipeline", cfg.pipeline.as_str())?;
        d.set_item("tau", cfg.tau)?;
        d.set_item("seed", cfg.seed)?;
        d.set_item("records", art.records.len())?;
        d.set_item("fallback_events", art.fallback_count())?;
        d.set_item("final_budgets", art.final_budgets())?;
        if let Some(s) = &art.summary {
            d.set_item("min_budget_final", s.min_budget_final)?;
            d.set_item("max_budget_final", s.max_budget_final)?;
            d.set_item("pct_both", s.pct_both)?;
            d.set_item("pct_irrig_only", s.pct_irrig_only)?;
            d.set_item("pct_fish_only", s.pct_fish_only)?;
            d.set_item("pct_none", s.pct_none)?;
        }
        Ok(d)
    }

    /// Runs the tax check; returns `(passed, report_text)`.
    #[pyfunction]
    #[pyo3(signature = (config=None, toml=None, taus=None))]
    fn calibrate_check(
        py: Python<'_>,
        config: Option<PathBuf>,
        toml: Option<&str>,
        taus: Option<Vec<f64>>,
    ) -> PyResult<(bool, String)> {
        let cfg = config_from(config, toml)?;
        let taus = taus.unwrap_or_else(|| DEFAULT_TAUS.to_vec());
        let report = py.detach(|| harness::calibrate_check(&cfg, &taus));
        Ok((report.passed(), report.to_string()))
    }

    /// Mean of the last `window` values.
    #[pyfunction]
    #[pyo3(signature = (history, window=20))]
    fn moving_average(history: Vec<f64>, window: usize) -> PyResult<f64> {
        moving_average_predict(&history, window).map_err(to_py)
    }
}
