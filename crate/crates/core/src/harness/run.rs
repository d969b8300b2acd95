use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Pipeline, RunConfig};
use super::inflow::inflow_series;
use super::metrics::{summarize, Summary};
use crate::ecology::{advance_year, Decision, FishPopulation, WorldState, YearEcology, YearRecord};
use crate::games::ActionSituationModel;
use crate::gateway::{Gateway, LogEntry};
use crate::policies::{
    centralized_allocate, default_fish_target, expert_egta_decide, extract_action_situations, generative_decide,
    naive_egta_decide, procedural_decide, AuthorityState, HouseholdView, PolicyEvent, PromptSet,
};
use crate::{Error, Result};

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: RunConfig,
    /// Year-major, household-minor.
    pub records: Vec<YearRecord>,
    /// One entry per simulated year.
    pub ecology: Vec<YearEcology>,
    pub events: Vec<PolicyEvent>,
    pub request_log: Vec<LogEntry>,
    pub network_calls: u64,
    /// Situations extracted by the naive pipeline.
    pub action_situations: Vec<ActionSituationModel>,
    pub summary: Option<Summary>,
}

impl RunArtifacts {
    pub fn fallback_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == crate::policies::EventKind::Fallback)
            .count()
    }

    /// Adult fish stock after each year.
    pub fn fish_stock(&self) -> Vec<f64> {
        self.ecology.iter().map(|e| e.fish_after.adult_total()).collect()
    }

    pub fn final_budgets(&self) -> Vec<f64> {
        let n = self.config.n_households;
        self.records[self.records.len().saturating_sub(n)..]
            .iter()
            .map(|r| r.budget)
            .collect()
    }
}

/// Decision source for [`run_with`].
pub type DecideFn<'a> = dyn FnMut(&WorldState, &mut ChaCha8Rng, &mut Vec<PolicyEvent>) -> Result<Vec<Decision>> + 'a;

/// Runs the configured pipeline for `config.horizon` years.
pub fn run_simulation(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let params = config.ecology.clone();
    let policy = config.policy_params();
    let n = config.n_households;

    let prompts = match &config.prompts_dir {
        Some(dir) => PromptSet::load(dir)?,
        None => PromptSet::default(),
    };
    let gateway = if config.pipeline.uses_gateway() {
        Some(Gateway::new(config.gateway.clone().with_env())?)
    } else {
        None
    };
    let profile = prompts.profile(config.profile)?;

    let naive = match (config.pipeline, &gateway) {
        (Pipeline::NaiveEgta, Some(gw)) => {
            let games = extract_action_situations(gw, &prompts, n, &policy).map_err(|e| Error::Run {
                year: 1,
                household: None,
                source: Box::new(e),
            })?;
            Some(games)
        }
        _ => None,
    };

    let pipeline = config.pipeline;
    let tau = config.tau;
    let mut decide = |world: &WorldState, rng: &mut ChaCha8Rng, events: &mut Vec<PolicyEvent>| -> Result<Vec<Decision>> {
        let water = world.expected_node_water();
        let wrap = |i: usize, e: Error| Error::Run {
            year: world.year,
            household: Some(i + 1),
            source: Box::new(e),
        };
        match pipeline {
            Pipeline::Procedural => Ok(world
                .households
                .iter()
                .zip(&water)
                .map(|(h, &q)| procedural_decide(h, q, &params, &policy, n))
                .collect()),
            Pipeline::Centralized => {
                let history = if world.inflow_history.is_empty() {
                    vec![world.river.annual_total()]
                } else {
                    world.inflow_history.clone()
                };
                let authority = AuthorityState {
                    budget: world.authority_budget,
                    inflow_history: history,
                    window: policy.authority_window,
                };
                let fields = centralized_allocate(&authority, &params, &policy, n)?;
                Ok(fields
                    .into_iter()
                    .enumerate()
                    .map(|(i, f)| Decision::new(f, default_fish_target(i + 1, n, &policy)))
                    .collect())
            }
            Pipeline::ExpertEgta => Ok(expert_egta_decide(world, tau, &params, &policy, rng)?.decisions),
            Pipeline::Generative | Pipeline::NaiveEgta => {
                let gw = gateway.as_ref().expect("gateway built for LLM pipelines");
                let mut out = Vec::with_capacity(n);
                for (i, h) in world.households.iter().enumerate() {
                    let view = HouseholdView {
                        year: world.year,
                        household: h,
                        n_households: n,
                        predicted_water: water[i],
                        fish_stock: world.fish.adult_total(),
                    };
                    let (d, ev) = match &naive {
                        Some(games) => naive_egta_decide(games, &view, &profile, &prompts, gw, &params, &policy),
                        None => generative_decide(&view, &profile, &prompts, gw, &params, &policy),
                    }
                    .map_err(|e| wrap(i, e))?;
                    events.extend(ev);
                    out.push(d);
                }
                Ok(out)
            }
        }
    };

    let mut artifacts = run_with(config, &mut decide)?;
    if let Some(gw) = &gateway {
        artifacts.request_log = gw.log_entries();
        artifacts.network_calls = gw.network_calls();
    }
    if let Some(games) = naive {
        artifacts.action_situations = games.all;
    }
    Ok(artifacts)
}

/// Simulation loop with an arbitrary decision source.
pub fn run_with(config: &RunConfig, decide: &mut DecideFn<'_>) -> Result<RunArtifacts> {
    config.validate()?;
    let horizon = config.horizon as usize;
    let n = config.n_households;
    let params = &config.ecology;
    let policy = config.policy_params();
    let rivers = inflow_series(&config.inflow, horizon, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut world = WorldState::new(
        n,
        config.initial_budget,
        FishPopulation::uniform(config.initial_fish),
        rivers[0].clone(),
    );
    let mut records = Vec::with_capacity(horizon * n);
    let mut ecology = Vec::with_capacity(horizon);
    let mut events = Vec::new();

    for river in rivers {
        world.river = river;
        let year = world.year;
        let decisions: Vec<Decision> = decide(&world, &mut rng, &mut events)?
            .into_iter()
            .map(|d| d.clamped(policy.max_fields, policy.e_max))
            .collect();
        let outcome = advance_year(&world, &decisions, params).map_err(|e| Error::Run {
            year,
            household: None,
            source: Box::new(e),
        })?;
        let mut next = outcome.state;
        if config.pipeline == Pipeline::Centralized {
            let net: f64 = outcome
                .records
                .iter()
                .map(|r| r.crop_income - r.irrigation_cost - params.kappa)
                .sum();
            next.authority_budget += net;
        }
        records.extend(outcome.records);
        ecology.push(outcome.ecology);
        world = next;
    }

    let summary = summarize(&records);
    Ok(RunArtifacts {
        config: config.clone(),
        records,
        ecology,
        events,
        request_log: Vec::new(),
        network_calls: 0,
        action_situations: Vec::new(),
        summary,
    })
}
