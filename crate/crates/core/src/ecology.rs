//! River routing, crop yields with plant stress, the age-structured lake fish
//! population and the annual budget update.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FISH_CLASSES: usize = 13;
pub const LARVA_CLASS: usize = 0;
pub const FIRST_ADULT_CLASS: usize = 5;
pub const MONTHS: usize = 12;

/// Guards `floor(delivered / w)` against deliveries that are a few ulps short
/// of a whole field after being split across months.
const FIELD_EPS: f64 = 1e-9;

/// One household's annual choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Decision {
    pub fields_planted: u32,
    pub fish_target: u32,
}

impl Decision {
    pub fn new(fields_planted: u32, fish_target: u32) -> Self {
        Self {
            fields_planted,
            fish_target,
        }
    }

    pub fn clamped(self, max_fields: u32, e_max: u32) -> Self {
        Self {
            fields_planted: self.fields_planted.min(max_fields),
            fish_target: self.fish_target.min(e_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdState {
    /// 1-based position along the river, 1 is the most upstream.
    pub index: usize,
    pub budget: f64,
    pub stress: f64,
    pub last_yield_income: f64,
    pub last_fields: u32,
    pub last_catch: f64,
}

impl HouseholdState {
    pub fn new(index: usize, budget: f64) -> Self {
        Self {
            index,
            budget,
            stress: 0.0,
            last_yield_income: 0.0,
            last_fields: 0,
            last_catch: 0.0,
        }
    }
}

/// Abundances per age class: 0 larvae, 1-4 juveniles, 5-12 adults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FishPopulation {
    pub classes: [f64; FISH_CLASSES],
}

impl FishPopulation {
    pub fn new(classes: [f64; FISH_CLASSES]) -> Self {
        Self { classes }
    }

    pub fn empty() -> Self {
        Self {
            classes: [0.0; FISH_CLASSES],
        }
    }

    /// Same abundance in every class.
    pub fn uniform(per_class: f64) -> Self {
        Self {
            classes: [per_class.max(0.0); FISH_CLASSES],
        }
    }

    pub fn adult_total(&self) -> f64 {
        self.classes[FIRST_ADULT_CLASS..].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.classes.iter().sum()
    }
}

/// Monthly river inflow for one year. Months are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiverYear {
    pub monthly_inflow: [f64; MONTHS],
    pub irrigation_months: Vec<usize>,
    pub may_index: usize,
}

impl RiverYear {
    /// May through September irrigation, May as the migration month.
    pub fn new(monthly_inflow: [f64; MONTHS]) -> Self {
        Self {
            monthly_inflow,
            irrigation_months: vec![5, 6, 7, 8, 9],
            may_index: 5,
        }
    }

    pub fn annual_total(&self) -> f64 {
        self.monthly_inflow.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.monthly_inflow.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err(Error::config("river inflows must be finite and >= 0"));
        }
        if self.irrigation_months.is_empty() {
            return Err(Error::config("irrigation_months must not be empty"));
        }
        if self
            .irrigation_months
            .iter()
            .chain(std::iter::once(&self.may_index))
            .any(|m| !(1..=MONTHS).contains(m))
        {
            return Err(Error::config("month indices must lie in 1..=12"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcologyParams {
    /// Water per field per year.
    pub w: f64,
    /// Irrigation cost per irrigated field.
    pub c: f64,
    /// Unstressed yield income per field.
    pub y0: f64,
    /// Stressed yield income per field.
    pub ys: f64,
    /// Reach-wide irrigated field count above which every field yields `ys`.
    pub stress_threshold: f64,
    /// Fixed annual consumption cost.
    pub kappa: f64,
    pub fish_price: f64,
    pub sigma_adult: f64,
    pub sigma_larva: f64,
    pub sigma_juvenile: f64,
    pub k_juv: f64,
    pub fecundity: f64,
    pub q_min: f64,
    pub m_mig: f64,
    pub q_ref: f64,
    pub stress_recovery: f64,
}

impl Default for EcologyParams {
    fn default() -> Self {
        Self {
            w: 10.0,
            c: 10.0,
            y0: 30.0,
            ys: 18.0,
            stress_threshold: 40.0,
            kappa: 50.0,
            fish_price: 5.0,
            sigma_adult: 0.8,
            sigma_larva: 0.2,
            sigma_juvenile: 0.9,
            k_juv: 5000.0,
            fecundity: 2.0,
            q_min: 40.0,
            m_mig: 3000.0,
            q_ref: 200.0,
            stress_recovery: 0.25,
        }
    }
}

impl EcologyParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("w", self.w), ("c", self.c), ("y0", self.y0)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("ecology.{name} must be > 0, got {v}")));
            }
        }
        if !(self.ys > 0.0 && self.ys < self.y0) {
            return Err(Error::config(format!(
                "ecology.ys must satisfy 0 < ys < y0, got ys={} y0={}",
                self.ys, self.y0
            )));
        }
        let unit = [
            ("sigma_adult", self.sigma_adult),
            ("sigma_larva", self.sigma_larva),
            ("sigma_juvenile", self.sigma_juvenile),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("ecology.{name} must lie in (0, 1], got {v}")));
            }
        }
        let non_negative = [
            ("stress_threshold", self.stress_threshold),
            ("kappa", self.kappa),
            ("fish_price", self.fish_price),
            ("fecundity", self.fecundity),
            ("q_min", self.q_min),
            ("m_mig", self.m_mig),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(Error::config(format!("ecology.{name} must be >= 0, got {v}")));
            }
        }
        if !(self.k_juv > 0.0) {
            return Err(Error::config("ecology.k_juv must be > 0"));
        }
        if !(self.q_ref > 0.0) {
            return Err(Error::config("ecology.q_ref must be > 0"));
        }
        if !(self.stress_recovery >= 0.0 && self.stress_recovery <= 1.0) {
            return Err(Error::config("ecology.stress_recovery must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiverOutcome {
    /// Annual water delivered to each household, upstream first.
    pub delivered: Vec<f64>,
    /// Residual flow reaching the lake, per month.
    pub lake_inflow: [f64; MONTHS],
    /// Total withdrawals per month.
    pub withdrawn: [f64; MONTHS],
    /// Annual flow arriving at each household's node before it withdraws.
    pub node_inflow: Vec<f64>,
}

impl RiverOutcome {
    pub fn lake_annual(&self) -> f64 {
        self.lake_inflow.iter().sum()
    }
}

/// Routes one year of river flow down the chain of households.
///
/// Each household's annual demand `w * planted` is split evenly across the
/// irrigation months; within a month households withdraw in upstream order and
/// whatever is left flows into the lake.
pub fn route_river(river: &RiverYear, planted: &[u32], params: &EcologyParams) -> RiverOutcome {
    let n = planted.len();
    let irrigation_months = river.irrigation_months.len() as f64;
    let monthly_demand: Vec<f64> = planted
        .iter()
        .map(|&p| params.w * f64::from(p) / irrigation_months)
        .collect();

    let mut delivered = vec![0.0; n];
    let mut node_inflow = vec![0.0; n];
    let mut lake_inflow = [0.0; MONTHS];
    let mut withdrawn = [0.0; MONTHS];

    for month in 1..=MONTHS {
        let mut remaining = river.monthly_inflow[month - 1];
        let irrigating = river.irrigation_months.contains(&month);
        for i in 0..n {
            node_inflow[i] += remaining;
            if irrigating {
                let take = monthly_demand[i].min(remaining);
                delivered[i] += take;
                withdrawn[month - 1] += take;
                remaining -= take;
            }
        }
        lake_inflow[month - 1] = remaining;
    }

    RiverOutcome {
        delivered,
        lake_inflow,
        withdrawn,
        node_inflow,
    }
}

/// Fields that actually received a full year's water.
pub fn irrigated_fields(planted: u32, delivered: f64, w: f64) -> u32 {
    let supported = (delivered / w + FIELD_EPS).floor().max(0.0);
    planted.min(supported as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropOutcome {
    pub income: f64,
    pub stress_out: f64,
    pub irrigated: u32,
}

pub fn crop_outcome(
    planted: u32,
    delivered: f64,
    stress_in: f64,
    total_irrigated_in_reach: u32,
    params: &EcologyParams,
) -> CropOutcome {
    let irrigated = irrigated_fields(planted, delivered, params.w);
    let per_field = if f64::from(total_irrigated_in_reach) <= params.stress_threshold {
        params.y0
    } else {
        params.ys
    };
    let deficit = if planted == 0 {
        0.0
    } else {
        (1.0 - delivered / (params.w * f64::from(planted))).clamp(0.0, 1.0)
    };
    let stress_out = (stress_in + deficit - params.stress_recovery).clamp(0.0, 1.0);
    CropOutcome {
        income: f64::from(irrigated) * per_field * (1.0 - stress_out),
        stress_out,
        irrigated,
    }
}

/// Beverton-Holt survivors of a class with abundance `a`.
pub fn beverton_holt(sigma: f64, a: f64, capacity: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    sigma * a / (1.0 + a / capacity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FishOutcome {
    pub population: FishPopulation,
    /// Catch per household in the caller's (upstream-first) indexing.
    pub catches: Vec<f64>,
    pub pre_harvest_adults: f64,
    pub larvae: f64,
    pub migration: bool,
}

/// One year of the lake fish population: harvest, aging, then recruitment.
///
/// `household_order` lists household positions (0-based indices into
/// `harvest_targets`) in the order they fish, closest to the lake first.
pub fn step_fish(
    population: &FishPopulation,
    lake_inflow: &[f64; MONTHS],
    may_index: usize,
    harvest_targets: &[u32],
    household_order: &[usize],
    params: &EcologyParams,
) -> FishOutcome {
    let mut classes = population.classes;
    let pre_harvest_adults: f64 = classes[FIRST_ADULT_CLASS..].iter().sum();

    // Harvest in proximity order, removing proportionally across adult classes.
    let mut remaining = pre_harvest_adults;
    let mut catches = vec![0.0; harvest_targets.len()];
    for &h in household_order {
        let catch = f64::from(harvest_targets[h]).min(remaining).max(0.0);
        catches[h] = catch;
        remaining -= catch;
    }
    let caught: f64 = catches.iter().sum();
    if pre_harvest_adults > 0.0 {
        let keep = if caught >= pre_harvest_adults {
            0.0
        } else {
            (pre_harvest_adults - caught) / pre_harvest_adults
        };
        for a in &mut classes[FIRST_ADULT_CLASS..] {
            *a = (*a * keep).max(0.0);
        }
    }
    let post_harvest_adults: f64 = classes[FIRST_ADULT_CLASS..].iter().sum();

    // Aging; the oldest class leaves the population.
    let mut aged = [0.0; FISH_CLASSES];
    aged[1] = beverton_holt(params.sigma_larva, classes[LARVA_CLASS], params.k_juv);
    for k in 1..FIRST_ADULT_CLASS {
        aged[k + 1] = beverton_holt(params.sigma_juvenile, classes[k], params.k_juv);
    }
    for k in FIRST_ADULT_CLASS..FISH_CLASSES - 1 {
        aged[k + 1] = classes[k] * params.sigma_adult;
    }

    // Recruitment.
    let lake_annual: f64 = lake_inflow.iter().sum();
    let mut larvae = params.fecundity * post_harvest_adults * (lake_annual / params.q_ref).min(1.0);
    let migration = lake_inflow[may_index - 1] >= params.q_min;
    if migration {
        larvae += params.m_mig;
    }
    aged[LARVA_CLASS] = larvae.max(0.0);

    FishOutcome {
        population: FishPopulation::new(aged),
        catches,
        pre_harvest_adults,
        larvae: aged[LARVA_CLASS],
        migration,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivityClass {
    Both,
    FarmingOnly,
    FishingOnly,
    None,
}

impl ActivityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ActivityClass::Both => "both",
            ActivityClass::FarmingOnly => "farming_only",
            ActivityClass::FishingOnly => "fishing_only",
            ActivityClass::None => "none",
        }
    }
}

pub fn classify_activity(irrigated: u32, catch: f64) -> ActivityClass {
    match (irrigated > 0, catch > 0.0) {
        (true, true) => ActivityClass::Both,
        (true, false) => ActivityClass::FarmingOnly,
        (false, true) => ActivityClass::FishingOnly,
        (false, false) => ActivityClass::None,
    }
}

/// Snapshot of the simulated world at the start of a year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// 1-based year about to be simulated.
    pub year: u32,
    pub households: Vec<HouseholdState>,
    pub fish: FishPopulation,
    pub river: RiverYear,
    /// Annual flow that reached each node in the previous year, if any.
    pub last_node_inflow: Option<Vec<f64>>,
    pub authority_budget: f64,
    /// Annual river inflow totals observed so far.
    pub inflow_history: Vec<f64>,
}

impl WorldState {
    pub fn new(n_households: usize, initial_budget: f64, fish: FishPopulation, river: RiverYear) -> Self {
        Self {
            year: 1,
            households: (1..=n_households)
                .map(|i| HouseholdState::new(i, initial_budget))
                .collect(),
            fish,
            river,
            last_node_inflow: None,
            authority_budget: initial_budget * n_households as f64,
            inflow_history: Vec::new(),
        }
    }

    pub fn n_households(&self) -> usize {
        self.households.len()
    }

    /// Water each node expects this year: last year's residual flow at the node,
    /// or the raw river inflow in the first year.
    pub fn expected_node_water(&self) -> Vec<f64> {
        match &self.last_node_inflow {
            Some(v) => v.clone(),
            None => vec![self.river.annual_total(); self.households.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearRecord {
    pub year: u32,
    pub household: usize,
    pub planted: u32,
    pub irrigated: u32,
    pub delivered: f64,
    pub crop_income: f64,
    pub catch: f64,
    pub fish_income: f64,
    pub irrigation_cost: f64,
    pub budget: f64,
    pub stress: f64,
    pub activity: ActivityClass,
}

/// Whole-system quantities for one simulated year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearEcology {
    pub river_inflow: [f64; MONTHS],
    pub withdrawn: [f64; MONTHS],
    pub lake_inflow: [f64; MONTHS],
    pub pre_harvest_adults: f64,
    pub total_catch: f64,
    pub fish_after: FishPopulation,
    pub migration: bool,
}

pub struct YearOutcome {
    pub state: WorldState,
    pub records: Vec<YearRecord>,
    pub ecology: YearEcology,
}

/// Simulates one year given every household's decision.
///
/// The returned state still carries this year's river; the caller installs the
/// next year's inflow before advancing again.
pub fn advance_year(state: &WorldState, decisions: &[Decision], params: &EcologyParams) -> Result<YearOutcome> {
    let n = state.households.len();
    if decisions.len() != n {
        return Err(Error::config(format!(
            "expected {n} decisions, got {}",
            decisions.len()
        )));
    }

    let planted: Vec<u32> = decisions.iter().map(|d| d.fields_planted).collect();
    let river = route_river(&state.river, &planted, params);

    let irrigated: Vec<u32> = planted
        .iter()
        .zip(&river.delivered)
        .map(|(&p, &d)| irrigated_fields(p, d, params.w))
        .collect();
    let reach_total: u32 = irrigated.iter().sum();
    let crops: Vec<CropOutcome> = state
        .households
        .iter()
        .enumerate()
        .map(|(i, h)| crop_outcome(planted[i], river.delivered[i], h.stress, reach_total, params))
        .collect();

    let targets: Vec<u32> = decisions.iter().map(|d| d.fish_target).collect();
    let downstream_first: Vec<usize> = (0..n).rev().collect();
    let fish = step_fish(
        &state.fish,
        &river.lake_inflow,
        state.river.may_index,
        &targets,
        &downstream_first,
        params,
    );

    let mut households = Vec::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    for (i, h) in state.households.iter().enumerate() {
        let crop = crops[i];
        let catch = fish.catches[i];
        let fish_income = params.fish_price * catch;
        let irrigation_cost = params.c * f64::from(crop.irrigated);
        let budget = h.budget + crop.income + fish_income - irrigation_cost - params.kappa;
        households.push(HouseholdState {
            index: h.index,
            budget,
            stress: crop.stress_out,
            last_yield_income: crop.income,
            last_fields: planted[i],
            last_catch: catch,
        });
        records.push(YearRecord {
            year: state.year,
            household: h.index,
            planted: planted[i],
            irrigated: crop.irrigated,
            delivered: river.delivered[i],
            crop_income: crop.income,
            catch,
            fish_income,
            irrigation_cost,
            budget,
            stress: crop.stress_out,
            activity: classify_activity(crop.irrigated, catch),
        });
    }

    let mut inflow_history = state.inflow_history.clone();
    inflow_history.push(state.river.annual_total());

    let ecology = YearEcology {
        river_inflow: state.river.monthly_inflow,
        withdrawn: river.withdrawn,
        lake_inflow: river.lake_inflow,
        pre_harvest_adults: fish.pre_harvest_adults,
        total_catch: fish.catches.iter().sum(),
        fish_after: fish.population,
        migration: fish.migration,
    };

    Ok(YearOutcome {
        state: WorldState {
            year: state.year + 1,
            households,
            fish: fish.population,
            river: state.river.clone(),
            last_node_inflow: Some(river.node_inflow),
            authority_budget: state.authority_budget,
            inflow_history,
        },
        records,
        ecology,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_month_river(inflow: f64) -> RiverYear {
        let mut q = [0.0; MONTHS];
        q[6] = inflow;
        RiverYear {
            monthly_inflow: q,
            irrigation_months: vec![7],
            may_index: 5,
        }
    }

    #[test]
    fn routing_upstream_priority() {
        let params = EcologyParams::default();
        let out = route_river(&one_month_river(100.0), &[3, 3, 6], &params);
        assert_eq!(out.delivered, vec![30.0, 30.0, 40.0]);
        assert_eq!(out.lake_inflow[6], 0.0);
    }

    #[test]
    fn routing_zero_demand_passes_everything() {
        let params = EcologyParams::default();
        let river = RiverYear::new([7.0, 8.0, 9.0, 10.0, 50.0, 60.0, 70.0, 60.0, 50.0, 20.0, 10.0, 5.0]);
        let out = route_river(&river, &[0, 0, 0], &params);
        assert_eq!(out.delivered, vec![0.0; 3]);
        assert_eq!(out.lake_inflow, river.monthly_inflow);
    }

    #[test]
    fn routing_capacity_clip() {
        let params = EcologyParams::default();
        let out = route_river(&one_month_river(100.0), &[15], &params);
        assert_eq!(out.delivered, vec![100.0]);
        assert_eq!(out.lake_inflow[6], 0.0);
    }

    #[test]
    fn crop_fully_supplied() {
        let p = EcologyParams::default();
        let out = crop_outcome(5, 5.0 * p.w, 0.0, 5, &p);
        assert_eq!(out.irrigated, 5);
        assert_eq!(out.stress_out, 0.0);
        assert_eq!(out.income, 5.0 * p.y0);
    }

    #[test]
    fn crop_without_water() {
        let p = EcologyParams::default();
        let out = crop_outcome(5, 0.0, 0.0, 0, &p);
        assert_eq!(out.irrigated, 0);
        assert_eq!(out.income, 0.0);
        assert_eq!(out.stress_out, (1.0 - p.stress_recovery).min(1.0));
    }

    #[test]
    fn crop_idle_recovers() {
        let p = EcologyParams::default();
        let out = crop_outcome(0, 0.0, 0.6, 0, &p);
        assert_eq!(out.income, 0.0);
        assert_eq!(out.stress_out, (0.6f64 - p.stress_recovery).max(0.0));
    }

    #[test]
    fn crop_stressed_reach_uses_ys() {
        let p = EcologyParams::default();
        let over = p.stress_threshold as u32 + 1;
        let out = crop_outcome(2, 2.0 * p.w, 0.0, over, &p);
        assert_eq!(out.income, 2.0 * p.ys);
    }

    #[test]
    fn split_delivery_still_counts_whole_fields() {
        let p = EcologyParams {
            w: 3.0,
            ..EcologyParams::default()
        };
        let river = RiverYear::new([100.0; MONTHS]);
        let out = route_river(&river, &[7], &p);
        assert_eq!(irrigated_fields(7, out.delivered[0], p.w), 7);
    }

    #[test]
    fn fish_pure_aging_shift() {
        let params = EcologyParams {
            sigma_adult: 1.0,
            sigma_larva: 1.0,
            sigma_juvenile: 1.0,
            k_juv: f64::INFINITY,
            fecundity: 0.0,
            q_min: f64::INFINITY,
            ..EcologyParams::default()
        };
        let mut classes = [0.0; FISH_CLASSES];
        for (k, c) in classes.iter_mut().enumerate() {
            *c = (k + 1) as f64;
        }
        let out = step_fish(
            &FishPopulation::new(classes),
            &[0.0; MONTHS],
            5,
            &[0, 0],
            &[1, 0],
            &params,
        );
        let mut expected = [0.0; FISH_CLASSES];
        expected[1..].copy_from_slice(&classes[..FISH_CLASSES - 1]);
        assert_eq!(out.population.classes, expected);
        assert!(!out.migration);
    }

    #[test]
    fn fish_harvest_clipped_to_stock() {
        let params = EcologyParams::default();
        let mut classes = [0.0; FISH_CLASSES];
        classes[5] = 4.0;
        classes[9] = 6.0;
        let out = step_fish(&FishPopulation::new(classes), &[0.0; MONTHS], 5, &[25], &[0], &params);
        assert_eq!(out.catches, vec![10.0]);
        assert_eq!(out.pre_harvest_adults, 10.0);
        assert_eq!(out.population.adult_total(), 0.0);
    }

    #[test]
    fn fish_downstream_households_fish_first() {
        let params = EcologyParams::default();
        let mut classes = [0.0; FISH_CLASSES];
        classes[6] = 12.0;
        let out = step_fish(&FishPopulation::new(classes), &[0.0; MONTHS], 5, &[10, 10], &[1, 0], &params);
        assert_eq!(out.catches, vec![2.0, 10.0]);
    }

    #[test]
    fn beverton_holt_at_capacity_halves() {
        let sigma = 0.7;
        let k = 500.0;
        assert!((beverton_holt(sigma, k, k) - sigma * k / 2.0).abs() < 1e-12);
    }

    #[test]
    fn migration_triggers_on_may_flow() {
        let params = EcologyParams {
            fecundity: 0.0,
            ..EcologyParams::default()
        };
        let mut lake = [0.0; MONTHS];
        lake[4] = params.q_min;
        let out = step_fish(&FishPopulation::empty(), &lake, 5, &[], &[], &params);
        assert!(out.migration);
        assert_eq!(out.larvae, params.m_mig);
    }

    #[test]
    fn activity_classes() {
        assert_eq!(classify_activity(0, 0.0), ActivityClass::None);
        assert_eq!(classify_activity(3, 0.0), ActivityClass::FarmingOnly);
        assert_eq!(classify_activity(2, 7.0), ActivityClass::Both);
        assert_eq!(classify_activity(0, 1.5), ActivityClass::FishingOnly);
    }

    fn ample_river() -> RiverYear {
        RiverYear::new([1000.0; MONTHS])
    }

    #[test]
    fn idle_year_costs_consumption_only() {
        let p = EcologyParams::default();
        let state = WorldState::new(3, 500.0, FishPopulation::empty(), ample_river());
        let out = advance_year(&state, &[Decision::default(); 3], &p).unwrap();
        for h in &out.state.households {
            assert_eq!(h.budget, 500.0 - p.kappa);
        }
    }

    #[test]
    fn single_household_budget_delta() {
        let p = EcologyParams::default();
        let state = WorldState::new(1, 500.0, FishPopulation::empty(), ample_river());
        let out = advance_year(&state, &[Decision::new(5, 0)], &p).unwrap();
        let delta = out.state.households[0].budget - 500.0;
        assert_eq!(delta, 5.0 * p.y0 - 5.0 * p.c - p.kappa);
        assert_eq!(out.records[0].activity, ActivityClass::FarmingOnly);
    }

    #[test]
    fn symmetric_households_identical_records() {
        let p = EcologyParams::default();
        let state = WorldState::new(2, 500.0, FishPopulation::empty(), ample_river());
        let out = advance_year(&state, &[Decision::new(4, 0); 2], &p).unwrap();
        let strip = |r: &YearRecord| YearRecord { household: 0, ..r.clone() };
        assert_eq!(strip(&out.records[0]), strip(&out.records[1]));
    }

    #[test]
    fn decision_count_mismatch() {
        let p = EcologyParams::default();
        let state = WorldState::new(2, 0.0, FishPopulation::empty(), ample_river());
        assert!(matches!(
            advance_year(&state, &[Decision::default()], &p),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn stress_recovers_under_full_supply() {
        let p = EcologyParams::default();
        let years = (1.0 / p.stress_recovery).ceil() as usize;
        let mut stress = 1.0;
        for _ in 0..years {
            stress = crop_outcome(3, 3.0 * p.w, stress, 3, &p).stress_out;
        }
        assert_eq!(stress, 0.0);
    }
}
