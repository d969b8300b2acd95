//! Empirical games for the two action situations: the pairwise irrigation game
//! between neighbouring farmers, the N-player fishing commons, and parsing of
//! abstract game models proposed by a language model.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::equilibrium::BimatrixGame;
use crate::gateway::extract_structured;
use crate::{Error, Result};

const FIELD_EPS: f64 = 1e-9;

/// Parameters of the pairwise irrigation game between an upstream and a
/// downstream farmer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrigationGameSpec {
    pub budget_up: f64,
    pub budget_down: f64,
    /// Cost per irrigated field.
    pub c: f64,
    /// Water available to the pair.
    pub water: f64,
    /// Water per field.
    pub w: f64,
    pub y0: f64,
    pub ys: f64,
    /// Pair-wide irrigated fields above which yields drop to `ys`.
    pub stress_threshold: f64,
    pub kappa: f64,
    pub tau: f64,
    pub fish_income_up: f64,
    pub fish_income_down: f64,
    pub max_fields: u32,
}

impl IrrigationGameSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.w > 0.0) {
            return Err(Error::InvalidGame("c and w must be > 0".into()));
        }
        if !(self.ys < self.y0) {
            return Err(Error::InvalidGame("stressed yield must be below baseline".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidGame(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}

fn floor_fields(x: f64) -> u32 {
    (x + FIELD_EPS).floor().max(0.0) as u32
}

/// Fields each farmer can actually irrigate: capped by strategy, budget and
/// water, with the upstream farmer served first.
pub fn irrigated_fields(s_up: u32, s_down: u32, spec: &IrrigationGameSpec) -> (u32, u32) {
    let water_fields = spec.water / spec.w;
    let f_up = floor_fields(
        f64::from(s_up)
            .min(spec.budget_up / spec.c)
            .min(water_fields),
    );
    let f_down = floor_fields(
        f64::from(s_down)
            .min(spec.budget_down / spec.c)
            .min((water_fields - f64::from(f_up)).max(0.0)),
    );
    (f_up, f_down)
}

/// Payoffs `(upstream, downstream)`: yield plus fishing income, minus
/// irrigation and consumption costs and the extraction tax.
pub fn pair_payoffs(s_up: u32, s_down: u32, spec: &IrrigationGameSpec) -> (f64, f64) {
    let (f_up, f_down) = irrigated_fields(s_up, s_down, spec);
    let y = if f64::from(f_up + f_down) <= spec.stress_threshold {
        spec.y0
    } else {
        spec.ys
    };
    let total_s = f64::from(s_up + s_down);
    let payoff = |f: u32, fish: f64, s: u32| {
        let f = f64::from(f);
        f * y + fish - (f * spec.c + spec.kappa) - spec.tau * total_s * f64::from(s)
    };
    (
        payoff(f_up, spec.fish_income_up, s_up),
        payoff(f_down, spec.fish_income_down, s_down),
    )
}

/// `(max_fields + 1)^2` bimatrix with action `k` meaning `k` fields.
pub fn build_irrigation_game(spec: &IrrigationGameSpec) -> Result<BimatrixGame> {
    spec.validate()?;
    let k = spec.max_fields as usize + 1;
    let mut rows = vec![vec![0.0; k]; k];
    let mut cols = vec![vec![0.0; k]; k];
    for s_up in 0..k {
        for s_down in 0..k {
            let (u, d) = pair_payoffs(s_up as u32, s_down as u32, spec);
            rows[s_up][s_down] = u;
            cols[s_up][s_down] = d;
        }
    }
    BimatrixGame::new(rows, cols)
}

/// Symmetric fishing commons: each player's catch is its share of the adult
/// stock when total effort exceeds it, less a linear effort cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FishingGame {
    pub stock: f64,
    pub price: f64,
    pub effort_cost: f64,
    pub n_players: u32,
    pub e_max: u32,
}

impl FishingGame {
    pub fn new(stock: f64, price: f64, effort_cost: f64, n_players: u32, e_max: u32) -> Self {
        Self {
            stock: stock.max(0.0),
            price,
            effort_cost,
            n_players,
            e_max,
        }
    }

    /// Expected catch for effort `e` against total opposing effort `others`.
    pub fn expected_catch(&self, e: u32, others: u32) -> f64 {
        let total = f64::from(e + others);
        let share = if total > 0.0 {
            (self.stock / total).min(1.0)
        } else {
            self.stock.min(1.0)
        };
        f64::from(e) * share
    }

    pub fn payoff(&self, e: u32, others: u32) -> f64 {
        self.price * self.expected_catch(e, others) - f64::from(e) * self.effort_cost
    }
}

pub fn build_cpr_fishing_game(stock: f64, price: f64, effort_cost: f64, n_players: u32, e_max: u32) -> FishingGame {
    FishingGame::new(stock, price, effort_cost, n_players, e_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SituationKind {
    PairwiseCooperation,
    CommonPoolResource,
    Other,
}

impl SituationKind {
    fn classify(text: &str) -> Self {
        let t = text.to_lowercase();
        if t.contains("common pool") || t.contains("common-pool") || t.contains("cpr") || t.contains("commons") {
            SituationKind::CommonPoolResource
        } else if ["cooperation", "coordination", "pairwise", "2-player", "two-player", "prisoner", "chicken"]
            .iter()
            .any(|k| t.contains(k))
        {
            SituationKind::PairwiseCooperation
        } else {
            SituationKind::Other
        }
    }
}

/// One action situation as described by a language model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSituationModel {
    pub name: String,
    pub kind: SituationKind,
    pub participants: Vec<String>,
    pub actions: Vec<String>,
    /// Payoff pairs in row-major order, when the model supplied a table.
    pub payoffs: Option<Vec<(f64, f64)>>,
}

fn text_field<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| obj.get(*k).and_then(Value::as_str))
}

fn label_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn flatten_cells(v: &Value, out: &mut Vec<(f64, f64)>) -> bool {
    let Some(items) = v.as_array() else {
        return false;
    };
    if items.len() == 2 && items.iter().all(Value::is_number) {
        out.push((items[0].as_f64().unwrap_or(0.0), items[1].as_f64().unwrap_or(0.0)));
        return true;
    }
    items.iter().all(|item| flatten_cells(item, out))
}

fn parse_situation(v: &Value, raw: &str) -> Result<ActionSituationModel> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::schema("action situation is not an object", raw))?;
    let name = text_field(obj, &["name", "title"])
        .ok_or_else(|| Error::schema("action situation without a name", raw))?
        .to_string();
    let kind_text = text_field(obj, &["kind", "game", "game_type", "type"]).unwrap_or(&name);
    let kind = SituationKind::classify(kind_text);

    let participants: Vec<String> = obj
        .get("participants")
        .or_else(|| obj.get("players"))
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(label_of).collect())
        .unwrap_or_default();
    if participants.len() < 2 {
        return Err(Error::schema(format!("'{name}' needs at least two participants"), raw));
    }
    let actions: Vec<String> = obj
        .get("actions")
        .or_else(|| obj.get("strategies"))
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(label_of).collect())
        .unwrap_or_default();
    if actions.is_empty() {
        return Err(Error::schema(format!("'{name}' has no actions"), raw));
    }
    let payoffs = match obj.get("payoffs").or_else(|| obj.get("payoff_matrix")) {
        None | Some(Value::Null) => None,
        Some(p) => {
            let mut cells = Vec::new();
            if !flatten_cells(p, &mut cells) || cells.is_empty() {
                return Err(Error::schema(format!("'{name}' has a malformed payoff table"), raw));
            }
            Some(cells)
        }
    };
    Ok(ActionSituationModel {
        name,
        kind,
        participants,
        actions,
        payoffs,
    })
}

/// Extracts the action situations described in a model reply. Accepts a
/// single object, an array, or an object with an `action_situations` array.
pub fn parse_llm_game(text: &str) -> Result<Vec<ActionSituationModel>> {
    let value = extract_structured(text)?;
    let items: Vec<&Value> = match &value {
        Value::Array(a) => a.iter().collect(),
        Value::Object(o) => match o.get("action_situations").or_else(|| o.get("situations")) {
            Some(Value::Array(a)) => a.iter().collect(),
            _ => vec![&value],
        },
        _ => return Err(Error::schema("expected a JSON description of action situations", text)),
    };
    if items.is_empty() {
        return Err(Error::schema("no action situations found", text));
    }
    items.into_iter().map(|v| parse_situation(v, text)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn g1() -> IrrigationGameSpec {
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
            tau: 0.0,
            fish_income_up: 0.0,
            fish_income_down: 0.0,
            max_fields: 10,
        }
    }

    #[test]
    fn irrigated_field_caps() {
        let spec = g1();
        assert_eq!(irrigated_fields(8, 5, &spec), (6, 0));
        let ample = IrrigationGameSpec { water: 200.0, ..g1() };
        assert_eq!(irrigated_fields(4, 5, &ample), (4, 5));
        let poor = IrrigationGameSpec { budget_up: 20.0, ..ample };
        assert_eq!(irrigated_fields(10, 0, &poor).0, 2);
        let debt = IrrigationGameSpec { budget_up: -30.0, ..g1() };
        assert_eq!(irrigated_fields(5, 0, &debt).0, 0);
    }

    #[test]
    fn g1_payoffs() {
        assert_eq!(pair_payoffs(6, 0, &g1()), (190.0, -50.0));
        let taxed = IrrigationGameSpec { tau: 1.0, ..g1() };
        assert_eq!(pair_payoffs(6, 0, &taxed).0, 154.0);
        let cheap = IrrigationGameSpec { y0: 5.0, ys: 2.0, ..g1() };
        assert_eq!(pair_payoffs(0, 0, &cheap), (-50.0, -50.0));
        for s in 1..=10 {
            assert!(pair_payoffs(s, 0, &cheap).0 < -50.0);
        }
    }

    #[test]
    fn zero_fields_game_is_one_cell() {
        let g = build_irrigation_game(&IrrigationGameSpec { max_fields: 0, ..g1() }).unwrap();
        assert_eq!((g.rows(), g.cols()), (1, 1));
    }

    #[test]
    fn abundant_fish_means_linear_payoff() {
        let g = build_cpr_fishing_game(1000.0, 5.0, 0.0, 9, 10);
        assert_eq!(g.payoff(10, 80), 50.0);
        let empty = build_cpr_fishing_game(0.0, 5.0, 1.0, 9, 10);
        assert!((1..=10).all(|e| empty.payoff(e, 0) < 0.0));
    }

    #[test]
    fn parse_rejects_empty_and_prose() {
        assert!(matches!(parse_llm_game(""), Err(Error::Schema { .. })));
        assert!(parse_llm_game("there are two games").is_err());
    }

    #[test]
    fn parse_payoff_table_row_major() {
        let text = r#"{"name": "irrigation", "kind": "2-player anti-coordination", "participants": ["upstream", "downstream"],
            "actions": ["high", "low"], "payoffs": [[[6,6],[5,7]],[[9,3],[5,2]]]}"#;
        let models = parse_llm_game(text).unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].kind, SituationKind::PairwiseCooperation);
        assert_eq!(
            models[0].payoffs.as_deref(),
            Some(&[(6.0, 6.0), (5.0, 7.0), (9.0, 3.0), (5.0, 2.0)][..])
        );
    }

    #[test]
    fn parse_requires_two_participants() {
        let text = r#"[{"name": "x", "kind": "cpr", "participants": ["one"], "actions": ["0"]}]"#;
        assert!(matches!(parse_llm_game(text), Err(Error::Schema { .. })));
    }
}
