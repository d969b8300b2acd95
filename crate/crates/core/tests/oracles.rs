mod common;

use commons_egta::ecology::beverton_holt;
use commons_egta::equilibrium::{enumerate_pure_ne, solve_and_select, solve_symmetric_cpr, SelectedEquilibrium};
use commons_egta::games::{build_cpr_fishing_game, build_irrigation_game, IrrigationGameSpec};
use commons_egta::policies::moving_average_predict;

use common::{g1, oracle_matrices, oracle_pair, oracle_pure_ne, oracle_selected};

fn selected(spec: &IrrigationGameSpec) -> (usize, usize) {
    let game = build_irrigation_game(spec).unwrap();
    match solve_and_select(&game, 1e-9).unwrap() {
        SelectedEquilibrium::Pure { row, col } => (row, col),
        other => panic!("expected a pure equilibrium, got {other:?}"),
    }
}

#[test]
fn g1_payoff_matrix_matches_transcription() {
    for tau in [0.0, 0.5, 1.0, 3.0] {
        let spec = g1(tau);
        let game = build_irrigation_game(&spec).unwrap();
        let (rows, cols) = oracle_matrices(&spec);
        assert_eq!(game.row_payoffs, rows, "tau {tau}");
        assert_eq!(game.col_payoffs, cols, "tau {tau}");
    }
}

#[test]
fn g1_pure_equilibria_match_brute_force() {
    let spec = g1(0.0);
    let game = build_irrigation_game(&spec).unwrap();
    let (rows, cols) = oracle_matrices(&spec);
    assert_eq!(enumerate_pure_ne(&game), oracle_pure_ne(&rows, &cols));
    assert_eq!(selected(&spec), (6, 0));
    assert_eq!(oracle_pair(6, 0, &spec).1, (190.0, -50.0));
}

#[test]
fn selection_agrees_with_oracle_over_parameter_grid() {
    for water in [0.0, 25.0, 60.0, 95.0, 200.0] {
        for budget in [-10.0, 35.0, 1000.0] {
            for tau in [0.0, 0.25, 1.0, 2.0] {
                for (y0, ys) in [(50.0, 25.0), (30.0, 18.0)] {
                    let spec = IrrigationGameSpec {
                        water,
                        budget_up: budget,
                        y0,
                        ys,
                        tau,
                        ..g1(tau)
                    };
                    let want = oracle_selected(&spec).expect("pure equilibrium exists on this grid");
                    assert_eq!(selected(&spec), want, "water {water} budget {budget} tau {tau} y0 {y0}");
                }
            }
        }
    }
}

#[test]
fn extraction_non_increasing_in_tax() {
    for (water, y0, ys) in [(60.0, 50.0, 25.0), (120.0, 30.0, 18.0), (400.0, 30.0, 18.0)] {
        let mut last = i64::MAX;
        for tau in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let spec = IrrigationGameSpec { water, y0, ys, ..g1(tau) };
            let (r, c) = oracle_selected(&spec).unwrap_or_else(|| panic!("water {water} tau {tau}: no pure equilibrium"));
            let ((fu, fd), _) = oracle_pair(r as i64, c as i64, &spec);
            assert!(fu + fd <= last, "water {water} tau {tau}: {} > {last}", fu + fd);
            last = fu + fd;
        }
    }
}

/// Brute-force symmetric equilibrium of the fishing commons.
fn oracle_cpr(stock: f64, price: f64, cost: f64, n: u32, e_max: u32) -> Option<u32> {
    let pay = |e: u32, o: u32| {
        let total = f64::from(e + o);
        let share = if total > 0.0 { (stock / total).min(1.0) } else { stock.min(1.0) };
        price * f64::from(e) * share - cost * f64::from(e)
    };
    (0..=e_max).find(|&e| {
        let o = (n - 1) * e;
        (0..=e_max).all(|d| pay(d, o) <= pay(e, o) + 1e-9)
    })
}

#[test]
fn fishing_equilibrium_matches_scan() {
    for stock in [0.0, 5.0, 30.0, 90.0, 400.0] {
        for price in [1.0, 5.0] {
            for n in [2u32, 5, 9] {
                let game = build_cpr_fishing_game(stock, price, 1.0, n, 10);
                let sol = solve_symmetric_cpr(|e, o| game.payoff(e, o), n, 10);
                match oracle_cpr(stock, price, 1.0, n, 10) {
                    Some(want) => {
                        assert_eq!(sol.level, want, "stock {stock} price {price} n {n}");
                        assert!(sol.is_equilibrium);
                    }
                    None => assert!(!sol.is_equilibrium, "stock {stock} price {price} n {n}"),
                }
            }
        }
    }
}

#[test]
fn abundant_stock_means_full_effort() {
    let game = build_cpr_fishing_game(1e6, 5.0, 1.0, 9, 10);
    assert_eq!(solve_symmetric_cpr(|e, o| game.payoff(e, o), 9, 10).level, 10);
    let free = build_cpr_fishing_game(1e6, 1.0, 2.0, 9, 10);
    assert_eq!(solve_symmetric_cpr(|e, o| free.payoff(e, o), 9, 10).level, 0);
}

#[test]
fn beverton_holt_at_capacity_halves() {
    for (sigma, k) in [(0.2, 500.0), (0.9, 5000.0), (1.0, 1.0)] {
        let got = beverton_holt(sigma, k, k);
        assert!((got - sigma * k / 2.0).abs() < 1e-12);
    }
}

#[test]
fn moving_average_by_hand() {
    let mut h: Vec<f64> = vec![10.0; 20];
    h.push(30.0);
    // last twenty: nineteen 10s and one 30
    assert_eq!(moving_average_predict(&h, 20).unwrap(), (19.0 * 10.0 + 30.0) / 20.0);
    assert_eq!(moving_average_predict(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), 3.5);
}
