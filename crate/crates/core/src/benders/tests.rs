use super::*;
use crate::invest::{solve_pathway_closed, CostMode, CostModel, PathwayProblem};
use crate::model::fixtures::*;
use crate::model::SectorId;

fn opts() -> BendersOptions {
    BendersOptions::default()
}

/// The enumerable toy: building one unit of capacity costs 1, every unserved
/// unit of demand costs 4 over the window; optimum builds the full 10 MW.
fn toy_scenario() -> crate::model::Scenario {
    let mut scenario = invest_scenario(2, vec![2030], 2031);
    scenario.components[0] = source("base_gen", 0, SectorId::Electricity, 0.0, 0.0);
    // invested capacity dispatches for free
    scenario.components[1] = source("new_gen", 0, SectorId::Electricity, 0.0, 0.0);
    // "x": expensive fallback supply at 2 EUR/MWh over 2 steps of 1 h
    scenario.components[3] = source("voll", 0, SectorId::Electricity, f64::INFINITY, 2.0);
    scenario.pathway.as_mut().unwrap().wacc = 0.0;
    scenario.pathway.as_mut().unwrap().annual_scale = Some(1.0);
    // f(z) = 1 * z: 0.001 EUR/kW over a lifetime of 1 year, one-year window
    scenario.investments[0].lifetime_years = 1.0;
    scenario.investments[0].cost = CostModel::Linear {
        eur_per_kw: [(2030, 0.001)].into_iter().collect(),
    };
    scenario
}

#[test]
fn toy_converges_in_two_iterations() {
    let scenario = toy_scenario();
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let (sol, log) = run_benders(&pathway, &opts()).unwrap();
    assert!(log.converged);
    assert_eq!(log.iterations.len(), 2, "log: {:?}", log.iterations);
    assert!((sol.objective - 10.0).abs() < 1e-6, "objective {}", sol.objective);
    assert!((sol.investments_mw[0][0] - 10.0).abs() < 1e-6);

    // first iteration: empty master floors at zero
    let first = &log.iterations[0];
    assert_eq!(first.lower_bound, 0.0);
    assert!(first.z_mw.iter().all(|&z| z == 0.0));
    assert!((first.upper_bound - 40.0).abs() < 1e-6);

    // the first cut reproduces the dual of the capacity shortfall
    let cut = &log.cuts[0];
    assert!((cut.constant - 40.0).abs() < 1e-6);
    assert!((cut.coefficients[0] + 4.0).abs() < 1e-6, "lambda {}", cut.coefficients[0]);
    // tight at its reference point
    assert!(cut.violation(&cut.reference, cut.constant).abs() < 1e-9);
    // valid at the true optimum (z = 10, operating cost 0)
    assert!(cut.violation(&[10.0], 0.0) >= -1e-9);
}

#[test]
fn infinite_tolerance_stops_after_one_iteration() {
    let scenario = toy_scenario();
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let mut o = opts();
    o.eps_abs = f64::INFINITY;
    let (_sol, log) = run_benders(&pathway, &o).unwrap();
    assert_eq!(log.iterations.len(), 1);
    assert!((log.iterations[0].gap - 40.0).abs() < 1e-6);
}

#[test]
fn iteration_limit_returns_flagged_incumbent() {
    let scenario = invest_scenario(4, vec![2030, 2040, 2050], 2060);
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let mut o = opts();
    o.max_iter = 1;
    o.eps_abs = 0.0;
    o.eps_rel = 0.0;
    let (sol, log) = run_benders(&pathway, &o).unwrap();
    assert!(!log.converged);
    assert!(!sol.converged);
    assert!(sol.gap > 0.0);
}

#[test]
fn matches_closed_optimization_linear() {
    let scenario = invest_scenario(4, vec![2030, 2040, 2050], 2060);
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let co = solve_pathway_closed(&pathway, &opts().milp).unwrap();
    let (bd, log) = run_benders(&pathway, &opts()).unwrap();
    assert!(log.converged);
    assert!(
        (bd.objective - co.objective).abs() <= 1e-4 * co.objective.abs().max(1.0),
        "BD {} vs CO {}",
        bd.objective,
        co.objective
    );
    // bound sandwich at every iteration
    for it in &log.iterations {
        assert!(it.lower_bound <= co.objective + 1e-6 * co.objective.abs().max(1.0));
        assert!(it.best_upper_bound >= co.objective - 1e-6 * co.objective.abs().max(1.0));
    }
    // lower bounds never decrease
    for w in log.iterations.windows(2) {
        assert!(w[1].lower_bound >= w[0].lower_bound - 1e-9);
    }
}

#[test]
fn matches_closed_optimization_learning() {
    let scenario = learning_scenario(4, vec![2030, 2040], 2050);
    let pathway = PathwayProblem::new(&scenario, CostMode::Learning, Some(6)).unwrap();
    let co = solve_pathway_closed(&pathway, &opts().milp).unwrap();
    let (bd, log) = run_benders(&pathway, &opts()).unwrap();
    assert!(log.converged, "gap {:?}", log.iterations.last().map(|i| i.gap));
    assert!(
        (bd.objective - co.objective).abs() <= 1e-4 * co.objective.abs().max(1.0),
        "BD {} vs CO {}",
        bd.objective,
        co.objective
    );
}

#[test]
fn cuts_identical_across_worker_counts() {
    let scenario = invest_scenario(4, vec![2030, 2040, 2050], 2060);
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let serial = run_benders(&pathway, &opts()).unwrap().1;
    let mut par = opts();
    par.workers = 3;
    let parallel = run_benders(&pathway, &par).unwrap().1;
    assert_eq!(serial.cuts.len(), parallel.cuts.len());
    for (a, b) in serial.cuts.iter().zip(&parallel.cuts) {
        assert_eq!(a.constant, b.constant);
        assert_eq!(a.coefficients, b.coefficients);
    }
}

#[test]
fn multi_cut_variant_converges_to_same_objective() {
    let scenario = invest_scenario(4, vec![2030, 2040, 2050], 2060);
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let single = run_benders(&pathway, &opts()).unwrap().0;
    let mut o = opts();
    o.multi_cut = true;
    let multi = run_benders(&pathway, &o).unwrap().0;
    assert!(
        (single.objective - multi.objective).abs()
            <= 2e-4 * single.objective.abs().max(1.0),
        "single {} vs multi {}",
        single.objective,
        multi.objective
    );
}

#[test]
fn log_serializes_to_csv() {
    let scenario = toy_scenario();
    let pathway = PathwayProblem::new(&scenario, CostMode::Linear, None).unwrap();
    let (_sol, log) = run_benders(&pathway, &opts()).unwrap();
    let csv = log.to_csv(&pathway.z_names());
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("iteration,lower_bound,upper_bound,best_upper_bound,gap"));
    assert!(header.contains("build_new_gen@2030"));
    assert_eq!(lines.count(), log.iterations.len());
}
