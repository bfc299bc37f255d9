use super::fixtures::*;
use super::*;
use crate::lp::{solve_lp, LpStatus, RowSense, SolverOptions, StandardFormLp};
use crate::model::build::{ColKey, RowKey};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// Residual checks every optimal dispatch must satisfy. Returns the first
/// violated condition for test diagnostics.
pub(crate) fn check_dispatch_invariants(
    scenario: &Scenario,
    cfg: &DispatchConfig,
    lp: &StandardFormLp,
    map: &VariableMap,
    primal: &[f64],
) -> Result<(), String> {
    let n = cfg.n_steps;
    let dt = cfg.step_hours;
    let tol = 1e-6;
    let value = |key: &ColKey| map.col(key).map(|j| primal[j]).unwrap_or(0.0);

    // nodal balance per node and step
    for (ni, _) in scenario.network.nodes.iter().enumerate() {
        for k in 0..n {
            if map.row(&RowKey::Balance { horizon: 0, node: ni, step: k }).is_none() {
                continue;
            }
            let mut acc = 0.0;
            for (ci, comp) in scenario.components.iter().enumerate() {
                match &comp.kind {
                    ComponentKind::Source(e) if e.node == ni => {
                        acc += value(&ColKey::Gen { horizon: 0, comp: ci, step: k })
                    }
                    ComponentKind::Sink(e) if e.node == ni => {
                        acc -= value(&ColKey::Dem { horizon: 0, comp: ci, step: k })
                    }
                    ComponentKind::Storage(s) if s.node == ni => {
                        acc += value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                        acc -= value(&ColKey::Dem { horizon: 0, comp: ci, step: k });
                    }
                    ComponentKind::Converter(c) => {
                        if c.to_node == ni {
                            acc += value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                        }
                        if c.from_node == ni {
                            acc -= value(&ColKey::Dem { horizon: 0, comp: ci, step: k });
                        }
                    }
                    _ => {}
                }
            }
            for (li, link) in scenario.network.links.iter().enumerate() {
                let f = value(&ColKey::Flow { horizon: 0, link: li, step: k });
                if link.from == ni {
                    acc -= f;
                }
                if link.to == ni {
                    acc += f;
                }
            }
            if acc.abs() > tol {
                return Err(format!("balance violated at node {ni} step {k}: {acc}"));
            }
        }
    }

    // storage conservation and cyclicity
    for (ci, comp) in scenario.components.iter().enumerate() {
        if let ComponentKind::Storage(s) = &comp.kind {
            let level = |k: usize| value(&ColKey::Level { horizon: 0, comp: ci, step: k });
            for k in 0..n - 1 {
                let resid = level(k + 1) - level(k)
                    + dt / s.eta_discharge * value(&ColKey::Gen { horizon: 0, comp: ci, step: k })
                    - dt * s.eta_charge * value(&ColKey::Dem { horizon: 0, comp: ci, step: k })
                    - s.inflow.value(k);
                if resid.abs() > tol {
                    return Err(format!("storage {} not conserved at step {k}: {resid}", comp.id));
                }
            }
            if (level(n - 1) - level(0)).abs() > tol {
                return Err(format!(
                    "storage {} not cyclic: e(N)={} vs e(1)={}",
                    comp.id,
                    level(n - 1),
                    level(0)
                ));
            }
        }
    }

    // blending limit per host node and step
    if let Some(blend) = &cfg.blend {
        for (ni, nd) in scenario.network.nodes.iter().enumerate() {
            if nd.sector != blend.host {
                continue;
            }
            for k in 0..n {
                let mut injected = 0.0;
                let mut host = 0.0;
                for (ci, comp) in scenario.components.iter().enumerate() {
                    match &comp.kind {
                        ComponentKind::Converter(c) if c.to_node == ni => {
                            let g = value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                            if c.from_sector == blend.injected {
                                injected += g;
                            } else {
                                host += g;
                            }
                        }
                        ComponentKind::Source(e) if e.node == ni => {
                            host += value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                        }
                        ComponentKind::Storage(s) if s.node == ni => {
                            host += value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                        }
                        _ => {}
                    }
                }
                if injected > blend.fraction * host + tol {
                    return Err(format!(
                        "blending violated at node {ni} step {k}: {injected} > {} * {host}",
                        blend.fraction
                    ));
                }
            }
        }
    }

    // emission budget
    if cfg.co2_budget_t.is_finite() {
        let mut emitted = 0.0;
        for (ci, comp) in scenario.components.iter().enumerate() {
            if let ComponentKind::Source(e) = &comp.kind {
                for k in 0..n {
                    emitted +=
                        e.co2_t_per_mwh * dt * value(&ColKey::Gen { horizon: 0, comp: ci, step: k });
                }
            }
        }
        if emitted > cfg.co2_budget_t + tol {
            return Err(format!(
                "emissions {emitted} exceed budget {}",
                cfg.co2_budget_t
            ));
        }
    }

    // box bounds on the LP side
    for j in 0..lp.n_cols() {
        if primal[j] < lp.lower[j] - tol || primal[j] > lp.upper[j] + tol {
            return Err(format!("column {j} out of bounds"));
        }
    }
    Ok(())
}

#[test]
fn validator_accepts_fixture_scenarios() {
    assert!(validate_scenario(&single_node_scenario(4)).is_ok());
    assert!(validate_scenario(&coupled_scenario(24)).is_ok());
}

#[test]
fn validator_flags_bad_efficiency() {
    let mut scenario = coupled_scenario(8);
    if let ComponentKind::Converter(c) = &mut scenario.components[3].kind {
        c.efficiency = 1.3;
    }
    let report = validate_scenario(&scenario);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].subject, "electrolyzer");
    assert!(report.violations[0].message.contains("1.3"));
}

#[test]
fn validator_flags_short_profile() {
    let mut scenario = coupled_scenario(8);
    if let ComponentKind::Source(e) = &mut scenario.components[0].kind {
        e.upper = Profile::Series(vec![1.0; 7]);
    }
    let report = validate_scenario(&scenario);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].subject, "wind_a");
    assert!(report.violations[0].message.contains("upper"));
    assert!(report.violations[0].message.contains('7'));
}

#[test]
fn validator_flags_dangling_node() {
    let mut scenario = single_node_scenario(4);
    if let ComponentKind::Source(e) = &mut scenario.components[0].kind {
        e.node = 9;
    }
    let report = validate_scenario(&scenario);
    assert!(!report.is_ok());
    assert!(report.violations[0].message.contains('9'));
}

#[test]
fn forced_balance_micro_case() {
    // source at 10 EUR/MWh serving a fixed 3 MW sink over 2 steps: 60 EUR
    let mut scenario = single_node_scenario(2);
    scenario.components.truncate(2); // drop the slack, force the source
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    assert!(map.is_consistent());
    let sol = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 60.0).abs() < 1e-9, "objective {}", sol.objective);
    for k in 0..2 {
        let g = sol.primal[map.col(&ColKey::Gen { horizon: 0, comp: 0, step: k }).unwrap()];
        assert!((g - 3.0).abs() < 1e-9);
    }
}

#[test]
fn converter_coupling_row_semantics() {
    let scenario = coupled_scenario(6);
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let ci = scenario.component_index("electrolyzer").unwrap();
    for k in 0..6 {
        let input = sol.primal[map.col(&ColKey::Dem { horizon: 0, comp: ci, step: k }).unwrap()];
        let output = sol.primal[map.col(&ColKey::Gen { horizon: 0, comp: ci, step: k }).unwrap()];
        assert!(
            (output - 0.7 * input).abs() < 1e-8,
            "step {k}: {output} != 0.7 * {input}"
        );
    }
}

#[test]
fn co2_budget_row_binds_at_exact_arithmetic() {
    // 4 MW for 25 h = 100 MWh at 0.4 t/MWh -> exactly the 40 t budget
    let mut scenario = single_node_scenario(25);
    if let ComponentKind::Source(e) = &mut scenario.components[0].kind {
        e.co2_t_per_mwh = 0.4;
    }
    if let ComponentKind::Sink(e) = &mut scenario.components[1].kind {
        e.lower = Profile::Const(4.0);
        e.upper = Profile::Const(4.0);
    }
    scenario.dispatch.co2_budget_t = 40.0;
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let extracted =
        extract_dispatch_solution(&lp, &sol, &map, &scenario, &cfg, 0, None).unwrap();
    assert!((extracted.co2_emissions_t - 40.0).abs() < 1e-6);
    // budget is tight; tightening further must shed load to the slack
    scenario.dispatch.co2_budget_t = 30.0;
    let cfg2 = scenario.dispatch.clone();
    let (lp2, _map2) = build_dispatch_lp(&scenario, &cfg2).unwrap();
    let sol2 = solve_lp(&lp2, &opts()).unwrap();
    assert_eq!(sol2.status, LpStatus::Optimal);
    assert!(sol2.objective > sol.objective);
}

#[test]
fn mismatched_horizon_rejected() {
    let scenario = coupled_scenario(24);
    let mut cfg = scenario.dispatch.clone();
    cfg.n_steps = 10;
    match build_dispatch_lp(&scenario, &cfg) {
        Err(BuildError::ProfileLength { expected, actual, .. }) => {
            assert_eq!(expected, 10);
            assert_eq!(actual, 24);
        }
        other => panic!("expected profile-length error, got {other:?}"),
    }
}

#[test]
fn extraction_shapes_and_cyclicity() {
    let scenario = coupled_scenario(12);
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    let extracted =
        extract_dispatch_solution(&lp, &sol, &map, &scenario, &cfg, 0, None).unwrap();
    for (id, series) in &extracted.components {
        for s in [&series.generation_mw, &series.demand_mw, &series.level_mwh] {
            if let Some(v) = s {
                assert_eq!(v.len(), 12, "series of {id}");
            }
        }
    }
    let battery = &extracted.components["battery_a"];
    let level = battery.level_mwh.as_ref().unwrap();
    assert!((level[11] - level[0]).abs() < 1e-6, "cyclic storage");
    // budget is far from binding, so the shadow price must vanish
    assert_eq!(extracted.co2_price_eur_t, 0.0);
    assert_eq!(extracted.objective as i64, sol.objective as i64);
}

#[test]
fn non_optimal_extraction_is_typed_error() {
    let scenario = single_node_scenario(2);
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let mut sol = solve_lp(&lp, &opts()).unwrap();
    sol.status = LpStatus::IterationLimit;
    assert!(matches!(
        extract_dispatch_solution(&lp, &sol, &map, &scenario, &cfg, 0, None),
        Err(solution::ExtractError::NotOptimal(LpStatus::IterationLimit))
    ));
}

#[test]
fn dispatch_invariants_hold_on_coupled_scenario() {
    let scenario = coupled_scenario(24);
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    check_dispatch_invariants(&scenario, &cfg, &lp, &map, &sol.primal).unwrap();
}

#[test]
fn co2_tightening_is_monotone() {
    // 3-point budget sweep: stricter budgets never cheapen the dispatch
    let mut scenario = coupled_scenario(12);
    let mut last = f64::NEG_INFINITY;
    for budget in [5.0, 20.0, 1e5] {
        scenario.dispatch.co2_budget_t = budget;
        let cfg = scenario.dispatch.clone();
        let (lp, _map) = build_dispatch_lp(&scenario, &cfg).unwrap();
        let sol = solve_lp(&lp, &opts()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "budget {budget}");
        // iterating from tight to loose: objective must not increase
        if last.is_finite() {
            assert!(
                sol.objective <= last + 1e-6,
                "budget {budget}: {} > {last}",
                sol.objective
            );
        }
        last = sol.objective;
    }
}

#[test]
fn flow_summary_tracks_converters() {
    let scenario = coupled_scenario(8);
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    let extracted =
        extract_dispatch_solution(&lp, &sol, &map, &scenario, &cfg, 0, None).unwrap();
    let table = flow_summary(&extracted, &scenario);
    let electrolyzer = table
        .rows
        .iter()
        .find(|r| r.id == "electrolyzer")
        .unwrap();
    assert_eq!(electrolyzer.from_sector, SectorId::Electricity);
    assert_eq!(electrolyzer.to_sector, SectorId::Hydrogen);
    assert!(
        (electrolyzer.energy_out_mwh - 0.7 * electrolyzer.energy_in_mwh).abs() < 1e-6
    );
    // totals equal the column sums of the extracted series
    let wind = &extracted.components["wind_a"];
    let expected: f64 = wind.generation_mw.as_ref().unwrap().iter().sum::<f64>();
    let sources_el = table
        .rows
        .iter()
        .filter(|r| {
            matches!(r.kind, solution::FlowKind::SourceTotal)
                && r.from_sector == SectorId::Electricity
        })
        .map(|r| r.energy_out_mwh)
        .sum::<f64>();
    let all_el_sources: f64 = extracted
        .components
        .iter()
        .filter(|(id, _)| {
            matches!(
                &scenario.components[scenario.component_index(id).unwrap()].kind,
                ComponentKind::Source(e) if e.sector == SectorId::Electricity
            )
        })
        .filter_map(|(_, s)| s.generation_mw.as_ref())
        .map(|v| v.iter().sum::<f64>())
        .sum();
    assert!((sources_el - all_el_sources).abs() < 1e-9);
    assert!(expected >= 0.0);
}

#[test]
fn zero_dispatch_gives_zero_flows() {
    let mut scenario = single_node_scenario(4);
    // demand zero: nothing moves
    if let ComponentKind::Sink(e) = &mut scenario.components[1].kind {
        e.lower = Profile::Const(0.0);
        e.upper = Profile::Const(0.0);
    }
    let cfg = scenario.dispatch.clone();
    let (lp, map) = build_dispatch_lp(&scenario, &cfg).unwrap();
    let sol = solve_lp(&lp, &opts()).unwrap();
    let extracted =
        extract_dispatch_solution(&lp, &sol, &map, &scenario, &cfg, 0, None).unwrap();
    let table = flow_summary(&extracted, &scenario);
    for row in &table.rows {
        assert_eq!(row.energy_in_mwh, 0.0);
        assert_eq!(row.energy_out_mwh, 0.0);
    }
}

#[test]
fn with_horizon_truncates_profiles() {
    let scenario = coupled_scenario(24);
    let shorter = scenario.with_horizon(6).unwrap();
    assert_eq!(shorter.dispatch.n_steps, 6);
    assert!(validate_scenario(&shorter).is_ok());
    assert!(scenario.with_horizon(100).is_err());
}
