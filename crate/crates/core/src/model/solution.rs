//! Maps LP results back onto named components.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::build::{ColKey, RowKey, VariableMap};
use super::{ComponentKind, DispatchConfig, Scenario, SectorId};
use crate::invest::HorizonDelta;
use crate::lp::{LpSolution, LpStatus, StandardFormLp};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("solution status is {0:?}, expected optimal")]
    NotOptimal(LpStatus),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentSeries {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation_mw: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_mw: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_mwh: Option<Vec<f64>>,
}

/// Named per-component dispatch result for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub objective: f64,
    pub n_steps: usize,
    pub step_hours: f64,
    /// Objective contribution per sector.
    pub cost_by_sector: BTreeMap<SectorId, f64>,
    pub components: BTreeMap<String, ComponentSeries>,
    pub flows_mw: BTreeMap<String, Vec<f64>>,
    pub co2_emissions_t: f64,
    /// Shadow price of the emission budget (nonnegative; zero when the
    /// budget is slack or absent).
    pub co2_price_eur_t: f64,
}

/// Pulls the per-component series of horizon `h` out of an optimal solution.
/// The assembled LP supplies the effective objective coefficients for the
/// per-sector cost split.
pub fn extract_dispatch_solution(
    lp: &StandardFormLp,
    lp_solution: &LpSolution,
    map: &VariableMap,
    scenario: &Scenario,
    cfg: &DispatchConfig,
    horizon: usize,
    delta: Option<&HorizonDelta>,
) -> Result<DispatchSolution, ExtractError> {
    if lp_solution.status != LpStatus::Optimal {
        return Err(ExtractError::NotOptimal(lp_solution.status));
    }
    Ok(extract_from_values(
        lp,
        &lp_solution.primal,
        &lp_solution.row_duals,
        map,
        scenario,
        cfg,
        horizon,
        delta,
    ))
}

/// Extraction core working on raw primal/dual slices; `row_duals` may be
/// empty (MILP results carry none), which zeroes the shadow prices.
#[allow(clippy::too_many_arguments)]
pub(crate) fn extract_from_values(
    lp: &StandardFormLp,
    primal: &[f64],
    row_duals: &[f64],
    map: &VariableMap,
    scenario: &Scenario,
    cfg: &DispatchConfig,
    horizon: usize,
    delta: Option<&HorizonDelta>,
) -> DispatchSolution {
    let n = cfg.n_steps;
    let h = horizon;
    let x = primal;

    let series = |key: &dyn Fn(usize) -> ColKey| -> Option<Vec<f64>> {
        let first = map.col(&key(0))?;
        let mut out = Vec::with_capacity(n);
        out.push(x[first]);
        for k in 1..n {
            out.push(x[map.col(&key(k))?]);
        }
        Some(out)
    };

    let mut components = BTreeMap::new();
    for (ci, comp) in scenario.components.iter().enumerate() {
        let entry = ComponentSeries {
            generation_mw: series(&|k| ColKey::Gen { horizon: h, comp: ci, step: k }),
            demand_mw: series(&|k| ColKey::Dem { horizon: h, comp: ci, step: k }),
            level_mwh: series(&|k| ColKey::Level { horizon: h, comp: ci, step: k }),
        };
        components.insert(comp.id.clone(), entry);
    }
    let mut flows_mw = BTreeMap::new();
    for (li, link) in scenario.network.links.iter().enumerate() {
        if let Some(vals) = series(&|k| ColKey::Flow { horizon: h, link: li, step: k }) {
            flows_mw.insert(link.id.clone(), vals);
        }
    }

    // objective decomposition by sector, from the assembled cost vector
    let mut cost_by_sector: BTreeMap<SectorId, f64> = BTreeMap::new();
    let mut objective = 0.0;
    let mut credit = |sector: Option<SectorId>, value: f64| {
        if let Some(s) = sector {
            *cost_by_sector.entry(s).or_insert(0.0) += value;
        }
    };
    for (j, key) in map.col_keys().iter().enumerate() {
        let contribution = x[j] * lp.objective[j];
        match key {
            ColKey::Gen { horizon: kh, comp, .. } if *kh == h => {
                credit(scenario.components[*comp].sector_of_gen(), contribution)
            }
            ColKey::Dem { horizon: kh, comp, .. } if *kh == h => {
                credit(scenario.components[*comp].sector_of_dem(), contribution)
            }
            ColKey::Flow { horizon: kh, link, .. } if *kh == h => {
                credit(Some(scenario.network.links[*link].sector), contribution)
            }
            _ => continue,
        }
        objective += contribution;
    }

    // emissions from the generation series and the effective factors
    let mut co2 = 0.0;
    for comp in &scenario.components {
        if let ComponentKind::Source(e) = &comp.kind {
            let factor = delta
                .and_then(|d| d.component_co2_t_per_mwh.get(&comp.id).copied())
                .unwrap_or(e.co2_t_per_mwh);
            if factor != 0.0 {
                if let Some(gen) = &components[&comp.id].generation_mw {
                    co2 += factor * cfg.step_hours * gen.iter().sum::<f64>();
                }
            }
        }
    }
    let co2_price = map
        .row(&RowKey::Co2 { horizon: h })
        .and_then(|r| row_duals.get(r))
        .map(|d| -d)
        .unwrap_or(0.0)
        .max(0.0);

    DispatchSolution {
        objective,
        n_steps: n,
        step_hours: cfg.step_hours,
        cost_by_sector,
        components,
        flows_mw,
        co2_emissions_t: co2,
        co2_price_eur_t: co2_price,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Converter,
    SourceTotal,
    SinkTotal,
    StorageThroughput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub kind: FlowKind,
    pub id: String,
    pub from_sector: SectorId,
    pub to_sector: SectorId,
    pub energy_in_mwh: f64,
    pub energy_out_mwh: f64,
}

/// Annual energy totals per converter and per sector endpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTable {
    pub rows: Vec<FlowRow>,
}

pub fn flow_summary(sol: &DispatchSolution, scenario: &Scenario) -> FlowTable {
    let dt = sol.step_hours;
    let sum = |v: &Option<Vec<f64>>| v.as_ref().map(|s| s.iter().sum::<f64>() * dt).unwrap_or(0.0);
    let mut rows = Vec::new();
    let mut source_totals: BTreeMap<SectorId, f64> = BTreeMap::new();
    let mut sink_totals: BTreeMap<SectorId, f64> = BTreeMap::new();

    for comp in &scenario.components {
        let series = &sol.components[&comp.id];
        match &comp.kind {
            ComponentKind::Converter(c) => rows.push(FlowRow {
                kind: FlowKind::Converter,
                id: comp.id.clone(),
                from_sector: c.from_sector,
                to_sector: c.to_sector,
                energy_in_mwh: sum(&series.demand_mw),
                energy_out_mwh: sum(&series.generation_mw),
            }),
            ComponentKind::Source(e) => {
                *source_totals.entry(e.sector).or_insert(0.0) += sum(&series.generation_mw);
            }
            ComponentKind::Sink(e) => {
                *sink_totals.entry(e.sector).or_insert(0.0) += sum(&series.demand_mw);
            }
            ComponentKind::Storage(s) => rows.push(FlowRow {
                kind: FlowKind::StorageThroughput,
                id: comp.id.clone(),
                from_sector: s.sector,
                to_sector: s.sector,
                energy_in_mwh: sum(&series.demand_mw),
                energy_out_mwh: sum(&series.generation_mw),
            }),
        }
    }
    for (sector, total) in source_totals {
        rows.push(FlowRow {
            kind: FlowKind::SourceTotal,
            id: format!("sources_{sector}"),
            from_sector: sector,
            to_sector: sector,
            energy_in_mwh: 0.0,
            energy_out_mwh: total,
        });
    }
    for (sector, total) in sink_totals {
        rows.push(FlowRow {
            kind: FlowKind::SinkTotal,
            id: format!("sinks_{sector}"),
            from_sector: sector,
            to_sector: sector,
            energy_in_mwh: total,
            energy_out_mwh: 0.0,
        });
    }
    FlowTable { rows }
}
