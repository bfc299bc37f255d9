//! Scenario builders shared across the crate's tests.

use std::collections::BTreeMap;

use crate::invest::{
    CostModel, HorizonDelta, InvestTarget, InvestmentOption, PathwaySpec,
};
use crate::learning::LearningCurve;
use crate::model::*;

pub fn node(id: &str, sector: SectorId) -> Node {
    Node {
        id: id.to_string(),
        sector,
    }
}

pub fn source(id: &str, node: usize, sector: SectorId, cap: f64, cost: f64) -> Component {
    Component {
        id: id.to_string(),
        kind: ComponentKind::Source(EndpointSpec {
            sector,
            node,
            lower: Profile::Const(0.0),
            upper: Profile::Const(cap),
            cost_eur_mwh: cost,
            co2_t_per_mwh: 0.0,
        }),
    }
}

pub fn sink_fixed(id: &str, node: usize, sector: SectorId, demand: f64) -> Component {
    Component {
        id: id.to_string(),
        kind: ComponentKind::Sink(EndpointSpec {
            sector,
            node,
            lower: Profile::Const(demand),
            upper: Profile::Const(demand),
            cost_eur_mwh: 0.0,
            co2_t_per_mwh: 0.0,
        }),
    }
}

/// Value-of-lost-load slack so every dispatch stays feasible.
pub fn slack(id: &str, node: usize, sector: SectorId) -> Component {
    source(id, node, sector, f64::INFINITY, 10_000.0)
}

/// One node, one fixed sink, one priced source plus slack.
pub fn single_node_scenario(n_steps: usize) -> Scenario {
    let network = Network {
        nodes: vec![node("n1", SectorId::Electricity)],
        links: vec![],
    };
    Scenario {
        name: "single-node".into(),
        network,
        components: vec![
            source("gen", 0, SectorId::Electricity, 5.0, 10.0),
            sink_fixed("load", 0, SectorId::Electricity, 3.0),
            slack("voll", 0, SectorId::Electricity),
        ],
        dispatch: DispatchConfig {
            n_steps,
            step_hours: 1.0,
            co2_budget_t: f64::INFINITY,
            blend: None,
        },
        investments: vec![],
        learning: BTreeMap::new(),
        pathway: None,
    }
}

/// Two electricity nodes with a link, an electrolyzer into a hydrogen node,
/// a battery, a methane feed with hydrogen blending, and a CO2-emitting
/// backup unit. Exercises every constraint family.
pub fn coupled_scenario(n_steps: usize) -> Scenario {
    let nodes = vec![
        node("el_a", SectorId::Electricity), // 0
        node("el_b", SectorId::Electricity), // 1
        node("h2_a", SectorId::Hydrogen),    // 2
        node("ch4_a", SectorId::Methane),    // 3
    ];
    let links = vec![Link {
        id: "line_ab".into(),
        sector: SectorId::Electricity,
        from: 0,
        to: 1,
        ntc_mw: 4.0,
        length_km: 200.0,
        pair: None,
    }];
    let wind_profile: Vec<f64> = (0..n_steps)
        .map(|k| 3.0 + 2.0 * ((k % 4) as f64) / 3.0)
        .collect();
    let components = vec![
        Component {
            id: "wind_a".into(),
            kind: ComponentKind::Source(EndpointSpec {
                sector: SectorId::Electricity,
                node: 0,
                lower: Profile::Const(0.0),
                upper: Profile::Series(wind_profile),
                cost_eur_mwh: 0.0,
                co2_t_per_mwh: 0.0,
            }),
        },
        Component {
            id: "gas_plant_b".into(),
            kind: ComponentKind::Source(EndpointSpec {
                sector: SectorId::Electricity,
                node: 1,
                lower: Profile::Const(0.0),
                upper: Profile::Const(6.0),
                cost_eur_mwh: 60.0,
                co2_t_per_mwh: 0.4,
            }),
        },
        sink_fixed("load_b", 1, SectorId::Electricity, 4.0),
        Component {
            id: "electrolyzer".into(),
            kind: ComponentKind::Converter(ConverterSpec {
                from_sector: SectorId::Electricity,
                from_node: 0,
                to_sector: SectorId::Hydrogen,
                to_node: 2,
                efficiency: 0.7,
                max_output_mw: Profile::Const(2.0),
                cost_eur_mwh: 0.0,
            }),
        },
        sink_fixed("h2_demand", 2, SectorId::Hydrogen, 0.5),
        Component {
            id: "battery_a".into(),
            kind: ComponentKind::Storage(StorageSpec {
                sector: SectorId::Electricity,
                node: 0,
                energy_cap_mwh: 8.0,
                eta_charge: 0.95,
                eta_discharge: 0.95,
                inflow: Profile::Const(0.0),
                initial_mwh: 4.0,
                power_mw: 3.0,
            }),
        },
        Component {
            id: "ch4_import".into(),
            kind: ComponentKind::Source(EndpointSpec {
                sector: SectorId::Methane,
                node: 3,
                lower: Profile::Const(0.0),
                upper: Profile::Const(10.0),
                cost_eur_mwh: 25.0,
                co2_t_per_mwh: 0.2,
            }),
        },
        sink_fixed("ch4_demand", 3, SectorId::Methane, 2.0),
        Component {
            id: "h2_blend".into(),
            kind: ComponentKind::Converter(ConverterSpec {
                from_sector: SectorId::Hydrogen,
                from_node: 2,
                to_sector: SectorId::Methane,
                to_node: 3,
                efficiency: 1.0,
                max_output_mw: Profile::Const(5.0),
                cost_eur_mwh: 0.0,
            }),
        },
        slack("voll_el_a", 0, SectorId::Electricity),
        slack("voll_el_b", 1, SectorId::Electricity),
        slack("voll_h2", 2, SectorId::Hydrogen),
        slack("voll_ch4", 3, SectorId::Methane),
    ];
    Scenario {
        name: "coupled".into(),
        network: Network { nodes, links },
        components,
        dispatch: DispatchConfig {
            n_steps,
            step_hours: 1.0,
            co2_budget_t: 1e6,
            blend: Some(BlendRule {
                injected: SectorId::Hydrogen,
                host: SectorId::Methane,
                fraction: 0.2,
                per_node: true,
            }),
        },
        investments: vec![],
        learning: BTreeMap::new(),
        pathway: None,
    }
}

pub fn uniform_deltas(years: &[i32]) -> BTreeMap<i32, HorizonDelta> {
    years.iter().map(|&y| (y, HorizonDelta::default())).collect()
}

/// A capacity-expansion toy: one node, demand 10 MW, an existing cheap
/// source capped at 4 MW, and an investable expensive-to-build source.
/// Slack keeps it feasible at zero investment.
pub fn invest_scenario(n_steps: usize, years: Vec<i32>, terminal: i32) -> Scenario {
    let network = Network {
        nodes: vec![node("n1", SectorId::Electricity)],
        links: vec![],
    };
    let deltas = uniform_deltas(&years);
    Scenario {
        name: "invest-toy".into(),
        network,
        components: vec![
            source("base_gen", 0, SectorId::Electricity, 4.0, 20.0),
            source("new_gen", 0, SectorId::Electricity, 0.0, 5.0),
            sink_fixed("load", 0, SectorId::Electricity, 10.0),
            slack("voll", 0, SectorId::Electricity),
        ],
        dispatch: DispatchConfig {
            n_steps,
            step_hours: 1.0,
            co2_budget_t: f64::INFINITY,
            blend: None,
        },
        investments: vec![InvestmentOption {
            id: "build_new_gen".into(),
            technology: "new_gen_tech".into(),
            target: InvestTarget::Component("new_gen".into()),
            effect: Profile::Const(1.0),
            max_add_mw: Some(20.0),
            lifetime_years: 10.0,
            cost: CostModel::Linear {
                eur_per_kw: years.iter().map(|&y| (y, 100.0)).collect(),
            },
            cumulative_cap_mw: None,
        }],
        learning: BTreeMap::new(),
        pathway: Some(PathwaySpec {
            base_year: years[0],
            years,
            terminal_year: terminal,
            wacc: 0.07,
            deltas,
            annual_scale: None,
        }),
    }
}

/// Learning-mode variant: the investable source is priced by an aggressive
/// learning curve; a linear twin of the same curve's initial cost is kept
/// for comparison runs.
pub fn learning_scenario(n_steps: usize, years: Vec<i32>, terminal: i32) -> Scenario {
    let mut scenario = invest_scenario(n_steps, years.clone(), terminal);
    scenario.name = "learning-toy".into();
    scenario.investments[0].cost = CostModel::Learning;
    scenario.learning.insert(
        "new_gen_tech".into(),
        LearningCurve {
            c0_eur_per_kw: 100.0,
            p0_gw: 0.0,
            r: 0.3,
            p_max_gw: None,
            n_pw: 6,
            p0_floor_gw: None,
        },
    );
    scenario
}
