//! Multi-energy-system scenario model and its dispatch-LP compilation.
//!
//! A [`Scenario`] describes carriers, nodes, transport links and components
//! (sources, sinks, storages, converters) plus optional investment options
//! and a transition pathway. [`build_dispatch_lp`] compiles it into the
//! multi-period dispatch LP; [`solution::extract_dispatch_solution`] maps a
//! solver result back onto named component series.

pub mod build;
pub mod solution;

pub use build::{build_dispatch_lp, BlockContext, BuildError, ColKey, Emitter, RowKey, VariableMap};
pub use solution::{extract_dispatch_solution, flow_summary, DispatchSolution, FlowTable};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::invest::{InvestmentOption, PathwaySpec};
use crate::learning::LearningCurve;

/// The five energy carriers a component or link may belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorId {
    Electricity,
    Methane,
    Hydrogen,
    Heat,
    External,
}

impl SectorId {
    pub const ALL: [SectorId; 5] = [
        SectorId::Electricity,
        SectorId::Methane,
        SectorId::Hydrogen,
        SectorId::Heat,
        SectorId::External,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SectorId::Electricity => "electricity",
            SectorId::Methane => "methane",
            SectorId::Hydrogen => "hydrogen",
            SectorId::Heat => "heat",
            SectorId::External => "external",
        }
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SectorId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SectorId::ALL
            .iter()
            .find(|sec| sec.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown sector `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub sector: SectorId,
}

/// Directed transport link with an NTC rating. Bidirectional lines are two
/// antiparallel links sharing a `pair` id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub sector: SectorId,
    pub from: usize,
    pub to: usize,
    pub ntc_mw: f64,
    pub length_km: f64,
    #[serde(default)]
    pub pair: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
}

impl Network {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }
}

/// Per-step data: either one constant for every step or an explicit series
/// whose length must match the dispatch horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Const(f64),
    Series(Vec<f64>),
}

impl Profile {
    pub fn value(&self, step: usize) -> f64 {
        match self {
            Profile::Const(v) => *v,
            Profile::Series(vs) => vs[step],
        }
    }

    /// Actual length when it conflicts with `n`, `None` when compatible.
    pub fn length_mismatch(&self, n: usize) -> Option<usize> {
        match self {
            Profile::Const(_) => None,
            Profile::Series(vs) if vs.len() == n => None,
            Profile::Series(vs) => Some(vs.len()),
        }
    }

    pub fn truncated(&self, n: usize) -> Profile {
        match self {
            Profile::Const(v) => Profile::Const(*v),
            Profile::Series(vs) => Profile::Series(vs.iter().copied().take(n).collect()),
        }
    }

    pub fn series_len(&self) -> Option<usize> {
        match self {
            Profile::Const(_) => None,
            Profile::Series(vs) => Some(vs.len()),
        }
    }
}

/// Common shape of sources and sinks: a power band per step plus fuel cost
/// and emission factor on the energy moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub sector: SectorId,
    pub node: usize,
    pub lower: Profile,
    pub upper: Profile,
    #[serde(default)]
    pub cost_eur_mwh: f64,
    #[serde(default)]
    pub co2_t_per_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    pub sector: SectorId,
    pub node: usize,
    pub energy_cap_mwh: f64,
    /// Charging efficiency (energy stored per unit charged).
    pub eta_charge: f64,
    /// Discharging efficiency (energy delivered per unit drained).
    pub eta_discharge: f64,
    /// Exogenous in-/outflow per step in MWh (positive fills the store).
    pub inflow: Profile,
    pub initial_mwh: f64,
    /// Charge/discharge power rating.
    #[serde(default = "inf")]
    pub power_mw: f64,
}

fn inf() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterSpec {
    pub from_sector: SectorId,
    pub from_node: usize,
    pub to_sector: SectorId,
    pub to_node: usize,
    /// Output energy per unit input energy, in (0, 1].
    pub efficiency: f64,
    /// Capacity bound on the output side.
    pub max_output_mw: Profile,
    #[serde(default)]
    pub cost_eur_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentKind {
    Source(EndpointSpec),
    Sink(EndpointSpec),
    Storage(StorageSpec),
    Converter(ConverterSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    #[serde(flatten)]
    pub kind: ComponentKind,
}

impl Component {
    /// Sector a variable role of this component settles in.
    pub fn sector_of_gen(&self) -> Option<SectorId> {
        match &self.kind {
            ComponentKind::Source(e) => Some(e.sector),
            ComponentKind::Sink(_) => None,
            ComponentKind::Storage(s) => Some(s.sector),
            ComponentKind::Converter(c) => Some(c.to_sector),
        }
    }

    pub fn sector_of_dem(&self) -> Option<SectorId> {
        match &self.kind {
            ComponentKind::Source(_) => None,
            ComponentKind::Sink(e) => Some(e.sector),
            ComponentKind::Storage(s) => Some(s.sector),
            ComponentKind::Converter(c) => Some(c.from_sector),
        }
    }
}

/// How hydrogen blending into a host grid is limited: injected energy per
/// node and step must stay below `fraction` times the host infeed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendRule {
    pub injected: SectorId,
    pub host: SectorId,
    pub fraction: f64,
    /// Enforce per host node (default) or summed over the whole system.
    #[serde(default = "default_true")]
    pub per_node: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchConfig {
    pub n_steps: usize,
    pub step_hours: f64,
    /// Emission budget for the whole horizon in tons; infinite disables it.
    #[serde(default = "inf")]
    pub co2_budget_t: f64,
    #[serde(default)]
    pub blend: Option<BlendRule>,
}

impl DispatchConfig {
    pub fn horizon_hours(&self) -> f64 {
        self.n_steps as f64 * self.step_hours
    }
}

/// Full declarative description of a multi-energy system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    pub components: Vec<Component>,
    pub dispatch: DispatchConfig,
    #[serde(default)]
    pub investments: Vec<InvestmentOption>,
    #[serde(default)]
    pub learning: BTreeMap<String, LearningCurve>,
    #[serde(default)]
    pub pathway: Option<PathwaySpec>,
}

impl Scenario {
    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| c.id == id)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.network.links.iter().position(|l| l.id == id)
    }

    /// Restricts the horizon to the first `n` steps, truncating all series
    /// profiles. Fails when a series is shorter than `n`.
    pub fn with_horizon(&self, n: usize) -> Result<Scenario, String> {
        let mut out = self.clone();
        let check = |p: &Profile, subject: &str| -> Result<(), String> {
            match p.series_len() {
                Some(len) if len < n => Err(format!(
                    "profile of {subject} has {len} steps, need at least {n}"
                )),
                _ => Ok(()),
            }
        };
        for c in &out.components {
            match &c.kind {
                ComponentKind::Source(e) | ComponentKind::Sink(e) => {
                    check(&e.lower, &c.id)?;
                    check(&e.upper, &c.id)?;
                }
                ComponentKind::Storage(s) => check(&s.inflow, &c.id)?,
                ComponentKind::Converter(v) => check(&v.max_output_mw, &c.id)?,
            }
        }
        for c in out.components.iter_mut() {
            match &mut c.kind {
                ComponentKind::Source(e) | ComponentKind::Sink(e) => {
                    e.lower = e.lower.truncated(n);
                    e.upper = e.upper.truncated(n);
                }
                ComponentKind::Storage(s) => s.inflow = s.inflow.truncated(n),
                ComponentKind::Converter(v) => v.max_output_mw = v.max_output_mw.truncated(n),
            }
        }
        for o in out.investments.iter_mut() {
            o.effect = o.effect.truncated(n);
        }
        out.dispatch.n_steps = n;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: &str, message: String) {
        self.violations.push(Violation {
            subject: subject.to_string(),
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.subject, v.message)?;
        }
        Ok(())
    }
}

/// Structural checks over a scenario: dangling references, profile lengths,
/// parameter ranges. Returns a report instead of failing fast so callers can
/// show every problem at once.
pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = scenario.dispatch.n_steps;
    let net = &scenario.network;

    if n < 2 {
        rep.push(
            "dispatch",
            format!("horizon must have at least 2 steps, got {n}"),
        );
    }
    if scenario.dispatch.step_hours <= 0.0 {
        rep.push("dispatch", "step length must be positive".into());
    }
    if scenario.dispatch.co2_budget_t < 0.0 {
        rep.push("dispatch", "CO2 budget must be nonnegative".into());
    }
    if let Some(blend) = &scenario.dispatch.blend {
        if !(0.0..=1.0).contains(&blend.fraction) {
            rep.push(
                "dispatch.blend",
                format!("blend fraction {} outside [0, 1]", blend.fraction),
            );
        }
    }

    let mut seen_nodes = std::collections::HashSet::new();
    for node in &net.nodes {
        if !seen_nodes.insert((&node.id, node.sector)) {
            rep.push(&node.id, "duplicate node id within sector".into());
        }
    }

    for link in &net.links {
        let subject = &link.id;
        for (end, label) in [(link.from, "from"), (link.to, "to")] {
            match net.nodes.get(end) {
                None => rep.push(subject, format!("{label}-node index {end} does not exist")),
                Some(node) if node.sector != link.sector => rep.push(
                    subject,
                    format!(
                        "{label}-node {} is in sector {}, link is {}",
                        node.id, node.sector, link.sector
                    ),
                ),
                _ => {}
            }
        }
        if link.from == link.to {
            rep.push(subject, "self-loop link".into());
        }
        if link.ntc_mw < 0.0 {
            rep.push(subject, format!("negative NTC {}", link.ntc_mw));
        }
        if link.length_km < 0.0 {
            rep.push(subject, format!("negative length {}", link.length_km));
        }
    }

    let check_node = |rep: &mut ValidationReport, subject: &str, node: usize, sector: SectorId| {
        match net.nodes.get(node) {
            None => rep.push(subject, format!("node index {node} does not exist")),
            Some(nd) if nd.sector != sector => rep.push(
                subject,
                format!("bound to node {} of sector {}, expected {}", nd.id, nd.sector, sector),
            ),
            _ => {}
        }
    };
    let check_profile = |rep: &mut ValidationReport, subject: &str, name: &str, p: &Profile| {
        if let Some(actual) = p.length_mismatch(n) {
            rep.push(
                subject,
                format!("profile `{name}` has length {actual}, expected {n}"),
            );
        }
    };

    let mut seen_components = std::collections::HashSet::new();
    for comp in &scenario.components {
        let subject = &comp.id;
        if !seen_components.insert(&comp.id) {
            rep.push(subject, "duplicate component id".into());
        }
        match &comp.kind {
            ComponentKind::Source(e) | ComponentKind::Sink(e) => {
                check_node(&mut rep, subject, e.node, e.sector);
                check_profile(&mut rep, subject, "lower", &e.lower);
                check_profile(&mut rep, subject, "upper", &e.upper);
                if e.lower.length_mismatch(n).is_none() && e.upper.length_mismatch(n).is_none() {
                    for k in 0..n {
                        if e.lower.value(k) > e.upper.value(k) + 1e-12 {
                            rep.push(
                                subject,
                                format!(
                                    "lower bound {} above upper bound {} at step {k}",
                                    e.lower.value(k),
                                    e.upper.value(k)
                                ),
                            );
                            break;
                        }
                    }
                }
            }
            ComponentKind::Storage(s) => {
                check_node(&mut rep, subject, s.node, s.sector);
                check_profile(&mut rep, subject, "inflow", &s.inflow);
                for (eta, name) in [(s.eta_charge, "charge"), (s.eta_discharge, "discharge")] {
                    if !(eta > 0.0 && eta <= 1.0) {
                        rep.push(subject, format!("{name} efficiency {eta} outside (0, 1]"));
                    }
                }
                if s.energy_cap_mwh < 0.0 {
                    rep.push(subject, "negative energy capacity".into());
                }
                if s.initial_mwh < 0.0 || s.initial_mwh > s.energy_cap_mwh {
                    rep.push(
                        subject,
                        format!(
                            "initial level {} outside [0, {}]",
                            s.initial_mwh, s.energy_cap_mwh
                        ),
                    );
                }
            }
            ComponentKind::Converter(c) => {
                check_node(&mut rep, subject, c.from_node, c.from_sector);
                check_node(&mut rep, subject, c.to_node, c.to_sector);
                check_profile(&mut rep, subject, "max_output", &c.max_output_mw);
                if !(c.efficiency > 0.0 && c.efficiency <= 1.0) {
                    rep.push(
                        subject,
                        format!("conversion efficiency {} outside (0, 1]", c.efficiency),
                    );
                }
                if c.from_sector == c.to_sector {
                    rep.push(subject, "converter links a sector to itself".into());
                }
            }
        }
    }

    for opt in &scenario.investments {
        opt.validate(scenario, &mut |subject, message| rep.push(subject, message));
    }

    for (tech, curve) in &scenario.learning {
        curve.validate(&mut |message| rep.push(tech, message));
    }

    if let Some(pathway) = &scenario.pathway {
        pathway.validate(&mut |subject, message| rep.push(subject, message));
    }

    rep
}

#[cfg(test)]
pub(crate) mod fixtures;

#[cfg(test)]
mod tests;
