//! Compilation of a scenario into the multi-period dispatch LP.
//!
//! Emitted per step: one coupling row per converter, one balance row per
//! node, storage recursions, plus horizon-wide emission, blending, cyclic
//! and capacity rows. Box bounds carry the profile limits; components with
//! investment options get explicit capacity rows instead so the investment
//! columns can relax them.

use std::collections::HashMap;

use thiserror::Error;

use super::{ComponentKind, DispatchConfig, Profile, Scenario};
use crate::invest::HorizonDelta;
use crate::lp::{LpBuilder, RowSense, StandardFormLp, INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColKey {
    Gen { horizon: usize, comp: usize, step: usize },
    Dem { horizon: usize, comp: usize, step: usize },
    Level { horizon: usize, comp: usize, step: usize },
    Flow { horizon: usize, link: usize, step: usize },
    Invest { option: usize, horizon: usize },
    Gamma { tech: usize, horizon: usize, point: usize },
    Delta { tech: usize, horizon: usize, segment: usize },
    /// Benders master recourse estimate; one per horizon in multi-cut mode.
    Alpha { horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKey {
    Coupling { horizon: usize, comp: usize, step: usize },
    Balance { horizon: usize, node: usize, step: usize },
    StorageUpdate { horizon: usize, comp: usize, step: usize },
    StorageWrap { horizon: usize, comp: usize },
    StorageCyclic { horizon: usize, comp: usize },
    Co2 { horizon: usize },
    /// `node == usize::MAX` marks the system-wide variant.
    Blend { horizon: usize, node: usize, step: usize },
    Capacity { horizon: usize, comp: usize, step: usize },
    LinkCapacity { horizon: usize, link: usize, step: usize },
    PathwayCap { option: usize, horizon: usize },
    Convexity { tech: usize, horizon: usize },
    Adjacency { tech: usize, horizon: usize, point: usize },
    DeltaChoice { tech: usize, horizon: usize },
    DeltaPLink { tech: usize, horizon: usize },
    BendersCut { iteration: usize },
}

/// Bidirectional mapping between model entities and LP columns/rows.
#[derive(Debug, Clone, Default)]
pub struct VariableMap {
    cols: Vec<ColKey>,
    col_ix: HashMap<ColKey, usize>,
    rows: Vec<RowKey>,
    row_ix: HashMap<RowKey, usize>,
}

impl VariableMap {
    pub fn col(&self, key: &ColKey) -> Option<usize> {
        self.col_ix.get(key).copied()
    }

    pub fn row(&self, key: &RowKey) -> Option<usize> {
        self.row_ix.get(key).copied()
    }

    pub fn col_key(&self, index: usize) -> Option<&ColKey> {
        self.cols.get(index)
    }

    pub fn row_key(&self, index: usize) -> Option<&RowKey> {
        self.rows.get(index)
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn col_keys(&self) -> &[ColKey] {
        &self.cols
    }

    /// Bijectivity over forward and reverse directions.
    pub fn is_consistent(&self) -> bool {
        self.cols.len() == self.col_ix.len()
            && self.rows.len() == self.row_ix.len()
            && self.cols.iter().enumerate().all(|(i, k)| self.col_ix.get(k) == Some(&i))
            && self.rows.iter().enumerate().all(|(i, k)| self.row_ix.get(k) == Some(&i))
    }
}

/// Couples an [`LpBuilder`] with the [`VariableMap`] so every column and row
/// is registered exactly once.
#[derive(Debug, Default)]
pub struct Emitter {
    pub lp: LpBuilder,
    pub map: VariableMap,
}

impl Emitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn col(&mut self, key: ColKey, objective: f64, lower: f64, upper: f64) -> usize {
        let j = self.lp.add_col(objective, lower, upper);
        let prev = self.map.col_ix.insert(key, j);
        debug_assert!(prev.is_none(), "duplicate column key {key:?}");
        self.map.cols.push(key);
        j
    }

    pub fn row(&mut self, key: RowKey, sense: RowSense, rhs: f64, coeffs: &[(usize, f64)]) -> usize {
        let i = self.lp.add_row(sense, rhs, coeffs);
        let prev = self.map.row_ix.insert(key, i);
        debug_assert!(prev.is_none(), "duplicate row key {key:?}");
        self.map.rows.push(key);
        i
    }

    pub fn finish(self) -> (StandardFormLp, VariableMap) {
        (self.lp.build(), self.map)
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{subject}: profile `{name}` has length {actual}, expected {expected}")]
    ProfileLength {
        subject: String,
        name: &'static str,
        actual: usize,
        expected: usize,
    },
    #[error("investment option `{option}` targets unknown `{target}`")]
    UnknownTarget { option: String, target: String },
    #[error("learning technology `{0}` has no curve")]
    MissingCurve(String),
    #[error("learning curve for `{tech}` covers {p_max} GW but the options allow {needed} GW")]
    PMaxTooSmall { tech: String, p_max: f64, needed: f64 },
    #[error("learning curve for `{tech}` has no range: set p_max_gw or bound the options")]
    PMaxUnbounded { tech: String },
    #[error("horizon year {0} has no exogenous delta entry")]
    MissingDelta(i32),
    #[error("{0}")]
    Invalid(String),
}

/// Which variable of a component an investment row relaxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapTarget {
    Component(usize),
    Link(usize),
}

/// One investment option's footprint in a dispatch block: the z columns that
/// are active by this horizon (its own and earlier ones) and the per-step
/// effect each unit of capacity has on the bound.
#[derive(Debug, Clone)]
pub struct BlockInvest {
    pub target: CapTarget,
    pub effect: Profile,
    pub z_cols: Vec<usize>,
}

/// Per-horizon context for block emission.
pub struct BlockContext<'a> {
    pub horizon: usize,
    /// Multiplies every dispatch objective coefficient (discounting and
    /// annualization); 1 for the plain dispatch problem.
    pub cost_scale: f64,
    pub delta: Option<&'a HorizonDelta>,
    pub invest: Vec<BlockInvest>,
}

impl BlockContext<'_> {
    pub fn plain() -> Self {
        BlockContext {
            horizon: 0,
            cost_scale: 1.0,
            delta: None,
            invest: Vec::new(),
        }
    }
}

/// Compiles the scenario into the multi-period dispatch LP.
pub fn build_dispatch_lp(
    scenario: &Scenario,
    cfg: &DispatchConfig,
) -> Result<(StandardFormLp, VariableMap), BuildError> {
    let mut em = Emitter::new();
    emit_dispatch_block(&mut em, scenario, cfg, &BlockContext::plain())?;
    Ok(em.finish())
}

fn check_profile(
    subject: &str,
    name: &'static str,
    p: &Profile,
    n: usize,
) -> Result<(), BuildError> {
    match p.length_mismatch(n) {
        None => Ok(()),
        Some(actual) => Err(BuildError::ProfileLength {
            subject: subject.to_string(),
            name,
            actual,
            expected: n,
        }),
    }
}

/// Emits one dispatch block (columns and rows for every step of one horizon)
/// into the shared builder. Capacity rows are produced for every target in
/// `ctx.invest` with the listed z columns on the left-hand side.
pub fn emit_dispatch_block(
    em: &mut Emitter,
    scenario: &Scenario,
    cfg: &DispatchConfig,
    ctx: &BlockContext<'_>,
) -> Result<(), BuildError> {
    let n = cfg.n_steps;
    let h = ctx.horizon;
    let dt = cfg.step_hours;
    if n < 2 {
        return Err(BuildError::Invalid(format!(
            "dispatch horizon must have at least 2 steps, got {n}"
        )));
    }

    for comp in &scenario.components {
        match &comp.kind {
            ComponentKind::Source(e) | ComponentKind::Sink(e) => {
                check_profile(&comp.id, "lower", &e.lower, n)?;
                check_profile(&comp.id, "upper", &e.upper, n)?;
            }
            ComponentKind::Storage(s) => check_profile(&comp.id, "inflow", &s.inflow, n)?,
            ComponentKind::Converter(c) => {
                check_profile(&comp.id, "max_output", &c.max_output_mw, n)?
            }
        }
    }
    for bi in &ctx.invest {
        check_profile("investment effect", "effect", &bi.effect, n)?;
    }

    // capacity-row targets, grouped so several options can share one row
    let mut capped: HashMap<CapTarget, Vec<&BlockInvest>> = HashMap::new();
    for bi in &ctx.invest {
        capped.entry(bi.target).or_default().push(bi);
    }

    let cost_of = |comp_id: &str, base: f64| -> f64 {
        ctx.delta
            .and_then(|d| d.component_cost_eur_mwh.get(comp_id).copied())
            .unwrap_or(base)
    };
    let co2_of = |comp_id: &str, base: f64| -> f64 {
        ctx.delta
            .and_then(|d| d.component_co2_t_per_mwh.get(comp_id).copied())
            .unwrap_or(base)
    };

    // --- columns ---
    for (ci, comp) in scenario.components.iter().enumerate() {
        let lifted = capped.contains_key(&CapTarget::Component(ci));
        match &comp.kind {
            ComponentKind::Source(e) => {
                let cost = cost_of(&comp.id, e.cost_eur_mwh) * dt * ctx.cost_scale;
                for k in 0..n {
                    let ub = if lifted { INF } else { e.upper.value(k) };
                    em.col(ColKey::Gen { horizon: h, comp: ci, step: k }, cost, e.lower.value(k), ub);
                }
            }
            ComponentKind::Sink(e) => {
                let cost = cost_of(&comp.id, e.cost_eur_mwh) * dt * ctx.cost_scale;
                for k in 0..n {
                    let ub = if lifted { INF } else { e.upper.value(k) };
                    em.col(ColKey::Dem { horizon: h, comp: ci, step: k }, cost, e.lower.value(k), ub);
                }
            }
            ComponentKind::Storage(s) => {
                for k in 0..n {
                    em.col(ColKey::Gen { horizon: h, comp: ci, step: k }, 0.0, 0.0, s.power_mw);
                }
                for k in 0..n {
                    em.col(ColKey::Dem { horizon: h, comp: ci, step: k }, 0.0, 0.0, s.power_mw);
                }
                for k in 0..n {
                    let (lb, ub) = if k == 0 {
                        (s.initial_mwh, s.initial_mwh)
                    } else {
                        (0.0, if lifted { INF } else { s.energy_cap_mwh })
                    };
                    em.col(ColKey::Level { horizon: h, comp: ci, step: k }, 0.0, lb, ub);
                }
            }
            ComponentKind::Converter(c) => {
                let cost = cost_of(&comp.id, c.cost_eur_mwh) * dt * ctx.cost_scale;
                for k in 0..n {
                    em.col(ColKey::Dem { horizon: h, comp: ci, step: k }, 0.0, 0.0, INF);
                }
                for k in 0..n {
                    let ub = if lifted { INF } else { c.max_output_mw.value(k) };
                    em.col(ColKey::Gen { horizon: h, comp: ci, step: k }, cost, 0.0, ub);
                }
            }
        }
    }
    for (li, link) in scenario.network.links.iter().enumerate() {
        let lifted = capped.contains_key(&CapTarget::Link(li));
        for k in 0..n {
            let ub = if lifted { INF } else { link.ntc_mw };
            em.col(ColKey::Flow { horizon: h, link: li, step: k }, 0.0, 0.0, ub);
        }
    }

    // --- coupling rows: output = efficiency * input, per converter and step ---
    for (ci, comp) in scenario.components.iter().enumerate() {
        if let ComponentKind::Converter(c) = &comp.kind {
            for k in 0..n {
                let gen = em.map.col(&ColKey::Gen { horizon: h, comp: ci, step: k }).unwrap();
                let dem = em.map.col(&ColKey::Dem { horizon: h, comp: ci, step: k }).unwrap();
                em.row(
                    RowKey::Coupling { horizon: h, comp: ci, step: k },
                    RowSense::Eq,
                    0.0,
                    &[(gen, 1.0), (dem, -c.efficiency)],
                );
            }
        }
    }

    // --- nodal balance rows ---
    // (node, +1) for injections, (node, -1) for withdrawals, links out/in
    let mut node_terms: Vec<Vec<(ColKey, f64)>> = vec![Vec::new(); scenario.network.nodes.len()];
    for (ci, comp) in scenario.components.iter().enumerate() {
        match &comp.kind {
            ComponentKind::Source(e) => {
                node_terms[e.node].push((ColKey::Gen { horizon: h, comp: ci, step: 0 }, 1.0))
            }
            ComponentKind::Sink(e) => {
                node_terms[e.node].push((ColKey::Dem { horizon: h, comp: ci, step: 0 }, -1.0))
            }
            ComponentKind::Storage(s) => {
                node_terms[s.node].push((ColKey::Gen { horizon: h, comp: ci, step: 0 }, 1.0));
                node_terms[s.node].push((ColKey::Dem { horizon: h, comp: ci, step: 0 }, -1.0));
            }
            ComponentKind::Converter(c) => {
                node_terms[c.to_node].push((ColKey::Gen { horizon: h, comp: ci, step: 0 }, 1.0));
                node_terms[c.from_node].push((ColKey::Dem { horizon: h, comp: ci, step: 0 }, -1.0));
            }
        }
    }
    let mut link_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); scenario.network.nodes.len()];
    for (li, link) in scenario.network.links.iter().enumerate() {
        link_terms[link.from].push((li, -1.0));
        link_terms[link.to].push((li, 1.0));
    }
    let mut coeffs: Vec<(usize, f64)> = Vec::new();
    for (ni, _node) in scenario.network.nodes.iter().enumerate() {
        if node_terms[ni].is_empty() && link_terms[ni].is_empty() {
            continue;
        }
        for k in 0..n {
            coeffs.clear();
            for (key, sign) in &node_terms[ni] {
                let key_k = match key {
                    ColKey::Gen { comp, .. } => ColKey::Gen { horizon: h, comp: *comp, step: k },
                    ColKey::Dem { comp, .. } => ColKey::Dem { horizon: h, comp: *comp, step: k },
                    _ => unreachable!(),
                };
                coeffs.push((em.map.col(&key_k).unwrap(), *sign));
            }
            for &(li, sign) in &link_terms[ni] {
                coeffs.push((
                    em.map.col(&ColKey::Flow { horizon: h, link: li, step: k }).unwrap(),
                    sign,
                ));
            }
            em.row(RowKey::Balance { horizon: h, node: ni, step: k }, RowSense::Eq, 0.0, &coeffs);
        }
    }

    // --- storage recursion, wrap-around and cyclic rows ---
    for (ci, comp) in scenario.components.iter().enumerate() {
        if let ComponentKind::Storage(s) = &comp.kind {
            let drain = dt / s.eta_discharge;
            let fill = dt * s.eta_charge;
            let level: Vec<usize> = (0..n)
                .map(|k| em.map.col(&ColKey::Level { horizon: h, comp: ci, step: k }).unwrap())
                .collect();
            let gen: Vec<usize> = (0..n)
                .map(|k| em.map.col(&ColKey::Gen { horizon: h, comp: ci, step: k }).unwrap())
                .collect();
            let dem: Vec<usize> = (0..n)
                .map(|k| em.map.col(&ColKey::Dem { horizon: h, comp: ci, step: k }).unwrap())
                .collect();
            for k in 0..n - 1 {
                em.row(
                    RowKey::StorageUpdate { horizon: h, comp: ci, step: k },
                    RowSense::Eq,
                    s.inflow.value(k),
                    &[
                        (level[k + 1], 1.0),
                        (level[k], -1.0),
                        (gen[k], drain),
                        (dem[k], -fill),
                    ],
                );
            }
            // the last step wraps onto the initial level so energy is
            // conserved over the whole cycle
            em.row(
                RowKey::StorageWrap { horizon: h, comp: ci },
                RowSense::Eq,
                s.inflow.value(n - 1),
                &[
                    (level[0], 1.0),
                    (level[n - 1], -1.0),
                    (gen[n - 1], drain),
                    (dem[n - 1], -fill),
                ],
            );
            em.row(
                RowKey::StorageCyclic { horizon: h, comp: ci },
                RowSense::Eq,
                0.0,
                &[(level[n - 1], 1.0), (level[0], -1.0)],
            );
        }
    }

    // --- emission budget over the horizon ---
    if cfg.co2_budget_t.is_finite() {
        coeffs.clear();
        for (ci, comp) in scenario.components.iter().enumerate() {
            if let ComponentKind::Source(e) = &comp.kind {
                let factor = co2_of(&comp.id, e.co2_t_per_mwh);
                if factor != 0.0 {
                    for k in 0..n {
                        coeffs.push((
                            em.map.col(&ColKey::Gen { horizon: h, comp: ci, step: k }).unwrap(),
                            factor * dt,
                        ));
                    }
                }
            }
        }
        em.row(RowKey::Co2 { horizon: h }, RowSense::Le, cfg.co2_budget_t, &coeffs);
    }

    // --- hydrogen blending limits ---
    if let Some(blend) = &cfg.blend {
        // injected converters and host infeed per host node
        let mut injected: Vec<(usize, usize)> = Vec::new(); // (comp, to_node)
        let mut host_feed: Vec<(usize, usize, bool)> = Vec::new(); // (comp, node, is_gen)
        for (ci, comp) in scenario.components.iter().enumerate() {
            match &comp.kind {
                ComponentKind::Converter(c) if c.to_sector == blend.host => {
                    if c.from_sector == blend.injected {
                        injected.push((ci, c.to_node));
                    } else {
                        host_feed.push((ci, c.to_node, true));
                    }
                }
                ComponentKind::Source(e) if e.sector == blend.host => {
                    host_feed.push((ci, e.node, true));
                }
                ComponentKind::Storage(s) if s.sector == blend.host => {
                    host_feed.push((ci, s.node, true));
                }
                _ => {}
            }
        }
        if !injected.is_empty() {
            let hosts: Vec<usize> = if blend.per_node {
                let mut nodes: Vec<usize> = injected.iter().map(|&(_, node)| node).collect();
                nodes.sort_unstable();
                nodes.dedup();
                nodes
            } else {
                vec![usize::MAX]
            };
            for &node in &hosts {
                for k in 0..n {
                    coeffs.clear();
                    for &(ci, to_node) in &injected {
                        if node == usize::MAX || to_node == node {
                            coeffs.push((
                                em.map.col(&ColKey::Gen { horizon: h, comp: ci, step: k }).unwrap(),
                                1.0,
                            ));
                        }
                    }
                    for &(ci, fnode, _) in &host_feed {
                        if node == usize::MAX || fnode == node {
                            coeffs.push((
                                em.map.col(&ColKey::Gen { horizon: h, comp: ci, step: k }).unwrap(),
                                -blend.fraction,
                            ));
                        }
                    }
                    em.row(RowKey::Blend { horizon: h, node, step: k }, RowSense::Le, 0.0, &coeffs);
                }
            }
        }
    }

    // --- capacity rows for investable targets ---
    let mut targets: Vec<&CapTarget> = capped.keys().collect();
    targets.sort_by_key(|t| match t {
        CapTarget::Component(ci) => (0, *ci),
        CapTarget::Link(li) => (1, *li),
    });
    for target in targets {
        let entries = &capped[target];
        match *target {
            CapTarget::Component(ci) => {
                let comp = &scenario.components[ci];
                if let ComponentKind::Storage(s) = &comp.kind {
                    // energy-capacity expansion: e(k) <= cap + effect * z, k >= 1
                    for k in 1..n {
                        coeffs.clear();
                        coeffs.push((
                            em.map.col(&ColKey::Level { horizon: h, comp: ci, step: k }).unwrap(),
                            1.0,
                        ));
                        for bi in entries {
                            for &z in &bi.z_cols {
                                coeffs.push((z, -bi.effect.value(k)));
                            }
                        }
                        em.row(
                            RowKey::Capacity { horizon: h, comp: ci, step: k },
                            RowSense::Le,
                            s.energy_cap_mwh,
                            &coeffs,
                        );
                    }
                } else {
                    // the bound-carrying variable and its base profile
                    let (is_dem, base): (bool, &Profile) = match &comp.kind {
                        ComponentKind::Source(e) => (false, &e.upper),
                        ComponentKind::Sink(e) => (true, &e.upper),
                        ComponentKind::Converter(c) => (false, &c.max_output_mw),
                        ComponentKind::Storage(_) => unreachable!(),
                    };
                    for k in 0..n {
                        let rhs = base.value(k);
                        if !rhs.is_finite() {
                            continue;
                        }
                        let key = if is_dem {
                            ColKey::Dem { horizon: h, comp: ci, step: k }
                        } else {
                            ColKey::Gen { horizon: h, comp: ci, step: k }
                        };
                        coeffs.clear();
                        coeffs.push((em.map.col(&key).unwrap(), 1.0));
                        for bi in entries {
                            for &z in &bi.z_cols {
                                coeffs.push((z, -bi.effect.value(k)));
                            }
                        }
                        em.row(
                            RowKey::Capacity { horizon: h, comp: ci, step: k },
                            RowSense::Le,
                            rhs,
                            &coeffs,
                        );
                    }
                }
            }
            CapTarget::Link(li) => {
                let link = &scenario.network.links[li];
                for k in 0..n {
                    coeffs.clear();
                    coeffs.push((
                        em.map.col(&ColKey::Flow { horizon: h, link: li, step: k }).unwrap(),
                        1.0,
                    ));
                    for bi in entries {
                        for &z in &bi.z_cols {
                            coeffs.push((z, -bi.effect.value(k)));
                        }
                    }
                    em.row(
                        RowKey::LinkCapacity { horizon: h, link: li, step: k },
                        RowSense::Le,
                        link.ntc_mw,
                        &coeffs,
                    );
                }
            }
        }
    }

    Ok(())
}
