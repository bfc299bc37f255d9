//! Investment extension: equivalent-annual-cost problems and the coupled
//! multi-horizon pathway problem.
//!
//! Investment variables relax component or link capacity bounds through
//! dedicated capacity rows. In a pathway, the capacity bought in horizon `m`
//! stays available in every later horizon, dispatch costs are weighted by the
//! discount factor of the horizon span, and investment costs by the
//! discounted share of the asset lifetime that falls inside the modeled
//! window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::learning::{self, LearningCurve};
use crate::lp::{StandardFormLp, INF};
use crate::milp::{MilpProblem, Sos2Group};
use crate::model::build::{BlockContext, BlockInvest, CapTarget, ColKey, Emitter, RowKey};
use crate::model::{BuildError, DispatchConfig, Profile, Scenario, VariableMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvestTarget {
    /// Capacity of a component (source/sink power, converter output,
    /// storage energy).
    Component(String),
    /// NTC of a link, or of an antiparallel pair when the id names a pair.
    Link(String),
}

impl InvestTarget {
    pub fn describe(&self) -> &str {
        match self {
            InvestTarget::Component(id) | InvestTarget::Link(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Specific cost in EUR per kW, keyed by horizon year.
    Linear { eur_per_kw: BTreeMap<i32, f64> },
    /// Priced by the learning curve registered for the option's technology.
    Learning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentOption {
    pub id: String,
    /// Aggregation key for learning curves; regional options of one
    /// technology share a curve.
    pub technology: String,
    pub target: InvestTarget,
    /// Bound relaxation per MW invested and step: 1 for firm capacity,
    /// an availability profile for intermittent sources.
    pub effect: Profile,
    /// Maximal addition per horizon (MW); absent means unbounded.
    #[serde(default)]
    pub max_add_mw: Option<f64>,
    pub lifetime_years: f64,
    pub cost: CostModel,
    /// Optional pathway bounds: cumulative capacity cap per horizon prefix.
    #[serde(default)]
    pub cumulative_cap_mw: Option<Vec<f64>>,
}

impl InvestmentOption {
    pub fn validate(&self, scenario: &Scenario, push: &mut dyn FnMut(&str, String)) {
        if self.resolve_targets(scenario).is_err() {
            push(
                &self.id,
                format!("targets unknown `{}`", self.target.describe()),
            );
        }
        if let Some(cap) = self.max_add_mw {
            if cap < 0.0 {
                push(&self.id, format!("negative capacity bound {cap}"));
            }
        }
        if self.lifetime_years <= 0.0 {
            push(&self.id, format!("lifetime {} must be positive", self.lifetime_years));
        }
        match &self.cost {
            CostModel::Linear { eur_per_kw } => {
                if eur_per_kw.is_empty() {
                    push(&self.id, "linear cost model has no year entries".into());
                }
            }
            CostModel::Learning => {
                if !scenario.learning.contains_key(&self.technology) {
                    push(
                        &self.id,
                        format!("no learning curve for technology `{}`", self.technology),
                    );
                }
            }
        }
        if let (Some(caps), Some(pathway)) = (&self.cumulative_cap_mw, &scenario.pathway) {
            if caps.len() != pathway.years.len() {
                push(
                    &self.id,
                    format!(
                        "cumulative caps have {} entries for {} horizons",
                        caps.len(),
                        pathway.years.len()
                    ),
                );
            }
        }
    }

    pub(crate) fn resolve_targets(&self, scenario: &Scenario) -> Result<Vec<CapTarget>, BuildError> {
        match &self.target {
            InvestTarget::Component(id) => scenario
                .component_index(id)
                .map(|ci| vec![CapTarget::Component(ci)])
                .ok_or_else(|| BuildError::UnknownTarget {
                    option: self.id.clone(),
                    target: id.clone(),
                }),
            InvestTarget::Link(id) => {
                let hits: Vec<CapTarget> = scenario
                    .network
                    .links
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.id == *id || l.pair.as_deref() == Some(id))
                    .map(|(li, _)| CapTarget::Link(li))
                    .collect();
                if hits.is_empty() {
                    Err(BuildError::UnknownTarget {
                        option: self.id.clone(),
                        target: id.clone(),
                    })
                } else {
                    Ok(hits)
                }
            }
        }
    }

    /// Linear specific cost for a horizon year.
    pub fn linear_cost_eur_per_kw(&self, year: i32) -> Option<f64> {
        match &self.cost {
            CostModel::Linear { eur_per_kw } => eur_per_kw.get(&year).copied(),
            CostModel::Learning => None,
        }
    }

    fn first_linear_cost(&self) -> Option<f64> {
        match &self.cost {
            CostModel::Linear { eur_per_kw } => eur_per_kw.values().next().copied(),
            CostModel::Learning => None,
        }
    }
}

/// Per-horizon exogenous overrides (prices, emission factors, budget).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonDelta {
    /// Annual emission budget in megatons; scaled to the simulated window.
    #[serde(default)]
    pub co2_budget_mt_per_year: Option<f64>,
    #[serde(default)]
    pub component_cost_eur_mwh: BTreeMap<String, f64>,
    #[serde(default)]
    pub component_co2_t_per_mwh: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySpec {
    /// Discounting reference year.
    pub base_year: i32,
    /// Horizon support years, strictly increasing.
    pub years: Vec<i32>,
    /// End of the modeled window.
    pub terminal_year: i32,
    /// Weighted average cost of capital.
    pub wacc: f64,
    /// One entry per horizon year; missing years are an error.
    #[serde(default)]
    pub deltas: BTreeMap<i32, HorizonDelta>,
    /// Scale from the simulated window to one year of operation; default
    /// 8760 h divided by the horizon hours.
    #[serde(default)]
    pub annual_scale: Option<f64>,
}

impl PathwaySpec {
    pub fn n_horizons(&self) -> usize {
        self.years.len()
    }

    pub fn horizon_end(&self, m: usize) -> i32 {
        if m + 1 < self.years.len() {
            self.years[m + 1]
        } else {
            self.terminal_year
        }
    }

    pub fn validate(&self, push: &mut dyn FnMut(&str, String)) {
        if self.years.is_empty() {
            push("pathway", "no horizon years".into());
            return;
        }
        if !self.years.windows(2).all(|w| w[0] < w[1]) {
            push("pathway", format!("years {:?} not strictly increasing", self.years));
        }
        if self.terminal_year <= *self.years.last().unwrap() {
            push(
                "pathway",
                format!(
                    "terminal year {} not after last horizon year {}",
                    self.terminal_year,
                    self.years.last().unwrap()
                ),
            );
        }
        if self.base_year > self.years[0] {
            push(
                "pathway",
                format!("base year {} after first horizon {}", self.base_year, self.years[0]),
            );
        }
        if self.wacc <= -1.0 {
            push("pathway", format!("wacc {} must exceed -1", self.wacc));
        }
        for &year in &self.years {
            if !self.deltas.contains_key(&year) {
                push("pathway", format!("horizon year {year} has no delta entry"));
            }
        }
        if let Some(scale) = self.annual_scale {
            if scale <= 0.0 {
                push("pathway", format!("annual scale {scale} must be positive"));
            }
        }
    }
}

/// Discount weight applied to the dispatch cost of horizon `m`: the closed
/// form of the discounted year sum from `T_m` to `T_{m+1} - 1`. The `w = 0`
/// singularity is removable and evaluated by the summation form.
pub fn disp_weight(m: usize, spec: &PathwaySpec) -> f64 {
    let t_m = spec.years[m];
    let span = spec.horizon_end(m) - t_m;
    let w = spec.wacc;
    if w.abs() < 1e-9 {
        return span as f64;
    }
    let r = 1.0 / (1.0 + w);
    r.powi(t_m - spec.base_year) * (1.0 - r.powi(span)) / w
}

/// Discount and residual-lifetime weight applied to investment costs of
/// horizon `m`. Exceeds 1 when the remaining window is longer than one
/// asset lifetime (replacements are priced in).
pub fn inv_weight(m: usize, lifetime_years: f64, spec: &PathwaySpec) -> f64 {
    let t_m = spec.years[m];
    let r = 1.0 / (1.0 + spec.wacc);
    r.powi(t_m - spec.base_year) * ((spec.terminal_year - t_m) as f64) / lifetime_years
}

/// Builds the single-horizon equivalent annual cost problem: the dispatch LP
/// plus one investment column per option, with dispatch costs scaled to one
/// year of operation and investment costs annualized over the lifetime.
pub fn build_eacp(
    scenario: &Scenario,
    cfg: &DispatchConfig,
    options: &[InvestmentOption],
) -> Result<(StandardFormLp, VariableMap), BuildError> {
    let mut em = Emitter::new();
    let mut invest = Vec::new();
    for (oi, opt) in options.iter().enumerate() {
        // EUR/kW spread over the lifetime -> EUR/(MW a)
        let specific = match &opt.cost {
            CostModel::Linear { .. } => opt.first_linear_cost().unwrap_or(0.0),
            CostModel::Learning => scenario
                .learning
                .get(&opt.technology)
                .map(|c| c.specific_cost(0.0))
                .ok_or_else(|| BuildError::MissingCurve(opt.technology.clone()))?,
        };
        let annual_cost = specific * 1000.0 / opt.lifetime_years;
        let z = em.col(
            ColKey::Invest { option: oi, horizon: 0 },
            annual_cost,
            0.0,
            opt.max_add_mw.unwrap_or(INF),
        );
        for target in opt.resolve_targets(scenario)? {
            invest.push(BlockInvest {
                target,
                effect: opt.effect.clone(),
                z_cols: vec![z],
            });
        }
    }
    let ctx = BlockContext {
        horizon: 0,
        cost_scale: 8760.0 / cfg.horizon_hours(),
        delta: None,
        invest,
    };
    crate::model::build::emit_dispatch_block(&mut em, scenario, cfg, &ctx)?;
    Ok(em.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    Linear,
    Learning,
}

/// A learning technology aggregated over its regional options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTech {
    pub name: String,
    pub curve: LearningCurve,
    /// Option indices whose additions feed this curve.
    pub options: Vec<usize>,
    pub lifetime_years: f64,
    pub breakpoints_gw: Vec<f64>,
    pub values_bn_eur: Vec<f64>,
}

/// The block-structured multi-horizon investment problem. Holds the
/// validated inputs and emits the closed problem, the Benders subproblems
/// and the investment-side master skeleton on demand, all sharing one
/// investment-column layout.
#[derive(Debug, Clone)]
pub struct PathwayProblem {
    pub scenario: Scenario,
    pub spec: PathwaySpec,
    pub options: Vec<InvestmentOption>,
    pub cost_mode: CostMode,
    pub techs: Vec<LearningTech>,
}

pub(crate) struct InvestColumns {
    /// z columns by `z_position` order (horizon-major).
    pub z: Vec<usize>,
    pub binaries: Vec<usize>,
    pub sos2: Vec<Sos2Group>,
    /// gamma[tech][horizon][point]
    pub gamma: Vec<Vec<Vec<usize>>>,
}

impl PathwayProblem {
    /// Validates and prepares the pathway problem. `n_pw` overrides the
    /// breakpoint count of every learning curve when given.
    pub fn new(
        scenario: &Scenario,
        cost_mode: CostMode,
        n_pw: Option<usize>,
    ) -> Result<PathwayProblem, BuildError> {
        let spec = scenario
            .pathway
            .clone()
            .ok_or_else(|| BuildError::Invalid("scenario has no pathway section".into()))?;
        if spec.years.is_empty() {
            return Err(BuildError::Invalid("pathway has no horizon years".into()));
        }
        for &year in &spec.years {
            if !spec.deltas.contains_key(&year) {
                return Err(BuildError::MissingDelta(year));
            }
        }
        let options = scenario.investments.clone();
        let mut techs = Vec::new();
        if cost_mode == CostMode::Learning {
            let mut names: Vec<String> = options
                .iter()
                .filter(|o| matches!(o.cost, CostModel::Learning))
                .map(|o| o.technology.clone())
                .collect();
            names.sort();
            names.dedup();
            for name in names {
                let members: Vec<usize> = options
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| {
                        o.technology == name && matches!(o.cost, CostModel::Learning)
                    })
                    .map(|(i, _)| i)
                    .collect();
                let mut curve = scenario
                    .learning
                    .get(&name)
                    .cloned()
                    .ok_or_else(|| BuildError::MissingCurve(name.clone()))?;
                if let Some(npw) = n_pw {
                    curve.n_pw = npw;
                }
                let lifetime = options[members[0]].lifetime_years;
                if members
                    .iter()
                    .any(|&i| (options[i].lifetime_years - lifetime).abs() > 1e-9)
                {
                    return Err(BuildError::Invalid(format!(
                        "learning options of technology `{name}` have differing lifetimes"
                    )));
                }
                // investable range: sum of caps over horizons and members
                let needed_gw: f64 = members
                    .iter()
                    .map(|&i| options[i].max_add_mw.unwrap_or(INF))
                    .sum::<f64>()
                    * spec.years.len() as f64
                    / 1000.0;
                match curve.p_max_gw {
                    Some(p_max) => {
                        if needed_gw.is_finite() && p_max < needed_gw - 1e-9 {
                            return Err(BuildError::PMaxTooSmall {
                                tech: name.clone(),
                                p_max,
                                needed: needed_gw,
                            });
                        }
                    }
                    None => {
                        if !needed_gw.is_finite() {
                            return Err(BuildError::PMaxUnbounded { tech: name.clone() });
                        }
                        curve.p_max_gw = Some(needed_gw.max(curve.p0_floor_gw()));
                    }
                }
                let (breakpoints, values) = learning::make_breakpoints(&curve);
                techs.push(LearningTech {
                    name,
                    curve,
                    options: members,
                    lifetime_years: lifetime,
                    breakpoints_gw: breakpoints,
                    values_bn_eur: values,
                });
            }
        }
        Ok(PathwayProblem {
            scenario: scenario.clone(),
            spec,
            options,
            cost_mode,
            techs,
        })
    }

    pub fn n_horizons(&self) -> usize {
        self.spec.years.len()
    }

    pub fn n_z(&self) -> usize {
        self.n_horizons() * self.options.len()
    }

    /// Position of `z_{option, horizon}` in the shared investment layout.
    pub fn z_position(&self, option: usize, horizon: usize) -> usize {
        horizon * self.options.len() + option
    }

    pub fn annual_scale(&self) -> f64 {
        self.spec
            .annual_scale
            .unwrap_or(8760.0 / self.scenario.dispatch.horizon_hours())
    }

    pub fn disp_scale(&self, m: usize) -> f64 {
        disp_weight(m, &self.spec) * self.annual_scale()
    }

    /// Dispatch configuration of horizon `m`, with the annual CO2 budget
    /// scaled down to the simulated window.
    pub fn cfg_for(&self, m: usize) -> DispatchConfig {
        let mut cfg = self.scenario.dispatch.clone();
        let year = self.spec.years[m];
        if let Some(delta) = self.spec.deltas.get(&year) {
            if let Some(mt) = delta.co2_budget_mt_per_year {
                cfg.co2_budget_t = mt * 1e6 * cfg.horizon_hours() / 8760.0;
            }
        }
        cfg
    }

    pub fn delta_for(&self, m: usize) -> &HorizonDelta {
        &self.spec.deltas[&self.spec.years[m]]
    }

    /// Linear objective coefficient of `z_{option, horizon}` in EUR per MW.
    pub(crate) fn z_objective(&self, option: usize, m: usize) -> f64 {
        let opt = &self.options[option];
        match &opt.cost {
            CostModel::Linear { .. } => {
                let year = self.spec.years[m];
                let cost = opt.linear_cost_eur_per_kw(year).unwrap_or_else(|| {
                    opt.first_linear_cost().unwrap_or(0.0)
                });
                inv_weight(m, opt.lifetime_years, &self.spec) * cost * 1000.0
            }
            CostModel::Learning => match self.cost_mode {
                // in linear mode, learning options are priced at their
                // curve's specific cost for the horizon's cumulative start
                CostMode::Linear => {
                    let year = self.spec.years[m];
                    let cost = opt
                        .linear_cost_eur_per_kw(year)
                        .or_else(|| opt.first_linear_cost())
                        .unwrap_or_else(|| {
                            self.scenario
                                .learning
                                .get(&opt.technology)
                                .map(|c| c.specific_cost(0.0))
                                .unwrap_or(0.0)
                        });
                    inv_weight(m, opt.lifetime_years, &self.spec) * cost * 1000.0
                }
                // priced through the gamma columns instead
                CostMode::Learning => 0.0,
            },
        }
    }

    /// Creates the shared investment-side columns: z for every option and
    /// horizon, and the piecewise interpolation columns for learning mode.
    /// `priced` controls whether objective coefficients are attached and
    /// whether the interpolation columns are created at all; Benders
    /// subproblems take the bare z columns.
    pub(crate) fn emit_investment_columns(
        &self,
        em: &mut Emitter,
        priced: bool,
    ) -> InvestColumns {
        let m_count = self.n_horizons();
        let mut z = Vec::with_capacity(self.n_z());
        for m in 0..m_count {
            for (oi, opt) in self.options.iter().enumerate() {
                let obj = if priced { self.z_objective(oi, m) } else { 0.0 };
                z.push(em.col(
                    ColKey::Invest { option: oi, horizon: m },
                    obj,
                    0.0,
                    opt.max_add_mw.unwrap_or(INF),
                ));
            }
        }
        let mut binaries = Vec::new();
        let mut sos2 = Vec::new();
        let mut gamma = Vec::new();
        if priced && self.cost_mode == CostMode::Learning {
            for (ti, tech) in self.techs.iter().enumerate() {
                let n_pw = tech.breakpoints_gw.len();
                let mut per_tech = Vec::with_capacity(m_count);
                // weight of the telescoped cumulative cost term; the weight
                // past the final horizon is zero
                for m in 0..m_count {
                    let w_m = inv_weight(m, tech.lifetime_years, &self.spec);
                    let w_next = if m + 1 < m_count {
                        inv_weight(m + 1, tech.lifetime_years, &self.spec)
                    } else {
                        0.0
                    };
                    let mut cols = Vec::with_capacity(n_pw);
                    for (n, &value_bn) in tech.values_bn_eur.iter().enumerate() {
                        let obj = if priced {
                            (w_m - w_next) * value_bn * 1e9
                        } else {
                            0.0
                        };
                        cols.push(em.col(
                            ColKey::Gamma { tech: ti, horizon: m, point: n },
                            obj,
                            0.0,
                            1.0,
                        ));
                    }
                    sos2.push(Sos2Group { columns: cols.clone() });
                    for s in 0..n_pw - 1 {
                        binaries.push(em.col(
                            ColKey::Delta { tech: ti, horizon: m, segment: s },
                            0.0,
                            0.0,
                            1.0,
                        ));
                    }
                    per_tech.push(cols);
                }
                gamma.push(per_tech);
            }
        }
        InvestColumns {
            z,
            binaries,
            sos2,
            gamma,
        }
    }

    /// Adds the investment-side rows: pathway capacity (F) rows and, in
    /// learning mode, the piecewise-linear interpolation rows.
    pub(crate) fn emit_investment_rows(&self, em: &mut Emitter, cols: &InvestColumns) {
        let m_count = self.n_horizons();
        for (oi, opt) in self.options.iter().enumerate() {
            if let Some(caps) = &opt.cumulative_cap_mw {
                for (m, &cap) in caps.iter().enumerate().take(m_count) {
                    let coeffs: Vec<(usize, f64)> = (0..=m)
                        .map(|mm| (cols.z[self.z_position(oi, mm)], 1.0))
                        .collect();
                    em.row(
                        RowKey::PathwayCap { option: oi, horizon: m },
                        crate::lp::RowSense::Le,
                        cap,
                        &coeffs,
                    );
                }
            }
        }
        if self.cost_mode == CostMode::Learning {
            learning::emit_pw_rows(em, self, cols);
        }
    }

    /// Per-option z columns visible to dispatch block `m` (investments from
    /// horizon `m` and every earlier one).
    fn block_invest(
        &self,
        cols: &InvestColumns,
        m: usize,
    ) -> Result<Vec<BlockInvest>, BuildError> {
        let mut out = Vec::new();
        for (oi, opt) in self.options.iter().enumerate() {
            let z_cols: Vec<usize> = (0..=m)
                .map(|mm| cols.z[self.z_position(oi, mm)])
                .collect();
            for target in opt.resolve_targets(&self.scenario)? {
                out.push(BlockInvest {
                    target,
                    effect: opt.effect.clone(),
                    z_cols: z_cols.clone(),
                });
            }
        }
        Ok(out)
    }

    /// The monolithic (closed-optimization) problem over all horizons.
    pub fn co_problem(&self) -> Result<(MilpProblem, VariableMap), BuildError> {
        let mut em = Emitter::new();
        let cols = self.emit_investment_columns(&mut em, true);
        self.emit_investment_rows(&mut em, &cols);
        for m in 0..self.n_horizons() {
            let cfg = self.cfg_for(m);
            let ctx = BlockContext {
                horizon: m,
                cost_scale: self.disp_scale(m),
                delta: Some(self.delta_for(m)),
                invest: self.block_invest(&cols, m)?,
            };
            crate::model::build::emit_dispatch_block(&mut em, &self.scenario, &cfg, &ctx)?;
        }
        let binaries = cols.binaries;
        let sos2 = cols.sos2;
        let (lp, map) = em.finish();
        Ok((
            MilpProblem {
                lp,
                binaries,
                sos2,
            },
            map,
        ))
    }

    /// The dispatch subproblem of horizon `m` for Benders: the block rows
    /// with all z columns present (unpriced); the caller pins them. The z
    /// columns occupy positions `0..n_z` in layout order.
    pub fn subproblem(&self, m: usize) -> Result<(StandardFormLp, VariableMap), BuildError> {
        let mut em = Emitter::new();
        let cols = self.emit_investment_columns(&mut em, false);
        let cfg = self.cfg_for(m);
        let ctx = BlockContext {
            horizon: m,
            cost_scale: self.disp_scale(m),
            delta: Some(self.delta_for(m)),
            invest: self.block_invest(&cols, m)?,
        };
        crate::model::build::emit_dispatch_block(&mut em, &self.scenario, &cfg, &ctx)?;
        let (lp, map) = em.finish();
        Ok((lp, map))
    }

    /// Display names for the z columns in layout order.
    pub fn z_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_z());
        for m in 0..self.n_horizons() {
            for opt in &self.options {
                names.push(format!("{}@{}", opt.id, self.spec.years[m]));
            }
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Closed,
    Benders,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonOutcome {
    pub year: i32,
    /// Discounted operating cost contribution of this horizon.
    pub operating_cost_eur: f64,
    /// Discounted investment cost contribution of this horizon.
    pub investment_cost_eur: f64,
    pub dispatch: crate::model::DispatchSolution,
}

/// Primal result of a pathway solve, identical in shape for both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySolution {
    pub method: SolveMethod,
    pub objective: f64,
    pub gap: f64,
    pub converged: bool,
    /// Benders iterations, or branch-and-bound nodes for the closed solve.
    pub iterations: usize,
    /// Invested capacity per horizon and option, in MW.
    pub investments_mw: Vec<Vec<f64>>,
    pub horizons: Vec<HorizonOutcome>,
}

#[derive(Debug, thiserror::Error)]
pub enum PathwayError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Milp(#[from] crate::milp::MilpError),
    #[error("pathway problem is {0}")]
    NotSolvable(&'static str),
    #[error(transparent)]
    Benders(#[from] crate::benders::BendersError),
}

/// Builds the shared [`PathwaySolution`] from any solve route. `invest_value`
/// reads investment-side columns (z and gamma); `horizon_values` yields the
/// LP, primal and row duals carrying horizon `m`'s dispatch block.
pub(crate) fn assemble_pathway_solution<'a>(
    pathway: &PathwayProblem,
    method: SolveMethod,
    objective: f64,
    gap: f64,
    converged: bool,
    iterations: usize,
    invest_value: &dyn Fn(&ColKey) -> Option<f64>,
    horizon_values: impl Fn(usize) -> (&'a StandardFormLp, &'a [f64], &'a [f64], &'a VariableMap),
) -> Result<PathwaySolution, PathwayError> {
    let m_count = pathway.n_horizons();
    let n_opts = pathway.options.len();

    let mut investments_mw = vec![vec![0.0; n_opts]; m_count];
    for m in 0..m_count {
        for oi in 0..n_opts {
            investments_mw[m][oi] = invest_value(&ColKey::Invest { option: oi, horizon: m })
                .unwrap_or(0.0)
                .max(0.0);
        }
    }

    // investment cost split per horizon: linear terms directly, learning
    // terms as the weighted cumulative-cost increments
    let mut invest_cost = vec![0.0; m_count];
    for m in 0..m_count {
        for oi in 0..n_opts {
            invest_cost[m] += pathway.z_objective(oi, m) * investments_mw[m][oi];
        }
    }
    if pathway.cost_mode == CostMode::Learning {
        for (ti, tech) in pathway.techs.iter().enumerate() {
            let mut prev_cum = 0.0;
            for m in 0..m_count {
                let cum: f64 = tech
                    .values_bn_eur
                    .iter()
                    .enumerate()
                    .map(|(n, &v)| {
                        invest_value(&ColKey::Gamma { tech: ti, horizon: m, point: n })
                            .unwrap_or(0.0)
                            * v
                    })
                    .sum();
                let w = inv_weight(m, tech.lifetime_years, &pathway.spec);
                invest_cost[m] += w * (cum - prev_cum) * 1e9;
                prev_cum = cum;
            }
        }
    }

    let mut horizons = Vec::with_capacity(m_count);
    for m in 0..m_count {
        let (lp, primal, duals, map) = horizon_values(m);
        let cfg = pathway.cfg_for(m);
        let dispatch = crate::model::solution::extract_from_values(
            lp,
            primal,
            duals,
            map,
            &pathway.scenario,
            &cfg,
            m,
            Some(pathway.delta_for(m)),
        );
        horizons.push(HorizonOutcome {
            year: pathway.spec.years[m],
            operating_cost_eur: dispatch.objective,
            investment_cost_eur: invest_cost[m],
            dispatch,
        });
    }

    Ok(PathwaySolution {
        method,
        objective,
        gap,
        converged,
        iterations,
        investments_mw,
        horizons,
    })
}

/// Solves the pathway monolithically: pure LP for linear costs, MILP with
/// the piecewise encoding for learning costs.
pub fn solve_pathway_closed(
    pathway: &PathwayProblem,
    opts: &crate::milp::MilpOptions,
) -> Result<PathwaySolution, PathwayError> {
    use crate::milp::{solve_milp, MilpStatus};

    let (problem, map) = pathway.co_problem()?;
    if problem.is_pure_lp() {
        let sol = crate::lp::solve_lp(&problem.lp, &opts.lp)?;
        match sol.status {
            crate::lp::LpStatus::Optimal => {}
            crate::lp::LpStatus::Infeasible => return Err(PathwayError::NotSolvable("infeasible")),
            crate::lp::LpStatus::Unbounded => return Err(PathwayError::NotSolvable("unbounded")),
            crate::lp::LpStatus::IterationLimit => {
                return Err(PathwayError::NotSolvable("iteration-limited"))
            }
        }
        let lookup = |key: &ColKey| map.col(key).map(|j| sol.primal[j]);
        return assemble_pathway_solution(
            pathway,
            SolveMethod::Closed,
            sol.objective,
            0.0,
            true,
            1,
            &lookup,
            |_m| (&problem.lp, sol.primal.as_slice(), sol.row_duals.as_slice(), &map),
        );
    }

    let sol = solve_milp(&problem, opts)?;
    match sol.status {
        MilpStatus::Optimal | MilpStatus::NodeLimit => {}
        MilpStatus::Infeasible => return Err(PathwayError::NotSolvable("infeasible")),
        MilpStatus::Unbounded => return Err(PathwayError::NotSolvable("unbounded")),
    }
    let lookup = |key: &ColKey| map.col(key).map(|j| sol.primal[j]);
    assemble_pathway_solution(
        pathway,
        SolveMethod::Closed,
        sol.objective,
        sol.gap_abs,
        sol.status == MilpStatus::Optimal,
        sol.nodes,
        &lookup,
        |_m| (&problem.lp, sol.primal.as_slice(), &[][..], &map),
    )
}
