//! Technology learning curves and their piecewise-affine MILP encoding.
//!
//! Specific cost falls with cumulative installed capacity following an
//! experience curve; integrating it gives a concave cumulative cost. The
//! cumulative cost enters the pathway objective through an equidistant
//! piecewise interpolation: per horizon one gamma vector (an SOS2 set) picks
//! a point on the curve, linking rows tie the interpolated abscissa to the
//! capacity added so far, and the per-horizon increments telescope into
//! weight differences on the cumulative terms.

use serde::{Deserialize, Serialize};

use crate::lp::RowSense;
use crate::model::build::{ColKey, Emitter, RowKey};

const DEFAULT_P0_FLOOR_GW: f64 = 0.1;

/// Experience-curve parameters. Costs are EUR/kW, capacities GW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// Specific cost at the initially installed capacity.
    pub c0_eur_per_kw: f64,
    /// Initially installed capacity; floored to keep the curve regular
    /// for technologies starting from zero.
    pub p0_gw: f64,
    /// Learning index in (0, 1).
    pub r: f64,
    /// Upper end of the breakpoint range; defaults to the investable range.
    #[serde(default)]
    pub p_max_gw: Option<f64>,
    /// Breakpoint count of the piecewise interpolation.
    #[serde(default = "default_n_pw")]
    pub n_pw: usize,
    #[serde(default)]
    pub p0_floor_gw: Option<f64>,
}

fn default_n_pw() -> usize {
    10
}

impl LearningCurve {
    pub fn new(c0_eur_per_kw: f64, p0_gw: f64, r: f64) -> Self {
        Self {
            c0_eur_per_kw,
            p0_gw,
            r,
            p_max_gw: None,
            n_pw: default_n_pw(),
            p0_floor_gw: None,
        }
    }

    pub fn p0_floor_gw(&self) -> f64 {
        self.p0_floor_gw.unwrap_or(DEFAULT_P0_FLOOR_GW)
    }

    /// Effective initial capacity after flooring.
    pub fn p0_effective(&self) -> f64 {
        self.p0_gw.max(self.p0_floor_gw())
    }

    pub fn validate(&self, push: &mut dyn FnMut(String)) {
        if self.c0_eur_per_kw <= 0.0 {
            push(format!("initial specific cost {} must be positive", self.c0_eur_per_kw));
        }
        if !(0.0 < self.r && self.r < 1.0) {
            push(format!("learning index {} outside (0, 1)", self.r));
        }
        if self.p0_gw < 0.0 {
            push(format!("initial capacity {} must be nonnegative", self.p0_gw));
        }
        if let Some(p_max) = self.p_max_gw {
            if p_max <= 0.0 {
                push(format!("breakpoint range {p_max} must be positive"));
            }
        }
        if self.n_pw < 3 {
            push(format!("need at least 3 breakpoints, got {}", self.n_pw));
        }
    }

    /// Specific cost in EUR/kW after adding `p_gw` of capacity.
    pub fn specific_cost(&self, p_gw: f64) -> f64 {
        let p0 = self.p0_effective();
        self.c0_eur_per_kw * (1.0 + p_gw / p0).powf(-self.r)
    }

    /// Cumulative cost in bn EUR of the first `p_gw` of added capacity:
    /// the integral of the specific cost.
    pub fn cumulative_cost(&self, p_gw: f64) -> f64 {
        let p0 = self.p0_effective();
        let scale = self.c0_eur_per_kw * p0 / (1.0 - self.r);
        // EUR/kW * GW = 1e6 EUR = 1e-3 bn EUR
        scale * ((1.0 + p_gw / p0).powf(1.0 - self.r) - 1.0) * 1e-3
    }
}

/// Equidistant breakpoints `y_n` over `[0, p_max]` and the cumulative cost
/// at each, in (GW, bn EUR).
pub fn make_breakpoints(curve: &LearningCurve) -> (Vec<f64>, Vec<f64>) {
    let p_max = curve
        .p_max_gw
        .expect("breakpoints need a resolved p_max");
    let n = curve.n_pw.max(3);
    let mut points = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let y = i as f64 * p_max / (n - 1) as f64;
        points.push(y);
        values.push(curve.cumulative_cost(y));
    }
    (points, values)
}

/// Piecewise interpolation value at `p` for given breakpoints.
pub fn interpolate(points: &[f64], values: &[f64], p: f64) -> f64 {
    if p <= points[0] {
        return values[0];
    }
    for s in 0..points.len() - 1 {
        if p <= points[s + 1] {
            let t = (p - points[s]) / (points[s + 1] - points[s]);
            return (1.0 - t) * values[s] + t * values[s + 1];
        }
    }
    *values.last().unwrap()
}

/// Emits the interpolation rows for every learning technology and horizon:
/// convexity of gamma, gamma/delta adjacency, the one-segment choice, and
/// the linking row tying the interpolated cumulative capacity to the summed
/// regional investment columns. The capacity at construction counts as zero,
/// so the first horizon interpolates its own additions.
pub(crate) fn emit_pw_rows(
    em: &mut Emitter,
    pathway: &crate::invest::PathwayProblem,
    cols: &crate::invest::InvestColumns,
) {
    let m_count = pathway.n_horizons();
    for (ti, tech) in pathway.techs.iter().enumerate() {
        let n_pw = tech.breakpoints_gw.len();
        for m in 0..m_count {
            let gamma = &cols.gamma[ti][m];
            let ones: Vec<(usize, f64)> = gamma.iter().map(|&g| (g, 1.0)).collect();
            em.row(
                RowKey::Convexity { tech: ti, horizon: m },
                RowSense::Eq,
                1.0,
                &ones,
            );
            let delta: Vec<usize> = (0..n_pw - 1)
                .map(|s| {
                    em.map
                        .col(&ColKey::Delta { tech: ti, horizon: m, segment: s })
                        .expect("delta column")
                })
                .collect();
            for n in 0..n_pw {
                let mut coeffs = vec![(gamma[n], 1.0)];
                if n > 0 {
                    coeffs.push((delta[n - 1], -1.0));
                }
                if n < n_pw - 1 {
                    coeffs.push((delta[n], -1.0));
                }
                em.row(
                    RowKey::Adjacency { tech: ti, horizon: m, point: n },
                    RowSense::Le,
                    0.0,
                    &coeffs,
                );
            }
            let deltas: Vec<(usize, f64)> = delta.iter().map(|&d| (d, 1.0)).collect();
            em.row(
                RowKey::DeltaChoice { tech: ti, horizon: m },
                RowSense::Eq,
                1.0,
                &deltas,
            );

            // gamma_m' y - gamma_{m-1}' y - sum_j z_{j,m} / 1000 = 0
            let mut link: Vec<(usize, f64)> = gamma
                .iter()
                .zip(&tech.breakpoints_gw)
                .map(|(&g, &y)| (g, y))
                .collect();
            if m > 0 {
                for (&g, &y) in cols.gamma[ti][m - 1].iter().zip(&tech.breakpoints_gw) {
                    link.push((g, -y));
                }
            }
            for &oi in &tech.options {
                link.push((cols.z[pathway.z_position(oi, m)], -1e-3));
            }
            em.row(
                RowKey::DeltaPLink { tech: ti, horizon: m },
                RowSense::Eq,
                0.0,
                &link,
            );
        }
    }
}
