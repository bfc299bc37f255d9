//! Benders decomposition of the pathway problem.
//!
//! The master problem optimizes the investment side (z, interpolation
//! columns and a recourse scalar alpha bounded below by the accumulated
//! cuts); each iteration pins the master's investment proposal into the
//! per-horizon dispatch subproblems and turns their pin duals into a new
//! optimality cut. Bundled scenarios keep subproblems feasible through
//! high-penalty slack sources, so only optimality cuts arise.

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invest::{CostMode, PathwayProblem, PathwaySolution, PathwayError, SolveMethod};
use crate::lp::{self, Basis, LpStatus, SolverOptions, StandardFormLp};
use crate::milp::{solve_milp, MilpOptions, MilpProblem, MilpStatus};
use crate::model::build::{ColKey, Emitter, RowKey, VariableMap};
use crate::lp::RowSense;

#[derive(Debug, Clone)]
pub struct BendersOptions {
    /// Relative gap tolerance on the best upper bound.
    pub eps_rel: f64,
    /// Absolute gap floor.
    pub eps_abs: f64,
    pub max_iter: usize,
    /// One cut per horizon instead of the aggregated cut.
    pub multi_cut: bool,
    /// Subproblems of one iteration solve concurrently when > 1.
    pub workers: usize,
    pub milp: MilpOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            eps_rel: 1e-4,
            eps_abs: 1e-6,
            max_iter: 200,
            multi_cut: false,
            workers: 1,
            milp: MilpOptions::default(),
        }
    }
}

/// One optimality cut: `alpha >= constant + coefficients' (z - reference)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub iteration: usize,
    /// Horizon of a multi-cut; the aggregated cut covers all horizons.
    pub horizon: Option<usize>,
    pub reference: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl Cut {
    /// Left-hand side minus right-hand side at a candidate point; the cut is
    /// satisfied when this is nonnegative.
    pub fn violation(&self, z: &[f64], alpha: f64) -> f64 {
        let linear: f64 = self
            .coefficients
            .iter()
            .zip(z.iter().zip(&self.reference))
            .map(|(c, (zi, ri))| c * (zi - ri))
            .sum();
        alpha - (self.constant + linear)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersIteration {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub best_upper_bound: f64,
    pub gap: f64,
    pub z_mw: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BendersLog {
    pub iterations: Vec<BendersIteration>,
    pub cuts: Vec<Cut>,
    pub converged: bool,
}

impl BendersLog {
    /// Line-oriented CSV: one row per iteration, z columns labeled by the
    /// given names (in investment-layout order).
    pub fn to_csv(&self, z_names: &[String]) -> String {
        let mut out = String::from("iteration,lower_bound,upper_bound,best_upper_bound,gap");
        for name in z_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for it in &self.iterations {
            out.push_str(&format!(
                "{},{},{},{},{}",
                it.iteration, it.lower_bound, it.upper_bound, it.best_upper_bound, it.gap
            ));
            for v in &it.z_mw {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error("master problem infeasible: pathway bounds are inconsistent")]
    MasterInfeasible,
    #[error("master problem unbounded")]
    MasterUnbounded,
    #[error("subproblem {horizon} infeasible at the pinned investments (status {status:?})")]
    SubproblemInfeasible { horizon: usize, status: LpStatus },
    #[error(transparent)]
    Build(#[from] crate::model::BuildError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Milp(#[from] crate::milp::MilpError),
}

/// Builds the master problem from the investment side plus the cuts.
/// Returns the problem, its map, and the alpha column ids.
fn build_master(
    pathway: &PathwayProblem,
    cuts: &[Cut],
    multi_cut: bool,
) -> (MilpProblem, VariableMap, Vec<usize>) {
    let mut em = Emitter::new();
    let cols = pathway.emit_investment_columns(&mut em, true);
    let n_alpha = if multi_cut { pathway.n_horizons() } else { 1 };
    let alphas: Vec<usize> = (0..n_alpha)
        .map(|m| em.col(ColKey::Alpha { horizon: m }, 1.0, 0.0, f64::INFINITY))
        .collect();
    pathway.emit_investment_rows(&mut em, &cols);
    for (ci, cut) in cuts.iter().enumerate() {
        let alpha = alphas[cut.horizon.unwrap_or(0)];
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(cut.coefficients.len() + 1);
        for (pos, &lambda) in cut.coefficients.iter().enumerate() {
            if lambda != 0.0 {
                coeffs.push((cols.z[pos], lambda));
            }
        }
        coeffs.push((alpha, -1.0));
        let rhs: f64 = cut
            .coefficients
            .iter()
            .zip(&cut.reference)
            .map(|(c, r)| c * r)
            .sum::<f64>()
            - cut.constant;
        em.row(RowKey::BendersCut { iteration: ci }, RowSense::Le, rhs, &coeffs);
    }
    let binaries = cols.binaries;
    let sos2 = cols.sos2;
    let (lp, map) = em.finish();
    (
        MilpProblem {
            lp,
            binaries,
            sos2,
        },
        map,
        alphas,
    )
}

struct SubOutcome {
    objective: f64,
    duals: Vec<f64>,
    solution: lp::LpSolution,
}

fn solve_subproblems(
    subs: &[(StandardFormLp, VariableMap)],
    z_star: &[f64],
    lp_opts: &SolverOptions,
    warm: &mut [Option<Basis>],
    workers: usize,
) -> Result<Vec<SubOutcome>, BendersError> {
    let pins: Vec<(usize, f64)> = z_star.iter().copied().enumerate().collect();
    let solve_one = |m: usize, warm_m: Option<&Basis>| -> Result<SubOutcome, BendersError> {
        let pinned = lp::solve_with_pins_warm(&subs[m].0, &pins, lp_opts, warm_m)?;
        if pinned.solution.status != LpStatus::Optimal {
            return Err(BendersError::SubproblemInfeasible {
                horizon: m,
                status: pinned.solution.status,
            });
        }
        Ok(SubOutcome {
            objective: pinned.solution.objective,
            duals: pinned.pin_duals,
            solution: pinned.solution,
        })
    };

    if workers <= 1 || subs.len() <= 1 {
        let mut out = Vec::with_capacity(subs.len());
        for m in 0..subs.len() {
            let res = solve_one(m, warm[m].as_ref())?;
            warm[m] = Some(res.solution.warm_basis());
            out.push(res);
        }
        Ok(out)
    } else {
        let results: Vec<Result<SubOutcome, BendersError>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..subs.len())
                .map(|m| {
                    let warm_m = warm[m].clone();
                    let solve = &solve_one;
                    s.spawn(move || solve(m, warm_m.as_ref()))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut out = Vec::with_capacity(subs.len());
        for (m, res) in results.into_iter().enumerate() {
            let res = res?;
            warm[m] = Some(res.solution.warm_basis());
            out.push(res);
        }
        Ok(out)
    }
}

/// Iterates master and subproblems until the bound gap closes.
pub fn run_benders(
    pathway: &PathwayProblem,
    opts: &BendersOptions,
) -> Result<(PathwaySolution, BendersLog), PathwayError> {
    let m_count = pathway.n_horizons();
    let n_z = pathway.n_z();
    let mut subs = Vec::with_capacity(m_count);
    for m in 0..m_count {
        subs.push(pathway.subproblem(m).map_err(BendersError::Build)?);
    }
    let mut warm: Vec<Option<Basis>> = vec![None; m_count];
    let mut cuts: Vec<Cut> = Vec::new();
    let mut log = BendersLog::default();
    let mut best: Option<BestIterate> = None;

    struct BestIterate {
        upper_bound: f64,
        master_primal: Vec<f64>,
        master_map: VariableMap,
        sub_solutions: Vec<lp::LpSolution>,
    }

    let mut iterations_used = 0;
    for l in 1..=opts.max_iter {
        iterations_used = l;
        let (master, master_map, alphas) = build_master(pathway, &cuts, opts.multi_cut);
        let msol = solve_milp(&master, &opts.milp).map_err(BendersError::Milp)?;
        match msol.status {
            MilpStatus::Infeasible => return Err(BendersError::MasterInfeasible.into()),
            MilpStatus::Unbounded => return Err(BendersError::MasterUnbounded.into()),
            _ => {}
        }
        let lower_bound = msol.objective;
        let z_star: Vec<f64> = (0..n_z).map(|p| msol.primal[p]).collect();
        let alpha_sum: f64 = alphas.iter().map(|&a| msol.primal[a]).sum();
        let invest_cost = msol.objective - alpha_sum;

        let outcomes =
            solve_subproblems(&subs, &z_star, &opts.milp.lp, &mut warm, opts.workers)?;
        let operating: f64 = outcomes.iter().map(|o| o.objective).sum();
        let upper_bound = invest_cost + operating;

        let improved = best
            .as_ref()
            .map(|b| upper_bound < b.upper_bound)
            .unwrap_or(true);
        if improved {
            best = Some(BestIterate {
                upper_bound,
                master_primal: msol.primal.clone(),
                master_map: master_map.clone(),
                sub_solutions: outcomes.iter().map(|o| o.solution.clone()).collect(),
            });
        }
        let best_ub = best.as_ref().unwrap().upper_bound;
        let gap = best_ub - lower_bound;
        debug!("iteration {l}: LB {lower_bound:.6}, UB {upper_bound:.6}, gap {gap:.3e}");
        log.iterations.push(BendersIteration {
            iteration: l,
            lower_bound,
            upper_bound,
            best_upper_bound: best_ub,
            gap,
            z_mw: z_star.clone(),
        });

        if gap <= opts.eps_abs.max(opts.eps_rel * best_ub.abs()) {
            log.converged = true;
            break;
        }

        if opts.multi_cut {
            for (m, o) in outcomes.iter().enumerate() {
                cuts.push(Cut {
                    iteration: l,
                    horizon: Some(m),
                    reference: z_star.clone(),
                    coefficients: o.duals.clone(),
                    constant: o.objective,
                });
            }
        } else {
            let mut coefficients = vec![0.0; n_z];
            for o in &outcomes {
                for (p, &d) in o.duals.iter().enumerate() {
                    coefficients[p] += d;
                }
            }
            cuts.push(Cut {
                iteration: l,
                horizon: None,
                reference: z_star.clone(),
                coefficients,
                constant: operating,
            });
        }
        log.cuts = cuts.clone();
    }
    log.cuts = cuts.clone();

    let best = best.expect("at least one iteration ran");
    if log.converged {
        info!(
            "benders converged after {iterations_used} iterations, objective {:.6}",
            best.upper_bound
        );
    } else {
        info!(
            "benders stopped at the iteration limit with gap {:.3e}",
            log.iterations.last().map(|i| i.gap).unwrap_or(f64::NAN)
        );
    }

    let final_gap = log.iterations.last().map(|i| i.gap).unwrap_or(f64::INFINITY);
    let lookup = |key: &ColKey| -> Option<f64> {
        best.master_map.col(key).map(|j| best.master_primal[j])
    };
    let solution = crate::invest::assemble_pathway_solution(
        pathway,
        SolveMethod::Benders,
        best.upper_bound,
        final_gap,
        log.converged,
        iterations_used,
        &lookup,
        |m| {
            let (lp, map) = &subs[m];
            let sol = &best.sub_solutions[m];
            (lp, sol.primal.as_slice(), sol.row_duals.as_slice(), map)
        },
    )?;
    Ok((solution, log))
}

/// Convenience wrapper matching the closed-optimization entry point.
pub fn solve_pathway_benders(
    scenario: &crate::model::Scenario,
    cost_mode: CostMode,
    n_pw: Option<usize>,
    opts: &BendersOptions,
) -> Result<(PathwaySolution, BendersLog), PathwayError> {
    let pathway = PathwayProblem::new(scenario, cost_mode, n_pw)?;
    run_benders(&pathway, opts)
}

#[cfg(test)]
mod tests;
