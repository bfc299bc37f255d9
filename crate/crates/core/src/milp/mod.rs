//! Branch-and-bound MILP layer over the LP kernel.
//!
//! Handles binary columns and SOS2 groups (ordered sets in which at most two
//! members may be nonzero and they must be adjacent). SOS2 infeasibilities
//! branch by set-splitting: the left child forbids the columns right of the
//! split, the right child those left of it. Node selection is best-bound with
//! depth-first plunging and lowest-index tie-breaks, so single-worker runs
//! are deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, Basis, LpError, LpStatus, SolverOptions, StandardFormLp, INF};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sos2Group {
    /// Column indices in interpolation order.
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpProblem {
    pub lp: StandardFormLp,
    pub binaries: Vec<usize>,
    pub sos2: Vec<Sos2Group>,
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("column {col} is marked {role} but has bounds [{lower}, {upper}]")]
    BadDiscreteBounds {
        col: usize,
        role: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("column {0} appears in more than one SOS2 group")]
    OverlappingGroups(usize),
    #[error("SOS2 group {0} has fewer than 2 columns")]
    GroupTooSmall(usize),
}

impl MilpProblem {
    /// Plain relaxation wrapper with no discrete structure.
    pub fn from_lp(lp: StandardFormLp) -> Self {
        Self {
            lp,
            binaries: Vec::new(),
            sos2: Vec::new(),
        }
    }

    pub fn is_pure_lp(&self) -> bool {
        self.binaries.is_empty() && self.sos2.is_empty()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        self.lp.validate()?;
        for &j in &self.binaries {
            if j >= self.lp.n_cols() || self.lp.lower[j] < -1e-9 || self.lp.upper[j] > 1.0 + 1e-9 {
                return Err(MilpError::BadDiscreteBounds {
                    col: j,
                    role: "binary",
                    lower: self.lp.lower.get(j).copied().unwrap_or(f64::NAN),
                    upper: self.lp.upper.get(j).copied().unwrap_or(f64::NAN),
                });
            }
        }
        let mut seen = vec![false; self.lp.n_cols()];
        for (g, group) in self.sos2.iter().enumerate() {
            if group.columns.len() < 2 {
                return Err(MilpError::GroupTooSmall(g));
            }
            for &j in &group.columns {
                if j >= self.lp.n_cols()
                    || self.lp.lower[j] < -1e-9
                    || self.lp.upper[j] > 1.0 + 1e-9
                {
                    return Err(MilpError::BadDiscreteBounds {
                        col: j,
                        role: "sos2",
                        lower: self.lp.lower.get(j).copied().unwrap_or(f64::NAN),
                        upper: self.lp.upper.get(j).copied().unwrap_or(f64::NAN),
                    });
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(MilpError::OverlappingGroups(j));
                }
            }
        }
        Ok(())
    }

    /// Annotations for the LP-file dump.
    pub fn annotations(&self) -> lp::writer::MilpAnnotations {
        lp::writer::MilpAnnotations {
            binaries: self.binaries.clone(),
            sos2: self.sos2.iter().map(|g| g.columns.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound on the optimum (minimization).
    pub bound: f64,
    pub gap_abs: f64,
    pub gap_rel: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Absolute optimality gap at which the search stops.
    pub gap_abs: f64,
    pub gap_rel: f64,
    pub int_tol: f64,
    pub max_nodes: usize,
    pub lp: SolverOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap_abs: 1e-6,
            gap_rel: 0.0,
            int_tol: 1e-6,
            max_nodes: 200_000,
            lp: SolverOptions::default(),
        }
    }
}

/// A pending branch-and-bound node: bound overrides along the path from the
/// root plus the parent relaxation for ordering and warm starts.
struct Node {
    overrides: Vec<(usize, f64, f64)>,
    parent_bound: f64,
    warm: Option<Basis>,
    seq: u64,
    depth: usize,
}

struct FrontierEntry(Node);

impl PartialEq for FrontierEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for FrontierEntry {}
impl PartialOrd for FrontierEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FrontierEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the lowest bound pops first,
        // ties resolved by insertion order
        other
            .0
            .parent_bound
            .total_cmp(&self.0.parent_bound)
            .then(other.0.seq.cmp(&self.0.seq))
    }
}

enum Violation {
    /// (group index, split position, prefer_left)
    Sos2(usize, usize, bool),
    /// (column, fractional value)
    Binary(usize, f64),
    None,
}

pub fn solve_milp(problem: &MilpProblem, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    problem.validate()?;
    let lp_base = &problem.lp;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes_evaluated = 0usize;
    let mut seq = 0u64;
    let mut frontier: BinaryHeap<FrontierEntry> = BinaryHeap::new();
    let mut stack: Vec<Node> = Vec::new();
    let mut root_unbounded = false;
    let mut root_infeasible = false;

    stack.push(Node {
        overrides: Vec::new(),
        parent_bound: f64::NEG_INFINITY,
        warm: None,
        seq,
        depth: 0,
    });

    let cutoff = |incumbent: &Option<(f64, Vec<f64>)>| -> f64 {
        incumbent.as_ref().map(|(v, _)| *v).unwrap_or(INF)
    };

    while let Some(node) = {
        // plunge first, fall back to best bound
        if let Some(n) = stack.pop() {
            Some(n)
        } else {
            frontier.pop().map(|e| e.0)
        }
    } {
        if node.parent_bound >= cutoff(&incumbent) - prune_margin(opts, &incumbent) {
            continue;
        }
        if nodes_evaluated >= opts.max_nodes {
            // keep the node accounted for in the final bound
            frontier.push(FrontierEntry(node));
            break;
        }
        nodes_evaluated += 1;

        let mut lp = lp_base.clone();
        for &(j, l, u) in &node.overrides {
            lp.lower[j] = l;
            lp.upper[j] = u;
        }
        let sol = lp::solve_lp_warm(&lp, &opts.lp, node.warm.as_ref())?;
        match sol.status {
            LpStatus::Infeasible => {
                if node.depth == 0 {
                    root_infeasible = true;
                }
                continue;
            }
            LpStatus::Unbounded => {
                if node.depth == 0 {
                    root_unbounded = true;
                    break;
                }
                // restricting bounds cannot unbound a bounded relaxation
                warn!("unbounded non-root node treated as infeasible");
                continue;
            }
            LpStatus::IterationLimit => {
                warn!("node LP hit the iteration limit; keeping conservative bound");
                // re-queue would loop; drop the node but remember its bound
                frontier.push(FrontierEntry(Node {
                    overrides: node.overrides,
                    parent_bound: node.parent_bound,
                    warm: None,
                    seq: node.seq,
                    depth: node.depth,
                }));
                break;
            }
            LpStatus::Optimal => {}
        }

        if sol.objective >= cutoff(&incumbent) - prune_margin(opts, &incumbent) {
            continue;
        }

        match find_violation(problem, &sol.primal, opts.int_tol) {
            Violation::None => {
                let mut x = sol.primal.clone();
                snap(problem, &mut x, opts.int_tol);
                debug!(
                    "incumbent {} after {} nodes",
                    sol.objective, nodes_evaluated
                );
                incumbent = Some((sol.objective, x));
            }
            Violation::Binary(col, frac) => {
                let warm = sol.warm_basis();
                let mut up = node.overrides.clone();
                up.push((col, 1.0, 1.0));
                let mut down = node.overrides.clone();
                down.push((col, 0.0, 0.0));
                let up_node = Node {
                    overrides: up,
                    parent_bound: sol.objective,
                    warm: Some(warm.clone()),
                    seq: next_seq(&mut seq),
                    depth: node.depth + 1,
                };
                let down_node = Node {
                    overrides: down,
                    parent_bound: sol.objective,
                    warm: Some(warm),
                    seq: next_seq(&mut seq),
                    depth: node.depth + 1,
                };
                // plunge into the side the relaxation leans towards
                if frac >= 0.5 {
                    frontier.push(FrontierEntry(down_node));
                    stack.push(up_node);
                } else {
                    frontier.push(FrontierEntry(up_node));
                    stack.push(down_node);
                }
            }
            Violation::Sos2(g, split, prefer_left) => {
                let cols = &problem.sos2[g].columns;
                let warm = sol.warm_basis();
                let mut left = node.overrides.clone();
                for &j in &cols[split + 1..] {
                    left.push((j, 0.0, 0.0));
                }
                let mut right = node.overrides.clone();
                for &j in &cols[..split] {
                    right.push((j, 0.0, 0.0));
                }
                let left_node = Node {
                    overrides: left,
                    parent_bound: sol.objective,
                    warm: Some(warm.clone()),
                    seq: next_seq(&mut seq),
                    depth: node.depth + 1,
                };
                let right_node = Node {
                    overrides: right,
                    parent_bound: sol.objective,
                    warm: Some(warm),
                    seq: next_seq(&mut seq),
                    depth: node.depth + 1,
                };
                if prefer_left {
                    frontier.push(FrontierEntry(right_node));
                    stack.push(left_node);
                } else {
                    frontier.push(FrontierEntry(left_node));
                    stack.push(right_node);
                }
            }
        }
    }

    if root_unbounded {
        return Ok(MilpSolution {
            status: MilpStatus::Unbounded,
            primal: Vec::new(),
            objective: f64::NEG_INFINITY,
            bound: f64::NEG_INFINITY,
            gap_abs: INF,
            gap_rel: INF,
            nodes: nodes_evaluated,
        });
    }

    let open_bound = stack
        .iter()
        .map(|n| n.parent_bound)
        .chain(frontier.iter().map(|e| e.0.parent_bound))
        .fold(INF, f64::min);

    match incumbent {
        Some((obj, x)) => {
            let bound = open_bound.min(obj);
            let gap_abs = (obj - bound).max(0.0);
            let finished = stack.is_empty() && frontier.is_empty();
            Ok(MilpSolution {
                status: if finished || gap_abs <= prune_margin(opts, &Some((obj, Vec::new()))) {
                    MilpStatus::Optimal
                } else {
                    MilpStatus::NodeLimit
                },
                gap_rel: gap_abs / obj.abs().max(1.0),
                primal: x,
                objective: obj,
                bound,
                gap_abs,
                nodes: nodes_evaluated,
            })
        }
        None => Ok(MilpSolution {
            status: if root_infeasible || (stack.is_empty() && frontier.is_empty()) {
                MilpStatus::Infeasible
            } else {
                MilpStatus::NodeLimit
            },
            primal: Vec::new(),
            objective: INF,
            bound: open_bound,
            gap_abs: INF,
            gap_rel: INF,
            nodes: nodes_evaluated,
        }),
    }
}

fn next_seq(seq: &mut u64) -> u64 {
    *seq += 1;
    *seq
}

fn prune_margin(opts: &MilpOptions, incumbent: &Option<(f64, Vec<f64>)>) -> f64 {
    match incumbent {
        Some((v, _)) => opts.gap_abs.max(opts.gap_rel * v.abs()).max(1e-12),
        None => 1e-12,
    }
}

/// Picks the discrete violation to branch on: the most unbalanced SOS2 group
/// first, then the most fractional binary; ties go to the lowest index.
fn find_violation(problem: &MilpProblem, x: &[f64], tol: f64) -> Violation {
    let mut best_group: Option<(usize, usize, bool, f64)> = None;
    for (g, group) in problem.sos2.iter().enumerate() {
        let vals: Vec<f64> = group.columns.iter().map(|&j| x[j]).collect();
        let nz: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() > tol).collect();
        let adjacent_pair_ok =
            nz.len() <= 1 || (nz.len() == 2 && nz[1] == nz[0] + 1);
        if adjacent_pair_ok {
            continue;
        }
        let first = nz[0];
        let last = *nz.last().unwrap();
        let total: f64 = vals.iter().sum();
        let centroid = if total.abs() > tol {
            vals.iter()
                .enumerate()
                .map(|(i, v)| i as f64 * v)
                .sum::<f64>()
                / total
        } else {
            (first + last) as f64 / 2.0
        };
        let mut split = centroid.round() as usize;
        split = split.clamp(first + 1, last - 1).min(vals.len() - 1);
        let left_mass: f64 = vals[..=split].iter().sum();
        let right_mass: f64 = vals[split..].iter().sum();
        let spread = (last - first) as f64;
        match best_group {
            Some((_, _, _, s)) if s >= spread => {}
            _ => best_group = Some((g, split, left_mass >= right_mass, spread)),
        }
    }
    if let Some((g, split, prefer_left, _)) = best_group {
        return Violation::Sos2(g, split, prefer_left);
    }

    let mut best_bin: Option<(usize, f64, f64)> = None;
    for &j in &problem.binaries {
        let v = x[j];
        let frac = (v - v.round()).abs();
        if frac > tol {
            let score = 0.5 - (v.fract() - 0.5).abs();
            match best_bin {
                Some((_, _, s)) if s >= score => {}
                _ => best_bin = Some((j, v, score)),
            }
        }
    }
    if let Some((j, v, _)) = best_bin {
        return Violation::Binary(j, v);
    }
    Violation::None
}

/// Rounds binaries to exact 0/1 and clears sub-tolerance SOS2 entries so
/// reported incumbents satisfy the discrete structure exactly.
fn snap(problem: &MilpProblem, x: &mut [f64], tol: f64) {
    for &j in &problem.binaries {
        x[j] = x[j].round();
    }
    for group in &problem.sos2 {
        for &j in &group.columns {
            if x[j].abs() <= tol {
                x[j] = 0.0;
            }
        }
    }
}
