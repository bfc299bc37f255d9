//! Bounded-variable primal revised simplex.
//!
//! Works on the equality form `[A I][x; s] = b` where each row gets one
//! logical column whose bounds encode the row sense. Phase 1 minimizes the
//! total bound violation of the basic variables with a piecewise-linear
//! composite objective; phase 2 minimizes the scaled cost vector. Pricing is
//! Dantzig with lowest-index tie-breaks and a Bland fallback after a run of
//! degenerate pivots, so repeated runs on the same input visit the same bases.

use log::{debug, warn};

use super::lu::{Eta, LuFactors};
use super::scale;
use super::sparse::CscMat;
use super::{Basis, LpSolution, LpStatus, RowSense, SolverOptions, StandardFormLp, INF};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

enum PhaseEnd {
    Done,
    Infeasible,
    Unbounded,
    IterationLimit,
}

enum Entering {
    None,
    /// (column, direction: +1 increase / -1 decrease, score)
    Col(usize, f64),
}

const DEGENERATE_SWITCH: usize = 200;
const DEGENERATE_STEP: f64 = 1e-10;

pub(super) struct Simplex<'a> {
    lp: &'a StandardFormLp,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    nt: usize,
    ext: CscMat,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    max_iter: usize,
    // scratch buffers
    buf_rows: Vec<f64>,
    buf_slots: Vec<f64>,
    buf_pos: Vec<f64>,
    duals: Vec<f64>,
    reduced: Vec<f64>,
    alpha: Vec<f64>,
}

impl<'a> Simplex<'a> {
    pub fn new(lp: &'a StandardFormLp, opts: &'a SolverOptions, warm: Option<&Basis>) -> Self {
        let m = lp.n_rows();
        let n = lp.n_cols();
        let nt = n + m;

        let (row_scale, col_scale) = if opts.scale {
            let s = scale::equilibrate(&lp.a);
            (s.row, s.col)
        } else {
            (vec![1.0; m], vec![1.0; n])
        };

        let mut triplets = lp.a.triplets();
        for t in triplets.iter_mut() {
            t.2 *= row_scale[t.0] * col_scale[t.1];
        }
        for i in 0..m {
            triplets.push((i, n + i, 1.0));
        }
        let ext = CscMat::from_triplets(m, nt, &triplets);

        let mut cost = vec![0.0; nt];
        let mut lb = vec![0.0; nt];
        let mut ub = vec![0.0; nt];
        for j in 0..n {
            cost[j] = lp.objective[j] * col_scale[j];
            lb[j] = lp.lower[j] / col_scale[j];
            ub[j] = lp.upper[j] / col_scale[j];
        }
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = lp.rhs[i] * row_scale[i];
            match lp.senses[i] {
                RowSense::Le => {
                    lb[n + i] = 0.0;
                    ub[n + i] = INF;
                }
                RowSense::Eq => {
                    lb[n + i] = 0.0;
                    ub[n + i] = 0.0;
                }
            }
        }

        let max_iter = if opts.max_iter > 0 {
            opts.max_iter
        } else {
            10_000 + 20 * nt
        };

        let mut sx = Simplex {
            lp,
            opts,
            m,
            n,
            nt,
            ext,
            cost,
            lb,
            ub,
            row_scale,
            col_scale,
            rhs,
            state: Vec::new(),
            basis: Vec::new(),
            x_basic: vec![0.0; m],
            lu: LuFactors::factorize(&CscMat::zeros(0, 0), &[], 1.0).factors,
            etas: Vec::new(),
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            max_iter,
            buf_rows: vec![0.0; m],
            buf_slots: vec![0.0; m],
            buf_pos: vec![0.0; m],
            duals: vec![0.0; m],
            reduced: vec![0.0; nt],
            alpha: vec![0.0; m],
        };
        sx.install_basis(warm);
        sx
    }

    fn default_nonbasic_state(&self, j: usize) -> VarState {
        let (l, u) = (self.lb[j], self.ub[j]);
        if l.is_finite() && u.is_finite() {
            if l.abs() <= u.abs() {
                VarState::AtLower
            } else {
                VarState::AtUpper
            }
        } else if l.is_finite() {
            VarState::AtLower
        } else if u.is_finite() {
            VarState::AtUpper
        } else {
            VarState::Free
        }
    }

    fn install_basis(&mut self, warm: Option<&Basis>) {
        let usable = warm
            .map(|b| {
                b.basic.len() == self.m
                    && b.basic.iter().all(|&c| c < self.nt)
                    && b.at_upper.iter().all(|&c| c < self.nt)
                    && {
                        let mut seen = vec![false; self.nt];
                        b.basic.iter().all(|&c| !std::mem::replace(&mut seen[c], true))
                    }
            })
            .unwrap_or(false);

        self.state = (0..self.nt).map(|j| self.default_nonbasic_state(j)).collect();
        if usable {
            let b = warm.unwrap();
            for &c in &b.at_upper {
                if self.ub[c].is_finite() {
                    self.state[c] = VarState::AtUpper;
                }
            }
            self.basis = b.basic.clone();
        } else {
            self.basis = (self.n..self.nt).collect();
        }
        for (slot, &c) in self.basis.iter().enumerate() {
            self.state[c] = VarState::Basic(slot);
        }
        self.refactorize();
    }

    fn refactorize(&mut self) {
        let res = LuFactors::factorize(&self.ext, &self.basis, self.opts.tol_pivot);
        self.lu = res.factors;
        self.etas.clear();
        for (slot, row) in res.replaced {
            let old = self.basis[slot];
            let logical = self.n + row;
            warn!("basis repair: replacing column {old} with logical of row {row}");
            self.state[old] = self.default_nonbasic_state(old);
            self.basis[slot] = logical;
            self.state[logical] = VarState::Basic(slot);
        }
        self.recompute_x_basic();
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => self.lb[j],
            VarState::AtUpper => self.ub[j],
            VarState::Free => 0.0,
            VarState::Basic(_) => unreachable!("nonbasic_value on basic column"),
        }
    }

    fn recompute_x_basic(&mut self) {
        for i in 0..self.m {
            self.buf_rows[i] = self.rhs[i];
        }
        for j in 0..self.nt {
            if let VarState::Basic(_) = self.state[j] {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                self.ext.axpy_col(j, -v, &mut self.buf_rows);
            }
        }
        let mut out = std::mem::take(&mut self.x_basic);
        self.lu.ftran(&self.buf_rows, &mut out, &mut self.buf_pos);
        for eta in &self.etas {
            eta.apply_ftran(&mut out);
        }
        self.x_basic = out;
    }

    /// w = B^-1 v, v indexed by row, result by basis slot.
    fn ftran(&mut self, out: &mut Vec<f64>) {
        let mut res = std::mem::take(out);
        self.lu.ftran(&self.buf_rows, &mut res, &mut self.buf_pos);
        for eta in &self.etas {
            eta.apply_ftran(&mut res);
        }
        *out = res;
    }

    /// y = B^-T v, v indexed by basis slot (in buf_slots), result by row.
    fn btran(&mut self) {
        for eta in self.etas.iter().rev() {
            eta.apply_btran(&mut self.buf_slots);
        }
        let mut out = std::mem::take(&mut self.duals);
        self.lu.btran(&self.buf_slots, &mut out, &mut self.buf_pos);
        self.duals = out;
    }

    fn infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for (slot, &c) in self.basis.iter().enumerate() {
            let x = self.x_basic[slot];
            if x < self.lb[c] {
                total += self.lb[c] - x;
            } else if x > self.ub[c] {
                total += x - self.ub[c];
            }
        }
        total
    }

    fn phase_cost_basic(&mut self, phase1: bool) {
        let tol = self.opts.tol_primal;
        for slot in 0..self.m {
            let c = self.basis[slot];
            self.buf_slots[slot] = if phase1 {
                let x = self.x_basic[slot];
                if x < self.lb[c] - tol {
                    -1.0
                } else if x > self.ub[c] + tol {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.cost[c]
            };
        }
    }

    /// Computes duals and reduced costs for the current basis and picks the
    /// entering column. Reduced costs are left in `self.reduced`.
    fn price(&mut self, phase1: bool) -> Entering {
        self.phase_cost_basic(phase1);
        self.btran();
        let tol = self.opts.tol_dual;
        let mut best: Option<(usize, f64, f64)> = None; // col, dir, score
        for j in 0..self.nt {
            if let VarState::Basic(_) = self.state[j] {
                self.reduced[j] = 0.0;
                continue;
            }
            let cj = if phase1 { 0.0 } else { self.cost[j] };
            let d = cj - self.ext.dot_col(j, &self.duals);
            self.reduced[j] = d;
            if self.lb[j] == self.ub[j] {
                continue; // fixed, never enters
            }
            let (improving, dir) = match self.state[j] {
                VarState::AtLower => (d < -tol, 1.0),
                VarState::AtUpper => (d > tol, -1.0),
                VarState::Free => (d.abs() > tol, if d < 0.0 { 1.0 } else { -1.0 }),
                VarState::Basic(_) => unreachable!(),
            };
            if !improving {
                continue;
            }
            if self.bland {
                return Entering::Col(j, dir);
            }
            let score = d.abs();
            match best {
                Some((_, _, s)) if s >= score => {}
                _ => best = Some((j, dir, score)),
            }
        }
        match best {
            Some((j, dir, _)) => Entering::Col(j, dir),
            None => Entering::None,
        }
    }

    /// Ratio test. Returns (step, leaving). `leaving` is None for a bound
    /// flip of the entering column, otherwise (slot, to_upper).
    fn ratio_test(
        &self,
        q: usize,
        dir: f64,
        phase1: bool,
    ) -> (f64, Option<(usize, bool)>) {
        let tol_piv = self.opts.tol_pivot;
        let tol = self.opts.tol_primal;
        let mut t_best = if self.lb[q].is_finite() && self.ub[q].is_finite() {
            self.ub[q] - self.lb[q]
        } else {
            INF
        };
        let mut leaving: Option<(usize, bool)> = None;
        let mut best_piv = 0.0f64;

        for slot in 0..self.m {
            let a = self.alpha[slot];
            if a.abs() <= tol_piv {
                continue;
            }
            let rate = -dir * a; // d x_basic[slot] / dt
            let c = self.basis[slot];
            let x = self.x_basic[slot];
            let (l, u) = (self.lb[c], self.ub[c]);

            let (t_i, to_upper) = if phase1 && x < l - tol {
                if rate > 0.0 {
                    ((l - x) / rate, false)
                } else {
                    continue;
                }
            } else if phase1 && x > u + tol {
                if rate < 0.0 {
                    ((x - u) / -rate, true)
                } else {
                    continue;
                }
            } else if rate < 0.0 {
                if l.is_finite() {
                    (((x - l) / -rate).max(0.0), false)
                } else {
                    continue;
                }
            } else if u.is_finite() {
                (((u - x) / rate).max(0.0), true)
            } else {
                continue;
            };

            let better = t_i < t_best - 1e-12
                || (t_i < t_best + 1e-12 && a.abs() > best_piv);
            if better {
                t_best = t_i;
                leaving = Some((slot, to_upper));
                best_piv = a.abs();
            }
        }
        (t_best, leaving)
    }

    fn run_phase(&mut self, phase1: bool) -> PhaseEnd {
        loop {
            if self.iterations >= self.max_iter {
                return PhaseEnd::IterationLimit;
            }
            if self.etas.len() >= self.opts.refactor_every {
                self.refactorize();
            }
            if phase1 && self.infeasibility() <= self.feas_tol() {
                return PhaseEnd::Done;
            }

            let entering = self.price(phase1);
            let (q, dir) = match entering {
                Entering::None => {
                    if phase1 && self.infeasibility() > self.feas_tol() {
                        return PhaseEnd::Infeasible;
                    }
                    return PhaseEnd::Done;
                }
                Entering::Col(q, dir) => (q, dir),
            };

            // alpha = B^-1 a_q
            for v in self.buf_rows.iter_mut() {
                *v = 0.0;
            }
            for (r, v) in self.ext.iter_col(q) {
                self.buf_rows[r] = v;
            }
            let mut alpha = std::mem::take(&mut self.alpha);
            self.ftran(&mut alpha);
            self.alpha = alpha;

            let (t, leaving) = self.ratio_test(q, dir, phase1);
            if !t.is_finite() {
                return if phase1 {
                    warn!("phase-1 direction unbounded; reporting infeasible");
                    PhaseEnd::Infeasible
                } else {
                    PhaseEnd::Unbounded
                };
            }

            self.iterations += 1;
            if t <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_SWITCH && !self.bland {
                    debug!("switching to Bland's rule after {} degenerate steps", self.degenerate_run);
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }

            let start = match self.state[q] {
                VarState::AtLower => self.lb[q],
                VarState::AtUpper => self.ub[q],
                VarState::Free => 0.0,
                VarState::Basic(_) => unreachable!(),
            };
            let x_q = start + dir * t;

            // move the basics
            if t != 0.0 {
                for slot in 0..self.m {
                    let a = self.alpha[slot];
                    if a != 0.0 {
                        self.x_basic[slot] -= dir * t * a;
                    }
                }
            }

            match leaving {
                None => {
                    // bound flip
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        s => s,
                    };
                }
                Some((slot, to_upper)) => {
                    let out_col = self.basis[slot];
                    self.state[out_col] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.basis[slot] = q;
                    self.state[q] = VarState::Basic(slot);
                    self.x_basic[slot] = x_q;
                    let eta = Eta::from_column(slot, &self.alpha, 0.0);
                    if eta.diag.abs() <= self.opts.tol_pivot {
                        // numerically unusable pivot; rebuild instead
                        self.refactorize();
                    } else {
                        self.etas.push(eta);
                    }
                }
            }
        }
    }

    fn feas_tol(&self) -> f64 {
        let b_norm = self.rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        self.opts.tol_primal * (1.0 + b_norm)
    }

    pub fn solve(mut self) -> LpSolution {
        if self.m > 0 || self.nt > 0 {
            debug!(
                "simplex: {} rows, {} structural cols, {} nnz",
                self.m,
                self.n,
                self.ext.nnz()
            );
        }
        let p1 = if self.infeasibility() > self.feas_tol() {
            self.run_phase(true)
        } else {
            PhaseEnd::Done
        };
        let status = match p1 {
            PhaseEnd::Infeasible => LpStatus::Infeasible,
            PhaseEnd::IterationLimit => LpStatus::IterationLimit,
            PhaseEnd::Unbounded => LpStatus::Infeasible, // cannot happen in phase 1
            PhaseEnd::Done => {
                self.bland = false;
                self.degenerate_run = 0;
                match self.run_phase(false) {
                    PhaseEnd::Done => LpStatus::Optimal,
                    PhaseEnd::Infeasible => LpStatus::Infeasible,
                    PhaseEnd::Unbounded => LpStatus::Unbounded,
                    PhaseEnd::IterationLimit => LpStatus::IterationLimit,
                }
            }
        };
        self.extract(status)
    }

    fn extract(mut self, status: LpStatus) -> LpSolution {
        // final duals/reduced costs against the real cost vector
        if status == LpStatus::Optimal {
            self.refactorize();
        }
        self.phase_cost_basic(false);
        self.btran();
        for j in 0..self.nt {
            self.reduced[j] = match self.state[j] {
                VarState::Basic(_) => 0.0,
                _ => self.cost[j] - self.ext.dot_col(j, &self.duals),
            };
        }

        let mut primal = vec![0.0; self.n];
        for j in 0..self.n {
            primal[j] = match self.state[j] {
                VarState::Basic(slot) => self.x_basic[slot] * self.col_scale[j],
                VarState::AtLower => self.lp.lower[j],
                VarState::AtUpper => self.lp.upper[j],
                VarState::Free => 0.0,
            };
        }
        let objective: f64 = primal
            .iter()
            .zip(&self.lp.objective)
            .map(|(x, c)| x * c)
            .sum();

        let mut row_duals = vec![0.0; self.m];
        for i in 0..self.m {
            row_duals[i] = self.duals[i] * self.row_scale[i];
        }
        let mut reduced_costs = vec![0.0; self.n];
        for j in 0..self.n {
            reduced_costs[j] = self.reduced[j] / self.col_scale[j];
        }
        let at_upper: Vec<usize> = (0..self.nt)
            .filter(|&j| self.state[j] == VarState::AtUpper)
            .collect();

        LpSolution {
            status,
            primal,
            objective,
            row_duals,
            reduced_costs,
            basis: self.basis.clone(),
            at_upper,
            iterations: self.iterations,
        }
    }
}
