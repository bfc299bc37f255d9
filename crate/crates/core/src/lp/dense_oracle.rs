//! Test-only reference solver: textbook two-phase dense tableau simplex.
//!
//! Deliberately shares nothing with the production kernel. Finite upper
//! bounds are expanded into explicit rows and every variable is shifted to
//! `x >= 0` form, so only the plain `min c'x, Ax = b, x >= 0` tableau is
//! needed. Intended for cross-checking objectives on small random instances.

use super::{RowSense, StandardFormLp};

#[derive(Debug, PartialEq)]
pub enum OracleResult {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

/// Solves `min c'x, A x = b, x >= 0` (b may be any sign) with Bland's rule.
fn tableau_simplex(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> OracleResult {
    let m = b.len();
    let n = c.len();
    let mut rows: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for i in 0..m {
        if rhs[i] < 0.0 {
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
            rhs[i] = -rhs[i];
        }
    }
    // tableau with artificials: columns [x | artificials | rhs]
    let width = n + m + 1;
    let mut t = vec![vec![0.0f64; width]; m + 1];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = rows[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1 objective: sum of artificials
    for j in 0..width {
        let mut s = 0.0;
        for i in 0..m {
            s += t[i][j];
        }
        t[m][j] = -s;
    }
    for i in 0..m {
        t[m][n + i] = 0.0;
    }

    if !run2(&mut t, &mut basis, n, m, width) {
        return OracleResult::Unbounded; // cannot happen in phase 1
    }
    if t[m][width - 1] < -1e-7 {
        return OracleResult::Infeasible;
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            let mut pc = usize::MAX;
            for j in 0..n {
                if t[i][j].abs() > EPS {
                    pc = j;
                    break;
                }
            }
            if pc != usize::MAX {
                pivot_at(&mut t, &mut basis, i, pc, width);
            }
        }
    }

    // phase 2 objective
    for j in 0..width {
        t[m][j] = 0.0;
    }
    for j in 0..n {
        t[m][j] = c[j];
    }
    for i in 0..m {
        let bj = basis[i];
        if bj < n && c[bj].abs() > 0.0 {
            let f = c[bj];
            for j in 0..width {
                let delta = f * t[i][j];
                t[m][j] -= delta;
            }
        }
    }
    // artificials are excluded from phase-2 pricing by limiting the scan to n
    if !run2(&mut t, &mut basis, n, m, width) {
        return OracleResult::Unbounded;
    }
    OracleResult::Optimal(-t[m][width - 1])
}

fn pivot_at(t: &mut [Vec<f64>], basis: &mut [usize], pr: usize, pc: usize, width: usize) {
    let pv = t[pr][pc];
    for v in t[pr].iter_mut() {
        *v /= pv;
    }
    for i in 0..t.len() {
        if i != pr && t[i][pc] != 0.0 {
            let f = t[i][pc];
            for j in 0..width {
                let delta = f * t[pr][j];
                t[i][j] -= delta;
            }
        }
    }
    basis[pr] = pc;
}

fn run2(t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, ncols: usize, m: usize, width: usize) -> bool {
    loop {
        // Bland: first improving column, first tied leaving row
        let mut pc = usize::MAX;
        for j in 0..ncols {
            if t[m][j] < -EPS {
                pc = j;
                break;
            }
        }
        if pc == usize::MAX {
            return true;
        }
        let mut pr = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][pc] > EPS {
                let ratio = t[i][width - 1] / t[i][pc];
                if ratio < best - EPS
                    || (ratio < best + EPS && basis[i] < basis.get(pr).copied().unwrap_or(usize::MAX))
                {
                    best = ratio;
                    pr = i;
                }
            }
        }
        if pr == usize::MAX {
            return false;
        }
        pivot_at(t, basis, pr, pc, width);
    }
}

/// Reference objective for a [`StandardFormLp`]. Lower bounds must be finite;
/// finite upper bounds become explicit rows, `<=` rows get slack columns.
pub fn reference_objective(lp: &StandardFormLp) -> OracleResult {
    let n = lp.n_cols();
    let m = lp.n_rows();
    assert!(
        lp.lower.iter().all(|l| l.is_finite()),
        "oracle needs finite lower bounds"
    );
    // shift x = lb + u, u >= 0
    let shift = &lp.lower;
    let dense_a: Vec<Vec<f64>> = {
        let mut rows = vec![vec![0.0; n]; m];
        for &(r, c2, v) in &lp.a.triplets() {
            rows[r][c2] = v;
        }
        rows
    };

    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut b2: Vec<f64> = Vec::new();
    let mut senses: Vec<RowSense> = Vec::new();
    for i in 0..m {
        let row = dense_a[i].clone();
        let offset: f64 = row.iter().zip(shift).map(|(a, s)| a * s).sum();
        a_rows.push(row);
        b2.push(lp.rhs[i] - offset);
        senses.push(lp.senses[i]);
    }
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            a_rows.push(row);
            b2.push(lp.upper[j] - shift[j]);
            senses.push(RowSense::Le);
        }
    }
    // add slacks for <= rows
    let n_slack = senses.iter().filter(|s| **s == RowSense::Le).count();
    let total = n + n_slack;
    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(&lp.objective);
    let mut full_rows: Vec<Vec<f64>> = Vec::new();
    let mut si = 0;
    for (i, row) in a_rows.iter().enumerate() {
        let mut full = vec![0.0; total];
        full[..n].copy_from_slice(row);
        if senses[i] == RowSense::Le {
            full[n + si] = 1.0;
            si += 1;
        }
        full_rows.push(full);
    }

    let base: f64 = lp.objective.iter().zip(shift).map(|(c, s)| c * s).sum();
    match tableau_simplex(&c2, &full_rows, &b2) {
        OracleResult::Optimal(v) => OracleResult::Optimal(v + base),
        other => other,
    }
}
