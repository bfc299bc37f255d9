//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Left-looking factorization with partial pivoting. Columns are processed in
//! order of increasing nonzero count to limit fill, rows are chosen by largest
//! magnitude with lowest-index tie-breaks, so the factorization is
//! deterministic. Basis changes between refactorizations are absorbed by
//! product-form eta vectors maintained by the caller.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::sparse::CscMat;

/// LU factors of the basis in "position" space (the order in which pivots
/// were chosen). `slot` refers to the basis slot (0..m) the caller indexes
/// basic variables with; `row` refers to original matrix rows.
pub struct LuFactors {
    m: usize,
    /// Unit lower factor; column k holds (position > k, value).
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Upper factor off-diagonals; column k holds (position < k, value).
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    row_of_pos: Vec<usize>,
    slot_of_pos: Vec<usize>,
}

/// Product-form eta: the basis slot `slot` was replaced by a column whose
/// ftran image was `alpha` (diagonal element `diag` at `slot`, off-diagonal
/// `entries` in slot space).
pub struct Eta {
    pub slot: usize,
    pub diag: f64,
    pub entries: Vec<(usize, f64)>,
}

impl Eta {
    /// Builds the eta from the ftran'd entering column (slot space).
    pub fn from_column(slot: usize, alpha: &[f64], tol: f64) -> Self {
        let mut entries = Vec::new();
        for (i, &v) in alpha.iter().enumerate() {
            if i != slot && v.abs() > tol {
                entries.push((i, v));
            }
        }
        Eta {
            slot,
            diag: alpha[slot],
            entries,
        }
    }

    /// Applies F^-1 to a slot-space vector (ftran direction).
    pub fn apply_ftran(&self, v: &mut [f64]) {
        let t = v[self.slot] / self.diag;
        if t != 0.0 {
            v[self.slot] = t;
            for &(i, a) in &self.entries {
                v[i] -= a * t;
            }
        } else {
            v[self.slot] = 0.0;
        }
    }

    /// Applies F^-T to a slot-space vector (btran direction).
    pub fn apply_btran(&self, v: &mut [f64]) {
        let mut acc = v[self.slot];
        for &(i, a) in &self.entries {
            acc -= a * v[i];
        }
        v[self.slot] = acc / self.diag;
    }
}

pub struct FactorizeResult {
    pub factors: LuFactors,
    /// Basis slots whose columns were linearly dependent and were replaced by
    /// the logical column of the paired row (slot, original row).
    pub replaced: Vec<(usize, usize)>,
}

impl LuFactors {
    /// Factorizes the basis given by `basis[slot] = column of ext`, where
    /// `ext` is the extended matrix including logical columns. Dependent
    /// columns are replaced by logicals of uncovered rows so the returned
    /// factorization is always nonsingular.
    pub fn factorize(ext: &CscMat, basis: &[usize], tol_pivot: f64) -> FactorizeResult {
        let m = ext.n_rows();
        assert_eq!(basis.len(), m);

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&s| (ext.col_nnz(basis[s]), s));

        let mut fac = LuFactors {
            m,
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            row_of_pos: Vec::with_capacity(m),
            slot_of_pos: Vec::with_capacity(m),
        };
        let mut row_pos = vec![usize::MAX; m];

        let mut work = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut queued = vec![false; m];
        let mut deficient: Vec<usize> = Vec::new();

        // L entries are stored against original rows while the factorization
        // is running and translated to positions afterwards.
        let mut l_raw: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        for &slot in &order {
            let col = basis[slot];
            touched.clear();
            heap.clear();
            for (r, v) in ext.iter_col(col) {
                work[r] = v;
                touched.push(r);
                let p = row_pos[r];
                if p != usize::MAX && !queued[p] {
                    queued[p] = true;
                    heap.push(Reverse(p));
                }
            }
            let mut u_col: Vec<(usize, f64)> = Vec::new();
            while let Some(Reverse(p)) = heap.pop() {
                queued[p] = false;
                let prow = fac.row_of_pos[p];
                let xp = work[prow];
                if xp == 0.0 {
                    continue;
                }
                u_col.push((p, xp));
                for &(r2, lv) in &l_raw[p] {
                    if work[r2] == 0.0 && lv != 0.0 {
                        touched.push(r2);
                        let p2 = row_pos[r2];
                        if p2 != usize::MAX && !queued[p2] {
                            queued[p2] = true;
                            heap.push(Reverse(p2));
                        }
                    }
                    work[r2] -= xp * lv;
                }
            }
            // pivot among unpivoted touched rows: largest magnitude, lowest row
            let mut pivot_row = usize::MAX;
            let mut pivot_val = 0.0f64;
            for &r in touched.iter() {
                if row_pos[r] == usize::MAX {
                    let v = work[r];
                    if v.abs() > pivot_val.abs()
                        || (v != 0.0 && v.abs() == pivot_val.abs() && r < pivot_row)
                    {
                        pivot_row = r;
                        pivot_val = v;
                    }
                }
            }
            if pivot_row == usize::MAX || pivot_val.abs() <= tol_pivot {
                // dependent column: clear workspace, defer to repair
                for &r in touched.iter() {
                    work[r] = 0.0;
                }
                deficient.push(slot);
                continue;
            }
            let k = fac.row_of_pos.len();
            let mut l_col: Vec<(usize, f64)> = Vec::new();
            for &r in touched.iter() {
                let v = work[r];
                work[r] = 0.0;
                if r == pivot_row || v == 0.0 {
                    continue;
                }
                if row_pos[r] == usize::MAX {
                    l_col.push((r, v / pivot_val));
                }
            }
            l_col.sort_unstable_by_key(|e| e.0);
            u_col.sort_unstable_by_key(|e| e.0);
            row_pos[pivot_row] = k;
            fac.row_of_pos.push(pivot_row);
            fac.slot_of_pos.push(slot);
            fac.u_cols.push(u_col);
            fac.u_diag.push(pivot_val);
            l_raw.push(l_col);
        }

        // repair: pair dependent slots with uncovered rows, both ascending
        let mut replaced = Vec::new();
        if !deficient.is_empty() {
            deficient.sort_unstable();
            let mut uncovered: Vec<usize> =
                (0..m).filter(|&r| row_pos[r] == usize::MAX).collect();
            uncovered.sort_unstable();
            for (&slot, &r) in deficient.iter().zip(uncovered.iter()) {
                // logical column e_r pivots cleanly on row r
                let k = fac.row_of_pos.len();
                row_pos[r] = k;
                fac.row_of_pos.push(r);
                fac.slot_of_pos.push(slot);
                fac.u_cols.push(Vec::new());
                fac.u_diag.push(1.0);
                l_raw.push(Vec::new());
                replaced.push((slot, r));
            }
        }

        // translate L rows to positions
        for col in l_raw {
            let mut translated: Vec<(usize, f64)> = col
                .into_iter()
                .map(|(r, v)| (row_pos[r], v))
                .collect();
            translated.sort_unstable_by_key(|e| e.0);
            fac.l_cols.push(translated);
        }
        debug_assert_eq!(fac.l_cols.len(), m);

        FactorizeResult {
            factors: fac,
            replaced,
        }
    }

    /// w = B^-1 v. Input indexed by original row, output by basis slot.
    /// `scratch` must have length m.
    pub fn ftran(&self, v_rows: &[f64], out_slots: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            scratch[k] = v_rows[self.row_of_pos[k]];
        }
        for k in 0..m {
            let zk = scratch[k];
            if zk != 0.0 {
                for &(p, lv) in &self.l_cols[k] {
                    scratch[p] -= zk * lv;
                }
            }
        }
        for k in (0..m).rev() {
            let xk = scratch[k] / self.u_diag[k];
            scratch[k] = xk;
            if xk != 0.0 {
                for &(p, uv) in &self.u_cols[k] {
                    scratch[p] -= xk * uv;
                }
            }
        }
        for k in 0..m {
            out_slots[self.slot_of_pos[k]] = scratch[k];
        }
    }

    /// y = B^-T v. Input indexed by basis slot, output by original row.
    pub fn btran(&self, v_slots: &[f64], out_rows: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            scratch[k] = v_slots[self.slot_of_pos[k]];
        }
        for k in 0..m {
            let mut acc = scratch[k];
            for &(p, uv) in &self.u_cols[k] {
                acc -= uv * scratch[p];
            }
            scratch[k] = acc / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut acc = scratch[k];
            for &(p, lv) in &self.l_cols[k] {
                acc -= lv * scratch[p];
            }
            scratch[k] = acc;
        }
        for k in 0..m {
            out_rows[self.row_of_pos[k]] = scratch[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_of(ext: &CscMat, basis: &[usize]) -> Vec<Vec<f64>> {
        let m = ext.n_rows();
        let mut b = vec![vec![0.0; m]; m];
        for (slot, &col) in basis.iter().enumerate() {
            for (r, v) in ext.iter_col(col) {
                b[r][slot] = v;
            }
        }
        b
    }

    fn mat_vec(b: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        b.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn mat_t_vec(b: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let m = b.len();
        (0..m).map(|j| (0..m).map(|i| b[i][j] * x[i]).sum()).collect()
    }

    #[test]
    fn ftran_btran_roundtrip() {
        // 4x4 basis from a 4x6 matrix
        let ext = CscMat::from_triplets(
            4,
            6,
            &[
                (0, 0, 2.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 1, -1.0),
                (2, 2, 4.0),
                (3, 2, 1.0),
                (0, 3, 1.0),
                (3, 3, -2.0),
                (0, 4, 1.0),
                (2, 5, 1.0),
            ],
        );
        let basis = vec![0, 1, 2, 3];
        let res = LuFactors::factorize(&ext, &basis, 1e-12);
        assert!(res.replaced.is_empty());
        let dense = dense_of(&ext, &basis);

        let v = vec![1.0, -2.0, 0.5, 3.0];
        let mut w = vec![0.0; 4];
        let mut scratch = vec![0.0; 4];
        res.factors.ftran(&v, &mut w, &mut scratch);
        let back = mat_vec(&dense, &w);
        for i in 0..4 {
            assert!((back[i] - v[i]).abs() < 1e-10, "{back:?} vs {v:?}");
        }

        let mut y = vec![0.0; 4];
        res.factors.btran(&v, &mut y, &mut scratch);
        let back_t = mat_t_vec(&dense, &y);
        for i in 0..4 {
            assert!((back_t[i] - v[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn dependent_column_replaced() {
        // two identical columns force a repair
        let ext = CscMat::from_triplets(
            2,
            4,
            &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0)],
        );
        let basis = vec![0, 1];
        let res = LuFactors::factorize(&ext, &basis, 1e-12);
        assert_eq!(res.replaced.len(), 1);
        let (_slot, row) = res.replaced[0];
        assert_eq!(row, 1);
    }

    #[test]
    fn eta_updates_match_replaced_basis() {
        let ext = CscMat::from_triplets(
            3,
            5,
            &[
                (0, 0, 1.0),
                (1, 1, 2.0),
                (2, 2, 1.5),
                (0, 3, 1.0),
                (1, 3, 1.0),
                (0, 4, -1.0),
                (2, 4, 2.0),
            ],
        );
        let basis = vec![0, 1, 2];
        let res = LuFactors::factorize(&ext, &basis, 1e-12);
        let lu = res.factors;
        let mut scratch = vec![0.0; 3];

        // bring column 3 into slot 1
        let mut a3 = vec![0.0; 3];
        for (r, v) in ext.iter_col(3) {
            a3[r] = v;
        }
        let mut alpha = vec![0.0; 3];
        lu.ftran(&a3, &mut alpha, &mut scratch);
        let eta = Eta::from_column(1, &alpha, 1e-12);

        let new_basis = vec![0, 3, 2];
        let dense = dense_of(&ext, &new_basis);
        let v = vec![0.3, 1.0, -2.0];

        let mut w = vec![0.0; 3];
        lu.ftran(&v, &mut w, &mut scratch);
        eta.apply_ftran(&mut w);
        let back = mat_vec(&dense, &w);
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-10);
        }

        let mut y = vec![0.0; 3];
        let mut vs = v.clone();
        eta.apply_btran(&mut vs);
        lu.btran(&vs, &mut y, &mut scratch);
        let back_t = mat_t_vec(&dense, &y);
        for i in 0..3 {
            assert!((back_t[i] - v[i]).abs() < 1e-10);
        }
    }
}
