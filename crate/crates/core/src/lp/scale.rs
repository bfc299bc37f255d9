//! Geometric row/column equilibration.
//!
//! Each scale factor is the reciprocal of the geometric mean of the smallest
//! and largest nonzero magnitude in its row or column, applied alternately
//! for a few passes. The scaled problem is `min (Cc)'x'` over `RAC x' {<=,=} Rb`
//! with `x = C x'`; the solver undoes the scaling when reporting primal
//! values, duals and reduced costs.

use super::sparse::CscMat;

pub struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

const PASSES: usize = 3;

pub fn equilibrate(a: &CscMat) -> Scaling {
    let m = a.n_rows();
    let n = a.n_cols();
    let mut row = vec![1.0f64; m];
    let mut col = vec![1.0f64; n];
    if a.nnz() == 0 {
        return Scaling { row, col };
    }
    for _ in 0..PASSES {
        // column pass against current row scales
        for j in 0..n {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for (r, v) in a.iter_col(j) {
                let mag = (v * row[r]).abs();
                if mag > 0.0 {
                    lo = lo.min(mag);
                    hi = hi.max(mag);
                }
            }
            if hi > 0.0 {
                col[j] = 1.0 / (lo * hi).sqrt();
            }
        }
        // row pass against current column scales
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![0.0f64; m];
        for j in 0..n {
            for (r, v) in a.iter_col(j) {
                let mag = (v * col[j]).abs();
                if mag > 0.0 {
                    lo[r] = lo[r].min(mag);
                    hi[r] = hi[r].max(mag);
                }
            }
        }
        for i in 0..m {
            if hi[i] > 0.0 {
                row[i] = 1.0 / (lo[i] * hi[i]).sqrt();
            }
        }
    }
    Scaling { row, col }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_magnitudes_balanced() {
        let a = CscMat::from_triplets(
            2,
            2,
            &[(0, 0, 1e4), (0, 1, 2e4), (1, 0, 1e-3), (1, 1, 5e-4)],
        );
        let s = equilibrate(&a);
        let mut scaled = a.clone();
        scaled.scale(&s.row, &s.col);
        let mags: Vec<f64> = scaled
            .triplets()
            .iter()
            .map(|&(_, _, v)| v.abs())
            .collect();
        let hi = mags.iter().cloned().fold(0.0, f64::max);
        let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 50.0, "spread {} too large", hi / lo);
    }
}
