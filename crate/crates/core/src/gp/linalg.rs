//! Dense Cholesky with escalating jitter. Failure beyond the jitter ceiling
//! is fatal rather than silently absorbed, so kernel bugs surface as errors.

use ndarray::{Array1, Array2};

use crate::error::{CoreError, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
    pub jitter_used: f64,
}

impl Cholesky {
    /// Factorizes `a` (+ jitter on the diagonal if needed, escalating from
    /// 1e-10 to 1e-6 by decades).
    pub fn decompose(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut jitter = 0.0;
        loop {
            match try_factor(a, jitter) {
                Some(l) => return Ok(Cholesky { l, jitter_used: jitter }),
                None => {
                    jitter = if jitter == 0.0 {
                        JITTER_START
                    } else {
                        jitter * 10.0
                    };
                    if jitter > JITTER_MAX {
                        return Err(CoreError::NotPositiveDefinite { max_jitter: JITTER_MAX });
                    }
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.l
    }

    /// Solves `A x = b` via the two triangular systems.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        let mut x = b.clone();
        let l = &self.l;
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= l[[i, j]] * x[j];
            }
            x[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= l[[j, i]] * x[j];
            }
            x[i] = s / l[[i, i]];
        }
        x
    }

    /// Explicit inverse `A^{-1} = L^{-T} L^{-1}`, used for batched variance
    /// queries where a GEMM beats per-query triangular solves.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let l = &self.l;
        // forward-substitute L^{-1} column by column
        let mut linv = Array2::<f64>::zeros((n, n));
        for c in 0..n {
            linv[[c, c]] = 1.0 / l[[c, c]];
            for i in (c + 1)..n {
                let mut s = 0.0;
                for j in c..i {
                    s -= l[[i, j]] * linv[[j, c]];
                }
                linv[[i, c]] = s / l[[i, i]];
            }
        }
        linv.t().dot(&linv)
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.l[[i, i]].ln()).sum()
    }
}

fn try_factor(a: &Array2<f64>, jitter: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_match_direct_inverse_on_small_system() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let chol = Cholesky::decompose(&a).unwrap();
        assert_eq!(chol.jitter_used, 0.0);
        let b = array![1.0, -2.0, 0.5];
        let x = chol.solve_vec(&b);
        let back = a.dot(&x);
        for (u, v) in back.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        let inv = chol.inverse();
        let eye = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_det_matches_known_value() {
        let a = array![[2.0, 0.0], [0.0, 8.0]];
        let chol = Cholesky::decompose(&a).unwrap();
        assert!((chol.log_det() - 16.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_fails_with_jitter_report() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        match Cholesky::decompose(&a) {
            Err(CoreError::NotPositiveDefinite { max_jitter }) => {
                assert_eq!(max_jitter, JITTER_MAX);
            }
            other => panic!("expected PD failure, got {other:?}"),
        }
    }

    #[test]
    fn near_singular_psd_is_rescued_by_jitter() {
        // rank-1 matrix; jitter makes it factorizable
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let chol = Cholesky::decompose(&a).unwrap();
        assert!(chol.jitter_used > 0.0 && chol.jitter_used <= JITTER_MAX);
    }
}
