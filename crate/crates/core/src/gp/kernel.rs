//! Covariance kernels over the joint (state-embedding, action, adversary
//! action) input. Signal variance is capped at 1 so `k(z, z) <= 1`, which the
//! information-gain and variance-sum bounds rely on.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    SquaredExponential {
        lengthscales: Vec<f64>,
        signal_variance: f64,
    },
    /// `k(z, z') = sum_i w_i z_i z'_i`; bounded variance only on a bounded
    /// domain, which normalized inputs provide in practice.
    Linear { weights: Vec<f64> },
}

impl Kernel {
    pub fn squared_exponential(dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        let k = Kernel::SquaredExponential {
            lengthscales: vec![lengthscale; dim],
            signal_variance,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn linear(dim: usize, weight: f64) -> Result<Self> {
        let k = Kernel::Linear {
            weights: vec![weight; dim],
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SquaredExponential {
                lengthscales,
                signal_variance,
            } => {
                if lengthscales.iter().any(|&l| !(l > 0.0)) {
                    return Err(CoreError::invalid("lengthscales must be positive"));
                }
                if !(*signal_variance > 0.0 && *signal_variance <= 1.0) {
                    return Err(CoreError::invalid("signal variance must lie in (0, 1]"));
                }
            }
            Kernel::Linear { weights } => {
                if weights.iter().any(|&w| !(w > 0.0)) {
                    return Err(CoreError::invalid("linear kernel weights must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Kernel::SquaredExponential { lengthscales, .. } => lengthscales.len(),
            Kernel::Linear { weights } => weights.len(),
        }
    }

    /// Per-coordinate scaling that reduces the kernel to a canonical form on
    /// scaled inputs: SE becomes unit-lengthscale, linear becomes a plain dot
    /// product.
    pub fn input_scale(&self) -> Vec<f64> {
        match self {
            Kernel::SquaredExponential { lengthscales, .. } => {
                lengthscales.iter().map(|&l| 1.0 / l).collect()
            }
            Kernel::Linear { weights } => weights.iter().map(|&w| w.sqrt()).collect(),
        }
    }

    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::SquaredExponential {
                lengthscales,
                signal_variance,
            } => {
                let mut d2 = 0.0;
                for i in 0..a.len() {
                    let d = (a[i] - b[i]) / lengthscales[i];
                    d2 += d * d;
                }
                signal_variance * (-0.5 * d2).exp()
            }
            Kernel::Linear { weights } => {
                a.iter().zip(b).zip(weights).map(|((&x, &y), &w)| w * x * y).sum()
            }
        }
    }

    pub fn diag_value(&self, a: &[f64]) -> f64 {
        match self {
            Kernel::SquaredExponential { signal_variance, .. } => *signal_variance,
            Kernel::Linear { .. } => self.value(a, a),
        }
    }

    /// Cross-covariance between query rows and reference rows, both already
    /// multiplied by `input_scale`. `q_sq` and `r_sq` hold squared row norms.
    pub fn cross_from_scaled(
        &self,
        queries: &Array2<f64>,
        refs: &Array2<f64>,
        q_sq: &Array1<f64>,
        r_sq: &Array1<f64>,
    ) -> Array2<f64> {
        let mut g = queries.dot(&refs.t());
        match self {
            Kernel::SquaredExponential { signal_variance, .. } => {
                let sv = *signal_variance;
                for (i, mut row) in g.outer_iter_mut().enumerate() {
                    let qi = q_sq[i];
                    for (j, v) in row.iter_mut().enumerate() {
                        let d2 = (qi + r_sq[j] - 2.0 * *v).max(0.0);
                        *v = sv * (-0.5 * d2).exp();
                    }
                }
                g
            }
            Kernel::Linear { .. } => g,
        }
    }

    /// Gram matrix of scaled reference rows.
    pub fn gram_from_scaled(&self, refs: &Array2<f64>, r_sq: &Array1<f64>) -> Array2<f64> {
        self.cross_from_scaled(refs, refs, r_sq, r_sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diag_is_bounded_by_one_for_se() {
        let k = Kernel::squared_exponential(3, 1.5, 1.0).unwrap();
        assert!(k.diag_value(&[9.0, -2.0, 0.0]) <= 1.0);
        assert!(Kernel::squared_exponential(3, 1.0, 1.2).is_err());
    }

    #[test]
    fn scaled_cross_matches_direct_evaluation() {
        let k = Kernel::SquaredExponential {
            lengthscales: vec![0.5, 2.0],
            signal_variance: 0.9,
        };
        let scale = k.input_scale();
        let raw_q = array![[0.3, -1.0], [1.5, 0.2]];
        let raw_r = array![[0.0, 0.0], [1.0, 1.0], [-0.4, 0.7]];
        let scaled = |m: &Array2<f64>| {
            let mut out = m.clone();
            for mut row in out.outer_iter_mut() {
                for (v, &s) in row.iter_mut().zip(&scale) {
                    *v *= s;
                }
            }
            out
        };
        let qs = scaled(&raw_q);
        let rs = scaled(&raw_r);
        let q_sq = qs.rows().into_iter().map(|r| r.dot(&r)).collect::<Array1<f64>>();
        let r_sq = rs.rows().into_iter().map(|r| r.dot(&r)).collect::<Array1<f64>>();
        let cross = k.cross_from_scaled(&qs, &rs, &q_sq, &r_sq);
        for i in 0..2 {
            for j in 0..3 {
                let direct = k.value(
                    raw_q.row(i).as_slice().unwrap(),
                    raw_r.row(j).as_slice().unwrap(),
                );
                assert!((cross[[i, j]] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_kernel_is_a_weighted_dot_product() {
        let k = Kernel::Linear {
            weights: vec![2.0, 0.5],
        };
        assert!((k.value(&[1.0, 2.0], &[3.0, -1.0]) - (2.0 * 3.0 - 0.5 * 2.0)).abs() < 1e-15);
    }
}
