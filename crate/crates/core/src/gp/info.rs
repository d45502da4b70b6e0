//! Information-gain accounting: the realized complexity sum, the running
//! information gain, and greedy maximum-information-gain estimation.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::linalg::Cholesky;
use crate::error::{CoreError, Result};

/// Running sums backing the model complexity report. Both sums are
/// non-decreasing over a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityTracker {
    lambda: f64,
    gamma_hat: f64,
    info: f64,
}

impl ComplexityTracker {
    pub fn new(lambda: f64) -> Self {
        ComplexityTracker {
            lambda,
            gamma_hat: 0.0,
            info: 0.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn add_uncertainty(&mut self, contribution: f64) {
        self.gamma_hat += contribution;
    }

    pub fn add_info(&mut self, increment: f64) {
        self.info += increment;
    }

    pub fn uncertainty_sum(&self) -> f64 {
        self.gamma_hat
    }

    pub fn info_gain(&self) -> f64 {
        self.info
    }

    pub fn restore(&mut self, gamma_hat: f64, info: f64) {
        self.gamma_hat = gamma_hat;
        self.info = info;
    }
}

/// Realized complexity, information gain, and whether the realized variance
/// sum respects `sum sigma^2 <= (1 + 2 lambda) * I`.
pub fn complexity_report(tracker: &ComplexityTracker) -> (f64, f64, bool) {
    let bound_ok =
        tracker.gamma_hat <= (1.0 + 2.0 * tracker.lambda) * tracker.info + 1e-9;
    (tracker.gamma_hat, tracker.info, bound_ok)
}

/// Greedy lower bound on the maximum information gain of `budget` points
/// drawn from the candidate set: submodular greedy selection, within
/// (1 - 1/e) of the optimum.
pub fn mig_greedy(
    kernel: &Kernel,
    lambda: f64,
    candidates: &Array2<f64>,
    budget: usize,
) -> Result<f64> {
    let m = candidates.nrows();
    if m == 0 {
        return Err(CoreError::Empty("mig_greedy candidate set"));
    }
    if budget == 0 || budget > m {
        return Err(CoreError::invalid(format!(
            "mig_greedy budget must lie in 1..={m}, got {budget}"
        )));
    }
    if !(lambda > 0.0) {
        return Err(CoreError::invalid("lambda must be positive"));
    }
    kernel.validate()?;

    let kscale = kernel.input_scale();
    let d = candidates.ncols();
    let mut scaled = candidates.clone();
    for mut row in scaled.outer_iter_mut() {
        for (v, &s) in row.iter_mut().zip(&kscale) {
            *v *= s;
        }
    }
    let sq: Array1<f64> = scaled.rows().into_iter().map(|r| r.dot(&r)).collect();
    let full = kernel.cross_from_scaled(&scaled, &scaled, &sq, &sq);

    let mut selected: Vec<usize> = Vec::with_capacity(budget);
    let mut gain = 0.0;
    for _ in 0..budget {
        // posterior variance of each candidate given the current selection
        let mut best: Option<(usize, f64)> = None;
        let chol = if selected.is_empty() {
            None
        } else {
            let k = selected.len();
            let mut gram = Array2::<f64>::zeros((k, k));
            for (i, &a) in selected.iter().enumerate() {
                for (j, &b) in selected.iter().enumerate() {
                    gram[[i, j]] = full[[a, b]];
                }
                gram[[i, i]] += lambda;
            }
            Some(Cholesky::decompose(&gram)?)
        };
        for j in 0..m {
            if selected.contains(&j) {
                continue;
            }
            let var = match &chol {
                None => full[[j, j]],
                Some(c) => {
                    let kv: Array1<f64> =
                        selected.iter().map(|&a| full[[a, j]]).collect();
                    let sol = c.solve_vec(&kv);
                    (full[[j, j]] - kv.dot(&sol)).max(0.0)
                }
            };
            match best {
                Some((_, bv)) if var <= bv => {}
                _ => best = Some((j, var)),
            }
        }
        let (j, var) = best.expect("nonempty candidate pool");
        selected.push(j);
        gain += 0.5 * (1.0 + var / lambda).ln();
    }
    let _ = d;
    Ok(gain)
}

/// Closed-form total information gain of a point set:
/// `0.5 * ln det(I + lambda^{-1} K)`.
pub fn total_info_gain(kernel: &Kernel, lambda: f64, points: &Array2<f64>) -> Result<f64> {
    let m = points.nrows();
    if m == 0 {
        return Ok(0.0);
    }
    let kscale = kernel.input_scale();
    let mut scaled = points.clone();
    for mut row in scaled.outer_iter_mut() {
        for (v, &s) in row.iter_mut().zip(&kscale) {
            *v *= s;
        }
    }
    let sq: Array1<f64> = scaled.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut gram = kernel.gram_from_scaled(&scaled, &sq);
    gram.mapv_inplace(|v| v / lambda);
    for i in 0..m {
        gram[[i, i]] += 1.0;
    }
    let chol = Cholesky::decompose(&gram)?;
    Ok(0.5 * chol.log_det())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;
    use rand::Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, "mig-test", &[]);
        Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn single_point_gain_is_best_diagonal() {
        let k = Kernel::squared_exponential(2, 1.0, 0.8).unwrap();
        let pts = random_points(10, 2, 3);
        let got = mig_greedy(&k, 1.0, &pts, 1).unwrap();
        let want = 0.5 * (1.0 + 0.8_f64).ln();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn full_budget_matches_closed_form_determinant() {
        let k = Kernel::squared_exponential(2, 1.0, 1.0).unwrap();
        let pts = random_points(8, 2, 4);
        let greedy = mig_greedy(&k, 2.0, &pts, 8).unwrap();
        let total = total_info_gain(&k, 2.0, &pts).unwrap();
        assert!((greedy - total).abs() < 1e-8, "greedy {greedy} total {total}");
    }

    #[test]
    fn greedy_beats_random_subsets_on_a_grid() {
        let k = Kernel::squared_exponential(2, 1.0, 1.0).unwrap();
        // 4 x 5 regular grid on [-2, 2]^2
        let mut rows = Vec::new();
        for i in 0..4 {
            for j in 0..5 {
                rows.push(-2.0 + 4.0 * i as f64 / 3.0);
                rows.push(-2.0 + 4.0 * j as f64 / 4.0);
            }
        }
        let pts = Array2::from_shape_vec((20, 2), rows).unwrap();
        let greedy = mig_greedy(&k, 1.0, &pts, 5).unwrap();
        let mut rng = stream_rng(6, "mig-test-subsets", &[]);
        for _ in 0..1000 {
            let mut idx: Vec<usize> = (0..20).collect();
            for i in 0..5 {
                let j = rng.gen_range(i..20);
                idx.swap(i, j);
            }
            let subset_rows: Vec<f64> = idx[..5]
                .iter()
                .flat_map(|&i| pts.row(i).to_vec())
                .collect();
            let subset = Array2::from_shape_vec((5, 2), subset_rows).unwrap();
            let value = total_info_gain(&k, 1.0, &subset).unwrap();
            assert!(greedy >= value - 1e-9);
        }
    }

    #[test]
    fn empty_candidates_and_bad_budgets_error() {
        let k = Kernel::squared_exponential(2, 1.0, 1.0).unwrap();
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(mig_greedy(&k, 1.0, &empty, 1).is_err());
        let pts = random_points(4, 2, 7);
        assert!(mig_greedy(&k, 1.0, &pts, 0).is_err());
        assert!(mig_greedy(&k, 1.0, &pts, 5).is_err());
    }

    #[test]
    fn empty_tracker_reports_clean() {
        let t = ComplexityTracker::new(2.0);
        let (g, i, ok) = complexity_report(&t);
        assert_eq!((g, i), (0.0, 0.0));
        assert!(ok);
    }

    #[test]
    fn violated_inequality_is_flagged() {
        let mut t = ComplexityTracker::new(1.0);
        t.add_uncertainty(10.0);
        t.add_info(1.0);
        let (_, _, ok) = complexity_report(&t);
        assert!(!ok);
    }
}
