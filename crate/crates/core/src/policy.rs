//! Deterministic state-feedback policies: a feature map, a weight matrix and
//! a saturating output stage that keeps every output inside its box. The same
//! representation serves the agent, the adversary and the hallucination
//! channel.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::types::Bounds;

/// Feature map applied to the policy input before the linear layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureMap {
    /// Bias feature only; the policy output is a constant.
    Constant,
    /// Raw input plus a bias feature.
    Identity,
    /// Shifted/scaled input plus a bias feature.
    NormalizedState { shift: Vec<f64>, scale: Vec<f64> },
    /// Gaussian bumps on a set of centers plus a bias feature. `periods[i]`
    /// marks input coordinate `i` as circular with the given period.
    Radial {
        centers: Vec<Vec<f64>>,
        inv_lengthscales: Vec<f64>,
        periods: Vec<Option<f64>>,
    },
}

impl FeatureMap {
    pub fn feature_dim(&self, input_dim: usize) -> usize {
        match self {
            FeatureMap::Constant => 1,
            FeatureMap::Identity | FeatureMap::NormalizedState { .. } => input_dim + 1,
            FeatureMap::Radial { centers, .. } => centers.len() + 1,
        }
    }

    /// Writes φ(x) into `out`; the last entry is always the bias feature.
    pub fn write_features(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FeatureMap::Constant => out[0] = 1.0,
            FeatureMap::Identity => {
                out[..x.len()].copy_from_slice(x);
                out[x.len()] = 1.0;
            }
            FeatureMap::NormalizedState { shift, scale } => {
                for i in 0..x.len() {
                    out[i] = (x[i] - shift[i]) / scale[i];
                }
                out[x.len()] = 1.0;
            }
            FeatureMap::Radial {
                centers,
                inv_lengthscales,
                periods,
            } => {
                for (j, c) in centers.iter().enumerate() {
                    let mut d2 = 0.0;
                    for i in 0..x.len() {
                        let mut d = x[i] - c[i];
                        if let Some(p) = periods[i] {
                            d = d.rem_euclid(p);
                            if d > 0.5 * p {
                                d -= p;
                            }
                        }
                        let ds = d * inv_lengthscales[i];
                        d2 += ds * ds;
                    }
                    out[j] = (-0.5 * d2).exp();
                }
                out[centers.len()] = 1.0;
            }
        }
    }

    /// Regular grid of radial centers over the given per-dimension ranges.
    pub fn radial_grid(
        ranges: &[(f64, f64)],
        counts: &[usize],
        periods: Vec<Option<f64>>,
        lengthscale_factor: f64,
    ) -> Result<Self> {
        if ranges.len() != counts.len() || ranges.len() != periods.len() {
            return Err(CoreError::invalid("radial grid: mismatched dimension specs"));
        }
        let mut inv_lengthscales = Vec::with_capacity(ranges.len());
        for (&(lo, hi), &c) in ranges.iter().zip(counts) {
            if c == 0 || !(hi > lo) {
                return Err(CoreError::invalid("radial grid: empty axis"));
            }
            let spacing = (hi - lo) / c as f64;
            inv_lengthscales.push(1.0 / (lengthscale_factor * spacing));
        }
        let mut centers = vec![vec![]];
        for (dim, (&(lo, hi), &c)) in ranges.iter().zip(counts).enumerate() {
            let spacing = (hi - lo) / c as f64;
            let mut next = Vec::with_capacity(centers.len() * c);
            for base in &centers {
                for k in 0..c {
                    let mut v = base.clone();
                    v.push(lo + spacing * (k as f64 + 0.5));
                    next.push(v);
                }
            }
            let _ = dim;
            centers = next;
        }
        Ok(FeatureMap::Radial {
            centers,
            inv_lengthscales,
            periods,
        })
    }
}

/// Output stage mapping the raw linear output into the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Saturation {
    /// `center + half_width * tanh(raw)`; smooth and Lipschitz.
    Tanh,
    /// Hard clamp of the raw output to the box.
    Clamp,
}

/// Parameter vector plus feature map defining a deterministic policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub features: FeatureMap,
    pub input_dim: usize,
    /// Flat weight matrix, row-major `out_dim x feature_dim`.
    pub weights: Vec<f64>,
    pub output_box: Bounds,
    pub saturation: Saturation,
}

impl PolicyParams {
    pub fn new(
        features: FeatureMap,
        input_dim: usize,
        output_box: Bounds,
        saturation: Saturation,
    ) -> Self {
        let fd = features.feature_dim(input_dim);
        let out_dim = output_box.dim();
        PolicyParams {
            features,
            input_dim,
            weights: vec![0.0; out_dim * fd],
            output_box,
            saturation,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.output_box.dim()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.feature_dim(self.input_dim)
    }

    pub fn param_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn with_weights(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.weights.len() {
            return Err(CoreError::DimensionMismatch {
                context: "policy weights",
                expected: self.weights.len(),
                got: flat.len(),
            });
        }
        let mut p = self.clone();
        p.weights.copy_from_slice(flat);
        Ok(p)
    }

    /// Evaluate the policy; output always lands inside the box.
    pub fn eval_into(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.input_dim);
        let fd = self.feature_dim();
        let features = &mut scratch[..fd];
        self.features.write_features(x, features);
        let lo = &self.output_box.lo;
        let hi = &self.output_box.hi;
        for (o, outv) in out.iter_mut().enumerate() {
            let row = &self.weights[o * fd..(o + 1) * fd];
            let mut raw = 0.0;
            for (w, f) in row.iter().zip(features.iter()) {
                raw += w * f;
            }
            *outv = match self.saturation {
                Saturation::Tanh => {
                    let c = 0.5 * (lo[o] + hi[o]);
                    let hw = 0.5 * (hi[o] - lo[o]);
                    c + hw * raw.tanh()
                }
                Saturation::Clamp => raw.clamp(lo[o], hi[o]),
            };
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut scratch = vec![0.0; self.feature_dim()];
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(x, &mut scratch, &mut out);
        out
    }
}

/// A searchable set of policies sharing one template. A non-trainable family
/// is a singleton containing only the template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFamily {
    pub template: PolicyParams,
    pub trainable: bool,
}

impl PolicyFamily {
    pub fn new(template: PolicyParams) -> Self {
        PolicyFamily {
            template,
            trainable: true,
        }
    }

    pub fn singleton(template: PolicyParams) -> Self {
        PolicyFamily {
            template,
            trainable: false,
        }
    }

    /// Number of free parameters seen by the optimizer.
    pub fn param_dim(&self) -> usize {
        if self.trainable {
            self.template.param_dim()
        } else {
            0
        }
    }

    pub fn instantiate(&self, flat: &[f64]) -> Result<PolicyParams> {
        if self.trainable {
            self.template.with_weights(flat)
        } else {
            if !flat.is_empty() {
                return Err(CoreError::invalid("singleton family takes no parameters"));
            }
            Ok(self.template.clone())
        }
    }

    /// The neutral member: zero weights, i.e. the box-center policy.
    pub fn neutral(&self) -> PolicyParams {
        self.template
            .with_weights(&vec![0.0; self.template.param_dim()])
            .expect("template-shaped zero vector")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize) -> Bounds {
        Bounds::symmetric(1.0, dim).unwrap()
    }

    #[test]
    fn zero_weights_give_box_center() {
        let b = Bounds::new(vec![0.5, -2.0], vec![1.5, 2.0]).unwrap();
        let p = PolicyParams::new(FeatureMap::Identity, 3, b, Saturation::Tanh);
        assert_eq!(p.eval(&[0.3, -0.7, 2.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn outputs_stay_in_box_for_extreme_weights() {
        let mut p = PolicyParams::new(FeatureMap::Identity, 2, unit_box(1), Saturation::Tanh);
        p.weights = vec![1e6, -1e6, 1e6];
        for x in [[-5.0, 5.0], [100.0, -3.0], [0.0, 0.0]] {
            let y = p.eval(&x);
            assert!(p.output_box.contains(&y), "{y:?}");
        }
    }

    #[test]
    fn radial_grid_covers_ranges() {
        let fm = FeatureMap::radial_grid(
            &[(-1.0, 1.0), (0.0, 4.0)],
            &[3, 2],
            vec![None, None],
            1.0,
        )
        .unwrap();
        assert_eq!(fm.feature_dim(2), 7);
        let mut out = vec![0.0; 7];
        fm.write_features(&[0.0, 2.0], &mut out);
        assert!((out[6] - 1.0).abs() < 1e-15);
        assert!(out[..6].iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn circular_distance_wraps() {
        let fm = FeatureMap::Radial {
            centers: vec![vec![std::f64::consts::PI]],
            inv_lengthscales: vec![1.0],
            periods: vec![Some(2.0 * std::f64::consts::PI)],
        };
        let mut a = vec![0.0; 2];
        let mut b = vec![0.0; 2];
        fm.write_features(&[std::f64::consts::PI - 0.1], &mut a);
        fm.write_features(&[-std::f64::consts::PI + 0.1], &mut b);
        assert!((a[0] - b[0]).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut p = PolicyParams::new(FeatureMap::Identity, 2, unit_box(2), Saturation::Tanh);
        p.weights = vec![0.1, -0.2, 3.0e-17, 1.0 / 3.0, -7.5, 2.0_f64.sqrt()];
        let text = serde_json::to_string(&p).unwrap();
        let back: PolicyParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        for (a, b) in p.weights.iter().zip(&back.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn singleton_family_has_no_free_params() {
        let p = PolicyParams::new(FeatureMap::Constant, 2, unit_box(1), Saturation::Tanh);
        let fam = PolicyFamily::singleton(p);
        assert_eq!(fam.param_dim(), 0);
        assert!(fam.instantiate(&[1.0]).is_err());
        assert!(fam.instantiate(&[]).is_ok());
    }
}
