//! Reparameterized dynamics views `mean + beta * eta * std` with the
//! hallucination channel `eta` clamped to [-1, 1] per coordinate, so the
//! noise-free prediction always stays inside the confidence tube.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::gp::GpDynamicsModel;
use crate::policy::PolicyParams;
use crate::types::State;

/// Which optimizer direction trains the hallucination policy. The formula is
/// identical for both roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalluRole {
    Optimistic,
    Pessimistic,
}

/// Immutable dynamics view over a fitted model snapshot.
///
/// `eta = None` is the mean model; otherwise the policy maps the joint
/// (state, action, adversary action) input to [-1, 1]^p and steers the
/// prediction within the tube.
#[derive(Clone)]
pub struct HallucinatedDynamics<'a> {
    pub model: &'a GpDynamicsModel,
    pub beta: f64,
    pub eta: Option<&'a PolicyParams>,
    pub role: HalluRole,
}

impl<'a> HallucinatedDynamics<'a> {
    pub fn new(
        model: &'a GpDynamicsModel,
        beta: f64,
        eta: Option<&'a PolicyParams>,
        role: HalluRole,
    ) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(CoreError::invalid("beta must be non-negative"));
        }
        if let Some(e) = eta {
            let want = model.state_dim() + model.action_dim() + model.adversary_dim();
            if e.input_dim != want {
                return Err(CoreError::DimensionMismatch {
                    context: "hallucination policy input",
                    expected: want,
                    got: e.input_dim,
                });
            }
            if e.out_dim() != model.state_dim() {
                return Err(CoreError::DimensionMismatch {
                    context: "hallucination policy output",
                    expected: model.state_dim(),
                    got: e.out_dim(),
                });
            }
        }
        Ok(HallucinatedDynamics {
            model,
            beta,
            eta,
            role,
        })
    }

    /// Evaluate eta at the joint input, hard-clamped to [-1, 1].
    pub fn eta_values(&self, s: &[f64], u: &[f64], adv: &[f64], out: &mut [f64]) {
        match self.eta {
            None => out.fill(0.0),
            Some(eta) => {
                let mut joint = Vec::with_capacity(s.len() + u.len() + adv.len());
                joint.extend_from_slice(s);
                joint.extend_from_slice(u);
                joint.extend_from_slice(adv);
                let mut scratch = vec![0.0; eta.feature_dim()];
                eta.eval_into(&joint, &mut scratch, out);
                for v in out.iter_mut() {
                    *v = v.clamp(-1.0, 1.0);
                }
            }
        }
    }

    /// One reparameterized step: `mean + beta * eta (.) std + noise`.
    /// The output is not wrapped; callers enforce environment state
    /// conventions so the tube identity stays exact.
    pub fn hallucinated_step(
        &self,
        s: &[f64],
        u: &[f64],
        adv: &[f64],
        noise: &[f64],
    ) -> Result<State> {
        if noise.len() != self.model.state_dim() {
            return Err(CoreError::DimensionMismatch {
                context: "hallucinated step noise",
                expected: self.model.state_dim(),
                got: noise.len(),
            });
        }
        let (mean, std) = self.model.predict(s, u, adv)?;
        let mut eta = vec![0.0; self.model.state_dim()];
        self.eta_values(s, u, adv, &mut eta);
        let next = mean
            .iter()
            .zip(&std)
            .zip(eta.iter().zip(noise))
            .map(|((&m, &sd), (&e, &w))| m + self.beta * e * sd + w)
            .collect();
        Ok(State(next))
    }
}

/// Free-function spelling of [`HallucinatedDynamics::hallucinated_step`].
pub fn hallucinated_step(
    view: &HallucinatedDynamics<'_>,
    s: &[f64],
    u: &[f64],
    adv: &[f64],
    noise: &[f64],
) -> Result<State> {
    view.hallucinated_step(s, u, adv, noise)
}

/// True iff the candidate transition function stays inside the confidence
/// tube `|candidate - mean| <= beta * std` at every tested input.
pub fn plausible_membership<F>(
    model: &GpDynamicsModel,
    beta: f64,
    candidate: F,
    test_inputs: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
) -> Result<bool>
where
    F: Fn(&[f64], &[f64], &[f64]) -> Vec<f64>,
{
    for (s, u, adv) in test_inputs {
        let (mean, std) = model.predict(s, u, adv)?;
        let value = candidate(s, u, adv);
        if value.len() != mean.len() {
            return Err(CoreError::DimensionMismatch {
                context: "plausible membership candidate",
                expected: mean.len(),
                got: value.len(),
            });
        }
        for c in 0..mean.len() {
            if (value[c] - mean[c]).abs() > beta * std[c] + 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Lipschitz constants needed by the trajectory-deviation inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub l_f: f64,
    pub l_sigma: f64,
    pub l_pi: f64,
    pub l_pi_adv: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l_f", self.l_f),
            ("l_sigma", self.l_sigma),
            ("l_pi", self.l_pi),
            ("l_pi_adv", self.l_pi_adv),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(CoreError::invalid(format!(
                    "Lipschitz constant {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Per-step growth factor
    /// `1 + (L_f + 2 beta L_sigma) sqrt(1 + L_pi^2 + L_pi_adv^2)`.
    pub fn growth_factor(&self, beta: f64) -> f64 {
        1.0 + (self.l_f + 2.0 * beta * self.l_sigma)
            * (1.0 + self.l_pi * self.l_pi + self.l_pi_adv * self.l_pi_adv).sqrt()
    }
}

/// Checks the per-step deviation inequality between a trajectory of the true
/// system and one generated by any tube member under shared noise and
/// policies:
/// `||s_h - s~_h|| <= 2 beta * growth^(h-1) * sum_{h' < h} sigma_norms[h']`.
///
/// `sigma_norms[h]` is the 2-norm of the model std at the true trajectory's
/// h-th visited input. `bound_scale` is 1 for the real bound; the negative
/// control passes 0.5 to drop the leading factor of 2.
pub fn trajectory_deviation_check(
    true_states: &[State],
    plausible_states: &[State],
    theory: &TheoryParams,
    beta: f64,
    sigma_norms: &[f64],
    bound_scale: f64,
) -> Result<bool> {
    theory.validate()?;
    if true_states.len() != plausible_states.len() {
        return Err(CoreError::DimensionMismatch {
            context: "deviation check trajectories",
            expected: true_states.len(),
            got: plausible_states.len(),
        });
    }
    if sigma_norms.len() + 1 < true_states.len() {
        return Err(CoreError::DimensionMismatch {
            context: "deviation check sigma norms",
            expected: true_states.len() - 1,
            got: sigma_norms.len(),
        });
    }
    let growth = theory.growth_factor(beta);
    let mut sigma_prefix = 0.0;
    for h in 1..true_states.len() {
        sigma_prefix += sigma_norms[h - 1];
        let deviation: f64 = true_states[h]
            .0
            .iter()
            .zip(&plausible_states[h].0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bound =
            bound_scale * 2.0 * beta * growth.powi(h as i32 - 1) * sigma_prefix;
        if deviation > bound + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}
