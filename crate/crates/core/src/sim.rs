//! Batched closed-loop value estimation. Candidate policy tuples roll out in
//! lockstep over the horizon so model queries amortize into matrix products;
//! noise realizations are shared across candidates (common random numbers)
//! to make value comparisons low-variance.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{CoreError, Result};
use crate::gp::GpDynamicsModel;
use crate::policy::PolicyParams;
use crate::seed::stream_rng;
use crate::types::{AdversaryAction, AgentAction, State};

/// Dynamics backing a rollout: the true environment, the posterior mean, the
/// posterior with sampled epistemic outcomes, or the tube-reparameterized
/// model steered by a hallucination policy.
#[derive(Clone, Copy)]
pub enum DynamicsView<'a> {
    True,
    Mean {
        model: &'a GpDynamicsModel,
    },
    /// One-step posterior sampling: next = mean + std (.) xi + noise with xi
    /// standard normal per (particle, step). This is the expectation over
    /// both epistemic and aleatoric uncertainty that the non-exploring
    /// baseline optimizes.
    Posterior {
        model: &'a GpDynamicsModel,
    },
    Hallucinated {
        model: &'a GpDynamicsModel,
        beta: f64,
        eta: &'a PolicyParams,
    },
}

/// One policy tuple to evaluate. `eta` overrides the view's hallucination
/// policy so populations of hallucination candidates can share a batch.
#[derive(Clone, Copy)]
pub struct CandidateTuple<'a> {
    pub agent: &'a PolicyParams,
    pub adversary: &'a PolicyParams,
    pub eta: Option<&'a PolicyParams>,
}

/// Monte Carlo estimate of the episodic return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub particles: usize,
    /// Noise-stream label; reusing it reproduces the estimate exactly.
    pub noise_seed: u64,
}

/// Pre-drawn noise shared by every candidate in a batch.
struct NoiseTensor {
    /// [particle][step] -> state-dim noise vector
    noise: Vec<Vec<Vec<f64>>>,
    /// [particle][step] -> uniform coin
    coins: Vec<Vec<f64>>,
    /// [particle][step] -> state-dim standard normals for posterior sampling
    epistemic: Vec<Vec<Vec<f64>>>,
}

fn draw_noise_tensor(
    env: &dyn Environment,
    particles: usize,
    noise_seed: u64,
) -> NoiseTensor {
    let spec = env.spec();
    let mut noise = Vec::with_capacity(particles);
    let mut coins = Vec::with_capacity(particles);
    let mut epistemic = Vec::with_capacity(particles);
    for k in 0..particles {
        let mut rng = stream_rng(noise_seed, "rollout-noise", &[k as u64]);
        let mut per_step = Vec::with_capacity(spec.horizon);
        let mut per_coin = Vec::with_capacity(spec.horizon);
        for _ in 0..spec.horizon {
            let w: Vec<f64> = spec
                .noise_std
                .iter()
                .map(|&s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s * z
                })
                .collect();
            per_step.push(w);
            per_coin.push(rand::Rng::gen(&mut rng));
        }
        noise.push(per_step);
        coins.push(per_coin);
        let mut erng = stream_rng(noise_seed, "rollout-epistemic", &[k as u64]);
        let mut per_eps = Vec::with_capacity(spec.horizon);
        for _ in 0..spec.horizon {
            let xi: Vec<f64> = (0..spec.state_dim)
                .map(|_| StandardNormal.sample(&mut erng))
                .collect();
            per_eps.push(xi);
        }
        epistemic.push(per_eps);
    }
    NoiseTensor {
        noise,
        coins,
        epistemic,
    }
}

/// Evaluates every candidate under shared noise; returns one estimate per
/// candidate, in order.
pub fn evaluate_candidates(
    env: &dyn Environment,
    view: DynamicsView<'_>,
    candidates: &[CandidateTuple<'_>],
    particles: usize,
    noise_seed: u64,
) -> Result<Vec<ValueEstimate>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    if particles == 0 {
        return Err(CoreError::invalid("particle count must be at least 1"));
    }
    let tensor = draw_noise_tensor(env, particles, noise_seed);
    let returns = match view {
        DynamicsView::True => rollout_true(env, candidates, particles, &tensor)?,
        DynamicsView::Mean { model } => {
            rollout_model(env, model, ModelStep::Tube { beta: 0.0 }, candidates, particles, &tensor)?
        }
        DynamicsView::Posterior { model } => rollout_model(
            env,
            model,
            ModelStep::PosteriorSample,
            candidates,
            particles,
            &tensor,
        )?,
        DynamicsView::Hallucinated { model, beta, .. } => {
            rollout_model(env, model, ModelStep::Tube { beta }, candidates, particles, &tensor)?
        }
    };
    let mut out = Vec::with_capacity(candidates.len());
    aggregate(&returns, candidates.len(), particles, noise_seed, &mut out);
    Ok(out)
}

fn rollout_true(
    env: &dyn Environment,
    candidates: &[CandidateTuple<'_>],
    particles: usize,
    tensor: &NoiseTensor,
) -> Result<Vec<f64>> {
    let spec = env.spec();
    let mut returns = vec![0.0; candidates.len() * particles];
    let mut scratch = vec![0.0; 64];
    for (c, cand) in candidates.iter().enumerate() {
        ensure_scratch(&mut scratch, cand);
        for k in 0..particles {
            let mut state = spec.initial_state.clone();
            let mut total = 0.0;
            for h in 0..spec.horizon {
                let mut u = vec![0.0; spec.action_dim];
                cand.agent.eval_into(&state.0, &mut scratch, &mut u);
                let mut adv = vec![0.0; spec.adversary_dim];
                cand.adversary.eval_into(&state.0, &mut scratch, &mut adv);
                let (next, reward) = env.step_with_coin(
                    &state,
                    &AgentAction(u),
                    &AdversaryAction(adv),
                    &tensor.noise[k][h],
                    tensor.coins[k][h],
                )?;
                if !next.is_finite() || !reward.is_finite() {
                    return Err(CoreError::NonFiniteRollout { step: h, candidate: c });
                }
                total += reward;
                state = next;
            }
            returns[c * particles + k] = total;
        }
    }
    Ok(returns)
}

fn ensure_scratch(scratch: &mut Vec<f64>, cand: &CandidateTuple<'_>) {
    let need = cand
        .agent
        .feature_dim()
        .max(cand.adversary.feature_dim())
        .max(cand.eta.map_or(0, |e| e.feature_dim()));
    if scratch.len() < need {
        scratch.resize(need, 0.0);
    }
}

/// How model rollouts turn posterior moments into next states.
#[derive(Clone, Copy)]
pub(crate) enum ModelStep {
    /// Tube reparameterization `mean + beta * eta (.) std`; beta 0 is the
    /// plain mean model.
    Tube { beta: f64 },
    /// Per-step epistemic sample `mean + std (.) xi`.
    PosteriorSample,
}

fn rollout_model(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    step_rule: ModelStep,
    candidates: &[CandidateTuple<'_>],
    particles: usize,
    tensor: &NoiseTensor,
) -> Result<Vec<f64>> {
    let spec = env.spec();
    let p = spec.state_dim;
    let q = spec.action_dim;
    let qa = spec.adversary_dim;
    let b = candidates.len() * particles;

    let mut states = Array2::<f64>::zeros((b, p));
    for mut row in states.outer_iter_mut() {
        for (v, &s0) in row.iter_mut().zip(&spec.initial_state.0) {
            *v = s0;
        }
    }
    let mut actions = Array2::<f64>::zeros((b, q));
    let mut adversaries = Array2::<f64>::zeros((b, qa));
    let mut returns = vec![0.0; b];
    let mut scratch = vec![0.0; 64];
    let mut joint = vec![0.0; p + q + qa];
    let mut eta_out = vec![0.0; p];

    for h in 0..spec.horizon {
        // policy evaluations, row-wise
        for i in 0..b {
            let cand = &candidates[i / particles];
            ensure_scratch(&mut scratch, cand);
            let srow = states.row(i);
            let s = srow.as_slice().expect("contiguous state row");
            cand.agent
                .eval_into(s, &mut scratch, actions.row_mut(i).as_slice_mut().unwrap());
            cand.adversary.eval_into(
                s,
                &mut scratch,
                adversaries.row_mut(i).as_slice_mut().unwrap(),
            );
        }
        let (mean, std) = model.predict_batch(&states, &actions, &adversaries)?;

        for i in 0..b {
            let cand = &candidates[i / particles];
            let k = i % particles;
            let s = states.row(i);
            let u = actions.row(i);
            let adv = adversaries.row(i);
            // hallucination offset within the tube
            let eta = cand.eta;
            if let Some(eta_policy) = eta {
                joint[..p].copy_from_slice(s.as_slice().unwrap());
                joint[p..p + q].copy_from_slice(u.as_slice().unwrap());
                joint[p + q..].copy_from_slice(adv.as_slice().unwrap());
                ensure_scratch(&mut scratch, cand);
                eta_policy.eval_into(&joint, &mut scratch, &mut eta_out);
                for v in eta_out.iter_mut() {
                    *v = v.clamp(-1.0, 1.0);
                }
            } else {
                eta_out.fill(0.0);
            }
            let w = &tensor.noise[k][h];
            let mut next = vec![0.0; p];
            match step_rule {
                ModelStep::Tube { beta } => {
                    for c in 0..p {
                        next[c] = mean[[i, c]] + beta * eta_out[c] * std[[i, c]] + w[c];
                    }
                }
                ModelStep::PosteriorSample => {
                    let xi = &tensor.epistemic[k][h];
                    for c in 0..p {
                        next[c] = mean[[i, c]] + xi[c] * std[[i, c]] + w[c];
                    }
                }
            }
            let next = env.wrap_state(State(next));
            if !next.is_finite() {
                return Err(CoreError::NonFiniteRollout {
                    step: h,
                    candidate: i / particles,
                });
            }
            let reward = env.reward(
                &State(s.to_vec()),
                &AgentAction(u.to_vec()),
                &AdversaryAction(adv.to_vec()),
                &next,
            );
            if !reward.is_finite() {
                return Err(CoreError::NonFiniteRollout {
                    step: h,
                    candidate: i / particles,
                });
            }
            returns[i] += reward;
            for c in 0..p {
                states[[i, c]] = next.0[c];
            }
        }
    }
    Ok(returns)
}

/// Tube-view batch evaluation with per-candidate hallucination policies.
/// `beta = 0` reduces to the mean model. Large batches are chunked to bound
/// the working-set size of the per-step matrix products.
pub(crate) fn evaluate_tube_batch(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    candidates: &[CandidateTuple<'_>],
    particles: usize,
    noise_seed: u64,
) -> Result<Vec<ValueEstimate>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    if particles == 0 {
        return Err(CoreError::invalid("particle count must be at least 1"));
    }
    let tensor = draw_noise_tensor(env, particles, noise_seed);
    let max_rows = 4096usize;
    let chunk = (max_rows / particles).max(1);
    let mut out = Vec::with_capacity(candidates.len());
    for group in candidates.chunks(chunk) {
        let returns = rollout_model(env, model, ModelStep::Tube { beta }, group, particles, &tensor)?;
        aggregate(&returns, group.len(), particles, noise_seed, &mut out);
    }
    Ok(out)
}

/// Posterior-sampling batch evaluation (the expected objective of the
/// non-exploring baseline), chunked like the tube path.
pub(crate) fn evaluate_posterior_batch(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    candidates: &[CandidateTuple<'_>],
    particles: usize,
    noise_seed: u64,
) -> Result<Vec<ValueEstimate>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    if particles == 0 {
        return Err(CoreError::invalid("particle count must be at least 1"));
    }
    let tensor = draw_noise_tensor(env, particles, noise_seed);
    let chunk = (4096usize / particles).max(1);
    let mut out = Vec::with_capacity(candidates.len());
    for group in candidates.chunks(chunk) {
        let returns = rollout_model(
            env,
            model,
            ModelStep::PosteriorSample,
            group,
            particles,
            &tensor,
        )?;
        aggregate(&returns, group.len(), particles, noise_seed, &mut out);
    }
    Ok(out)
}

fn aggregate(
    returns: &[f64],
    count: usize,
    particles: usize,
    noise_seed: u64,
    out: &mut Vec<ValueEstimate>,
) {
    for c in 0..count {
        let vals = &returns[c * particles..(c + 1) * particles];
        let mean = vals.iter().sum::<f64>() / particles as f64;
        let std_error = if particles > 1 {
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (particles as f64 - 1.0);
            (var / particles as f64).sqrt()
        } else {
            0.0
        };
        out.push(ValueEstimate {
            mean,
            std_error,
            particles,
            noise_seed,
        });
    }
}

/// Monte Carlo estimate of the episodic return of one policy pair under a
/// dynamics view.
pub fn estimate_j(
    env: &dyn Environment,
    view: DynamicsView<'_>,
    agent: &PolicyParams,
    adversary: &PolicyParams,
    particles: usize,
    noise_seed: u64,
) -> Result<ValueEstimate> {
    let eta = match view {
        DynamicsView::Hallucinated { eta, .. } => Some(eta),
        _ => None,
    };
    let candidates = [CandidateTuple {
        agent,
        adversary,
        eta,
    }];
    Ok(evaluate_candidates(env, view, &candidates, particles, noise_seed)?
        .pop()
        .expect("one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LinearToyEnv, QuadraticReward};
    use crate::policy::{FeatureMap, PolicyFamily, PolicyParams, Saturation};
    use crate::types::Bounds;

    fn toy(noise: f64, horizon: usize) -> LinearToyEnv {
        LinearToyEnv::builder()
            .dynamics(0.8, 1.0, -0.5)
            .reward(QuadraticReward::state_cost())
            .horizon(horizon)
            .noise_std(noise)
            .initial_state(1.0)
            .build()
            .unwrap()
    }

    fn zero(env: &LinearToyEnv) -> (PolicyParams, PolicyParams) {
        let pi = PolicyFamily::new(PolicyParams::new(
            FeatureMap::Identity,
            1,
            env.spec().action_box.clone(),
            Saturation::Tanh,
        ))
        .neutral();
        let adv = PolicyFamily::new(PolicyParams::new(
            FeatureMap::Identity,
            1,
            env.spec().adversary_box.clone(),
            Saturation::Tanh,
        ))
        .neutral();
        (pi, adv)
    }

    #[test]
    fn deterministic_environment_has_zero_std_error() {
        let env = toy(0.0, 6);
        let (pi, adv) = zero(&env);
        let est = estimate_j(&env, DynamicsView::True, &pi, &adv, 7, 123).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.particles, 7);
    }

    #[test]
    fn zero_policy_value_matches_closed_form() {
        let env = toy(0.0, 8);
        let (pi, adv) = zero(&env);
        let est = estimate_j(&env, DynamicsView::True, &pi, &adv, 1, 5).unwrap();
        // s_h = 0.8^h, r_h = -s_h^2
        let mut want = 0.0;
        let mut s: f64 = 1.0;
        for _ in 0..8 {
            want -= s * s;
            s *= 0.8;
        }
        assert!((est.mean - want).abs() < 1e-10);
    }

    #[test]
    fn same_seed_gives_identical_estimates() {
        let env = toy(0.05, 6);
        let (pi, adv) = zero(&env);
        let a = estimate_j(&env, DynamicsView::True, &pi, &adv, 4, 77).unwrap();
        let b = estimate_j(&env, DynamicsView::True, &pi, &adv, 4, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn candidates_share_noise_realizations() {
        let env = toy(0.1, 5);
        let (pi, adv) = zero(&env);
        let batch = [
            CandidateTuple { agent: &pi, adversary: &adv, eta: None },
            CandidateTuple { agent: &pi, adversary: &adv, eta: None },
        ];
        let vals = evaluate_candidates(&env, DynamicsView::True, &batch, 3, 9).unwrap();
        assert_eq!(vals[0], vals[1]);
    }
}
