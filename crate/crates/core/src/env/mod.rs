//! Analytic control environments with an explicit adversary input channel.
//!
//! Environments are immutable specs: `step` is a pure function of
//! (state, actions, noise), so rollouts are reproducible from a noise stream.

mod linear_toy;
mod pendulum;
mod wrappers;

pub use linear_toy::{LinearToyEnv, QuadraticReward};
pub use pendulum::{AdversaryChannel, PendulumEnv};
pub use wrappers::{
    mixture_step, set_parameter, ActionRobustWrapper, ParameterRobustWrapper, ParameterScalable,
};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::policy::PolicyParams;
use crate::types::{AdversaryAction, AgentAction, Bounds, State, Trajectory, Transition};

/// Static description of an environment instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub adversary_dim: usize,
    pub horizon: usize,
    pub initial_state: State,
    pub action_box: Bounds,
    pub adversary_box: Bounds,
    /// Per-dimension std of the additive transition noise.
    pub noise_std: Vec<f64>,
    /// Integration timestep in seconds (ignored by discrete-map toys).
    pub dt: f64,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(CoreError::invalid("horizon must be at least 1"));
        }
        if self.noise_std.len() != self.state_dim {
            return Err(CoreError::DimensionMismatch {
                context: "noise_std",
                expected: self.state_dim,
                got: self.noise_std.len(),
            });
        }
        if self.noise_std.iter().any(|&s| !(s >= 0.0)) {
            return Err(CoreError::invalid("noise_std must be non-negative"));
        }
        if self.initial_state.dim() != self.state_dim {
            return Err(CoreError::DimensionMismatch {
                context: "initial_state",
                expected: self.state_dim,
                got: self.initial_state.dim(),
            });
        }
        if self.action_box.dim() != self.action_dim || self.adversary_box.dim() != self.adversary_dim
        {
            return Err(CoreError::invalid("action box dimensions disagree with spec"));
        }
        Ok(())
    }
}

/// How the dynamics model should embed the state before regression.
/// Circular coordinates are expanded to (sin, cos) so the regression input is
/// continuous across the seam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputEmbedding {
    Identity,
    TrigAngles { periodic_dims: Vec<usize> },
}

impl InputEmbedding {
    pub fn state_embedding_dim(&self, state_dim: usize) -> usize {
        match self {
            InputEmbedding::Identity => state_dim,
            InputEmbedding::TrigAngles { periodic_dims } => state_dim + periodic_dims.len(),
        }
    }

    pub fn write_state_embedding(&self, s: &[f64], out: &mut [f64]) {
        match self {
            InputEmbedding::Identity => out[..s.len()].copy_from_slice(s),
            InputEmbedding::TrigAngles { periodic_dims } => {
                let mut j = 0;
                for (i, &v) in s.iter().enumerate() {
                    if periodic_dims.contains(&i) {
                        out[j] = v.sin();
                        out[j + 1] = v.cos();
                        j += 2;
                    } else {
                        out[j] = v;
                        j += 1;
                    }
                }
            }
        }
    }
}

/// An analytic environment with agent and adversary input channels.
///
/// `step` never clamps: actions outside their boxes are rejected so the
/// compact-action-set invariant is enforced in exactly one place. Policies
/// saturate internally instead.
pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvironmentSpec;

    /// Deterministic transition `f(s, u, adv) + noise` with the reward of the
    /// executed step.
    fn step(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        noise: &[f64],
    ) -> Result<(State, f64)>;

    /// Reward of a step; may read the successor state.
    fn reward(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        next_state: &State,
    ) -> f64;

    /// Step with an extra uniform draw for environments whose transition uses
    /// randomness beyond additive noise (the action-mixture wrapper).
    fn step_with_coin(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        noise: &[f64],
        _coin: f64,
    ) -> Result<(State, f64)> {
        self.step(state, action, adversary, noise)
    }

    /// Keep circular coordinates in their canonical interval.
    fn wrap_state(&self, state: State) -> State {
        state
    }

    /// Periods of circular state coordinates (for wrap-aware model targets).
    fn state_periods(&self) -> Vec<Option<f64>> {
        vec![None; self.spec().state_dim]
    }

    /// Recommended model-input embedding for this environment.
    fn input_embedding(&self) -> InputEmbedding {
        InputEmbedding::Identity
    }
}

/// Draw one step worth of randomness: a noise vector and a uniform coin.
pub fn draw_step_noise<R: Rng + ?Sized>(spec: &EnvironmentSpec, rng: &mut R) -> (Vec<f64>, f64) {
    let noise: Vec<f64> = spec
        .noise_std
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(rng);
            s * z
        })
        .collect();
    let coin: f64 = rng.gen();
    (noise, coin)
}

/// Closed-loop H-step rollout from the environment's initial state.
///
/// Policies must map states into the action boxes; violations are an error,
/// not a silent clamp.
pub fn rollout<R: Rng + ?Sized>(
    env: &dyn Environment,
    agent_policy: &PolicyParams,
    adversary_policy: &PolicyParams,
    noise_rng: &mut R,
    episode_index: usize,
) -> Result<Trajectory> {
    let spec = env.spec();
    let mut state = spec.initial_state.clone();
    let mut transitions = Vec::with_capacity(spec.horizon);
    let mut total_reward = 0.0;
    let mut scratch = vec![
        0.0;
        agent_policy
            .feature_dim()
            .max(adversary_policy.feature_dim())
    ];
    for h in 0..spec.horizon {
        let mut u = vec![0.0; spec.action_dim];
        agent_policy.eval_into(&state.0, &mut scratch, &mut u);
        spec.action_box.check(&u)?;
        let mut adv = vec![0.0; spec.adversary_dim];
        adversary_policy.eval_into(&state.0, &mut scratch, &mut adv);
        spec.adversary_box.check(&adv)?;

        let (noise, coin) = draw_step_noise(spec, noise_rng);
        let action = AgentAction(u);
        let adversary = AdversaryAction(adv);
        let (next, reward) = env.step_with_coin(&state, &action, &adversary, &noise, coin)?;
        if !next.is_finite() || !reward.is_finite() {
            return Err(CoreError::NonFiniteRollout {
                step: h,
                candidate: 0,
            });
        }
        total_reward += reward;
        transitions.push(Transition {
            state: state.clone(),
            agent_action: action,
            adversary_action: adversary,
            next_state: next.clone(),
            step_index: h,
            episode_index,
        });
        state = next;
    }
    Ok(Trajectory {
        transitions,
        total_reward,
    })
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    // map into (-pi, pi]
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FeatureMap, PolicyFamily, Saturation};
    use crate::seed::stream_rng;
    use crate::types::chain_check;

    fn zero_policy(input_dim: usize, box_: Bounds) -> PolicyParams {
        PolicyFamily::new(PolicyParams::new(
            FeatureMap::Constant,
            input_dim,
            box_,
            Saturation::Tanh,
        ))
        .neutral()
    }

    #[test]
    fn wrap_angle_is_canonical() {
        use std::f64::consts::PI;
        assert!((wrap_angle(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_angle(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn zero_policies_zero_noise_keep_identity_toy_constant() {
        let env = LinearToyEnv::builder()
            .dynamics(1.0, 1.0, -0.5)
            .horizon(4)
            .noise_std(0.0)
            .initial_state(0.7)
            .build()
            .unwrap();
        let pi = zero_policy(1, env.spec().action_box.clone());
        let pi_adv = zero_policy(1, env.spec().adversary_box.clone());
        let mut rng = stream_rng(0, "environment-noise", &[1]);
        let traj = rollout(&env, &pi, &pi_adv, &mut rng, 1).unwrap();
        assert!(chain_check(&traj));
        for t in &traj.transitions {
            assert_eq!(t.next_state.0[0], 0.7);
        }
    }

    #[test]
    fn rollouts_are_bit_identical_under_one_seed() {
        let env = PendulumEnv::swing_up_default().unwrap();
        let pi = zero_policy(2, env.spec().action_box.clone());
        let pi_adv = zero_policy(2, env.spec().adversary_box.clone());
        let mut rng1 = stream_rng(42, "environment-noise", &[3]);
        let mut rng2 = stream_rng(42, "environment-noise", &[3]);
        let t1 = rollout(&env, &pi, &pi_adv, &mut rng1, 3).unwrap();
        let t2 = rollout(&env, &pi, &pi_adv, &mut rng2, 3).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn rollout_generated_trajectories_chain() {
        let env = PendulumEnv::swing_up_default().unwrap();
        let pi = zero_policy(2, env.spec().action_box.clone());
        let pi_adv = zero_policy(2, env.spec().adversary_box.clone());
        let mut rng = stream_rng(9, "environment-noise", &[0]);
        let traj = rollout(&env, &pi, &pi_adv, &mut rng, 1).unwrap();
        assert!(chain_check(&traj));
        let recomputed: f64 = traj
            .transitions
            .iter()
            .map(|t| env.reward(&t.state, &t.agent_action, &t.adversary_action, &t.next_state))
            .sum();
        assert!((recomputed - traj.total_reward).abs() < 1e-12);
    }
}
