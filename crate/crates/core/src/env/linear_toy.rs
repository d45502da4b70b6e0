//! Scalar linear benchmark `s' = a*s + b*u + b_adv*adv + noise` with a
//! configurable quadratic reward. Cheap enough for grid-search oracles and
//! exact-regret experiments.

use serde::{Deserialize, Serialize};

use super::{Environment, EnvironmentSpec};
use crate::error::{CoreError, Result};
use crate::types::{AdversaryAction, AgentAction, Bounds, State};

/// Reward `c_s*s + c_u*u + c_adv*adv + q_s*s^2 + q_u*u^2 + q_adv*adv^2 +
/// q_cross*u*adv`, where `s` is the current state, or the successor state
/// when `on_successor` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticReward {
    pub c_s: f64,
    pub c_u: f64,
    pub c_adv: f64,
    pub q_s: f64,
    pub q_u: f64,
    pub q_adv: f64,
    pub q_cross: f64,
    pub on_successor: bool,
}

impl QuadraticReward {
    /// Pure state-tracking cost `-s^2`.
    pub fn state_cost() -> Self {
        QuadraticReward {
            c_s: 0.0,
            c_u: 0.0,
            c_adv: 0.0,
            q_s: -1.0,
            q_u: 0.0,
            q_adv: 0.0,
            q_cross: 0.0,
            on_successor: false,
        }
    }

    /// Reward equal to the successor state itself.
    pub fn successor_state() -> Self {
        QuadraticReward {
            c_s: 1.0,
            c_u: 0.0,
            c_adv: 0.0,
            q_s: 0.0,
            q_u: 0.0,
            q_adv: 0.0,
            q_cross: 0.0,
            on_successor: true,
        }
    }

    fn eval(&self, s: f64, u: f64, adv: f64) -> f64 {
        self.c_s * s
            + self.c_u * u
            + self.c_adv * adv
            + self.q_s * s * s
            + self.q_u * u * u
            + self.q_adv * adv * adv
            + self.q_cross * u * adv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearToyEnv {
    pub a: f64,
    pub b: f64,
    pub b_adv: f64,
    pub reward: QuadraticReward,
    spec: EnvironmentSpec,
}

pub struct LinearToyBuilder {
    a: f64,
    b: f64,
    b_adv: f64,
    reward: QuadraticReward,
    horizon: usize,
    noise_std: f64,
    initial_state: f64,
    action_limit: f64,
    adversary_limit: f64,
}

impl LinearToyEnv {
    pub fn builder() -> LinearToyBuilder {
        LinearToyBuilder {
            a: 0.8,
            b: 1.0,
            b_adv: -0.5,
            reward: QuadraticReward::state_cost(),
            horizon: 5,
            noise_std: 0.01,
            initial_state: 1.0,
            action_limit: 1.0,
            adversary_limit: 1.0,
        }
    }
}

impl LinearToyBuilder {
    pub fn dynamics(mut self, a: f64, b: f64, b_adv: f64) -> Self {
        self.a = a;
        self.b = b;
        self.b_adv = b_adv;
        self
    }

    pub fn reward(mut self, r: QuadraticReward) -> Self {
        self.reward = r;
        self
    }

    pub fn horizon(mut self, h: usize) -> Self {
        self.horizon = h;
        self
    }

    pub fn noise_std(mut self, s: f64) -> Self {
        self.noise_std = s;
        self
    }

    pub fn initial_state(mut self, s0: f64) -> Self {
        self.initial_state = s0;
        self
    }

    pub fn action_limit(mut self, l: f64) -> Self {
        self.action_limit = l;
        self
    }

    pub fn adversary_limit(mut self, l: f64) -> Self {
        self.adversary_limit = l;
        self
    }

    pub fn build(self) -> Result<LinearToyEnv> {
        if !(self.a.abs() <= 2.0) {
            return Err(CoreError::invalid("|a| must stay bounded for desk-scale rollouts"));
        }
        let spec = EnvironmentSpec {
            state_dim: 1,
            action_dim: 1,
            adversary_dim: 1,
            horizon: self.horizon,
            initial_state: State(vec![self.initial_state]),
            action_box: Bounds::symmetric(self.action_limit, 1)?,
            adversary_box: Bounds::symmetric(self.adversary_limit, 1)?,
            noise_std: vec![self.noise_std],
            dt: 1.0,
        };
        spec.validate()?;
        Ok(LinearToyEnv {
            a: self.a,
            b: self.b,
            b_adv: self.b_adv,
            reward: self.reward,
            spec,
        })
    }
}

impl Environment for LinearToyEnv {
    fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    fn step(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        noise: &[f64],
    ) -> Result<(State, f64)> {
        self.spec.action_box.check(&action.0)?;
        self.spec.adversary_box.check(&adversary.0)?;
        if noise.len() != 1 {
            return Err(CoreError::DimensionMismatch {
                context: "linear toy noise",
                expected: 1,
                got: noise.len(),
            });
        }
        let s = state.0[0];
        let u = action.0[0];
        let adv = adversary.0[0];
        let next = State(vec![self.a * s + self.b * u + self.b_adv * adv + noise[0]]);
        let reward = self.reward(state, action, adversary, &next);
        Ok((next, reward))
    }

    fn reward(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        next_state: &State,
    ) -> f64 {
        let s = if self.reward.on_successor {
            next_state.0[0]
        } else {
            state.0[0]
        };
        self.reward.eval(s, action.0[0], adversary.0[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_matches_direct_formula() {
        let env = LinearToyEnv::builder()
            .dynamics(1.0, 1.0, -0.5)
            .build()
            .unwrap();
        let (next, _) = env
            .step(
                &State(vec![1.0]),
                &AgentAction(vec![0.2]),
                &AdversaryAction(vec![0.4]),
                &[0.0],
            )
            .unwrap();
        assert!((next.0[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn successor_reward_reads_next_state() {
        let env = LinearToyEnv::builder()
            .dynamics(0.0, 1.0, 0.0)
            .reward(QuadraticReward::successor_state())
            .build()
            .unwrap();
        let (_, r) = env
            .step(
                &State(vec![5.0]),
                &AgentAction(vec![0.25]),
                &AdversaryAction(vec![0.0]),
                &[0.0],
            )
            .unwrap();
        assert!((r - 0.25).abs() < 1e-15);
    }
}
