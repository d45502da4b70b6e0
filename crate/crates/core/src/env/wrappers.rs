//! Wrappers realizing the action-robust and parameter-robust settings on top
//! of a base environment.

use serde::{Deserialize, Serialize};

use super::{Environment, EnvironmentSpec, InputEmbedding, PendulumEnv};
use crate::error::{CoreError, Result};
use crate::types::{AdversaryAction, AgentAction, Bounds, State};

/// Noisy-robust action mixture: with probability `alpha` the adversary's
/// action is executed instead of the agent's. Agent and adversary share one
/// action box; the inner environment's own adversary channel is held neutral.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRobustWrapper<E: Environment> {
    pub inner: E,
    pub alpha: f64,
    spec: EnvironmentSpec,
    inner_neutral: Vec<f64>,
}

impl<E: Environment> ActionRobustWrapper<E> {
    pub fn new(inner: E, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CoreError::invalid("mixture alpha must lie in [0, 1]"));
        }
        let base = inner.spec().clone();
        let spec = EnvironmentSpec {
            adversary_dim: base.action_dim,
            adversary_box: base.action_box.clone(),
            ..base
        };
        let inner_neutral = inner.spec().adversary_box.center();
        Ok(ActionRobustWrapper {
            inner,
            alpha,
            spec,
            inner_neutral,
        })
    }

    /// Executes the inner step with the adversary's action if `coin < alpha`,
    /// the agent's otherwise; the reward is computed on the executed action.
    pub fn mixture_step(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        coin: f64,
        noise: &[f64],
    ) -> Result<(State, f64)> {
        self.spec.action_box.check(&action.0)?;
        self.spec.adversary_box.check(&adversary.0)?;
        let executed = if coin < self.alpha {
            AgentAction(adversary.0.clone())
        } else {
            action.clone()
        };
        self.inner.step(
            state,
            &executed,
            &AdversaryAction(self.inner_neutral.clone()),
            noise,
        )
    }
}

/// Free-function spelling of [`ActionRobustWrapper::mixture_step`].
pub fn mixture_step<E: Environment>(
    wrapper: &ActionRobustWrapper<E>,
    state: &State,
    action: &AgentAction,
    adversary: &AdversaryAction,
    coin: f64,
    noise: &[f64],
) -> Result<(State, f64)> {
    wrapper.mixture_step(state, action, adversary, coin, noise)
}

impl<E: Environment> Environment for ActionRobustWrapper<E> {
    fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    /// Coin-free paths execute the agent action; closed-loop rollouts always
    /// go through `step_with_coin`.
    fn step(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        noise: &[f64],
    ) -> Result<(State, f64)> {
        self.mixture_step(state, action, adversary, 1.0, noise)
    }

    fn step_with_coin(
        &self,
        state: &State,
        action: &AgentAction,
        adversary: &AdversaryAction,
        noise: &[f64],
        coin: f64,
    ) -> Result<(State, f64)> {
        self.mixture_step(state, action, adversary, coin, noise)
    }

    fn reward(
        &self,
        state: &State,
        action: &AgentAction,
        _adversary: &AdversaryAction,
        next_state: &State,
    ) -> f64 {
        self.inner.reward(
            state,
            action,
            &AdversaryAction(self.inner_neutral.clone()),
            next_state,
        )
    }

    fn wrap_state(&self, state: State) -> State {
        self.inner.wrap_state(state)
    }

    fn state_periods(&self) -> Vec<Option<f64>> {
        self.inner.state_periods()
    }

    fn input_embedding(&self) -> InputEmbedding {
        self.inner.input_embedding()
    }
}

/// Environments exposing named physical parameters that can be scaled.
pub trait ParameterScalable: Environment + Sized {
    fn with_parameter_scale(&self, name: &str, value: f64) -> Result<Self>;
}

impl ParameterScalable for PendulumEnv {
    fn with_parameter_scale(&self, name: &str, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(CoreError::invalid(format!(
                "parameter scale for `{name}` must be finite, got {value}"
            )));
        }
        match name {
            "relative_mass" => self.with_relative_mass(value),
            "relative_gravity" => {
                if value <= 0.0 {
                    return Err(CoreError::invalid("relative gravity must be positive"));
                }
                let mut env = self.clone();
                env.gravity = self.gravity * value;
                Ok(env)
            }
            other => Err(CoreError::invalid(format!(
                "pendulum has no scalable parameter `{other}`"
            ))),
        }
    }
}

/// Parameter-robust setting: the adversary is a stateless policy choosing one
/// scalar from `[lo, hi]`; the scaled physics persist for the whole episode
/// because the choosing policy is constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterRobustWrapper<E: ParameterScalable> {
    pub inner: E,
    pub parameter: String,
    pub interval: (f64, f64),
    spec: EnvironmentSpec,
    inner_neutral: Vec<f64>,
}

impl<E: ParameterScalable> ParameterRobustWrapper<E> {
    pub fn new(inner: E, parameter: impl Into<String>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CoreError::invalid(format!(
                "parameter interval must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        let parameter = parameter.into();
        // fail fast on unknown parameter names
        inner.with_parameter_scale(&parameter, 0.5 * (lo + hi))?;
        let base = inner.spec().clone();
        let spec = EnvironmentSpec {
            adversary_dim: 1,
            adversary_box: Bounds::new(vec![lo], vec![hi])?,
            ..base
        };
        let inner_neutral = inner.spec().adversary_box.center();
        Ok(ParameterRobustWrapper {
            inner,
            parameter,
            interval: (lo, hi),
            spec,
            inner_neutral,
        })
    }

    /// Environment instance with the named parameter scaled by `value`
    /// (clamped into the interval).
    pub fn set_parameter(&self, value: f64) -> Result<E> {
        if value.is_nan() {
            return Err(CoreError::invalid("parameter value is NaN"));
        }
        let v = value.clamp(self.interval.0, self.interval.1);
        self.inner.with_parameter_scale(&self.parameter, v)
    }
}

/// Free-function spelling of [`ParameterRobustWrapper::set_parameter`].
pub fn set_parameter<E: ParameterScalable>(
    wrapper: &ParameterRobustWrapper<E>,
    value: f64,
) -> Result<E> {
    wrapper.set_parameter(value)
}

impl<E: ParameterScalable> Environment for ParameterRobustWrapper<E> {
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
        self.spec.adversary_box.check(&adversary.0)?;
        let scaled = self.set_parameter(adversary.0[0])?;
        scaled.step(
            state,
            action,
            &AdversaryAction(self.inner_neutral.clone()),
            noise,
        )
    }

    fn reward(
        &self,
        state: &State,
        action: &AgentAction,
        _adversary: &AdversaryAction,
        next_state: &State,
    ) -> f64 {
        self.inner.reward(
            state,
            action,
            &AdversaryAction(self.inner_neutral.clone()),
            next_state,
        )
    }

    fn wrap_state(&self, state: State) -> State {
        self.inner.wrap_state(state)
    }

    fn state_periods(&self) -> Vec<Option<f64>> {
        self.inner.state_periods()
    }

    fn input_embedding(&self) -> InputEmbedding {
        self.inner.input_embedding()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::rollout;
    use crate::policy::{FeatureMap, PolicyParams, Saturation};
    use crate::seed::stream_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn pendulum() -> PendulumEnv {
        PendulumEnv::swing_up_default().unwrap()
    }

    #[test]
    fn degenerate_mixtures_execute_a_single_policy() {
        let env = pendulum();
        let s = State(vec![1.0, 0.5]);
        let u = AgentAction(vec![2.0]);
        let adv = AdversaryAction(vec![-1.0]);
        let noise = [0.0, 0.0];
        for coin in [0.0, 0.3, 0.999] {
            let w0 = ActionRobustWrapper::new(env.clone(), 0.0).unwrap();
            let got = w0.mixture_step(&s, &u, &adv, coin, &noise).unwrap();
            let want = env
                .step(&s, &u, &AdversaryAction(vec![0.0]), &noise)
                .unwrap();
            assert_eq!(got, want);

            let w1 = ActionRobustWrapper::new(env.clone(), 1.0).unwrap();
            let got = w1.mixture_step(&s, &u, &adv, coin, &noise).unwrap();
            let want = env
                .step(&s, &AgentAction(vec![-1.0]), &AdversaryAction(vec![0.0]), &noise)
                .unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn mixture_frequency_matches_alpha() {
        let env = pendulum();
        let w = ActionRobustWrapper::new(env, 0.3).unwrap();
        let s = State(vec![1.0, 0.0]);
        let u = AgentAction(vec![1.0]);
        let adv = AdversaryAction(vec![-1.0]);
        let mut rng = stream_rng(5, "evaluation", &[0]);
        let mut adversary_executed = 0usize;
        let n = 100_000;
        for _ in 0..n {
            let coin: f64 = rng.gen();
            let (next, _) = w.mixture_step(&s, &u, &adv, coin, &[0.0, 0.0]).unwrap();
            // executed torque sign identifies which action ran
            let base = w
                .inner
                .step(&s, &u, &AdversaryAction(vec![0.0]), &[0.0, 0.0])
                .unwrap()
                .0;
            if next.0[1] < base.0[1] {
                adversary_executed += 1;
            }
        }
        let freq = adversary_executed as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn unit_relative_mass_reproduces_inner_trajectories() {
        let env = pendulum();
        let w = ParameterRobustWrapper::new(env.clone(), "relative_mass", 0.5, 1.5).unwrap();
        let pi = PolicyParams::new(
            FeatureMap::Constant,
            2,
            env.spec().action_box.clone(),
            Saturation::Tanh,
        );
        // stateless adversary pinned to exactly 1.0
        let adv_one = PolicyParams {
            features: FeatureMap::Constant,
            input_dim: 2,
            weights: vec![1.0],
            output_box: w.spec().adversary_box.clone(),
            saturation: Saturation::Clamp,
        };
        let inner_adv = PolicyParams::new(
            FeatureMap::Constant,
            2,
            env.spec().adversary_box.clone(),
            Saturation::Tanh,
        );
        let mut rng1 = stream_rng(11, "environment-noise", &[7]);
        let mut rng2 = stream_rng(11, "environment-noise", &[7]);
        let wrapped = rollout(&w, &pi, &adv_one, &mut rng1, 1).unwrap();
        let nominal = rollout(&env, &pi, &inner_adv, &mut rng2, 1).unwrap();
        for (a, b) in wrapped.transitions.iter().zip(&nominal.transitions) {
            assert_eq!(a.state, b.state);
            assert_eq!(a.next_state, b.next_state);
        }
    }

    #[test]
    fn nan_parameter_is_rejected_and_values_clamp() {
        let w = ParameterRobustWrapper::new(pendulum(), "relative_mass", 0.001, 2.0).unwrap();
        assert!(w.set_parameter(f64::NAN).is_err());
        let scaled = w.set_parameter(5.0).unwrap();
        assert!((scaled.mass - 2.0).abs() < 1e-15);
        let nominal = w.set_parameter(1.0).unwrap();
        assert_eq!(nominal.mass, w.inner.mass);
    }
}
