//! Torque-limited pendulum swing-up. State is (theta wrapped to (-pi, pi],
//! angular velocity); theta = 0 is the upright target, theta = pi the hanging
//! start. Integration is semi-implicit Euler.

use serde::{Deserialize, Serialize};

use super::{wrap_angle, Environment, EnvironmentSpec, InputEmbedding};
use crate::error::{CoreError, Result};
use crate::types::{AdversaryAction, AgentAction, Bounds, State};

/// How the adversary couples into the pendulum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdversaryChannel {
    /// Additive generalized force on the pole, bounded to a fraction of the
    /// agent torque limit.
    Torque { fraction: f64 },
    /// Relative (gravity, mass) multipliers, each in [1-alpha, 1+alpha].
    RelativeParams { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendulumEnv {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub torque_limit: f64,
    pub channel: AdversaryChannel,
    spec: EnvironmentSpec,
}

impl PendulumEnv {
    pub fn new(
        mass: f64,
        length: f64,
        gravity: f64,
        torque_limit: f64,
        channel: AdversaryChannel,
        horizon: usize,
        dt: f64,
        noise_std: f64,
        initial_theta: f64,
    ) -> Result<Self> {
        if !(mass > 0.0 && length > 0.0 && gravity > 0.0) {
            return Err(CoreError::invalid("pendulum physical parameters must be positive"));
        }
        if !(torque_limit > 0.0 && dt > 0.0) {
            return Err(CoreError::invalid("torque limit and dt must be positive"));
        }
        let adversary_box = match &channel {
            AdversaryChannel::Torque { fraction } => {
                if !(*fraction > 0.0) {
                    return Err(CoreError::invalid("adversary torque fraction must be positive"));
                }
                Bounds::symmetric(fraction * torque_limit, 1)?
            }
            AdversaryChannel::RelativeParams { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(CoreError::invalid("relative-parameter alpha must lie in (0, 1)"));
                }
                Bounds::new(vec![1.0 - alpha; 2], vec![1.0 + alpha; 2])?
            }
        };
        let spec = EnvironmentSpec {
            state_dim: 2,
            action_dim: 1,
            adversary_dim: adversary_box.dim(),
            horizon,
            initial_state: State(vec![wrap_angle(initial_theta), 0.0]),
            action_box: Bounds::symmetric(torque_limit, 1)?,
            adversary_box,
            noise_std: vec![noise_std; 2],
            dt,
        };
        spec.validate()?;
        Ok(PendulumEnv {
            mass,
            length,
            gravity,
            torque_limit,
            channel,
            spec,
        })
    }

    /// Swing-up task from the hanging position with the torque adversary.
    pub fn swing_up_default() -> Result<Self> {
        PendulumEnv::new(
            1.0,
            1.0,
            9.81,
            5.0,
            AdversaryChannel::Torque { fraction: 0.5 },
            200,
            0.05,
            0.01,
            std::f64::consts::PI,
        )
    }

    /// Same pendulum with mass scaled by `factor`.
    pub fn with_relative_mass(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(CoreError::invalid(format!(
                "relative mass must be positive and finite, got {factor}"
            )));
        }
        let mut env = self.clone();
        env.mass = self.mass * factor;
        Ok(env)
    }

    /// Angular acceleration under effective gravity/mass and total torque.
    fn acceleration(&self, theta: f64, torque: f64, rel_gravity: f64, rel_mass: f64) -> f64 {
        let g = self.gravity * rel_gravity;
        let m = self.mass * rel_mass;
        (g / self.length) * theta.sin() + torque / (m * self.length * self.length)
    }
}

impl Environment for PendulumEnv {
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
        if noise.len() != 2 {
            return Err(CoreError::DimensionMismatch {
                context: "pendulum noise",
                expected: 2,
                got: noise.len(),
            });
        }
        let (theta, omega) = (state.0[0], state.0[1]);
        let (torque, rel_g, rel_m) = match self.channel {
            AdversaryChannel::Torque { .. } => (action.0[0] + adversary.0[0], 1.0, 1.0),
            AdversaryChannel::RelativeParams { .. } => {
                (action.0[0], adversary.0[0], adversary.0[1])
            }
        };
        let acc = self.acceleration(theta, torque, rel_g, rel_m);
        let omega_next = omega + self.spec.dt * acc + noise[1];
        let theta_next = wrap_angle(theta + self.spec.dt * omega_next + noise[0]);
        let next = State(vec![theta_next, omega_next]);
        let reward = self.reward(state, action, adversary, &next);
        Ok((next, reward))
    }

    fn reward(
        &self,
        state: &State,
        _action: &AgentAction,
        _adversary: &AdversaryAction,
        _next_state: &State,
    ) -> f64 {
        let theta = wrap_angle(state.0[0]);
        let omega = state.0[1];
        -(theta * theta + 0.1 * omega * omega)
    }

    fn wrap_state(&self, mut state: State) -> State {
        state.0[0] = wrap_angle(state.0[0]);
        state
    }

    fn state_periods(&self) -> Vec<Option<f64>> {
        vec![Some(2.0 * std::f64::consts::PI), None]
    }

    fn input_embedding(&self) -> InputEmbedding {
        InputEmbedding::TrigAngles {
            periodic_dims: vec![0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn env() -> PendulumEnv {
        PendulumEnv::swing_up_default().unwrap()
    }

    #[test]
    fn upright_rest_is_a_fixed_point_with_zero_reward() {
        let e = env();
        let (next, reward) = e
            .step(
                &State(vec![0.0, 0.0]),
                &AgentAction(vec![0.0]),
                &AdversaryAction(vec![0.0]),
                &[0.0, 0.0],
            )
            .unwrap();
        assert_eq!(next.0, vec![0.0, 0.0]);
        assert_eq!(reward, 0.0);
    }

    #[test]
    fn hanging_reward_is_minus_pi_squared() {
        let e = env();
        let r = e.reward(
            &State(vec![PI, 0.0]),
            &AgentAction(vec![0.0]),
            &AdversaryAction(vec![0.0]),
            &State(vec![PI, 0.0]),
        );
        assert!((r + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn reward_is_maximal_only_at_upright_rest() {
        let e = env();
        let zero_u = AgentAction(vec![0.0]);
        let zero_a = AdversaryAction(vec![0.0]);
        let origin = State(vec![0.0, 0.0]);
        assert_eq!(e.reward(&origin, &zero_u, &zero_a, &origin), 0.0);
        for s in [[0.1, 0.0], [0.0, 0.1], [-3.0, 2.0], [PI, -1.0]] {
            let st = State(s.to_vec());
            assert!(e.reward(&st, &zero_u, &zero_a, &st) < 0.0);
        }
    }

    #[test]
    fn hanging_start_stays_near_rest_without_torque() {
        // theta = pi is an equilibrium of the continuous dynamics; the
        // discretization keeps a noise-free zero-torque rollout there.
        let e = env();
        let mut s = State(vec![PI, 0.0]);
        for _ in 0..50 {
            let (next, _) = e
                .step(&s, &AgentAction(vec![0.0]), &AdversaryAction(vec![0.0]), &[0.0, 0.0])
                .unwrap();
            s = next;
        }
        assert!((wrap_angle(s.0[0]).abs() - PI).abs() < 1e-9);
        assert!(s.0[1].abs() < 1e-9);
    }

    #[test]
    fn out_of_box_action_is_rejected_not_clamped() {
        let e = env();
        let err = e.step(
            &State(vec![0.0, 0.0]),
            &AgentAction(vec![e.torque_limit * 1.01]),
            &AdversaryAction(vec![0.0]),
            &[0.0, 0.0],
        );
        assert!(matches!(err, Err(CoreError::ActionOutOfBounds { .. })));
    }

    #[test]
    fn halving_mass_doubles_torque_acceleration() {
        let e = env();
        let light = e.with_relative_mass(0.5).unwrap();
        // remove gravity's contribution by probing at theta = 0
        let a_full = e.acceleration(0.0, 1.0, 1.0, 1.0);
        let a_half = light.acceleration(0.0, 1.0, 1.0, 1.0);
        assert!((a_half / a_full - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relative_param_channel_scales_gravity_and_mass() {
        let e = PendulumEnv::new(
            1.0,
            1.0,
            9.81,
            5.0,
            AdversaryChannel::RelativeParams { alpha: 0.5 },
            100,
            0.05,
            0.0,
            PI,
        )
        .unwrap();
        assert_eq!(e.spec().adversary_dim, 2);
        let s = State(vec![1.0, 0.0]);
        let nominal = e
            .step(&s, &AgentAction(vec![1.0]), &AdversaryAction(vec![1.0, 1.0]), &[0.0, 0.0])
            .unwrap()
            .0;
        let perturbed = e
            .step(&s, &AgentAction(vec![1.0]), &AdversaryAction(vec![1.5, 0.5]), &[0.0, 0.0])
            .unwrap()
            .0;
        // heavier gravity and lighter mass both increase angular acceleration here
        assert!(perturbed.0[1] > nominal.0[1]);
    }
}
