//! Shared domain vocabulary: states, actions, transitions, trajectories and
//! the episodic dataset. All vectors are 64-bit floats; value types are
//! immutable once constructed.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Environment state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State(pub Vec<f64>);

/// Agent action, box-bounded by the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAction(pub Vec<f64>);

/// Adversary action, box-bounded by the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryAction(pub Vec<f64>);

impl State {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl AgentAction {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AdversaryAction {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Axis-aligned compact box, used for action sets and parameter intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(CoreError::DimensionMismatch {
                context: "bounds",
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(CoreError::invalid(format!(
                    "degenerate box at coordinate {i}: [{l}, {h}]"
                )));
            }
        }
        Ok(Bounds { lo, hi })
    }

    /// Symmetric box `[-half, half]^dim`.
    pub fn symmetric(half: f64, dim: usize) -> Result<Self> {
        Bounds::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h)
    }

    /// First out-of-box coordinate, if any.
    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                context: "box check",
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, (&v, (&l, &h))) in x.iter().zip(self.lo.iter().zip(&self.hi)).enumerate() {
            if !(v >= l && v <= h) {
                return Err(CoreError::ActionOutOfBounds {
                    coord: i,
                    value: v,
                    lo: l,
                    hi: h,
                });
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| 0.5 * (l + h))
            .collect()
    }

    pub fn half_width(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| 0.5 * (h - l))
            .collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (&l, &h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(l, h);
        }
    }
}

/// One environment step. Serializes with the wire keys used by the
/// line-oriented trajectory format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    #[serde(rename = "action")]
    pub agent_action: AgentAction,
    #[serde(rename = "adv_action")]
    pub adversary_action: AdversaryAction,
    pub next_state: State,
    #[serde(rename = "step")]
    pub step_index: usize,
    #[serde(rename = "episode")]
    pub episode_index: usize,
}

/// A full episode: exactly `H` transitions chaining from the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub total_reward: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn states(&self) -> Vec<State> {
        let mut out: Vec<State> = self.transitions.iter().map(|t| t.state.clone()).collect();
        if let Some(last) = self.transitions.last() {
            out.push(last.next_state.clone());
        }
        out
    }

    /// One JSON object per line, one line per transition.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.transitions {
            let line = serde_json::to_string(t)
                .map_err(|e| CoreError::Serialization(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut transitions = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let t: Transition = serde_json::from_str(line)
                .map_err(|e| CoreError::Serialization(e.to_string()))?;
            transitions.push(t);
        }
        Ok(Trajectory {
            transitions,
            total_reward: f64::NAN,
        })
    }
}

/// True iff consecutive transitions chain exactly and step indices run 0..H-1.
pub fn chain_check(trajectory: &Trajectory) -> bool {
    let ts = &trajectory.transitions;
    if ts.is_empty() {
        return false;
    }
    for (h, t) in ts.iter().enumerate() {
        if t.step_index != h {
            return false;
        }
    }
    ts.windows(2).all(|w| w[0].next_state == w[1].state)
}

/// Append-only store of observed transitions, one episode at a time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub transitions: Vec<Transition>,
    pub episode_count: usize,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset::default()
    }

    pub fn push_episode(&mut self, trajectory: &Trajectory) {
        self.transitions.extend(trajectory.transitions.iter().cloned());
        self.episode_count += 1;
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transition(s: f64, ns: f64, step: usize) -> Transition {
        Transition {
            state: State(vec![s]),
            agent_action: AgentAction(vec![0.0]),
            adversary_action: AdversaryAction(vec![0.0]),
            next_state: State(vec![ns]),
            step_index: step,
            episode_index: 1,
        }
    }

    #[test]
    fn single_step_chain_is_valid() {
        let traj = Trajectory {
            transitions: vec![transition(0.0, 1.0, 0)],
            total_reward: 0.0,
        };
        assert!(chain_check(&traj));
    }

    #[test]
    fn broken_chain_is_rejected() {
        let traj = Trajectory {
            transitions: vec![transition(0.0, 1.0, 0), transition(2.0, 3.0, 1)],
            total_reward: 0.0,
        };
        assert!(!chain_check(&traj));
    }

    #[test]
    fn misnumbered_steps_are_rejected() {
        let traj = Trajectory {
            transitions: vec![transition(0.0, 1.0, 0), transition(1.0, 2.0, 2)],
            total_reward: 0.0,
        };
        assert!(!chain_check(&traj));
    }

    #[test]
    fn jsonl_round_trip_preserves_transitions() {
        let traj = Trajectory {
            transitions: vec![
                transition(0.125, -1.75e-3, 0),
                transition(-1.75e-3, 0.5, 1),
            ],
            total_reward: 1.0,
        };
        let text = traj.to_jsonl().unwrap();
        assert!(text.lines().next().unwrap().contains("\"adv_action\""));
        let back = Trajectory::from_jsonl(&text).unwrap();
        assert_eq!(back.transitions, traj.transitions);
    }

    #[test]
    fn dataset_size_is_multiple_of_horizon() {
        let mut ds = Dataset::new();
        let traj = Trajectory {
            transitions: vec![transition(0.0, 1.0, 0), transition(1.0, 2.0, 1)],
            total_reward: 0.0,
        };
        ds.push_episode(&traj);
        ds.push_episode(&traj);
        assert_eq!(ds.len(), ds.episode_count * 2);
    }

    #[test]
    fn degenerate_box_is_rejected() {
        assert!(Bounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![-1.0]).is_err());
    }
}
