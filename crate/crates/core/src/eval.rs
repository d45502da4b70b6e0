//! Worst-case evaluation: freeze the agent, train an adversary against it on
//! the true system, and sweep robustness settings over parameter grids.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, ParameterRobustWrapper, ParameterScalable};
use crate::error::{CoreError, Result};
use crate::optimize::{CemState, OptimizerBudget};
use crate::policy::{PolicyFamily, PolicyParams};
use crate::seed::{derive_seed, stream_rng};
use crate::sim::{evaluate_candidates, CandidateTuple, DynamicsView};

/// Which robustness axis a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSetting {
    Adversarial,
    Action,
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub setting: SweepSetting,
    pub grid: Vec<f64>,
    pub seeds_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterCell {
    pub value: f64,
    pub mean_return: f64,
    pub std_return: f64,
    pub seeds: usize,
}

/// Result of evaluating one frozen agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub agent_id: String,
    /// Best-so-far adversary objective after each search iteration.
    pub adversary_curve: Vec<f64>,
    /// Minimum return over every adversary candidate evaluated.
    pub worst_case_return: f64,
    /// Zero-adversary return (adversarial/action settings) or the grid mean
    /// (parameter sweeps).
    pub average_return: f64,
    pub per_parameter: Vec<ParameterCell>,
    pub worst_parameter: Option<f64>,
    pub seed: u64,
    pub particles: usize,
}

/// Stable identifier of a frozen policy (content hash of its parameters).
pub fn policy_id(policy: &PolicyParams) -> String {
    let text = serde_json::to_string(policy).unwrap_or_default();
    let mut acc = derive_seed(0x5eed, "policy-id", &[text.len() as u64]);
    for chunk in text.as_bytes().chunks(8) {
        let mut bytes = [0u8; 8];
        bytes[..chunk.len()].copy_from_slice(chunk);
        acc = derive_seed(acc, "policy-id-chunk", &[u64::from_le_bytes(bytes)]);
    }
    format!("{acc:016x}")
}

/// Trains a worst-case adversary against the frozen agent on the true
/// system, with restarts; reports the minimum return found and the
/// neutral-adversary return as the average.
pub fn worst_case_eval(
    env: &dyn Environment,
    frozen_agent: &PolicyParams,
    adversary_family: &PolicyFamily,
    budget: &OptimizerBudget,
    restarts: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    budget.validate()?;
    if restarts == 0 {
        return Err(CoreError::invalid("restarts must be at least 1"));
    }
    let noise_seed = derive_seed(seed, "worst-case-noise", &[]);
    let neutral = adversary_family.neutral();
    let average = evaluate_candidates(
        env,
        DynamicsView::True,
        &[CandidateTuple {
            agent: frozen_agent,
            adversary: &neutral,
            eta: None,
        }],
        budget.particles,
        noise_seed,
    )?[0]
        .mean;

    let mut worst = average;
    let mut curve = Vec::new();
    for restart in 0..restarts {
        let mut cem = CemState::new(
            adversary_family.param_dim(),
            budget.population,
            budget.elite_frac,
            budget.init_std,
            false,
            vec![vec![0.0; adversary_family.param_dim()]],
            stream_rng(seed, "worst-case-sampling", &[restart as u64]),
        );
        for _ in 0..budget.iterations {
            let proposals = cem.propose();
            if proposals.is_empty() {
                break;
            }
            let advs: Vec<PolicyParams> = proposals
                .iter()
                .map(|f| adversary_family.instantiate(f))
                .collect::<Result<_>>()?;
            let tuples: Vec<CandidateTuple<'_>> = advs
                .iter()
                .map(|adv| CandidateTuple {
                    agent: frozen_agent,
                    adversary: adv,
                    eta: None,
                })
                .collect();
            let values =
                evaluate_candidates(env, DynamicsView::True, &tuples, budget.particles, noise_seed)?;
            let scores: Vec<f64> = values.iter().map(|v| v.mean).collect();
            for &s in &scores {
                if s < worst {
                    worst = s;
                }
            }
            cem.update(&proposals, &scores);
            curve.push(worst);
        }
    }
    Ok(EvaluationReport {
        agent_id: policy_id(frozen_agent),
        adversary_curve: curve,
        worst_case_return: worst,
        average_return: average,
        per_parameter: Vec::new(),
        worst_parameter: None,
        seed,
        particles: budget.particles,
    })
}

/// Evaluates the frozen agent across a grid of physical-parameter values;
/// identifies the minimizing cell.
pub fn parameter_sweep<E: ParameterScalable>(
    env_family: &ParameterRobustWrapper<E>,
    frozen_agent: &PolicyParams,
    sweep: &SweepSpec,
    particles: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    if sweep.grid.is_empty() {
        return Err(CoreError::Empty("parameter grid"));
    }
    if sweep.seeds_per_cell == 0 {
        return Err(CoreError::invalid("seeds_per_cell must be at least 1"));
    }
    let (lo, hi) = env_family.interval;
    for &v in &sweep.grid {
        if !(v >= lo && v <= hi) {
            return Err(CoreError::invalid(format!(
                "grid value {v} outside the declared interval [{lo}, {hi}]"
            )));
        }
    }
    let mut cells = Vec::with_capacity(sweep.grid.len());
    for (ci, &value) in sweep.grid.iter().enumerate() {
        let scaled = env_family.set_parameter(value)?;
        let neutral = PolicyFamily::new(PolicyParams::new(
            crate::policy::FeatureMap::Constant,
            scaled.spec().state_dim,
            scaled.spec().adversary_box.clone(),
            crate::policy::Saturation::Tanh,
        ))
        .neutral();
        let mut returns = Vec::with_capacity(sweep.seeds_per_cell);
        for s in 0..sweep.seeds_per_cell {
            let noise = derive_seed(seed, "sweep-cell", &[ci as u64, s as u64]);
            let est = evaluate_candidates(
                &scaled,
                DynamicsView::True,
                &[CandidateTuple {
                    agent: frozen_agent,
                    adversary: &neutral,
                    eta: None,
                }],
                particles,
                noise,
            )?[0]
                .mean;
            returns.push(est);
        }
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        let var = returns
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / returns.len() as f64;
        cells.push(ParameterCell {
            value,
            mean_return: mean,
            std_return: var.sqrt(),
            seeds: sweep.seeds_per_cell,
        });
    }
    let average = cells.iter().map(|c| c.mean_return).sum::<f64>() / cells.len() as f64;
    let worst = cells
        .iter()
        .min_by(|a, b| a.mean_return.partial_cmp(&b.mean_return).unwrap())
        .expect("nonempty grid");
    Ok(EvaluationReport {
        agent_id: policy_id(frozen_agent),
        adversary_curve: Vec::new(),
        worst_case_return: worst.mean_return,
        average_return: average,
        per_parameter: cells.clone(),
        worst_parameter: Some(worst.value),
        seed,
        particles,
    })
}
