//! Population search (cross-entropy style, elites refit a diagonal Gaussian)
//! and the max-min solvers built on it. Anchor candidates (the neutral
//! policy and any warm start) are always evaluated first, so returned values
//! provably dominate the anchors under shared noise.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{CoreError, Result};
use crate::gp::GpDynamicsModel;
use crate::policy::{PolicyFamily, PolicyParams};
use crate::seed::{derive_seed, stream_rng};
use crate::sim::{CandidateTuple, DynamicsView};

/// Search budgets for the nested solvers. `iterations` drives the outer
/// (agent) loop; `inner_iterations` the adversary loop run per outer
/// candidate; the eta fields the hallucination loop inside one value
/// estimate. Optional populations default to `population`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerBudget {
    pub population: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub restarts: usize,
    pub particles: usize,
    pub inner_population: Option<usize>,
    pub eta_population: Option<usize>,
    pub eta_iterations: Option<usize>,
    pub init_std: f64,
    /// Search (policy, hallucination) jointly in the outer population instead
    /// of re-solving the hallucination channel inside every value estimate.
    /// Exact for the adversary's min-min; a lower bound for the agent's
    /// max-min-max, at a fraction of the cost.
    pub joint_hallucination: bool,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            population: 64,
            elite_frac: 0.1,
            iterations: 30,
            inner_iterations: 15,
            restarts: 1,
            particles: 8,
            inner_population: None,
            eta_population: None,
            eta_iterations: None,
            init_std: 1.0,
            joint_hallucination: false,
        }
    }
}

impl OptimizerBudget {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0
            || self.iterations == 0
            || self.inner_iterations == 0
            || self.restarts == 0
            || self.particles == 0
        {
            return Err(CoreError::invalid("optimizer budget fields must be positive"));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(CoreError::invalid("elite fraction must lie in (0, 1]"));
        }
        if !(self.init_std > 0.0) {
            return Err(CoreError::invalid("init_std must be positive"));
        }
        Ok(())
    }

    pub fn inner_population(&self) -> usize {
        self.inner_population.unwrap_or(self.population)
    }

    pub fn eta_population(&self) -> usize {
        self.eta_population.unwrap_or(self.population)
    }

    pub fn eta_iterations(&self) -> usize {
        self.eta_iterations.unwrap_or(self.inner_iterations)
    }

    /// Budget with every count scaled up, for evaluation-time adversaries.
    pub fn scaled(&self, factor: f64) -> OptimizerBudget {
        let scale = |v: usize| ((v as f64 * factor).ceil() as usize).max(1);
        OptimizerBudget {
            population: scale(self.population),
            iterations: scale(self.iterations),
            inner_iterations: scale(self.inner_iterations),
            ..self.clone()
        }
    }
}

/// Diagonal-Gaussian population state. Proposals from the first round start
/// with the anchors; elites refit the sampler; the best-ever candidate is
/// kept with first-seen tie-breaking.
pub(crate) struct CemState {
    dim: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
    population: usize,
    elite: usize,
    maximize: bool,
    rng: ChaCha8Rng,
    anchors: Vec<Vec<f64>>,
    round: usize,
    best: Option<(f64, Vec<f64>)>,
    anchor_values: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-6;

impl CemState {
    pub(crate) fn new(
        dim: usize,
        population: usize,
        elite_frac: f64,
        init_std: f64,
        maximize: bool,
        anchors: Vec<Vec<f64>>,
        rng: ChaCha8Rng,
    ) -> Self {
        let elite = ((population as f64 * elite_frac).ceil() as usize).clamp(1, population);
        // sample around the warm anchor when one is present (anchors are
        // ordered neutral-first, warm-last)
        let start = anchors.last().cloned().unwrap_or_else(|| vec![0.0; dim]);
        CemState {
            dim,
            mean: start,
            std: vec![init_std; dim],
            population,
            elite,
            maximize,
            rng,
            anchors,
            round: 0,
            best: None,
            anchor_values: Vec::new(),
        }
    }

    /// Candidates for this round; empty once a zero-dimensional search has
    /// evaluated its single member.
    pub(crate) fn propose(&mut self) -> Vec<Vec<f64>> {
        if self.dim == 0 {
            return if self.round == 0 {
                vec![vec![]]
            } else {
                Vec::new()
            };
        }
        let mut out = Vec::with_capacity(self.population + self.anchors.len());
        if self.round == 0 {
            out.extend(self.anchors.iter().cloned());
        }
        for _ in 0..self.population {
            let cand: Vec<f64> = (0..self.dim)
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    self.mean[c] + self.std[c] * z
                })
                .collect();
            out.push(cand);
        }
        out
    }

    pub(crate) fn update(&mut self, candidates: &[Vec<f64>], scores: &[f64]) {
        debug_assert_eq!(candidates.len(), scores.len());
        if self.round == 0 {
            self.anchor_values = scores[..self.anchors.len().min(scores.len())].to_vec();
        }
        self.round += 1;
        for (cand, &score) in candidates.iter().zip(scores) {
            if !score.is_finite() {
                continue;
            }
            let better = match &self.best {
                None => true,
                Some((b, _)) => {
                    if self.maximize {
                        score > *b
                    } else {
                        score < *b
                    }
                }
            };
            if better {
                self.best = Some((score, cand.clone()));
            }
        }
        if self.dim == 0 || candidates.is_empty() {
            return;
        }
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (scores[a], scores[b]);
            let cmp = sa.partial_cmp(&sb).unwrap_or(std::cmp::Ordering::Equal);
            if self.maximize {
                cmp.reverse()
            } else {
                cmp
            }
        });
        let elites = &order[..self.elite.min(order.len())];
        for c in 0..self.dim {
            let mut m = 0.0;
            for &i in elites {
                m += candidates[i][c];
            }
            m /= elites.len() as f64;
            let mut v = 0.0;
            for &i in elites {
                let d = candidates[i][c] - m;
                v += d * d;
            }
            v /= elites.len() as f64;
            self.mean[c] = m;
            self.std[c] = v.sqrt().max(STD_FLOOR);
        }
    }

    pub(crate) fn best(&self) -> Option<&(f64, Vec<f64>)> {
        self.best.as_ref()
    }

    pub(crate) fn anchor_values(&self) -> &[f64] {
        &self.anchor_values
    }
}

/// Outcome of a hallucination-channel solve at fixed policies.
#[derive(Debug, Clone)]
pub struct HallucinatedValue {
    pub value: f64,
    pub eta: PolicyParams,
    /// Value of the zero-hallucination anchor under the same noise.
    pub anchor_value: f64,
    pub noise_seed: u64,
}

fn solve_eta(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    agent: &PolicyParams,
    adversary: &PolicyParams,
    eta_family: &PolicyFamily,
    budget: &OptimizerBudget,
    seed: u64,
    maximize: bool,
) -> Result<HallucinatedValue> {
    budget.validate()?;
    let noise_seed = derive_seed(seed, "eta-crn", &[]);
    let mut cem = CemState::new(
        eta_family.param_dim(),
        budget.eta_population(),
        budget.elite_frac,
        budget.init_std,
        maximize,
        vec![vec![0.0; eta_family.param_dim()]],
        stream_rng(seed, "eta-sampling", &[]),
    );
    for _ in 0..budget.eta_iterations() {
        let proposals = cem.propose();
        if proposals.is_empty() {
            break;
        }
        let policies: Vec<PolicyParams> = proposals
            .iter()
            .map(|f| eta_family.instantiate(f))
            .collect::<Result<_>>()?;
        let tuples: Vec<CandidateTuple<'_>> = policies
            .iter()
            .map(|eta| CandidateTuple {
                agent,
                adversary,
                eta: Some(eta),
            })
            .collect();
        let values = crate::sim::evaluate_tube_batch(
            env,
            model,
            beta,
            &tuples,
            budget.particles,
            noise_seed,
        )?;
        let scores: Vec<f64> = values.iter().map(|v| v.mean).collect();
        cem.update(&proposals, &scores);
    }
    let (value, flat) = cem
        .best()
        .cloned()
        .ok_or_else(|| CoreError::invalid("hallucination solve produced no candidates"))?;
    Ok(HallucinatedValue {
        value,
        eta: eta_family.instantiate(&flat)?,
        anchor_value: cem.anchor_values().first().copied().unwrap_or(value),
        noise_seed,
    })
}

/// Upper confidence value `max over eta of J(tube dynamics, pi, adversary)`.
/// The zero-hallucination candidate is always seeded, so the result is at
/// least the mean-model value under the same noise.
pub fn optimistic_value(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    agent: &PolicyParams,
    adversary: &PolicyParams,
    eta_family: &PolicyFamily,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<HallucinatedValue> {
    solve_eta(env, model, beta, agent, adversary, eta_family, budget, seed, true)
}

/// Lower confidence value `min over eta`; mirror of [`optimistic_value`].
pub fn pessimistic_value(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    agent: &PolicyParams,
    adversary: &PolicyParams,
    eta_family: &PolicyFamily,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<HallucinatedValue> {
    solve_eta(env, model, beta, agent, adversary, eta_family, budget, seed, false)
}

/// Objective the agent-side solver optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentObjective {
    /// Score pairs by the optimistic value (hallucinated exploration).
    Optimistic,
    /// Score pairs by the plain mean-model value (no active exploration).
    Expected,
}

/// Objective the adversary-side solver minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdversaryObjective {
    Pessimistic,
    Expected,
}

/// Policy families the solvers search over.
#[derive(Debug, Clone)]
pub struct SolveFamilies {
    pub agent: PolicyFamily,
    pub adversary: PolicyFamily,
    pub eta_optimistic: PolicyFamily,
    pub eta_pessimistic: PolicyFamily,
}

/// Warm-start parameter vectors carried across episodes.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub agent: Option<Vec<f64>>,
    pub inner_adversary: Option<Vec<f64>>,
    pub adversary: Option<Vec<f64>>,
    pub eta_optimistic: Option<Vec<f64>>,
    pub eta_pessimistic: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct MaximinSolution {
    pub agent: PolicyParams,
    pub inner_adversary: PolicyParams,
    pub eta: Option<PolicyParams>,
    pub value: f64,
    pub agent_flat: Vec<f64>,
    pub inner_adversary_flat: Vec<f64>,
    pub eta_flat: Option<Vec<f64>>,
}

enum InnerEval<'a> {
    /// Expected-value scoring: posterior sampling over epistemic and
    /// aleatoric uncertainty, no active exploration.
    Expected,
    /// Tube scoring with a fixed hallucination policy per outer candidate.
    Tube { beta: f64, etas: &'a [Option<PolicyParams>] },
    /// Full hallucination re-solve per (agent, adversary) pair.
    NestedOptimistic { beta: f64, eta_family: &'a PolicyFamily },
}

/// Scores each outer candidate by its inner adversary minimization, running
/// the per-candidate inner searches in lockstep so evaluations batch.
#[allow(clippy::too_many_arguments)]
fn score_with_inner_min(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    agents: &[PolicyParams],
    adversary_family: &PolicyFamily,
    eval: InnerEval<'_>,
    budget: &OptimizerBudget,
    seed: u64,
    round: u64,
    warm_adversary: Option<&Vec<f64>>,
    noise_seed: u64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = agents.len();
    let adv_dim = adversary_family.param_dim();
    let mut anchors = vec![vec![0.0; adv_dim]];
    if let Some(w) = warm_adversary {
        if w.len() == adv_dim && adv_dim > 0 {
            anchors.push(w.clone());
        }
    }
    let mut inner: Vec<CemState> = (0..n)
        .map(|i| {
            CemState::new(
                adv_dim,
                budget.inner_population(),
                budget.elite_frac,
                budget.init_std,
                false,
                anchors.clone(),
                stream_rng(seed, "inner-sampling", &[round, i as u64]),
            )
        })
        .collect();

    for it in 0..budget.inner_iterations {
        // proposals per outer candidate
        let proposals: Vec<Vec<Vec<f64>>> = inner.iter_mut().map(|c| c.propose()).collect();
        if proposals.iter().all(|p| p.is_empty()) {
            break;
        }
        match eval {
            InnerEval::Expected | InnerEval::Tube { .. } => {
                // one lockstep batch across all (candidate, proposal) pairs
                let mut adv_policies: Vec<PolicyParams> = Vec::new();
                let mut owners: Vec<usize> = Vec::new();
                for (i, props) in proposals.iter().enumerate() {
                    for f in props {
                        adv_policies.push(adversary_family.instantiate(f)?);
                        owners.push(i);
                    }
                }
                let tuples: Vec<CandidateTuple<'_>> = adv_policies
                    .iter()
                    .zip(&owners)
                    .map(|(adv, &i)| CandidateTuple {
                        agent: &agents[i],
                        adversary: adv,
                        eta: match &eval {
                            InnerEval::Tube { etas, .. } => etas[i].as_ref(),
                            _ => None,
                        },
                    })
                    .collect();
                let values = match &eval {
                    InnerEval::Tube { beta, .. } => crate::sim::evaluate_tube_batch(
                        env,
                        model,
                        *beta,
                        &tuples,
                        budget.particles,
                        noise_seed,
                    )?,
                    _ => crate::sim::evaluate_posterior_batch(
                        env,
                        model,
                        &tuples,
                        budget.particles,
                        noise_seed,
                    )?,
                };
                let mut offset = 0;
                for (i, props) in proposals.iter().enumerate() {
                    if props.is_empty() {
                        continue;
                    }
                    let scores: Vec<f64> = values[offset..offset + props.len()]
                        .iter()
                        .map(|v| v.mean)
                        .collect();
                    inner[i].update(props, &scores);
                    offset += props.len();
                }
            }
            InnerEval::NestedOptimistic { beta, eta_family } => {
                for (i, props) in proposals.iter().enumerate() {
                    if props.is_empty() {
                        continue;
                    }
                    let mut scores = Vec::with_capacity(props.len());
                    for (j, f) in props.iter().enumerate() {
                        let adv = adversary_family.instantiate(f)?;
                        let hv = optimistic_value(
                            env,
                            model,
                            beta,
                            &agents[i],
                            &adv,
                            eta_family,
                            budget,
                            derive_seed(
                                seed,
                                "nested-eta",
                                &[round, i as u64, it as u64, j as u64],
                            ),
                        )?;
                        scores.push(hv.value);
                    }
                    inner[i].update(props, &scores);
                }
            }
        }
    }
    inner
        .into_iter()
        .map(|c| {
            c.best()
                .cloned()
                .ok_or_else(|| CoreError::invalid("inner solve produced no candidates"))
        })
        .collect()
}

/// Selects the agent policy maximizing the inner-minimized objective
/// (optimistic for exploring agents, expected for the non-exploring
/// baseline), returning the best outer candidate and its inner minimizer.
#[allow(clippy::too_many_arguments)]
pub fn solve_maximin(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    objective: AgentObjective,
    families: &SolveFamilies,
    budget: &OptimizerBudget,
    seed: u64,
    warm: &WarmStart,
) -> Result<MaximinSolution> {
    budget.validate()?;
    let agent_dim = families.agent.param_dim();
    let eta_dim = families.eta_optimistic.param_dim();
    let joint = budget.joint_hallucination && objective == AgentObjective::Optimistic;
    let outer_dim = if joint { agent_dim + eta_dim } else { agent_dim };

    let mut overall: Option<MaximinSolution> = None;
    for restart in 0..budget.restarts {
        let noise_seed = derive_seed(seed, "maximin-crn", &[restart as u64]);
        let mut anchors = vec![vec![0.0; outer_dim]];
        if let Some(w) = &warm.agent {
            if w.len() == agent_dim && outer_dim > 0 {
                let mut a = w.clone();
                if joint {
                    match &warm.eta_optimistic {
                        Some(e) if e.len() == eta_dim => a.extend_from_slice(e),
                        _ => a.extend(std::iter::repeat(0.0).take(eta_dim)),
                    }
                }
                anchors.push(a);
            }
        }
        let mut outer = CemState::new(
            outer_dim,
            budget.population,
            budget.elite_frac,
            budget.init_std,
            true,
            anchors,
            stream_rng(seed, "outer-sampling", &[restart as u64]),
        );
        let mut best_here: Option<MaximinSolution> = None;
        for it in 0..budget.iterations {
            let proposals = outer.propose();
            if proposals.is_empty() {
                break;
            }
            let mut agents = Vec::with_capacity(proposals.len());
            let mut etas: Vec<Option<PolicyParams>> = Vec::with_capacity(proposals.len());
            for f in &proposals {
                agents.push(families.agent.instantiate(&f[..agent_dim])?);
                if joint {
                    etas.push(Some(families.eta_optimistic.instantiate(&f[agent_dim..])?));
                } else {
                    etas.push(None);
                }
            }
            let round = (restart * budget.iterations + it) as u64;
            let eval = match (objective, joint) {
                (AgentObjective::Expected, _) => InnerEval::Expected,
                (AgentObjective::Optimistic, true) => InnerEval::Tube {
                    beta,
                    etas: &etas,
                },
                (AgentObjective::Optimistic, false) => InnerEval::NestedOptimistic {
                    beta,
                    eta_family: &families.eta_optimistic,
                },
            };
            let scored = score_with_inner_min(
                env,
                model,
                &agents,
                &families.adversary,
                eval,
                budget,
                seed,
                round,
                warm.inner_adversary.as_ref(),
                noise_seed,
            )?;
            let scores: Vec<f64> = scored.iter().map(|(v, _)| *v).collect();
            for (idx, ((score, adv_flat), flat)) in scored.iter().zip(&proposals).enumerate() {
                if !score.is_finite() {
                    continue;
                }
                let better = match &best_here {
                    None => true,
                    Some(b) => *score > b.value,
                };
                if better {
                    let (agent_flat, eta_flat) = if joint {
                        (
                            flat[..agent_dim].to_vec(),
                            Some(flat[agent_dim..].to_vec()),
                        )
                    } else {
                        (flat.clone(), None)
                    };
                    best_here = Some(MaximinSolution {
                        agent: agents[idx].clone(),
                        inner_adversary: families.adversary.instantiate(adv_flat)?,
                        eta: match &eta_flat {
                            Some(e) => Some(families.eta_optimistic.instantiate(e)?),
                            None => None,
                        },
                        value: *score,
                        agent_flat,
                        inner_adversary_flat: adv_flat.clone(),
                        eta_flat,
                    });
                }
            }
            outer.update(&proposals, &scores);
        }
        let best_here = best_here
            .ok_or_else(|| CoreError::invalid("max-min solve produced no candidates"))?;
        let better = match &overall {
            None => true,
            Some(b) => best_here.value > b.value,
        };
        if better {
            overall = Some(best_here);
        }
    }
    Ok(overall.expect("restarts >= 1"))
}

#[derive(Debug, Clone)]
pub struct AdversarySolution {
    pub adversary: PolicyParams,
    pub eta: Option<PolicyParams>,
    pub value: f64,
    /// Value of the neutral-adversary anchor under the same noise.
    pub anchor_value: f64,
    pub adversary_flat: Vec<f64>,
    pub eta_flat: Option<Vec<f64>>,
    pub noise_seed: u64,
}

/// Trains the deployed adversary against a frozen agent: pessimistic
/// minimization for exploring adversaries, expected minimization for the
/// best-response ablation.
#[allow(clippy::too_many_arguments)]
pub fn solve_adversary_pessimistic(
    env: &dyn Environment,
    model: &GpDynamicsModel,
    beta: f64,
    agent: &PolicyParams,
    objective: AdversaryObjective,
    adversary_family: &PolicyFamily,
    eta_family: &PolicyFamily,
    budget: &OptimizerBudget,
    seed: u64,
    warm: &WarmStart,
) -> Result<AdversarySolution> {
    budget.validate()?;
    let adv_dim = adversary_family.param_dim();
    let eta_dim = eta_family.param_dim();
    let joint = budget.joint_hallucination && objective == AdversaryObjective::Pessimistic;
    let dim = if joint { adv_dim + eta_dim } else { adv_dim };
    let noise_seed = derive_seed(seed, "adversary-crn", &[]);

    let mut anchors = vec![vec![0.0; dim]];
    if let Some(w) = &warm.adversary {
        if w.len() == adv_dim && dim > 0 {
            let mut a = w.clone();
            if joint {
                match &warm.eta_pessimistic {
                    Some(e) if e.len() == eta_dim => a.extend_from_slice(e),
                    _ => a.extend(std::iter::repeat(0.0).take(eta_dim)),
                }
            }
            anchors.push(a);
        }
    }
    let mut cem = CemState::new(
        dim,
        budget.population,
        budget.elite_frac,
        budget.init_std,
        false,
        anchors,
        stream_rng(seed, "adversary-sampling", &[]),
    );
    let mut best: Option<AdversarySolution> = None;
    for it in 0..budget.iterations {
        let proposals = cem.propose();
        if proposals.is_empty() {
            break;
        }
        let mut scores = Vec::with_capacity(proposals.len());
        for (j, f) in proposals.iter().enumerate() {
            let adv = adversary_family.instantiate(&f[..adv_dim])?;
            let (value, eta, eta_flat) = match (objective, joint) {
                (AdversaryObjective::Expected, _) => {
                    let est = crate::sim::estimate_j(
                        env,
                        DynamicsView::Posterior { model },
                        agent,
                        &adv,
                        budget.particles,
                        noise_seed,
                    )?;
                    (est.mean, None, None)
                }
                (AdversaryObjective::Pessimistic, true) => {
                    let eta = eta_family.instantiate(&f[adv_dim..])?;
                    let tuples = [CandidateTuple {
                        agent,
                        adversary: &adv,
                        eta: Some(&eta),
                    }];
                    let est = crate::sim::evaluate_tube_batch(
                        env,
                        model,
                        beta,
                        &tuples,
                        budget.particles,
                        noise_seed,
                    )?;
                    (est[0].mean, Some(eta), Some(f[adv_dim..].to_vec()))
                }
                (AdversaryObjective::Pessimistic, false) => {
                    let hv = pessimistic_value(
                        env,
                        model,
                        beta,
                        agent,
                        &adv,
                        eta_family,
                        budget,
                        derive_seed(seed, "adversary-eta", &[it as u64, j as u64]),
                    )?;
                    (hv.value, Some(hv.eta), None)
                }
            };
            if value.is_finite() {
                let better = match &best {
                    None => true,
                    Some(b) => value < b.value,
                };
                if better {
                    best = Some(AdversarySolution {
                        adversary: adv.clone(),
                        eta,
                        value,
                        anchor_value: f64::NAN,
                        adversary_flat: f[..adv_dim].to_vec(),
                        eta_flat,
                        noise_seed,
                    });
                }
            }
            scores.push(value);
        }
        cem.update(&proposals, &scores);
    }
    let mut best = best.ok_or_else(|| CoreError::invalid("adversary solve produced no candidates"))?;
    best.anchor_value = cem.anchor_values().first().copied().unwrap_or(best.value);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{LinearToyEnv, QuadraticReward};
    use crate::gp::{GpDynamicsModel, GpModelConfig, Kernel};
    use crate::policy::{FeatureMap, PolicyParams, Saturation};
    use crate::sim::estimate_j;
    use crate::types::{AdversaryAction, AgentAction, Bounds, State, Transition};

    fn one_step_env() -> LinearToyEnv {
        LinearToyEnv::builder()
            .dynamics(0.6, 1.0, -0.5)
            .reward(QuadraticReward::successor_state())
            .horizon(1)
            .noise_std(0.0)
            .initial_state(0.0)
            .build()
            .unwrap()
    }

    fn fitted_model(env: &LinearToyEnv) -> GpDynamicsModel {
        let kernel = Kernel::squared_exponential(3, 1.0, 1.0).unwrap();
        let mut m = GpDynamicsModel::new(GpModelConfig::plain(kernel, 1.0, 1), 1, 1, 1).unwrap();
        let mut batch = Vec::new();
        for i in 0..10 {
            let s = -1.0 + 0.22 * i as f64;
            let u = 0.4 * (i as f64).sin();
            let a = 0.3 * (i as f64).cos();
            let (next, _) = env
                .step(&State(vec![s]), &AgentAction(vec![u]), &AdversaryAction(vec![a]), &[0.0])
                .unwrap();
            batch.push(Transition {
                state: State(vec![s]),
                agent_action: AgentAction(vec![u]),
                adversary_action: AdversaryAction(vec![a]),
                next_state: next,
                step_index: 0,
                episode_index: 1,
            });
        }
        m.fit(&batch).unwrap();
        m
    }

    fn families(env: &LinearToyEnv) -> SolveFamilies {
        let spec = env.spec();
        SolveFamilies {
            agent: PolicyFamily::new(PolicyParams::new(
                FeatureMap::Constant,
                1,
                spec.action_box.clone(),
                Saturation::Tanh,
            )),
            adversary: PolicyFamily::new(PolicyParams::new(
                FeatureMap::Constant,
                1,
                spec.adversary_box.clone(),
                Saturation::Tanh,
            )),
            eta_optimistic: PolicyFamily::new(PolicyParams::new(
                FeatureMap::Constant,
                3,
                Bounds::symmetric(1.0, 1).unwrap(),
                Saturation::Clamp,
            )),
            eta_pessimistic: PolicyFamily::new(PolicyParams::new(
                FeatureMap::Constant,
                3,
                Bounds::symmetric(1.0, 1).unwrap(),
                Saturation::Clamp,
            )),
        }
    }

    fn small_budget() -> OptimizerBudget {
        OptimizerBudget {
            population: 12,
            elite_frac: 0.25,
            iterations: 6,
            inner_iterations: 4,
            restarts: 1,
            particles: 1,
            init_std: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn one_step_optimum_saturates_the_tube() {
        let env = one_step_env();
        let model = fitted_model(&env);
        let fams = families(&env);
        let pi = fams.agent.neutral();
        let adv = fams.adversary.neutral();
        let beta = 1.5;
        let (mu, sigma) = model.predict(&[0.0], &[0.0], &[0.0]).unwrap();
        let opt = optimistic_value(
            &env, &model, beta, &pi, &adv, &fams.eta_optimistic, &small_budget(), 42,
        )
        .unwrap();
        assert!((opt.value - (mu[0] + beta * sigma[0])).abs() < 1e-9);
        let pess = pessimistic_value(
            &env, &model, beta, &pi, &adv, &fams.eta_pessimistic, &small_budget(), 42,
        )
        .unwrap();
        assert!((pess.value - (mu[0] - beta * sigma[0])).abs() < 1e-9);
    }

    #[test]
    fn zero_beta_collapses_to_the_mean_value() {
        let env = one_step_env();
        let model = fitted_model(&env);
        let fams = families(&env);
        let pi = fams.agent.neutral();
        let adv = fams.adversary.neutral();
        let opt = optimistic_value(
            &env, &model, 0.0, &pi, &adv, &fams.eta_optimistic, &small_budget(), 7,
        )
        .unwrap();
        let mean = estimate_j(
            &env,
            DynamicsView::Mean { model: &model },
            &pi,
            &adv,
            1,
            opt.noise_seed,
        )
        .unwrap();
        assert_eq!(opt.value, mean.mean);
    }

    #[test]
    fn sandwich_holds_exactly_under_shared_seed() {
        let env = LinearToyEnv::builder()
            .dynamics(0.7, 1.0, -0.4)
            .reward(QuadraticReward::state_cost())
            .horizon(5)
            .noise_std(0.02)
            .initial_state(0.8)
            .build()
            .unwrap();
        let model = fitted_model(&one_step_env());
        let fams = families(&env);
        let pi = fams.agent.neutral();
        let adv = fams.adversary.neutral();
        for seed in [1u64, 9, 33] {
            let opt = optimistic_value(
                &env, &model, 1.0, &pi, &adv, &fams.eta_optimistic, &small_budget(), seed,
            )
            .unwrap();
            let pess = pessimistic_value(
                &env, &model, 1.0, &pi, &adv, &fams.eta_pessimistic, &small_budget(), seed,
            )
            .unwrap();
            assert_eq!(opt.anchor_value, pess.anchor_value);
            assert!(pess.value <= opt.anchor_value);
            assert!(opt.value >= opt.anchor_value);
            let mean = estimate_j(
                &env,
                DynamicsView::Mean { model: &model },
                &pi,
                &adv,
                small_budget().particles,
                opt.noise_seed,
            )
            .unwrap();
            assert_eq!(mean.mean, opt.anchor_value);
        }
    }

    #[test]
    fn doubling_iterations_never_hurts() {
        let env = one_step_env();
        let model = fitted_model(&env);
        let fams = families(&env);
        let pi = fams.agent.neutral();
        let adv = fams.adversary.neutral();
        let mut short = small_budget();
        short.eta_iterations = Some(2);
        let mut long = short.clone();
        long.eta_iterations = Some(4);
        let a = optimistic_value(&env, &model, 1.0, &pi, &adv, &fams.eta_optimistic, &short, 3)
            .unwrap();
        let b = optimistic_value(&env, &model, 1.0, &pi, &adv, &fams.eta_optimistic, &long, 3)
            .unwrap();
        assert!(b.value >= a.value);
        let c = pessimistic_value(&env, &model, 1.0, &pi, &adv, &fams.eta_pessimistic, &short, 3)
            .unwrap();
        let d = pessimistic_value(&env, &model, 1.0, &pi, &adv, &fams.eta_pessimistic, &long, 3)
            .unwrap();
        assert!(d.value <= c.value);
    }

    #[test]
    fn solvers_are_deterministic_in_the_seed() {
        let env = one_step_env();
        let model = fitted_model(&env);
        let fams = families(&env);
        let warm = WarmStart::default();
        let a = solve_maximin(
            &env, &model, 1.0, AgentObjective::Optimistic, &fams, &small_budget(), 11, &warm,
        )
        .unwrap();
        let b = solve_maximin(
            &env, &model, 1.0, AgentObjective::Optimistic, &fams, &small_budget(), 11, &warm,
        )
        .unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.agent_flat, b.agent_flat);
        assert_eq!(a.inner_adversary_flat, b.inner_adversary_flat);
    }

    #[test]
    fn degenerate_adversary_channel_matches_anchor() {
        // b_adv = 0 and a reward free of the adversary action: every
        // adversary is equivalent, so the solve returns the anchor value
        let env = LinearToyEnv::builder()
            .dynamics(0.8, 1.0, 0.0)
            .reward(QuadraticReward::state_cost())
            .horizon(4)
            .noise_std(0.0)
            .initial_state(1.0)
            .build()
            .unwrap();
        let model = fitted_model(&one_step_env());
        let fams = families(&env);
        let pi = fams.agent.neutral();
        let sol = solve_adversary_pessimistic(
            &env,
            &model,
            1.0,
            &pi,
            AdversaryObjective::Pessimistic,
            &fams.adversary,
            &fams.eta_pessimistic,
            &small_budget(),
            5,
            &WarmStart::default(),
        )
        .unwrap();
        assert!(sol.value <= sol.anchor_value + 1e-6);
    }

    #[test]
    fn adversary_solve_dominates_the_neutral_anchor() {
        let env = one_step_env();
        let model = fitted_model(&env);
        let fams = families(&env);
        let pi = fams.agent.neutral();
        for objective in [AdversaryObjective::Pessimistic, AdversaryObjective::Expected] {
            let sol = solve_adversary_pessimistic(
                &env,
                &model,
                1.0,
                &pi,
                objective,
                &fams.adversary,
                &fams.eta_pessimistic,
                &small_budget(),
                13,
                &WarmStart::default(),
            )
            .unwrap();
            assert!(sol.value <= sol.anchor_value);
        }
    }

    #[test]
    fn invalid_budgets_are_rejected() {
        let mut b = OptimizerBudget::default();
        b.population = 0;
        assert!(b.validate().is_err());
        let mut b = OptimizerBudget::default();
        b.elite_frac = 0.0;
        assert!(b.validate().is_err());
        let mut b = OptimizerBudget::default();
        b.elite_frac = 1.5;
        assert!(b.validate().is_err());
    }
}
