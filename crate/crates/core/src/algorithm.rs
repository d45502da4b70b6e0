//! The episodic learning loop: select the agent optimistically and the
//! adversary pessimistically against the current model, deploy both on the
//! true system, fold the observed transitions back into the model, and keep
//! per-episode records for the output rule and regret accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{rollout, Environment};
use crate::error::{CoreError, Result};
use crate::gp::{recalibrate, BetaSchedule, GpDynamicsModel};
use crate::optimize::{
    optimistic_value, pessimistic_value, solve_adversary_pessimistic, solve_maximin,
    AdversaryObjective, AgentObjective, OptimizerBudget, SolveFamilies, WarmStart,
};
use crate::policy::{PolicyFamily, PolicyParams};
use crate::seed::SeedContract;
use crate::sim::{estimate_j, DynamicsView};
use crate::types::{Dataset, Trajectory};

/// The learner variants sharing one loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmVariant {
    /// Optimistic robust agent, pessimistic exploring adversary.
    RhUcrl,
    /// The non-robust reduction: the adversary family collapses to a
    /// singleton, everything else identical.
    HUcrl,
    /// Neither player explores; both optimize the expected value.
    MiniMax,
    /// Optimistic agent, greedy (expected-value) adversary.
    BestResponse,
}

impl AlgorithmVariant {
    pub fn agent_objective(self) -> AgentObjective {
        match self {
            AlgorithmVariant::MiniMax => AgentObjective::Expected,
            _ => AgentObjective::Optimistic,
        }
    }

    /// How the deployed adversary is picked after the agent solve.
    pub fn adversary_rule(self) -> AdversaryRule {
        match self {
            AlgorithmVariant::RhUcrl | AlgorithmVariant::HUcrl => AdversaryRule::PessimisticSolve,
            AlgorithmVariant::BestResponse => AdversaryRule::ExpectedSolve,
            AlgorithmVariant::MiniMax => AdversaryRule::FromMaximin,
        }
    }

    pub fn singleton_adversary(self) -> bool {
        matches!(self, AlgorithmVariant::HUcrl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryRule {
    PessimisticSolve,
    ExpectedSolve,
    FromMaximin,
}

/// Per-episode record streamed to the run CSV and consumed by the output
/// rule. For expected-objective variants the optimistic and pessimistic
/// columns both hold the variant's own (expected) selection value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub agent: PolicyParams,
    pub adversary: PolicyParams,
    pub j_optimistic: f64,
    pub j_pessimistic: f64,
    pub realized_return: f64,
    pub gamma_contribution: f64,
    pub info_gain: f64,
    pub seconds: f64,
    /// Seed of the record-time value estimates; replaying it reproduces
    /// `j_optimistic`/`j_pessimistic` exactly.
    pub record_seed: u64,
    pub beta: f64,
}

/// Everything fixed across episodes of one run.
#[derive(Clone)]
pub struct TrainSetup {
    pub variant: AlgorithmVariant,
    pub families: SolveFamilies,
    pub beta: BetaSchedule,
    pub budget: OptimizerBudget,
    /// Budget for the deployed-adversary solve; defaults to `budget`.
    pub adversary_budget: Option<OptimizerBudget>,
    pub seeds: SeedContract,
    pub recalibrate: bool,
}

impl TrainSetup {
    /// Families with the variant's adversary-space override applied.
    pub fn effective_families(&self) -> SolveFamilies {
        let mut fams = self.families.clone();
        if self.variant.singleton_adversary() {
            fams.adversary = PolicyFamily::singleton(fams.adversary.neutral());
        }
        fams
    }

    fn adversary_budget(&self) -> &OptimizerBudget {
        self.adversary_budget.as_ref().unwrap_or(&self.budget)
    }
}

/// Mutable run state threaded through the loop.
pub struct TrainState {
    pub model: GpDynamicsModel,
    pub dataset: Dataset,
    pub records: Vec<EpisodeRecord>,
    pub warm: WarmStart,
}

impl TrainState {
    pub fn new(model: GpDynamicsModel) -> Self {
        TrainState {
            model,
            dataset: Dataset::new(),
            records: Vec::new(),
            warm: WarmStart::default(),
        }
    }

    pub fn episode(&self) -> usize {
        self.records.len()
    }
}

/// Runs one episode: policy selection on the model, deployment on the true
/// system, model update, record keeping. Errors carry the episode index.
pub fn run_episode(
    env: &dyn Environment,
    setup: &TrainSetup,
    state: &mut TrainState,
) -> Result<EpisodeRecord> {
    let t = state.episode() + 1;
    run_episode_inner(env, setup, state, t).map_err(|e| e.in_episode(t))
}

fn run_episode_inner(
    env: &dyn Environment,
    setup: &TrainSetup,
    state: &mut TrainState,
    t: usize,
) -> Result<EpisodeRecord> {
    let start = Instant::now();
    let fams = setup.effective_families();
    let beta = setup.beta.beta(&state.model)?;

    // agent selection (outer max over the inner robust objective)
    let agent_seed = setup.seeds.sub_seed(&setup.seeds.optimizer_label, &[t as u64]);
    let maximin = solve_maximin(
        env,
        &state.model,
        beta,
        setup.variant.agent_objective(),
        &fams,
        &setup.budget,
        agent_seed,
        &state.warm,
    )?;

    // deployed adversary selection
    let adv_seed = setup.seeds.sub_seed(&setup.seeds.adversary_label, &[t as u64]);
    let (adversary, adversary_flat, eta_pess_flat) = match setup.variant.adversary_rule() {
        AdversaryRule::FromMaximin => (
            maximin.inner_adversary.clone(),
            maximin.inner_adversary_flat.clone(),
            None,
        ),
        rule => {
            let objective = match rule {
                AdversaryRule::PessimisticSolve => AdversaryObjective::Pessimistic,
                _ => AdversaryObjective::Expected,
            };
            let sol = solve_adversary_pessimistic(
                env,
                &state.model,
                beta,
                &maximin.agent,
                objective,
                &fams.adversary,
                &fams.eta_pessimistic,
                setup.adversary_budget(),
                adv_seed,
                &state.warm,
            )?;
            (sol.adversary, sol.adversary_flat, sol.eta_flat)
        }
    };

    // record-time confidence values at the selected pair, one shared seed so
    // the optimistic/pessimistic sandwich is exact by construction
    let record_seed = setup.seeds.sub_seed("episode-record", &[t as u64]);
    let (j_opt, j_pess) = match setup.variant.agent_objective() {
        AgentObjective::Expected => {
            let est = estimate_j(
                env,
                DynamicsView::Posterior { model: &state.model },
                &maximin.agent,
                &adversary,
                setup.budget.particles,
                record_seed,
            )?;
            (est.mean, est.mean)
        }
        AgentObjective::Optimistic => {
            let opt = optimistic_value(
                env,
                &state.model,
                beta,
                &maximin.agent,
                &adversary,
                &fams.eta_optimistic,
                &setup.budget,
                record_seed,
            )?;
            let pess = pessimistic_value(
                env,
                &state.model,
                beta,
                &maximin.agent,
                &adversary,
                &fams.eta_pessimistic,
                &setup.budget,
                record_seed,
            )?;
            (opt.value, pess.value)
        }
    };

    // deploy on the true system
    let mut env_rng = setup.seeds.env_noise(&[t as u64]);
    let trajectory: Trajectory = rollout(env, &maximin.agent, &adversary, &mut env_rng, t)?;

    // uncertainty bookkeeping against the pre-update posterior
    let mut gamma_contribution = 0.0;
    let mut info_gain = 0.0;
    for tr in &trajectory.transitions {
        gamma_contribution += state.model.record_uncertainty(
            &tr.state.0,
            &tr.agent_action.0,
            &tr.adversary_action.0,
        )?;
        info_gain += state.model.info_gain_increment(
            &tr.state.0,
            &tr.agent_action.0,
            &tr.adversary_action.0,
        )?;
    }

    // the fresh episode is out-of-sample for the current posterior, so it
    // serves as the disjoint validation set for recalibration
    if setup.recalibrate && state.model.observation_count() > 0 {
        recalibrate(&mut state.model, &trajectory.transitions)?;
    }
    state.model.fit(&trajectory.transitions)?;
    state.dataset.push_episode(&trajectory);

    // warm starts for the next episode
    state.warm.agent = Some(maximin.agent_flat.clone());
    state.warm.inner_adversary = Some(maximin.inner_adversary_flat.clone());
    state.warm.adversary = Some(adversary_flat);
    state.warm.eta_optimistic = maximin.eta_flat.clone();
    state.warm.eta_pessimistic = eta_pess_flat;

    let record = EpisodeRecord {
        episode: t,
        agent: maximin.agent,
        adversary,
        j_optimistic: j_opt,
        j_pessimistic: j_pess,
        realized_return: trajectory.total_reward,
        gamma_contribution,
        info_gain,
        seconds: start.elapsed().as_secs_f64(),
        record_seed,
        beta,
    };
    state.records.push(record.clone());
    Ok(record)
}

/// Output rule: the stored agent policy with the best pessimistic value,
/// ties broken by the earliest episode. NaN entries are data corruption and
/// error with the offending episode.
pub fn output_policy(records: &[EpisodeRecord]) -> Result<(PolicyParams, usize)> {
    if records.is_empty() {
        return Err(CoreError::Empty("episode records"));
    }
    let mut best: Option<(f64, usize)> = None;
    for r in records {
        if r.j_pessimistic.is_nan() {
            return Err(CoreError::NonFiniteRecord { episode: r.episode });
        }
        match best {
            Some((v, _)) if r.j_pessimistic <= v => {}
            _ => best = Some((r.j_pessimistic, r.episode)),
        }
    }
    let (_, episode) = best.expect("nonempty records");
    let record = records
        .iter()
        .find(|r| r.episode == episode)
        .expect("episode present");
    Ok((record.agent.clone(), episode))
}

/// Cumulative robust-regret accounting against a benchmark robust value.
/// Exact benchmarks come from a grid oracle on the toy; elsewhere the
/// benchmark is a best-found proxy and negative instantaneous regrets are
/// flagged, not clamped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegretLedger {
    pub benchmark: f64,
    pub exact_benchmark: bool,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub negative_flagged: Vec<usize>,
}

impl RegretLedger {
    pub fn new(benchmark: f64, exact_benchmark: bool) -> Self {
        RegretLedger {
            benchmark,
            exact_benchmark,
            instantaneous: Vec::new(),
            cumulative: Vec::new(),
            negative_flagged: Vec::new(),
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Appends one episode's robust value `min over adversaries of J(f, pi_t, .)`.
pub fn regret_update(ledger: &mut RegretLedger, robust_value: f64) {
    let inst = ledger.benchmark - robust_value;
    if inst < 0.0 {
        ledger.negative_flagged.push(ledger.instantaneous.len());
    }
    let cum = ledger.total() + inst;
    ledger.instantaneous.push(inst);
    ledger.cumulative.push(cum);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FeatureMap, Saturation};
    use crate::types::Bounds;

    fn record(episode: usize, j_pess: f64) -> EpisodeRecord {
        let p = PolicyParams::new(
            FeatureMap::Constant,
            1,
            Bounds::symmetric(1.0, 1).unwrap(),
            Saturation::Tanh,
        );
        EpisodeRecord {
            episode,
            agent: p.clone(),
            adversary: p,
            j_optimistic: j_pess + 1.0,
            j_pessimistic: j_pess,
            realized_return: 0.0,
            gamma_contribution: 0.0,
            info_gain: 0.0,
            seconds: 0.0,
            record_seed: 0,
            beta: 1.0,
        }
    }

    #[test]
    fn output_rule_picks_the_pessimistic_argmax() {
        let records = vec![record(1, 1.0), record(2, 3.0), record(3, 2.0)];
        let (_, t) = output_policy(&records).unwrap();
        assert_eq!(t, 2);
    }

    #[test]
    fn output_rule_breaks_ties_toward_the_earliest_episode() {
        let records = vec![record(1, 2.0), record(2, 2.0), record(3, 2.0)];
        let (_, t) = output_policy(&records).unwrap();
        assert_eq!(t, 1);
    }

    #[test]
    fn output_rule_rejects_nan_and_empty() {
        let records = vec![record(1, 1.0), record(2, f64::NAN)];
        match output_policy(&records) {
            Err(CoreError::NonFiniteRecord { episode }) => assert_eq!(episode, 2),
            other => panic!("expected NaN rejection, got {other:?}"),
        }
        assert!(output_policy(&[]).is_err());
    }

    #[test]
    fn regret_ledger_accumulates_and_flags_negatives() {
        let mut ledger = RegretLedger::new(1.0, true);
        regret_update(&mut ledger, 0.4);
        regret_update(&mut ledger, 1.3);
        regret_update(&mut ledger, 0.9);
        assert_eq!(ledger.instantaneous.len(), 3);
        assert!((ledger.total() - (0.6 - 0.3 + 0.1)).abs() < 1e-12);
        assert_eq!(ledger.negative_flagged, vec![1]);
    }
}
