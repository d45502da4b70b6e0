//! Run configuration: a single TOML file, schema-checked with unknown keys
//! rejected, hashed into every artifact the run writes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rhucrl_core::env::{
    ActionRobustWrapper, AdversaryChannel, Environment, LinearToyEnv, ParameterRobustWrapper,
    PendulumEnv, QuadraticReward,
};
use rhucrl_core::gp::{BetaMode, BetaSchedule, GpDynamicsModel, GpModelConfig, Kernel, TargetMode};
use rhucrl_core::optimize::{OptimizerBudget, SolveFamilies};
use rhucrl_core::policy::{FeatureMap, PolicyFamily, PolicyParams, Saturation};
use rhucrl_core::types::Bounds;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunBlock,
    pub environment: EnvironmentBlock,
    pub setting: SettingBlock,
    pub model: ModelBlock,
    pub policies: PoliciesBlock,
    pub optimizer: OptimizerBlock,
    #[serde(default)]
    pub evaluation: EvaluationBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub variant: String,
    pub episodes: usize,
    pub master_seed: u64,
    pub output_dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    pub id: String,
    pub horizon: usize,
    pub noise_std: f64,
    #[serde(default)]
    pub pendulum: Option<PendulumBlock>,
    #[serde(default)]
    pub linear_toy: Option<LinearToyBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PendulumBlock {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub torque_limit: f64,
    pub dt: f64,
    pub initial_theta: f64,
    pub adversary_channel: String,
    #[serde(default)]
    pub adversary_fraction: Option<f64>,
    #[serde(default)]
    pub adversary_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinearToyBlock {
    pub a: f64,
    pub b: f64,
    pub b_adv: f64,
    pub initial_state: f64,
    pub action_limit: f64,
    pub adversary_limit: f64,
    pub reward: RewardBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RewardBlock {
    #[serde(default)]
    pub c_s: f64,
    #[serde(default)]
    pub c_u: f64,
    #[serde(default)]
    pub c_adv: f64,
    #[serde(default)]
    pub q_s: f64,
    #[serde(default)]
    pub q_u: f64,
    #[serde(default)]
    pub q_adv: f64,
    #[serde(default)]
    pub q_cross: f64,
    #[serde(default)]
    pub on_successor: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SettingBlock {
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub parameter: Option<String>,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kernel: String,
    #[serde(default = "default_lengthscale")]
    pub lengthscale: f64,
    #[serde(default = "default_signal_variance")]
    pub signal_variance: f64,
    pub lambda: LambdaPolicy,
    pub beta: BetaBlock,
    #[serde(default)]
    pub recalibrate: bool,
    #[serde(default = "default_max_active")]
    pub max_active_points: usize,
    #[serde(default = "default_target_mode")]
    pub target_mode: String,
    #[serde(default = "default_true")]
    pub normalize_inputs: bool,
    #[serde(default = "default_true")]
    pub normalize_targets: bool,
}

fn default_lengthscale() -> f64 {
    1.0
}
fn default_signal_variance() -> f64 {
    1.0
}
fn default_max_active() -> usize {
    400
}
fn default_target_mode() -> String {
    "delta".to_string()
}
fn default_true() -> bool {
    true
}

/// Ridge regularizer policy: the horizon-scaled default or a fixed value.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum LambdaPolicy {
    Named(String),
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BetaBlock {
    pub mode: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub rkhs_bound: Option<f64>,
    #[serde(default)]
    pub noise_scale: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoliciesBlock {
    pub agent: PolicyBlock,
    pub adversary: PolicyBlock,
    pub eta: PolicyBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    pub features: String,
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    #[serde(default)]
    pub ranges: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub lengthscale_factor: Option<f64>,
    #[serde(default)]
    pub saturation: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OptimizerBlock {
    pub population: usize,
    #[serde(default = "default_elite_frac")]
    pub elite_frac: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    #[serde(default = "default_one")]
    pub restarts: usize,
    pub particles: usize,
    #[serde(default)]
    pub inner_population: Option<usize>,
    #[serde(default)]
    pub eta_population: Option<usize>,
    #[serde(default)]
    pub eta_iterations: Option<usize>,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    #[serde(default)]
    pub joint_hallucination: bool,
    #[serde(default)]
    pub adversary_population: Option<usize>,
    #[serde(default)]
    pub adversary_iterations: Option<usize>,
}

fn default_elite_frac() -> f64 {
    0.1
}
fn default_one() -> usize {
    1
}
fn default_init_std() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvaluationBlock {
    #[serde(default = "default_budget_multiplier")]
    pub budget_multiplier: f64,
    #[serde(default = "default_eval_restarts")]
    pub restarts: usize,
    #[serde(default = "default_eval_particles")]
    pub particles: usize,
    #[serde(default)]
    pub swing_up_threshold: Option<f64>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_seeds_per_cell")]
    pub seeds_per_cell: usize,
}

fn default_budget_multiplier() -> f64 {
    4.0
}
fn default_eval_restarts() -> usize {
    2
}
fn default_eval_particles() -> usize {
    8
}
fn default_seeds_per_cell() -> usize {
    3
}

impl Default for EvaluationBlock {
    fn default() -> Self {
        EvaluationBlock {
            budget_multiplier: default_budget_multiplier(),
            restarts: default_eval_restarts(),
            particles: default_eval_particles(),
            swing_up_threshold: None,
            grid: None,
            seeds_per_cell: default_seeds_per_cell(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text)
            .map_err(|e| CliError::usage(format!("config schema error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Hash of the canonical serialized form; recorded in every artifact.
    /// The output directory is excluded so relocating a run does not change
    /// its identity.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.output_dir = String::new();
        let text = toml::to_string(&canonical).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        hex_string(&digest[..16])
    }

    pub fn validate(&self) -> CliResult<()> {
        match self.run.variant.as_str() {
            "rh-ucrl" | "h-ucrl" | "minimax" | "best-response" => {}
            other => {
                return Err(CliError::usage(format!(
                    "run.variant: unknown variant `{other}`"
                )))
            }
        }
        match self.environment.id.as_str() {
            "pendulum" => {
                if self.environment.pendulum.is_none() {
                    return Err(CliError::usage(
                        "environment.pendulum: block required for id = \"pendulum\"",
                    ));
                }
            }
            "linear-toy" => {
                if self.environment.linear_toy.is_none() {
                    return Err(CliError::usage(
                        "environment.linear_toy: block required for id = \"linear-toy\"",
                    ));
                }
            }
            other => {
                return Err(CliError::usage(format!(
                    "environment.id: unknown environment `{other}`"
                )))
            }
        }
        if self.environment.horizon == 0 {
            return Err(CliError::usage("environment.horizon: must be at least 1"));
        }
        match self.setting.kind.as_str() {
            "adversarial" => {}
            "action" => {
                let alpha = self.setting.alpha.ok_or_else(|| {
                    CliError::usage("setting.alpha: required for the action-robust setting")
                })?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(CliError::usage("setting.alpha: must lie in [0, 1]"));
                }
            }
            "parameter" => {
                let [lo, hi] = self.setting.interval.ok_or_else(|| {
                    CliError::usage("setting.interval: required for the parameter-robust setting")
                })?;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(CliError::usage("setting.interval: must satisfy lo < hi"));
                }
                if self.setting.parameter.is_none() {
                    return Err(CliError::usage(
                        "setting.parameter: required for the parameter-robust setting",
                    ));
                }
            }
            other => {
                return Err(CliError::usage(format!(
                    "setting.kind: unknown setting `{other}`"
                )))
            }
        }
        match self.model.kernel.as_str() {
            "squared-exponential" | "linear" => {}
            other => {
                return Err(CliError::usage(format!(
                    "model.kernel: unknown kernel `{other}`"
                )))
            }
        }
        match self.model.target_mode.as_str() {
            "absolute" | "delta" => {}
            other => {
                return Err(CliError::usage(format!(
                    "model.target_mode: unknown mode `{other}`"
                )))
            }
        }
        if let LambdaPolicy::Named(name) = &self.model.lambda {
            if name != "ph" {
                return Err(CliError::usage(format!(
                    "model.lambda: expected \"ph\" or a number, got `{name}`"
                )));
            }
        }
        match self.model.beta.mode.as_str() {
            "fixed" => {
                if self.model.beta.value.is_none() {
                    return Err(CliError::usage("model.beta.value: required for fixed mode"));
                }
            }
            "theoretical" => {
                for (k, v) in [
                    ("rkhs_bound", self.model.beta.rkhs_bound),
                    ("noise_scale", self.model.beta.noise_scale),
                    ("delta", self.model.beta.delta),
                ] {
                    if v.is_none() {
                        return Err(CliError::usage(format!(
                            "model.beta.{k}: required for theoretical mode"
                        )));
                    }
                }
            }
            other => {
                return Err(CliError::usage(format!(
                    "model.beta.mode: unknown mode `{other}`"
                )))
            }
        }
        self.budget()
            .validate()
            .map_err(|e| CliError::usage(format!("optimizer: {e}")))?;
        Ok(())
    }

    pub fn budget(&self) -> OptimizerBudget {
        let o = &self.optimizer;
        OptimizerBudget {
            population: o.population,
            elite_frac: o.elite_frac,
            iterations: o.iterations,
            inner_iterations: o.inner_iterations,
            restarts: o.restarts,
            particles: o.particles,
            inner_population: o.inner_population,
            eta_population: o.eta_population,
            eta_iterations: o.eta_iterations,
            init_std: o.init_std,
            joint_hallucination: o.joint_hallucination,
        }
    }

    /// Budget for the deployed-adversary solve (defaults to the main one).
    pub fn adversary_budget(&self) -> Option<OptimizerBudget> {
        let o = &self.optimizer;
        if o.adversary_population.is_none() && o.adversary_iterations.is_none() {
            return None;
        }
        let mut b = self.budget();
        if let Some(p) = o.adversary_population {
            b.population = p;
        }
        if let Some(i) = o.adversary_iterations {
            b.iterations = i;
        }
        Some(b)
    }

    pub fn beta_schedule(&self) -> BetaSchedule {
        let b = &self.model.beta;
        match b.mode.as_str() {
            "fixed" => BetaSchedule {
                mode: BetaMode::Fixed {
                    value: b.value.unwrap_or(1.0),
                },
            },
            _ => BetaSchedule {
                mode: BetaMode::Theoretical {
                    rkhs_bound: b.rkhs_bound.unwrap_or(1.0),
                    noise_scale: b.noise_scale.unwrap_or(0.1),
                    delta: b.delta.unwrap_or(0.1),
                },
            },
        }
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Concrete environment instances the configuration can produce.
pub enum BuiltEnv {
    Pendulum(PendulumEnv),
    PendulumAction(ActionRobustWrapper<PendulumEnv>),
    PendulumParameter(ParameterRobustWrapper<PendulumEnv>),
    LinearToy(LinearToyEnv),
    LinearToyAction(ActionRobustWrapper<LinearToyEnv>),
}

impl BuiltEnv {
    pub fn as_env(&self) -> &dyn Environment {
        match self {
            BuiltEnv::Pendulum(e) => e,
            BuiltEnv::PendulumAction(e) => e,
            BuiltEnv::PendulumParameter(e) => e,
            BuiltEnv::LinearToy(e) => e,
            BuiltEnv::LinearToyAction(e) => e,
        }
    }
}

/// Builds the environment the setting block describes.
pub fn build_environment(config: &RunConfig) -> CliResult<BuiltEnv> {
    let horizon = config.environment.horizon;
    let noise = config.environment.noise_std;
    match config.environment.id.as_str() {
        "pendulum" => {
            let p = config.environment.pendulum.as_ref().expect("validated");
            let channel = match p.adversary_channel.as_str() {
                "torque" => AdversaryChannel::Torque {
                    fraction: p.adversary_fraction.unwrap_or(0.5),
                },
                "relative-params" => AdversaryChannel::RelativeParams {
                    alpha: p.adversary_alpha.unwrap_or(0.5),
                },
                other => {
                    return Err(CliError::usage(format!(
                        "environment.pendulum.adversary_channel: unknown channel `{other}`"
                    )))
                }
            };
            let env = PendulumEnv::new(
                p.mass,
                p.length,
                p.gravity,
                p.torque_limit,
                channel,
                horizon,
                p.dt,
                noise,
                p.initial_theta,
            )
            .map_err(|e| CliError::usage(format!("environment.pendulum: {e}")))?;
            match config.setting.kind.as_str() {
                "adversarial" => Ok(BuiltEnv::Pendulum(env)),
                "action" => {
                    let alpha = config.setting.alpha.expect("validated");
                    let wrapped = ActionRobustWrapper::new(env, alpha)
                        .map_err(|e| CliError::usage(format!("setting: {e}")))?;
                    Ok(BuiltEnv::PendulumAction(wrapped))
                }
                "parameter" => {
                    let [lo, hi] = config.setting.interval.expect("validated");
                    let name = config.setting.parameter.clone().expect("validated");
                    let wrapped = ParameterRobustWrapper::new(env, name, lo, hi)
                        .map_err(|e| CliError::usage(format!("setting: {e}")))?;
                    Ok(BuiltEnv::PendulumParameter(wrapped))
                }
                _ => unreachable!("validated setting kind"),
            }
        }
        "linear-toy" => {
            let l = config.environment.linear_toy.as_ref().expect("validated");
            let reward = QuadraticReward {
                c_s: l.reward.c_s,
                c_u: l.reward.c_u,
                c_adv: l.reward.c_adv,
                q_s: l.reward.q_s,
                q_u: l.reward.q_u,
                q_adv: l.reward.q_adv,
                q_cross: l.reward.q_cross,
                on_successor: l.reward.on_successor,
            };
            let env = LinearToyEnv::builder()
                .dynamics(l.a, l.b, l.b_adv)
                .reward(reward)
                .horizon(horizon)
                .noise_std(noise)
                .initial_state(l.initial_state)
                .action_limit(l.action_limit)
                .adversary_limit(l.adversary_limit)
                .build()
                .map_err(|e| CliError::usage(format!("environment.linear_toy: {e}")))?;
            match config.setting.kind.as_str() {
                "adversarial" => Ok(BuiltEnv::LinearToy(env)),
                "action" => {
                    let alpha = config.setting.alpha.expect("validated");
                    let wrapped = ActionRobustWrapper::new(env, alpha)
                        .map_err(|e| CliError::usage(format!("setting: {e}")))?;
                    Ok(BuiltEnv::LinearToyAction(wrapped))
                }
                _ => Err(CliError::usage(
                    "setting.kind: the parameter-robust setting needs the pendulum environment",
                )),
            }
        }
        _ => unreachable!("validated environment id"),
    }
}

fn build_feature_map(
    block: &PolicyBlock,
    input_dim: usize,
    periods: &[Option<f64>],
) -> CliResult<FeatureMap> {
    match block.features.as_str() {
        "constant" => Ok(FeatureMap::Constant),
        "identity" => Ok(FeatureMap::Identity),
        "radial" => {
            let grid = block.grid.clone().ok_or_else(|| {
                CliError::usage("policies: radial features need a `grid` of per-dimension counts")
            })?;
            let ranges = block.ranges.clone().ok_or_else(|| {
                CliError::usage("policies: radial features need per-dimension `ranges`")
            })?;
            if grid.len() != input_dim || ranges.len() != input_dim {
                return Err(CliError::usage(format!(
                    "policies: radial grid/ranges must cover {input_dim} input dimensions"
                )));
            }
            let ranges: Vec<(f64, f64)> = ranges.iter().map(|r| (r[0], r[1])).collect();
            FeatureMap::radial_grid(
                &ranges,
                &grid,
                periods.to_vec(),
                block.lengthscale_factor.unwrap_or(1.0),
            )
            .map_err(|e| CliError::usage(format!("policies: {e}")))
        }
        other => Err(CliError::usage(format!(
            "policies: unknown feature map `{other}`"
        ))),
    }
}

fn saturation_of(block: &PolicyBlock) -> CliResult<Saturation> {
    match block.saturation.as_deref() {
        None | Some("tanh") => Ok(Saturation::Tanh),
        Some("clamp") => Ok(Saturation::Clamp),
        Some(other) => Err(CliError::usage(format!(
            "policies: unknown saturation `{other}`"
        ))),
    }
}

/// Builds the searchable policy families for agent, adversary and the two
/// hallucination channels.
pub fn build_families(config: &RunConfig, env: &dyn Environment) -> CliResult<SolveFamilies> {
    let spec = env.spec();
    let state_periods = env.state_periods();
    let agent_features =
        build_feature_map(&config.policies.agent, spec.state_dim, &state_periods)?;
    let adversary_features =
        build_feature_map(&config.policies.adversary, spec.state_dim, &state_periods)?;
    let joint_dim = spec.state_dim + spec.action_dim + spec.adversary_dim;
    let mut joint_periods = state_periods.clone();
    joint_periods.resize(joint_dim, None);
    let eta_features = build_feature_map(&config.policies.eta, joint_dim, &joint_periods)?;

    let agent = PolicyFamily::new(PolicyParams::new(
        agent_features,
        spec.state_dim,
        spec.action_box.clone(),
        saturation_of(&config.policies.agent)?,
    ));
    let adversary = PolicyFamily::new(PolicyParams::new(
        adversary_features,
        spec.state_dim,
        spec.adversary_box.clone(),
        saturation_of(&config.policies.adversary)?,
    ));
    let eta_box = Bounds::symmetric(1.0, spec.state_dim)
        .map_err(|e| CliError::usage(format!("policies.eta: {e}")))?;
    let eta_template = PolicyParams::new(
        eta_features,
        joint_dim,
        eta_box,
        saturation_of(&config.policies.eta)?,
    );
    Ok(SolveFamilies {
        agent,
        adversary,
        eta_optimistic: PolicyFamily::new(eta_template.clone()),
        eta_pessimistic: PolicyFamily::new(eta_template),
    })
}

/// Builds the dynamics model the config describes for the given environment.
pub fn build_model(config: &RunConfig, env: &dyn Environment) -> CliResult<GpDynamicsModel> {
    let spec = env.spec();
    let embedding = env.input_embedding();
    let input_dim =
        embedding.state_embedding_dim(spec.state_dim) + spec.action_dim + spec.adversary_dim;
    let kernel = match config.model.kernel.as_str() {
        "squared-exponential" => Kernel::squared_exponential(
            input_dim,
            config.model.lengthscale,
            config.model.signal_variance,
        ),
        _ => Kernel::linear(input_dim, config.model.lengthscale),
    }
    .map_err(|e| CliError::usage(format!("model.kernel: {e}")))?;
    let lambda = match &config.model.lambda {
        LambdaPolicy::Named(_) => (spec.state_dim * spec.horizon) as f64,
        LambdaPolicy::Fixed(v) => {
            if !(*v > 0.0) {
                return Err(CliError::usage("model.lambda: must be positive"));
            }
            *v
        }
    };
    let target_mode = match config.model.target_mode.as_str() {
        "absolute" => TargetMode::Absolute,
        _ => TargetMode::Delta,
    };
    let model_config = GpModelConfig {
        kernel,
        lambda,
        target_mode,
        normalize_inputs: config.model.normalize_inputs,
        normalize_targets: config.model.normalize_targets,
        max_active_points: config.model.max_active_points,
        embedding,
        state_periods: env.state_periods(),
    };
    GpDynamicsModel::new(
        model_config,
        spec.state_dim,
        spec.action_dim,
        spec.adversary_dim,
    )
    .map_err(|e| CliError::usage(format!("model: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL_TOY: &str = r#"
[run]
variant = "rh-ucrl"
episodes = 3
master_seed = 7
output_dir = "out"

[environment]
id = "linear-toy"
horizon = 5
noise_std = 0.02

[environment.linear_toy]
a = 0.8
b = 1.0
b_adv = -0.5
initial_state = 1.0
action_limit = 1.0
adversary_limit = 1.0
reward = { q_s = -1.0 }

[setting]
kind = "adversarial"

[model]
kernel = "squared-exponential"
lambda = "ph"
beta = { mode = "fixed", value = 1.0 }
target_mode = "absolute"
normalize_inputs = false
normalize_targets = false

[policies]
agent = { features = "identity" }
adversary = { features = "constant" }
eta = { features = "identity" }

[optimizer]
population = 8
iterations = 3
inner_iterations = 2
particles = 2
"#;

    #[test]
    fn minimal_config_parses_and_builds() {
        let config = RunConfig::from_toml(MINIMAL_TOY).unwrap();
        let env = build_environment(&config).unwrap();
        assert_eq!(env.as_env().spec().horizon, 5);
        let model = build_model(&config, env.as_env()).unwrap();
        assert_eq!(model.lambda(), 5.0);
        let fams = build_families(&config, env.as_env()).unwrap();
        assert_eq!(fams.agent.param_dim(), 2);
        assert_eq!(fams.adversary.param_dim(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let bad = MINIMAL_TOY.replace("[optimizer]", "[optimizer]\nbogus_key = 1");
        let err = RunConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::from_toml(MINIMAL_TOY).unwrap();
        let b = RunConfig::from_toml(MINIMAL_TOY).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::from_toml(&MINIMAL_TOY.replace("master_seed = 7", "master_seed = 8"))
            .unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn parameter_setting_requires_interval_and_name() {
        let bad = MINIMAL_TOY.replace("kind = \"adversarial\"", "kind = \"parameter\"");
        assert!(RunConfig::from_toml(&bad).is_err());
    }
}
