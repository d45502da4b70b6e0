//! The four subcommands: train, evaluate, sweep, checks.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rhucrl_core::algorithm::{output_policy, run_episode, AlgorithmVariant, TrainSetup, TrainState};
use rhucrl_core::checks::run_all_checks;
use rhucrl_core::eval::{parameter_sweep, worst_case_eval, SweepSetting, SweepSpec};
use rhucrl_core::seed::{derive_seed, SeedContract};

use crate::artifacts::{
    episode_csv, eval_csv, manifest_path, read_json, write_atomic, write_json, write_manifest,
    EvalArtifact, ModelArtifact, PolicyArtifact, RunManifest, RunStatus,
};
use crate::config::{build_environment, build_families, build_model, BuiltEnv, RunConfig};
use crate::error::{CliError, CliResult};

fn variant_of(config: &RunConfig) -> AlgorithmVariant {
    match config.run.variant.as_str() {
        "h-ucrl" => AlgorithmVariant::HUcrl,
        "minimax" => AlgorithmVariant::MiniMax,
        "best-response" => AlgorithmVariant::BestResponse,
        _ => AlgorithmVariant::RhUcrl,
    }
}

pub struct TrainOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

/// Runs the episodic loop the config describes and writes all artifacts.
pub fn run_train(config: &RunConfig, quiet: bool) -> CliResult<TrainOutcome> {
    let started = Instant::now();
    let dir = PathBuf::from(&config.run.output_dir);
    std::fs::create_dir_all(&dir)?;
    let hash = config.hash();
    let csv_name = "episodes.csv".to_string();

    if config.run.episodes == 0 {
        write_atomic(&dir.join(&csv_name), &episode_csv(&[], &hash))?;
        let manifest = RunManifest {
            config_hash: hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            episodes_completed: 0,
            episode_csv: csv_name,
            snapshots: Vec::new(),
            output_policy: None,
            output_episode: None,
            eval_reports: Vec::new(),
            status: RunStatus::Empty,
            total_seconds: started.elapsed().as_secs_f64(),
        };
        write_manifest(&dir, &manifest)?;
        return Ok(TrainOutcome { dir, manifest });
    }

    let built = build_environment(config)?;
    let env = built.as_env();
    let model = build_model(config, env)?;
    let families = build_families(config, env)?;
    let setup = TrainSetup {
        variant: variant_of(config),
        families,
        beta: config.beta_schedule(),
        budget: config.budget(),
        adversary_budget: config.adversary_budget(),
        seeds: SeedContract::new(config.run.master_seed),
        recalibrate: config.model.recalibrate,
    };
    let mut state = TrainState::new(model);
    let mut snapshots: Vec<String> = Vec::new();

    for t in 1..=config.run.episodes {
        match run_episode(env, &setup, &mut state) {
            Ok(record) => {
                if !quiet {
                    eprintln!(
                        "episode {t}/{}: J_opt {:.3} J_pess {:.3} return {:.3} ({:.2}s)",
                        config.run.episodes,
                        record.j_optimistic,
                        record.j_pessimistic,
                        record.realized_return,
                        record.seconds
                    );
                }
            }
            Err(e) => {
                write_atomic(&dir.join(&csv_name), &episode_csv(&state.records, &hash))?;
                let manifest = RunManifest {
                    config_hash: hash,
                    code_version: env!("CARGO_PKG_VERSION").to_string(),
                    config: config.clone(),
                    episodes_completed: state.records.len(),
                    episode_csv: csv_name,
                    snapshots,
                    output_policy: None,
                    output_episode: None,
                    eval_reports: Vec::new(),
                    status: RunStatus::Failed { episode: t },
                    total_seconds: started.elapsed().as_secs_f64(),
                };
                write_manifest(&dir, &manifest)?;
                return Err(CliError::runtime(format!("training failed: {e}")));
            }
        }
        if config.output.snapshot_every > 0 && t % config.output.snapshot_every == 0 {
            let name = format!("model_ep{t}.json");
            write_json(
                &dir.join(&name),
                &ModelArtifact {
                    config_hash: hash.clone(),
                    snapshot: state.model.to_snapshot(),
                },
            )?;
            snapshots.push(name);
        }
    }

    write_atomic(&dir.join(&csv_name), &episode_csv(&state.records, &hash))?;
    let final_name = "model_final.json".to_string();
    write_json(
        &dir.join(&final_name),
        &ModelArtifact {
            config_hash: hash.clone(),
            snapshot: state.model.to_snapshot(),
        },
    )?;
    snapshots.push(final_name);

    let (policy, t_star) = output_policy(&state.records)?;
    let policy_name = "output_policy.json".to_string();
    write_json(
        &dir.join(&policy_name),
        &PolicyArtifact {
            config_hash: hash.clone(),
            episode: t_star,
            policy,
        },
    )?;

    let manifest = RunManifest {
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        episodes_completed: state.records.len(),
        episode_csv: csv_name,
        snapshots,
        output_policy: Some(policy_name),
        output_episode: Some(t_star),
        eval_reports: Vec::new(),
        status: RunStatus::Completed,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    write_manifest(&dir, &manifest)?;
    Ok(TrainOutcome { dir, manifest })
}

/// Optional overrides for the evaluate command.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOverrides {
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub budget_multiplier: Option<f64>,
    #[serde(default)]
    pub particles: Option<usize>,
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub seeds_per_cell: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl EvalOverrides {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("eval config: {e}")))
    }
}

/// Evaluates a finished run's output policy: worst-case adversary training
/// for adversarial/action settings, a parameter grid otherwise.
pub fn run_evaluate(
    manifest_file: &Path,
    overrides: &EvalOverrides,
    force: bool,
    quiet: bool,
) -> CliResult<Vec<PathBuf>> {
    let dir = manifest_file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut manifest: RunManifest = read_json(manifest_file)?;
    let recomputed = manifest.config.hash();
    if recomputed != manifest.config_hash && !force {
        return Err(CliError::usage(format!(
            "config hash mismatch: manifest says {}, recomputed {recomputed}; pass --force to evaluate anyway",
            manifest.config_hash
        )));
    }
    let policy_rel = manifest
        .output_policy
        .clone()
        .ok_or_else(|| CliError::usage("manifest has no output policy to evaluate"))?;
    let artifact: PolicyArtifact = read_json(&dir.join(&policy_rel))?;
    if artifact.config_hash != manifest.config_hash && !force {
        return Err(CliError::usage(
            "output policy was written under a different config hash; pass --force to override",
        ));
    }

    let config = manifest.config.clone();
    let built = build_environment(&config)?;
    let seed = overrides
        .seed
        .unwrap_or_else(|| derive_seed(config.run.master_seed, "evaluation", &[]));
    let particles = overrides.particles.unwrap_or(config.evaluation.particles);
    let mode = overrides
        .mode
        .clone()
        .unwrap_or_else(|| match config.setting.kind.as_str() {
            "parameter" => "parameter-sweep".to_string(),
            _ => "worst-case".to_string(),
        });

    let (artifact_json, artifact_csv) = match mode.as_str() {
        "worst-case" => {
            let env = built.as_env();
            let families = build_families(&config, env)?;
            let multiplier = overrides
                .budget_multiplier
                .unwrap_or(config.evaluation.budget_multiplier);
            let mut budget = config.budget().scaled(multiplier);
            budget.particles = particles;
            let restarts = overrides.restarts.unwrap_or(config.evaluation.restarts);
            let report = worst_case_eval(
                env,
                &artifact.policy,
                &families.adversary,
                &budget,
                restarts,
                seed,
            )?;
            if !quiet {
                eprintln!(
                    "worst-case {:.3}, average {:.3}",
                    report.worst_case_return, report.average_return
                );
            }
            (
                EvalArtifact {
                    config_hash: manifest.config_hash.clone(),
                    mode: mode.clone(),
                    report,
                },
                "eval_worst_case",
            )
        }
        "parameter-sweep" => {
            let wrapper = match &built {
                BuiltEnv::PendulumParameter(w) => w,
                _ => {
                    return Err(CliError::usage(
                        "parameter-sweep evaluation needs a parameter-robust pendulum run",
                    ))
                }
            };
            let grid = overrides
                .grid
                .clone()
                .or_else(|| config.evaluation.grid.clone())
                .unwrap_or_else(|| {
                    let (lo, hi) = wrapper.interval;
                    (0..11).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect()
                });
            let sweep = SweepSpec {
                setting: SweepSetting::Parameter,
                grid,
                seeds_per_cell: overrides
                    .seeds_per_cell
                    .unwrap_or(config.evaluation.seeds_per_cell),
            };
            let report = parameter_sweep(wrapper, &artifact.policy, &sweep, particles, seed)?;
            if !quiet {
                eprintln!(
                    "worst cell {:?} with return {:.3}",
                    report.worst_parameter, report.worst_case_return
                );
            }
            (
                EvalArtifact {
                    config_hash: manifest.config_hash.clone(),
                    mode: mode.clone(),
                    report,
                },
                "eval_parameter_sweep",
            )
        }
        other => {
            return Err(CliError::usage(format!(
                "evaluate: unknown mode `{other}` (expected worst-case or parameter-sweep)"
            )))
        }
    };

    let json_name = format!("{artifact_csv}.json");
    let csv_name = format!("{artifact_csv}.csv");
    write_json(&dir.join(&json_name), &artifact_json)?;
    write_atomic(
        &dir.join(&csv_name),
        &eval_csv(&artifact_json.report, &manifest.config_hash, &mode),
    )?;
    for name in [&json_name, &csv_name] {
        if !manifest.eval_reports.contains(name) {
            manifest.eval_reports.push(name.clone());
        }
    }
    write_manifest(&dir, &manifest)?;
    Ok(vec![dir.join(json_name), dir.join(csv_name)])
}

/// Axis walked by the sweep command.
#[derive(Debug, Clone)]
pub struct AxisSpec {
    pub name: String,
    pub values: Vec<f64>,
}

impl AxisSpec {
    pub fn parse(text: &str) -> CliResult<Self> {
        let (name, values) = text
            .split_once('=')
            .ok_or_else(|| CliError::usage("axis spec must look like name=v1,v2,..."))?;
        let values: Result<Vec<f64>, _> = values.split(',').map(str::trim).map(str::parse).collect();
        let values = values.map_err(|e| CliError::usage(format!("axis values: {e}")))?;
        if values.is_empty() {
            return Err(CliError::usage("axis needs at least one value"));
        }
        Ok(AxisSpec {
            name: name.trim().to_string(),
            values,
        })
    }
}

/// Applies one axis value to a copy of the template config.
fn apply_axis(template: &RunConfig, axis: &AxisSpec, value: f64) -> CliResult<RunConfig> {
    let mut config = template.clone();
    match axis.name.as_str() {
        "alpha" => match config.setting.kind.as_str() {
            "action" => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(CliError::usage(format!(
                        "axis alpha: {value} outside [0, 1]"
                    )));
                }
                config.setting.alpha = Some(value);
            }
            "adversarial" => {
                let p = config.environment.pendulum.as_mut().ok_or_else(|| {
                    CliError::usage("axis alpha on the adversarial setting needs the pendulum")
                })?;
                if !(0.0 < value && value < 1.0) {
                    return Err(CliError::usage(format!(
                        "axis alpha: {value} outside (0, 1)"
                    )));
                }
                p.adversary_alpha = Some(value);
            }
            other => {
                return Err(CliError::usage(format!(
                    "axis alpha does not apply to the `{other}` setting"
                )))
            }
        },
        "parameter" => {
            let [lo, hi] = config.setting.interval.ok_or_else(|| {
                CliError::usage("axis parameter needs the parameter-robust setting")
            })?;
            if !(value >= lo && value <= hi) {
                return Err(CliError::usage(format!(
                    "axis parameter: {value} outside the declared interval [{lo}, {hi}]"
                )));
            }
            config.evaluation.grid = Some(vec![value]);
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown sweep axis `{other}` (expected alpha or parameter)"
            )))
        }
    }
    Ok(config)
}

#[derive(Debug, Clone)]
struct CellResult {
    axis_index: usize,
    seed_index: usize,
    worst: Option<f64>,
    average: Option<f64>,
    error: Option<String>,
}

/// Trains and evaluates one run per (axis value, seed), aggregating mean and
/// spread per axis value into one CSV. Cell failures are recorded and the
/// sweep continues.
pub fn run_sweep(
    template: &RunConfig,
    axis: &AxisSpec,
    seeds: usize,
    workers: usize,
    out_dir: &Path,
    quiet: bool,
) -> CliResult<PathBuf> {
    if seeds == 0 {
        return Err(CliError::usage("sweep needs at least one seed"));
    }
    // validate the whole axis up front
    for &v in &axis.values {
        apply_axis(template, axis, v)?;
    }
    std::fs::create_dir_all(out_dir)?;

    let mut cells: VecDeque<(usize, usize)> = VecDeque::new();
    for ai in 0..axis.values.len() {
        for si in 0..seeds {
            cells.push_back((ai, si));
        }
    }
    let queue = Mutex::new(cells);
    let results: Mutex<Vec<CellResult>> = Mutex::new(Vec::new());
    let workers = workers.max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let cell = queue.lock().expect("queue").pop_front();
                let Some((ai, si)) = cell else { break };
                let value = axis.values[ai];
                let outcome = run_cell(template, axis, value, ai, si, out_dir, quiet);
                let record = match outcome {
                    Ok((worst, average)) => CellResult {
                        axis_index: ai,
                        seed_index: si,
                        worst: Some(worst),
                        average: Some(average),
                        error: None,
                    },
                    Err(e) => CellResult {
                        axis_index: ai,
                        seed_index: si,
                        worst: None,
                        average: None,
                        error: Some(e.to_string()),
                    },
                };
                results.lock().expect("results").push(record);
            });
        }
    });

    let mut results = results.into_inner().expect("results");
    results.sort_by_key(|r| (r.axis_index, r.seed_index));

    let mut csv = String::new();
    csv.push_str(&format!("# config_hash={}\n", template.hash()));
    csv.push_str("axis,value,cells,failed,worst_mean,worst_std,avg_mean,avg_std\n");
    for (ai, &value) in axis.values.iter().enumerate() {
        let cell_results: Vec<&CellResult> =
            results.iter().filter(|r| r.axis_index == ai).collect();
        let ok: Vec<&CellResult> = cell_results
            .iter()
            .copied()
            .filter(|r| r.error.is_none())
            .collect();
        let failed = cell_results.len() - ok.len();
        let stats = |get: fn(&CellResult) -> Option<f64>| -> (f64, f64) {
            let vals: Vec<f64> = ok.iter().filter_map(|r| get(r)).collect();
            if vals.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            (mean, var.sqrt())
        };
        let (wm, ws) = stats(|r| r.worst);
        let (am, asd) = stats(|r| r.average);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            axis.name,
            value,
            cell_results.len(),
            failed,
            wm,
            ws,
            am,
            asd
        ));
    }
    let path = out_dir.join("sweep.csv");
    write_atomic(&path, &csv)?;
    Ok(path)
}

fn run_cell(
    template: &RunConfig,
    axis: &AxisSpec,
    value: f64,
    axis_index: usize,
    seed_index: usize,
    out_dir: &Path,
    quiet: bool,
) -> CliResult<(f64, f64)> {
    let mut config = apply_axis(template, axis, value)?;
    config.run.master_seed = derive_seed(template.run.master_seed, "sweep-seed", &[seed_index as u64]);
    let cell_dir = out_dir.join(format!("cell_a{axis_index}_s{seed_index}"));
    config.run.output_dir = cell_dir.to_string_lossy().to_string();
    let outcome = run_train(&config, true)?;
    if outcome.manifest.status != RunStatus::Completed {
        return Err(CliError::runtime("cell training did not complete"));
    }
    let reports = run_evaluate(
        &manifest_path(&outcome.dir),
        &EvalOverrides::default(),
        false,
        true,
    )?;
    let report: EvalArtifact = read_json(&reports[0])?;
    if !quiet {
        eprintln!(
            "cell {axis_index}/{seed_index}: worst {:.3} avg {:.3}",
            report.report.worst_case_return, report.report.average_return
        );
    }
    Ok((report.report.worst_case_return, report.report.average_return))
}

/// Runs the fixed-seed property suites and prints the pass/fail table.
pub fn run_checks(seed: u64) -> CliResult<()> {
    let reports = run_all_checks(seed);
    let total = reports.len();
    let mut failed = 0usize;
    for r in &reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("{verdict}\t{}\t{}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total });
    }
    Ok(())
}
