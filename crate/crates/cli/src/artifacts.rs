//! Run artifacts: the episode CSV, policy and model snapshots, evaluation
//! reports and the manifest tying them together. All files are written
//! atomically (write to a temp name, then rename) and embed the config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rhucrl_core::algorithm::EpisodeRecord;
use rhucrl_core::eval::EvaluationReport;
use rhucrl_core::gp::GpModelSnapshot;
use rhucrl_core::policy::PolicyParams;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Everything a finished (or failed) run leaves on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub config: RunConfig,
    pub episodes_completed: usize,
    pub episode_csv: String,
    pub snapshots: Vec<String>,
    pub output_policy: Option<String>,
    pub output_episode: Option<usize>,
    pub eval_reports: Vec<String>,
    pub status: RunStatus,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "state")]
pub enum RunStatus {
    Completed,
    Empty,
    Failed { episode: usize },
}

/// Atomic text write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub const EPISODE_CSV_HEADER: &str = "t,J_opt,J_pess,return,gamma_contrib,info_gain,seconds";

/// Serializes episode records into the fixed-column CSV, hash comment first.
pub fn episode_csv(records: &[EpisodeRecord], config_hash: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={config_hash}\n"));
    out.push_str(EPISODE_CSV_HEADER);
    out.push('\n');
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for r in records {
        w.write_record(&[
            r.episode.to_string(),
            format_f64(r.j_optimistic),
            format_f64(r.j_pessimistic),
            format_f64(r.realized_return),
            format_f64(r.gamma_contribution),
            format_f64(r.info_gain),
            format_f64(r.seconds),
        ])
        .expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv");
    out.push_str(&body);
    out
}

fn format_f64(v: f64) -> String {
    // std's shortest round-trip formatting; integers keep a trailing .0
    let mut buf = format!("{v}");
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub config_hash: String,
    pub episode: usize,
    pub policy: PolicyParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub config_hash: String,
    pub snapshot: GpModelSnapshot,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub config_hash: String,
    pub mode: String,
    pub report: EvaluationReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::runtime(format!("serialize {}: {e}", path.display())))?;
    write_atomic(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("cannot parse {}: {e}", path.display())))
}

/// Writes the manifest after verifying every referenced file exists.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let mut referenced: Vec<&String> = vec![&manifest.episode_csv];
    referenced.extend(manifest.snapshots.iter());
    referenced.extend(manifest.output_policy.iter());
    referenced.extend(manifest.eval_reports.iter());
    for rel in referenced {
        let p = dir.join(rel);
        if !p.exists() {
            return Err(CliError::runtime(format!(
                "manifest references missing file {}",
                p.display()
            )));
        }
    }
    write_json(&dir.join("manifest.json"), manifest)
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// Flat CSV flavor of an evaluation report (one row per cell or one summary
/// row for worst-case evaluations), consumed by the plot exporter.
pub fn eval_csv(report: &EvaluationReport, config_hash: &str, mode: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={config_hash}\n"));
    out.push_str("mode,cell,value,mean_return,std_return,seeds,worst_case,average\n");
    if report.per_parameter.is_empty() {
        out.push_str(&format!(
            "{mode},0,,{},0.0,{},{},{}\n",
            format_f64(report.worst_case_return),
            report.particles,
            format_f64(report.worst_case_return),
            format_f64(report.average_return),
        ));
    } else {
        for (i, cell) in report.per_parameter.iter().enumerate() {
            out.push_str(&format!(
                "{mode},{i},{},{},{},{},{},{}\n",
                format_f64(cell.value),
                format_f64(cell.mean_return),
                format_f64(cell.std_return),
                cell.seeds,
                format_f64(report.worst_case_return),
                format_f64(report.average_return),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip() {
        for v in [0.1, -3.5e-17, 123456.75, 1.0 / 3.0] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }
}
