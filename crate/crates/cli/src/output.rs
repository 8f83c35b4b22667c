//! Files written by `run` and `sweep`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use iptm::mpc::RunOutput;
use iptm::plant::{Metrics, RunStatus};
use iptm::scenario::{CaseId, Scenario};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPLANS_FILE: &str = "replans.json";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub case: String,
    pub out_dir: PathBuf,
    /// SHA-256 over the effective configuration, the traction profile and the case.
    pub config_hash: String,
    pub version: String,
}

pub fn config_hash(scenario: &Scenario, case: CaseId) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(scenario.to_toml().map_err(anyhow::Error::msg)?.as_bytes());
    hasher.update(serde_json::to_vec(scenario.traction_profile())?);
    hasher.update(case.as_str().as_bytes());
    Ok(hex::encode(hasher.finalize()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_run(
    out: &Path,
    scenario_path: &Path,
    scenario: &Scenario,
    case: CaseId,
    run: &RunOutput,
    trace: bool,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    run.log.write_csv(create(&out.join(TRAJECTORY_FILE))?)?;
    write_json(&out.join(METRICS_FILE), &run.metrics)?;
    let manifest = RunManifest {
        scenario: scenario_path.to_path_buf(),
        case: case.as_str().to_string(),
        out_dir: out.to_path_buf(),
        config_hash: config_hash(scenario, case)?,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    if trace {
        write_json(&out.join(REPLANS_FILE), &run.log.replans)?;
    }
    Ok(())
}

pub fn summary_line(label: &str, m: &Metrics) -> String {
    let t_chg = m.t_chg_min.map_or("n/a".to_string(), |t| format!("{t:.2} min"));
    format!(
        "case {label}: t_chg {t_chg}, CV {:.1} °C·s, final T_cab {:.2} °C, status {}",
        m.cv_c_sec,
        m.t_cab_final_c,
        status_name(m.status)
    )
}

pub fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::TargetNotReached => "target_not_reached",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta2: f64,
    pub t_chg_min: Option<f64>,
    pub cv_c_sec: Option<f64>,
    pub t_cab_final_c: Option<f64>,
    pub status: String,
}

impl SweepRow {
    pub fn new(beta2: f64, result: Result<Metrics, String>) -> Self {
        match result {
            Ok(m) => Self {
                beta2,
                t_chg_min: m.t_chg_min,
                cv_c_sec: Some(m.cv_c_sec),
                t_cab_final_c: Some(m.t_cab_final_c),
                status: status_name(m.status).to_string(),
            },
            Err(message) => Self {
                beta2,
                t_chg_min: None,
                cv_c_sec: None,
                t_cab_final_c: None,
                status: format!("error: {message}"),
            },
        }
    }

    pub fn failed(&self) -> bool {
        self.status.starts_with("error")
    }
}

pub fn write_sweep(out: &Path, rows: &[SweepRow]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = csv::Writer::from_writer(create(&out.join(SWEEP_FILE))?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
