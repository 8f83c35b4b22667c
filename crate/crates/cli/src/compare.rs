//! Side-by-side table of finished runs, one column per run.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use iptm::plant::Metrics;

use crate::output::{RunManifest, MANIFEST_FILE, METRICS_FILE};

struct Column {
    label: String,
    metrics: Metrics,
}

fn load_column(dir: &Path) -> Result<Column> {
    let path = dir.join(METRICS_FILE);
    let text =
        fs::read_to_string(&path).with_context(|| format!("run {}: reading {}", dir.display(), path.display()))?;
    let metrics: Metrics =
        serde_json::from_str(&text).with_context(|| format!("run {}: malformed {}", dir.display(), path.display()))?;
    let label = fs::read_to_string(dir.join(MANIFEST_FILE))
        .ok()
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
        .map(|m| format!("Case {}", m.case))
        .unwrap_or_else(|| dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into()));
    Ok(Column { label, metrics })
}

fn format_value(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.decimals$}"))
}

type Row = (&'static str, fn(&Metrics) -> Option<f64>, usize);

const ROWS: [Row; 3] = [
    ("t_chg_min", |m| m.t_chg_min, 2),
    ("cv_c_sec", |m| Some(m.cv_c_sec), 1),
    ("t_cab_final_c", |m| Some(m.t_cab_final_c), 2),
];

fn table(columns: &[Column]) -> Vec<Vec<String>> {
    let mut header = vec!["metric".to_string()];
    header.extend(columns.iter().map(|c| c.label.clone()));
    let mut rows = vec![header];
    for (name, get, decimals) in ROWS {
        let mut row = vec![name.to_string()];
        row.extend(columns.iter().map(|c| format_value(get(&c.metrics), decimals)));
        rows.push(row);
    }
    rows
}

fn aligned(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
    let mut text = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(
                |(j, cell)| {
                    if j == 0 {
                        format!("{cell:<w$}", w = widths[j])
                    } else {
                        format!("{cell:>w$}", w = widths[j])
                    }
                },
            )
            .collect();
        text.push_str(cells.join("  ").trim_end());
        text.push('\n');
    }
    text
}

/// Writes the table as CSV to `out` and prints it aligned.
pub fn cmd_compare(runs: &[std::path::PathBuf], out: &Path) -> Result<()> {
    if runs.is_empty() {
        bail!("--runs needs at least one directory");
    }
    let columns = runs.iter().map(|d| load_column(d)).collect::<Result<Vec<_>>>()?;
    let rows = table(&columns);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut w = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    for row in &rows {
        w.write_record(row)?;
    }
    w.flush()?;
    print!("{}", aligned(&rows));
    Ok(())
}
