use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn iptm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iptm")).args(args).output().expect("binary runs")
}

fn nominal() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/nominal.toml")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Recomputes the headline metrics from the trajectory CSV alone.
struct Recomputed {
    t_chg_min: Option<f64>,
    cv_c_sec: f64,
    t_cab_final_c: f64,
    cooling_energy_j: f64,
}

fn recompute(csv_path: &Path, soc_targ: f64, t_cab_max: f64, cop: f64) -> Recomputed {
    let mut reader = csv::Reader::from_path(csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (clock, soc, t_cab, qb, qc, phase) =
        (col("clock_s"), col("soc"), col("t_cab_c"), col("q_bat_w"), col("q_cab_w"), col("phase"));
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let num = |r: &csv::StringRecord, c: usize| r[c].parse::<f64>().unwrap();

    let mut cv = 0.0;
    let mut energy = 0.0;
    for w in rows.windows(2) {
        let dt = num(&w[1], clock) - num(&w[0], clock);
        cv += (num(&w[0], t_cab) - t_cab_max).max(0.0) * dt;
        energy += (num(&w[0], qb) + num(&w[0], qc)) / cop * dt;
    }
    let start = rows.iter().position(|r| &r[phase] == "charging");
    let t_chg_min = start.and_then(|s| {
        let t0 = num(&rows[s], clock);
        rows[s..].iter().find(|r| num(r, soc) >= soc_targ).map(|r| (num(r, clock) - t0) / 60.0)
    });
    Recomputed { t_chg_min, cv_c_sec: cv, t_cab_final_c: num(rows.last().unwrap(), t_cab), cooling_energy_j: energy }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iia");
    let o = iptm(&["run", "--scenario", path_str(&nominal()), "--case", "IIa", "--out", path_str(&out), "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["status"], "converged");
    let r = recompute(&out.join("trajectory.csv"), 0.6, 25.0, 2.0);
    assert!(close(r.t_chg_min.unwrap(), metrics["t_chg_min"].as_f64().unwrap()));
    assert!(close(r.cv_c_sec, metrics["cv_c_sec"].as_f64().unwrap()));
    assert!(close(r.t_cab_final_c, metrics["t_cab_final_c"].as_f64().unwrap()));
    assert!(close(r.cooling_energy_j, metrics["cooling_energy_j"].as_f64().unwrap()));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["case"], "IIa");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("replans.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = iptm(&["run", "--scenario", path_str(&nominal()), "--case", "IIc", "--out", path_str(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
    let hash = |d: &Path| {
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
        m["config_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(&a), hash(&b));
}

#[test]
fn missing_scenario_exits_1_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.toml");
    let o = iptm(&["run", "--scenario", path_str(&missing), "--case", "I", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.toml"), "{}", stderr(&o));
}

#[test]
fn unfinished_run_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = nominal().parent().unwrap().canonicalize().unwrap();
    let text = fs::read_to_string(nominal())
        .unwrap()
        .replace("safety_horizon_s = 14400.0", "safety_horizon_s = 1300.0")
        .replace("cycle = \"urban_cycle.csv\"", &format!("cycle = {:?}", data.join("urban_cycle.csv")));
    let scenario = dir.path().join("short.toml");
    fs::write(&scenario, text).unwrap();
    let out = dir.path().join("out");
    let o = iptm(&["run", "--scenario", path_str(&scenario), "--case", "IIa", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let metrics = fs::read_to_string(out.join("metrics.json")).unwrap();
    assert!(metrics.contains("target_not_reached"));
}

#[test]
fn sweep_parallel_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let (seq, par) = (dir.path().join("seq"), dir.path().join("par"));
    for (out, n) in [(&seq, "1"), (&par, "3")] {
        let o = iptm(&[
            "sweep",
            "--scenario",
            path_str(&nominal()),
            "--beta2",
            "1e10,1e5,1e3",
            "--out",
            path_str(out),
            "--parallel",
            n,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = fs::read_to_string(seq.join("sweep.csv")).unwrap();
    assert_eq!(text, fs::read_to_string(par.join("sweep.csv")).unwrap());

    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["beta2", "t_chg_min", "cv_c_sec", "t_cab_final_c", "status"]
    );
    let rows: Vec<Vec<f64>> =
        reader.records().map(|r| r.unwrap().iter().take(3).map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1], "t_chg must not grow as beta2 drops: {rows:?}");
        assert!(w[1][2] >= w[0][2], "CV must not shrink as beta2 drops: {rows:?}");
    }
}

#[test]
fn sweep_needs_two_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = iptm(&["sweep", "--scenario", path_str(&nominal()), "--beta2", "1e5", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least two"));
}

#[test]
fn gradient_check_passes_and_catches_perturbation() {
    let ok = iptm(&["check-gradients", "--n-points", "20", "--seed", "3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));

    let bad = iptm(&["check-gradients", "--n-points", "3", "--seed", "3", "--perturb-gradient"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("Objective"), "{}", stderr(&bad));

    let zero = iptm(&["check-gradients", "--n-points", "0"]);
    assert_eq!(zero.status.code(), Some(1));
}

#[test]
fn compare_tabulates_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for case in ["IIa", "IIc"] {
        let out = dir.path().join(case);
        let o = iptm(&["run", "--scenario", path_str(&nominal()), "--case", case, "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push(out);
    }
    let table = dir.path().join("table.csv");
    let list = format!("{},{}", path_str(&runs[0]), path_str(&runs[1]));
    let o = iptm(&["compare", "--runs", &list, "--out", path_str(&table)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv_text = fs::read_to_string(&table).unwrap();
    assert!(csv_text.starts_with("metric,Case IIa,Case IIc\n"), "{csv_text}");
    assert_eq!(csv_text.lines().count(), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("t_cab_final_c"));

    let single = iptm(&["compare", "--runs", path_str(&runs[0]), "--out", path_str(&dir.path().join("one.csv"))]);
    assert_eq!(single.status.code(), Some(0));

    fs::write(runs[1].join("metrics.json"), "{ not json").unwrap();
    let corrupt = iptm(&["compare", "--runs", &list, "--out", path_str(&table)]);
    assert_eq!(corrupt.status.code(), Some(1));
    assert!(stderr(&corrupt).contains("IIc"), "{}", stderr(&corrupt));
}
