//! CLI behavior: registry, exit codes, config handling, reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn csigame(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_csigame"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn list_has_eight_stable_unique_entries() {
    let out = csigame(&["list"], &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    let names: Vec<&str> =
        text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert_eq!(
        names,
        vec![
            "utility-curve-fdma",
            "utility-curve-csma",
            "price-sweep-fdma",
            "price-sweep-csma",
            "uplink-occupancy",
            "centralized-compare-fdma",
            "centralized-compare-csma",
            "csma-curve",
        ]
    );
    let mut unique = names.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), names.len());
    // Stable across invocations.
    assert_eq!(text, stdout(&csigame(&["list"], &[])));
}

#[test]
fn unknown_experiment_exits_one() {
    let out = csigame(&["run", "no-such-experiment"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown experiment"), "stderr: {err}");
}

#[test]
fn usage_error_exits_one_and_help_exits_zero() {
    let out = csigame(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = csigame(&["--help"], &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn csma_curve_is_reproducible_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.csv");
    let path_b = dir.path().join("b.csv");
    for (path, _) in [(&path_a, 0), (&path_b, 1)] {
        let out = csigame(&["run", "csma-curve", "--out", path.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(&path_a).unwrap();
    let b = fs::read(&path_b).unwrap();
    assert_eq!(a, b, "same spec must give byte-identical output");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "g,s");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 400);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 2);
        let s: f64 = fields[1].parse().unwrap();
        assert!(s >= 0.0);
    }
}

#[test]
fn utility_curve_columns_and_seed_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("u1.csv");
    let same = dir.path().join("u2.csv");
    let other = dir.path().join("u3.csv");
    let run = |path: &Path, seed: &str| {
        let out = csigame(
            &[
                "run",
                "utility-curve-fdma",
                "--mc-trials",
                "40",
                "--seed",
                seed,
                "--out",
                path.to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&base, "7");
    run(&same, "7");
    run(&other, "8");
    assert_eq!(fs::read(&base).unwrap(), fs::read(&same).unwrap());
    assert_ne!(fs::read(&base).unwrap(), fs::read(&other).unwrap());

    let text = fs::read_to_string(&base).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r_probe,utility,fixed_other_rate");
    // Three series of 200 points each, peer rates 1, 3, 10.
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 600);
    let peers: Vec<f64> =
        rows.iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(peers[0], 1.0);
    assert_eq!(peers[200], 3.0);
    assert_eq!(peers[400], 10.0);
}

#[test]
fn config_file_quick_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{
            "n_t": 4, "n_s": 4, "b_total": 20.0, "beta": 0.01,
            "mc_trials": 30, "master_seed": 5,
            "protocol": "CSMA", "csma": {"p": 1.0, "a_ratio": 0.1}
        }"#,
    )
    .unwrap();
    let out = csigame(
        &[
            "run",
            "price-sweep-csma",
            "--config",
            cfg_path.to_str().unwrap(),
            "--quick",
            "--delta-alpha",
            "0.05",
            "--alpha-max",
            "0.1",
        ],
        &[("CSIGAME_OUT_DIR", dir.path().to_str().unwrap())],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("price-sweep-csma.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "alpha,sum_rate,sum_priced_utility,uplink_bw,converged,rounds,r_1,r_2,r_3,r_4,u_1,u_2,u_3,u_4"
    );
    assert_eq!(text.lines().count(), 1 + 3); // alpha = 0, 0.05, 0.1
}

#[test]
fn psi_grid_diagnostic_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let out = csigame(
        &["psi-grid", "--quick", "--mc-trials", "20", "--out", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "psi,probe_rate,sum_utility");
    assert!(text.lines().count() > 5);
}

#[test]
fn bad_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, "{ not json }").unwrap();
    let out = csigame(
        &["run", "csma-curve", "--config", cfg_path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
}
