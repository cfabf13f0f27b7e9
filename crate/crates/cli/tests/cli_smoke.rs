//! Black-box checks of the `cf` binary: artifact shape, determinism,
//! config overlay, and error paths.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cf"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning cf");
    assert!(
        out.status.success(),
        "cf failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Two well-separated blobs, eight points each, label column last.
fn write_blobs(dir: &Path) -> PathBuf {
    let mut text = String::from("x,y,label\n");
    for i in 0..8 {
        text.push_str(&format!("{}.{},0.{},a\n", i % 3, i, (7 - i) % 5));
        text.push_str(&format!("5{}.0,49.{},b\n", i % 2, i));
    }
    let path = dir.join("blobs.csv");
    fs::write(&path, text).unwrap();
    path
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn run_artifacts_are_thread_count_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_blobs(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for (out, threads) in [(&out_a, "1"), (&out_b, "2")] {
        run_ok(cf().args([
            "run",
            "--input",
            input.to_str().unwrap(),
            "--T",
            "8",
            "--reps",
            "2",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    for name in ["summary.csv", "reps.csv", "labels.csv", "affinity.csv", "affinity.bin"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across thread counts");
    }

    let summary = read(&out_a.join("summary.csv"));
    assert!(summary.starts_with("# version: "));
    assert!(summary.contains("# seed: 7"));
    assert!(summary.contains("# k: 2"));
    let rho_r_row = summary
        .lines()
        .find(|l| l.starts_with("rho_r,"))
        .expect("rho_r row");
    let mean: f64 = rho_r_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(mean >= 99.0, "blobs should cluster perfectly, got {mean}");

    // Two reps of sixteen points each.
    let labels = read(&out_a.join("labels.csv"));
    let data_rows = labels.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 2 * 16);
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_blobs(tmp.path());
    let conf = tmp.path().join("cf.conf");
    fs::write(&conf, "# defaults\nT = 6\ntau_max = 5\nbeta2 = 0.5\n").unwrap();
    let out = tmp.path().join("out");
    run_ok(cf().args([
        "--config",
        conf.to_str().unwrap(),
        "run",
        "--input",
        input.to_str().unwrap(),
        "--beta2",
        "0.45",
        "--out",
        out.to_str().unwrap(),
    ]));
    let summary = read(&out.join("summary.csv"));
    assert!(summary.contains("# T: 6"), "file value ignored");
    assert!(summary.contains("# tau-max: 5"), "file value ignored");
    assert!(summary.contains("# beta2: 0.45"), "flag should beat file");
}

#[test]
fn perturb_zero_noise_never_misclusters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok(cf().args([
        "perturb",
        "--n1",
        "30",
        "--gamma-grid",
        "0.5,1.0",
        "--sigma-grid",
        "0",
        "--trials",
        "20",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]));
    let sweep = read(&out.join("sweep.csv"));
    let mut rows = sweep.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        rows.next(),
        Some("gamma,sigma,nu,n,trials,mean_M,log_rate_emp,log_rate_theory")
    );
    for row in rows {
        let mean_m: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert_eq!(mean_m, 0.0, "noiseless trial misclustered: {row}");
    }
    let aborted = read(&out.join("aborted.csv"));
    for row in aborted.lines().filter(|l| !l.starts_with('#')).skip(1) {
        assert_eq!(row.split(',').nth(2), Some("0"), "aborted at sigma 0: {row}");
    }
}

#[test]
fn synth_tiny_stress_path_completes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_ok(cf().args([
        "synth", "--preset", "g3", "--n", "50", "--T", "4", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]));
    let occurrences = read(&out.join("occurrences.csv"));
    let rows = occurrences.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert!(rows >= 4 * 2, "each vector holds at least its seed pair");
    let summary = read(&out.join("summary.csv"));
    assert!(summary.contains("# preset: g3"));
    assert!(summary.lines().any(|l| l.starts_with("rho_c,")));
}

#[test]
fn profile_scores_every_feature() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_blobs(tmp.path());
    let out = tmp.path().join("out");
    run_ok(cf().args([
        "profile",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let profile = read(&out.join("profile.csv"));
    let rows: Vec<&str> = profile.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "feature,kappa");
    assert_eq!(rows.len() - 1, 2);
}

#[test]
fn bench_emits_requested_methods_only() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_blobs(tmp.path());
    let out = tmp.path().join("out");
    run_ok(cf().args([
        "bench",
        "--input",
        input.to_str().unwrap(),
        "--methods",
        "cf,bc2",
        "--T",
        "4",
        "--reps",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]));
    let table = read(&out.join("bench.csv"));
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3, "header plus one best row per method");
    assert!(rows[1].starts_with("cf,q=1,"));
    assert!(rows[2].starts_with("bc2,-,"));
}

#[test]
fn missing_input_is_a_clean_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cf()
        .args([
            "run",
            "--input",
            "/nonexistent/rows.csv",
            "--out",
            tmp.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/rows.csv"), "stderr: {stderr}");
}
