//! Acceptance: byte-identical reproducibility of every command given the
//! same config and seed, independent of `--threads`, plus the exit-code
//! contract. Prints one pass/fail line per check.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cbrw")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = Command::new(bin()).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn assert_identical(args_a: &[&str], args_b: &[&str], what: &str) {
    let a = run_ok(args_a);
    let b = run_ok(args_b);
    assert_eq!(a.stdout, b.stdout, "{what}: stdout differs");
    println!(
        "criterion 10 PASS: {what} is byte-identical ({} bytes)",
        a.stdout.len()
    );
}

const PARAMS: &str = r#"{
  "mu_c": [{"k": 4, "p": 1}],
  "p_c": "9/10",
  "mu_0": [{"k": 1, "p": "9/10"}, {"k": 2, "p": "1/10"}],
  "p_0": 0.8,
  "layout": "half_line"
}"#;

const GW: &str = r#"{"offspring": [{"k": 0, "p": 0.5}, {"k": 2, "p": 0.5}], "initial": 1}"#;

#[test]
fn outputs_reproduce_across_runs_and_thread_counts() {
    let dir = std::env::temp_dir().join(format!("cbrw-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let params = write_config(&dir, "params.json", PARAMS);
    let params = params.to_str().unwrap();
    let gw = write_config(&dir, "gw.json", GW);
    let gw = gw.to_str().unwrap();

    assert_identical(
        &["classify", "--config", params],
        &["classify", "--config", params],
        "classify report",
    );
    assert_identical(
        &[
            "simulate",
            "--config",
            params,
            "--horizon",
            "60",
            "--seed",
            "0xABCDEF",
            "--backend",
            "exact",
        ],
        &[
            "simulate",
            "--config",
            params,
            "--horizon",
            "60",
            "--seed",
            "11259375",
            "--backend",
            "exact",
        ],
        "trace CSV (hex and decimal seed spellings)",
    );
    assert_identical(
        &[
            "estimate",
            "phi-left",
            "--config",
            params,
            "--trials",
            "20000",
            "--seed",
            "7",
            "--threads",
            "1",
        ],
        &[
            "estimate",
            "phi-left",
            "--config",
            params,
            "--trials",
            "20000",
            "--seed",
            "7",
            "--threads",
            "4",
        ],
        "phi estimate under different --threads",
    );
    assert_identical(
        &[
            "estimate",
            "recurrence",
            "--config",
            params,
            "--trials",
            "50",
            "--horizon",
            "80",
            "--seed",
            "3",
            "--threads",
            "2",
        ],
        &[
            "estimate",
            "recurrence",
            "--config",
            params,
            "--trials",
            "50",
            "--horizon",
            "80",
            "--seed",
            "3",
            "--threads",
            "1",
        ],
        "recurrence report under different --threads",
    );
    assert_identical(
        &[
            "phase",
            "--config",
            params,
            "-x",
            "pc:0.1:0.9:3",
            "-y",
            "mc:1:6:3",
            "--simulate",
            "--trials",
            "20",
            "--horizon",
            "40",
            "--seed",
            "5",
            "--threads",
            "1",
        ],
        &[
            "phase",
            "--config",
            params,
            "-x",
            "pc:0.1:0.9:3",
            "-y",
            "mc:1:6:3",
            "--simulate",
            "--trials",
            "20",
            "--horizon",
            "40",
            "--seed",
            "5",
            "--threads",
            "3",
        ],
        "phase CSV under different --threads",
    );
    assert_identical(
        &[
            "gw-check",
            "critical",
            "--config",
            gw,
            "--n-max",
            "50",
            "--trials",
            "20000",
            "--seed",
            "9",
            "--threads",
            "2",
        ],
        &[
            "gw-check",
            "critical",
            "--config",
            gw,
            "--n-max",
            "50",
            "--trials",
            "20000",
            "--seed",
            "9",
            "--threads",
            "1",
        ],
        "gw-check table under different --threads",
    );

    // file output matches stdout output byte for byte
    let out_path = dir.join("trace.csv");
    run_ok(&[
        "simulate",
        "--config",
        params,
        "--horizon",
        "40",
        "--seed",
        "21",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let from_file = std::fs::read(&out_path).unwrap();
    let from_stdout = run_ok(&[
        "simulate",
        "--config",
        params,
        "--horizon",
        "40",
        "--seed",
        "21",
    ])
    .stdout;
    assert_eq!(from_file, from_stdout, "file and stdout artifacts differ");
    println!("criterion 10 PASS: --out file matches stdout byte for byte");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn u64_backend_reproduces_and_matches_exact() {
    let dir = std::env::temp_dir().join(format!("cbrw-backend-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let params = write_config(&dir, "params.json", PARAMS);
    let params = params.to_str().unwrap();
    let exact = run_ok(&[
        "simulate",
        "--config",
        params,
        "--horizon",
        "30",
        "--seed",
        "2",
        "--backend",
        "exact",
    ]);
    let fixed = run_ok(&[
        "simulate",
        "--config",
        params,
        "--horizon",
        "30",
        "--seed",
        "2",
        "--backend",
        "u64",
    ]);
    assert_eq!(
        exact.stdout, fixed.stdout,
        "backends disagree on a small-count run"
    );
    println!("criterion 10 PASS: exact and u64 backends agree on the same stream");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn auto_seed_is_printed_and_artifacts_embed_it() {
    let dir = std::env::temp_dir().join(format!("cbrw-seed-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let params = write_config(&dir, "params.json", PARAMS);
    let out = run_ok(&[
        "simulate",
        "--config",
        params.to_str().unwrap(),
        "--horizon",
        "5",
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let seed_line = stderr.lines().next().unwrap_or_default();
    assert!(
        seed_line.starts_with("seed: "),
        "missing seed line, got {stderr:?}"
    );
    let seed = seed_line.trim_start_matches("seed: ").trim();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with(&format!("# seed={seed} ")),
        "artifact does not embed the drawn seed"
    );
    // replaying the embedded seed reproduces the artifact
    let replay = run_ok(&[
        "simulate",
        "--config",
        params.to_str().unwrap(),
        "--horizon",
        "5",
        "--seed",
        seed,
    ]);
    assert_eq!(stdout.into_bytes(), replay.stdout);
    println!("criterion 10 PASS: entropy-drawn seed is printed and replayable");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = std::env::temp_dir().join(format!("cbrw-exit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = write_config(
        &dir,
        "bad.json",
        r#"{"mu_c": [{"k": 1, "p": 0.5}], "p_c": 0.5, "mu_0": [{"k": 1, "p": 1}], "p_0": 0.5, "layout": "half_line"}"#,
    );
    let out = Command::new(bin())
        .args(["classify", "--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "validation failure should exit 2"
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("sums to 0.5"),
        "violation list missing: {stderr}"
    );

    let params = write_config(&dir, "params.json", PARAMS);
    let out = Command::new(bin())
        .args([
            "estimate",
            "no-such-estimator",
            "--config",
            params.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "unknown estimator should exit 2"
    );

    let out = Command::new(bin())
        .args([
            "simulate",
            "--config",
            params.to_str().unwrap(),
            "--no-such-flag",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "unknown flag should exit 2");

    // fixed-width overflow is a runtime error: exit 3
    let big = write_config(
        &dir,
        "big.json",
        r#"{"mu_c": [{"k": 4, "p": 1}], "p_c": 0.5, "mu_0": [{"k": 4, "p": 1}], "p_0": 0.5, "layout": "half_line"}"#,
    );
    let out = Command::new(bin())
        .args([
            "simulate",
            "--config",
            big.to_str().unwrap(),
            "--horizon",
            "80",
            "--seed",
            "1",
            "--backend",
            "u64",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "count overflow should exit 3");

    println!("criterion 10 PASS: exit codes 2 (usage/validation) and 3 (runtime) honored");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flags_override_config_file_options() {
    let dir = std::env::temp_dir().join(format!("cbrw-precedence-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "opts.json",
        r#"{"mu_c": [{"k": 1, "p": 1}], "p_c": 0.6, "mu_0": [{"k": 1, "p": 1}], "p_0": 0.7,
            "layout": "half_line", "horizon": 4, "seed": "33"}"#,
    );
    let cfg = cfg.to_str().unwrap();
    // config-provided horizon and seed apply when no flags are given
    let from_config = run_ok(&["simulate", "--config", cfg]);
    let text = String::from_utf8(from_config.stdout).unwrap();
    assert!(text.starts_with("# seed=33 "), "config seed not used");
    assert_eq!(text.lines().count(), 7, "config horizon 4 should give 5 rows + 2 header lines");
    // flags win over the config file
    let overridden = run_ok(&["simulate", "--config", cfg, "--horizon", "2", "--seed", "9"]);
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.starts_with("# seed=9 "), "flag seed should override config seed");
    assert_eq!(text.lines().count(), 5);
    println!("criterion 10 PASS: option precedence is flags > config file > defaults");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn classify_reports_boundary_flag_on_critical_lp() {
    let dir = std::env::temp_dir().join(format!("cbrw-boundary-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "critical-lp.json",
        r#"{"mu_c": [{"k": 2, "p": 1}], "p_c": 0.5, "mu_0": [{"k": 1, "p": 0.9}, {"k": 2, "p": 0.1}], "p_0": 0.8, "layout": "half_line"}"#,
    );
    let out = run_ok(&["classify", "--config", cfg.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["kind"], "transient_right");
    let flags: Vec<&str> = doc["boundary_flags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert!(
        flags.contains(&"pcmc"),
        "missing pcmc boundary flag: {flags:?}"
    );
    println!("classify flags the exactly-critical leading process");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn phi_estimate_reports_the_remark_closed_form() {
    let dir = std::env::temp_dir().join(format!("cbrw-remark-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = write_config(
        &dir,
        "remark.json",
        r#"{"mu_c": [{"k": 1, "p": 1}], "p_c": 0.5, "mu_0": [{"k": 1, "p": 1}], "p_0": 0.7, "layout": "half_line"}"#,
    );
    let out = run_ok(&[
        "estimate",
        "phi-left",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "5000",
        "--seed",
        "1",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let closed_form = doc["report"]["closed_form"].as_f64().unwrap();
    assert!(
        (closed_form - 3.0 / 7.0).abs() < 1e-6,
        "closed form {closed_form}"
    );
    println!("phi-left report carries the closed form 0.428571");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn help_lists_every_flag() {
    for (cmd, flags) in [
        (
            "classify",
            vec![
                "--config",
                "--out",
                "--format",
                "--allow-large-support",
                "--threads",
            ],
        ),
        (
            "simulate",
            vec![
                "--config",
                "--horizon",
                "--seed",
                "--backend",
                "--out",
                "--threads",
            ],
        ),
        (
            "estimate",
            vec![
                "--config",
                "--trials",
                "--horizon",
                "--n-min",
                "--n-max",
                "--seed",
                "--out",
                "--format",
            ],
        ),
        (
            "phase",
            vec![
                "--config",
                "-x",
                "-y",
                "--simulate",
                "--trials",
                "--horizon",
                "--seed",
                "--out",
            ],
        ),
        (
            "gw-check",
            vec!["--config", "--n-max", "--trials", "--seed", "--out"],
        ),
    ] {
        let out = run_ok(&[cmd, "--help"]);
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in flags {
            assert!(text.contains(flag), "{cmd} --help does not list {flag}");
        }
    }
    println!("criterion 10 PASS: per-command --help lists the full flag surface");
}
