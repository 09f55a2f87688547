//! Black-box tests of the `skw` binary: exit statuses, CSV schemas, cache
//! behavior, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skw() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skw"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn bsc_config(dir: &Path) -> std::path::PathBuf {
    write_config(
        dir,
        "bsc.json",
        r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 1.0, "r2": 0.0},
            "cardinalities": {"t": 1, "u": 2},
            "optimizer": {"restarts": 12, "seed": 3}
        }"#,
    )
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn point_emits_a_feasible_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = bsc_config(dir.path());
    let out = run(skw().args(["point", "--config"]).arg(&config).arg("--no-cache"));
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "key_rate,feasible,i_uy_t,i_uz_t,i_ux_y,i_tx_y,r1,r2,witness_digest"
    );
    let row = lines.next().unwrap();
    assert!(row.contains(",true,"), "row: {}", row);
    let key_rate: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!((key_rate - 0.252932).abs() < 1e-3);
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = run(skw().arg("frobnicate"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("Usage"), "stderr: {}", stderr);
}

#[test]
fn config_sum_violation_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "source": {"type": "inline", "sizes": [2, 2, 2],
                       "probs": [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]},
            "rates": {"r1": 1.0, "r2": 0.0}
        }"#,
    );
    let out = run(skw().args(["validate-config", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("source.probs"), "stderr: {}", stderr);
}

#[test]
fn infeasible_fixed_aux_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "infeasible.json",
        r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 0.0, "r2": 0.0},
            "aux": {"u_given_x": [[1.0, 0.0], [0.0, 1.0]], "t_given_u": [[1.0], [1.0]]}
        }"#,
    );
    let out = run(skw().args(["point", "--config"]).arg(&config).arg("--no-cache"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn inapplicable_rates_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // r2 cannot cover the outer bin rate in the joint case
    let config = write_config(
        dir.path(),
        "inapplicable.json",
        r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 0.3, "r2": 0.05},
            "aux": {"u_given_x": [[1.0, 0.0], [0.0, 1.0]], "t_given_u": [[1.0], [1.0]]},
            "codec": {"n": 8, "trials": 50}
        }"#,
    );
    let out = run(skw().args(["simulate", "--config"]).arg(&config).arg("--no-cache"));
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_config_accepts_minimal() {
    let dir = tempfile::tempdir().unwrap();
    let config = bsc_config(dir.path());
    let out = run(skw().args(["validate-config", "--config"]).arg(&config));
    assert!(out.status.success());
}

#[test]
fn simulate_csv_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.json",
        r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 0.47, "r2": 0.1},
            "aux": {"u_given_x": [[1.0, 0.0], [0.0, 1.0]], "t_given_u": [[1.0], [1.0]]},
            "codec": {"n": 8, "trials": 64, "seed": 5}
        }"#,
    );
    let out = run(skw().args(["simulate", "--config"]).arg(&config).arg("--no-cache"));
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,trials,p_e_hat,ci_lo,ci_hi,leakage,leakage_method,seed\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(",exact,5"));
}

#[test]
fn sweep_round_trips_through_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache_dir = dir.path().join("cache");
    let config = write_config(
        dir.path(),
        "sweep.json",
        r#"{
            "source": {"type": "bsc-pair", "p_y": 0.1, "p_z": 0.2},
            "rates": {"r1": 0.3, "r2": 0.0},
            "cardinalities": {"t": 1, "u": 2},
            "optimizer": {"restarts": 6, "seed": 11},
            "sweep": {"vary": "r2", "from": 0.0, "to": 0.4, "steps": 3}
        }"#,
    );
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let run1 = run(skw()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_a)
        .arg("--cache-dir")
        .arg(&cache_dir));
    assert!(run1.status.success(), "stderr: {}", String::from_utf8_lossy(&run1.stderr));
    let run2 = run(skw()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_b)
        .arg("--cache-dir")
        .arg(&cache_dir));
    assert!(run2.status.success());
    let stderr2 = String::from_utf8(run2.stderr).unwrap();
    assert!(stderr2.contains("cache hit"), "stderr: {}", stderr2);
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
    let header = fs::read_to_string(&out_a).unwrap();
    assert!(header.starts_with("varied_rate,joint_key_rate,separation_key_rate,witness_digest\n"));
}

#[test]
fn different_seed_misses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache_dir = dir.path().join("cache");
    let config = bsc_config(dir.path());
    let first = run(skw()
        .args(["point", "--config"])
        .arg(&config)
        .arg("--cache-dir")
        .arg(&cache_dir));
    assert!(first.status.success());
    let second = run(skw()
        .args(["point", "--config"])
        .arg(&config)
        .args(["--seed", "999"])
        .arg("--cache-dir")
        .arg(&cache_dir));
    assert!(second.status.success());
    let stderr = String::from_utf8(second.stderr).unwrap();
    assert!(!stderr.contains("cache hit"), "stderr: {}", stderr);
}

#[test]
fn reruns_are_byte_identical_without_cache() {
    let dir = tempfile::tempdir().unwrap();
    let config = bsc_config(dir.path());
    let a = run(skw().args(["point", "--config"]).arg(&config).arg("--no-cache"));
    let b = run(skw().args(["point", "--config"]).arg(&config).arg("--no-cache"));
    assert_eq!(a.stdout, b.stdout);
}
