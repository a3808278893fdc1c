//! End-to-end checks of the binary: every shipped config runs clean and
//! byte-identically, and the exit-code contract holds.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_metricflow")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_config(config: &Path, out_dir: &Path) -> Output {
    Command::new(binary())
        .arg("run")
        .arg(config)
        .arg("--output-dir")
        .arg(out_dir)
        .env_remove("METRICFLOW_SEED")
        .output()
        .unwrap()
}

fn written_file(out_dir: &Path) -> PathBuf {
    let mut entries: Vec<PathBuf> = fs::read_dir(out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(entries.len(), 1, "expected exactly one output in {out_dir:?}");
    entries.remove(0)
}

#[test]
fn criterion_8_shipped_configs_run_clean_and_deterministically() {
    let configs: Vec<PathBuf> = {
        let mut v: Vec<PathBuf> = fs::read_dir(configs_dir())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "toml"))
            .collect();
        v.sort();
        v
    };
    assert!(!configs.is_empty(), "no shipped configs found");
    for config in &configs {
        let name = config.file_stem().unwrap().to_string_lossy().to_string();
        let first_dir = scratch(&format!("{name}-first"));
        let second_dir = scratch(&format!("{name}-second"));
        let first = run_config(config, &first_dir);
        assert!(
            first.status.success(),
            "{name} failed: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        let second = run_config(config, &second_dir);
        assert!(second.status.success());
        let a = fs::read(written_file(&first_dir)).unwrap();
        let b = fs::read(written_file(&second_dir)).unwrap();
        assert_eq!(a, b, "{name}: repeated runs differ");
        assert!(!a.is_empty());
        println!("criterion 8 {name}: PASS (byte-identical, {} bytes)", a.len());
    }
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = scratch("config-error");
    let config = dir.join("oversized-eps.toml");
    fs::write(
        &config,
        r#"
suite = "euler-error"
seed = 1

[output]
path = "out.csv"
format = "csv"

[flow]
kind = "resolvent"
generator = [[0.0, -1.0], [1.0, 0.0]]
m_bound = 1.0
delta = 0.25
horizon = 2.0

[grids]
eps = [0.125, 0.6]

[params]
t = 0.5
"#,
    )
    .unwrap();
    let out = run_config(&config, &dir);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("grids.eps[1]"), "stderr: {stderr}");
    assert!(!dir.join("out.csv").exists());
}

#[test]
fn failing_rows_exit_1_after_writing_the_table() {
    let dir = scratch("failing-rows");
    let config = dir.join("strict-demo.toml");
    fs::write(
        &config,
        r#"
suite = "counterexample-demo"
seed = 7

[output]
path = "strict-demo.csv"
format = "csv"

[flow]
kind = "counterexample"

[params]
threshold = 0.1
pairs = [[1.0, 0.5]]
subseq_start = 0.5
subseq_len = 2
"#,
    )
    .unwrap();
    let out = run_config(&config, &dir);
    assert_eq!(out.status.code(), Some(1));
    let table = fs::read_to_string(dir.join("strict-demo.csv")).unwrap();
    assert!(table.contains(",false,"), "no failing row in:\n{table}");
}

#[test]
fn io_failures_exit_3() {
    let config = configs_dir().join("counterexample-demo.toml");
    let out = Command::new(binary())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg("/proc/no-such-place")
        .env_remove("METRICFLOW_SEED")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn list_flows_names_all_five() {
    let out = Command::new(binary()).arg("list-flows").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in ["heat", "stop", "split", "resolvent", "counterexample"] {
        assert!(
            text.lines().any(|l| l.starts_with(kind)),
            "missing {kind} in:\n{text}"
        );
    }
}

#[test]
fn seed_env_var_overrides_the_config_seed() {
    let dir = scratch("seed-override");
    let config = configs_dir().join("counterexample-demo.toml");
    let out = Command::new(binary())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&dir)
        .env("METRICFLOW_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = fs::read_to_string(dir.join("counterexample-demo.csv")).unwrap();
    for line in table.lines().skip(1) {
        assert!(line.ends_with(",42"), "row not stamped with the seed: {line}");
    }

    let bad = Command::new(binary())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&dir)
        .env("METRICFLOW_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn jobs_flag_keeps_output_identical() {
    let config = configs_dir().join("dyadic-split.toml");
    let serial_dir = scratch("jobs-serial");
    let parallel_dir = scratch("jobs-parallel");
    let serial = Command::new(binary())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&serial_dir)
        .arg("--jobs")
        .arg("1")
        .env_remove("METRICFLOW_SEED")
        .output()
        .unwrap();
    assert!(serial.status.success());
    let parallel = Command::new(binary())
        .arg("run")
        .arg(&config)
        .arg("--output-dir")
        .arg(&parallel_dir)
        .arg("--jobs")
        .arg("4")
        .env_remove("METRICFLOW_SEED")
        .output()
        .unwrap();
    assert!(parallel.status.success());
    assert_eq!(
        fs::read(serial_dir.join("dyadic-split.csv")).unwrap(),
        fs::read(parallel_dir.join("dyadic-split.csv")).unwrap()
    );
}
