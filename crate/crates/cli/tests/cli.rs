//! The binary end to end: exit codes, error messages and the output layout.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corrbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrbath")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &str = r#"
[run]
label = "tiny"
beta = 4.0
lambdas = [0.2, 0.1]
dt = 0.5
t_max = 4.0

[model]
energies = [0.0, 1.0]
coupling = [[0.0, 1.0], [1.0, 0.0]]

[form_factor]
p = 0.5
q = 2.5
profile = { kind = "exponential", amplitude = 1.0, cutoff = 1.0 }

[bath]
n_modes = 20
omega_max = 6.0
scheme = "gauss_spectral"

[engine]
kind = "thermofield"
max_quanta = 2

[matrices]
sx = [[0.0, 1.0], [1.0, 0.0]]
B = [[0.8, 0.0], [0.0, -0.5]]

[functions.f]
class = "cor"
p = 0.5
q = 2.5
profile = { kind = "gaussian", amplitude = 1.0, width = 0.4 }

[kraus.example]
normalize = true
words = ["exp(B a*(f))"]

[[observables]]
name = "sx"
word = "sx"

[[scenarios]]
name = "example"
kraus = "example"
markov_monotone = false
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_passes_on_the_benchmark() {
    let cfg = repo().join("configs/benchmark.toml");
    let o = corrbath(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn negative_configs_exit_one() {
    for name in ["diagonal_coupling.toml", "p_one.toml"] {
        let cfg = repo().join("configs").join(name);
        let o = corrbath(&["check", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
    }
}

#[test]
fn unknown_keys_are_reported_with_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TINY.replace("dt = 0.5", "dt = 0.5\nstep = 3"));
    let o = corrbath(&["check", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("run.step"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn unknown_matrix_in_a_word_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TINY.replace("word = \"sx\"", "word = \"sy\""));
    let out = dir.path().join("out");
    let o = corrbath(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sy"), "{}", stderr(&o));
}

#[test]
fn missing_command_is_a_usage_error() {
    assert_eq!(corrbath(&[]).status.code(), Some(2));
}

#[test]
fn davies_writes_one_file_per_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = corrbath(&["davies", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let files: Vec<_> = std::fs::read_dir(out.join("davies")).unwrap().collect();
    assert_eq!(files.len(), 2);
}

#[test]
fn simulate_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = corrbath(&["simulate", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["config.toml", "resolved_config.json", "simulate_manifest.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("traces/example__lambda_0.2.csv")).unwrap();
    assert!(csv.starts_with("t,observable,exact_re"));
    assert_eq!(csv.lines().count(), 1 + 9);

    // analyze reads the copied configuration when none is given
    let o = corrbath(&["analyze", "--out", out_s]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.is_object());

    // a different configuration no longer matches the stored traces
    let other = write_config(dir.path(), &TINY.replace("beta = 4.0", "beta = 3.0"));
    let o = corrbath(&["analyze", "--config", &other, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn dimension_budget_flag_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = corrbath(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--max-dim", "50"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
