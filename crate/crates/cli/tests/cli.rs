//! End-to-end runs of the `autocas` binary on the bundled tiny corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_autocas"))
}

fn tiny_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiny.toml")
}

fn run(args: &[&str], out: &Path) -> Output {
    let o = bin()
        .args(args)
        .arg("--config")
        .arg(tiny_config())
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

#[test]
fn help_exits_zero() {
    let o = bin().args(["eval", "--help"]).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"));
}

#[test]
fn missing_config_names_the_flag() {
    let o = bin().arg("eval").output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn unknown_subcommand_and_flag_fail_with_usage() {
    for args in [&["fly"][..], &["train", "--bogus"][..]] {
        let o = bin().args(args).output().unwrap();
        assert!(!o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    }
}

#[test]
fn unknown_variant_lists_choices() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["train", "--variant", "gpt"])
        .arg("--config")
        .arg(tiny_config())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("wo-llm"));
}

#[test]
fn full_pipeline_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run(&["generate"], out);
    assert!(out.join("cascades.txt").exists() && out.join("global.txt").exists());
    run(&["embed-local"], out);
    run(&["embed-global"], out);
    run(&["tokenize"], out);
    for f in ["local_embeddings.csv", "global_embeddings.bin", "tokens-train.bin", "tokens-test.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    run(&["train", "--set", "train.max_epochs=3"], out);
    assert!(out.join("model-full.bin").exists());

    let eval = String::from_utf8(run(&["eval"], out).stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&eval).unwrap();
    assert!(v["test"]["msle"].as_f64().unwrap().is_finite());

    let infer = String::from_utf8(run(&["infer", "--t-obs", "3600"], out).stdout).unwrap();
    let lines: Vec<&str> = infer.lines().collect();
    assert_eq!(lines[0], "cascade,t_obs,tokens,log_popularity,popularity,label");
    assert!(lines.len() > 1 && lines[1].contains(",3600,8,"), "{}", lines[1]);

    run(&["ablate", "--variants", "wo-llm,llm2rnn", "--set", "train.max_epochs=2"], out);
    run(&["report"], out);
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "run_id,dataset,t_obs,variant,msle,mape,epochs,wall_clock_s,learnable_params,total_params"
    );
    assert_eq!(csv.lines().count(), 1 + 5);
    for v in ["full", "wo-llm", "llm2rnn", "feat-linear", "feat-mlp"] {
        assert!(csv.contains(&format!(",{v},")), "{v}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("reports.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 5);
}
