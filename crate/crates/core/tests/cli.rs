use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foliated-flows"))
}

#[test]
fn kernel_check_prints_report() {
    let out = bin().args(["kernel-check"]).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], "foliated-flows/run-report/v1");
    assert_eq!(report["results"]["kind"], "kernel-check");
}

#[test]
fn every_subcommand_exists() {
    for sub in ["simulate", "kernel-check", "average", "rates", "coalesce"] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{sub}");
    }
}

#[test]
fn invalid_config_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "kind = \"simulate\"\n[model]\nname = \"rotation-jump-cylinder\"\n[simulate]\nhorizon = -1.0\ndt = 0.0\n",
    )
    .unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["violations"].as_array().unwrap().len() >= 2, "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, "kind = \"coalesce\"\nsede = 3\n[model]\nname = \"rotation-jump-cylinder\"\n").unwrap();
    let out = bin().args(["coalesce", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kind.toml");
    fs::write(&path, "kind = \"rates\"\n[model]\nname = \"rotation-jump-cylinder\"\n").unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_receives_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--replicas", "2", "--quiet", "--out"])
        .arg(dir.path())
        .env("FOLIATED_FLOWS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    for f in ["report.json", "timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
