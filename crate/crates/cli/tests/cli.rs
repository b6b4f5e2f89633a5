use std::process::Command;

fn liftnet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liftnet"))
}

#[test]
fn quick_battery_exits_zero_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let status = liftnet().args(["proptest", "--quick", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "proptest");
    assert!(std::fs::read_to_string(out.join("config.txt")).unwrap().contains("scale = quick"));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let status = liftnet().args(["spd-demo", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let status = liftnet()
        .args(["table1", "--quick", "--data"])
        .arg(dir.path().join("absent.csv"))
        .arg("--out")
        .arg(dir.path().join("t"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn failed_enforced_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.txt");
    // An unreachable agreement bar with enforcement on.
    std::fs::write(&cfg, "enforce = true\nagreement_min = 1.01\n").unwrap();
    let status = liftnet()
        .args(["classify-demo", "--quick", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("c"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
