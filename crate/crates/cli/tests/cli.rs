use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/ellinf2.toml")
}

fn renorm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renorm"))
        .arg("--config")
        .arg(fixture())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn plan_writes_the_parameter_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = renorm(&["plan"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["levels"], 2);
    assert_eq!(plan["dimension"], 2);
}

#[test]
fn build_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = renorm(&["--mode", "polyhedral", "build"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["plan.json", "tower.json", "glue.json", "final.json"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
}

#[test]
fn eval_prints_value_and_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let out = renorm(&["eval", "--point", "0,1", "--point", "0,0"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,value,g1,g2");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].contains("undefined"));
}

#[test]
fn slice_of_the_seed_is_the_square() {
    let dir = tempfile::tempdir().unwrap();
    let out = renorm(&["slice", "--axes", "1,2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "dimension = 2\nseed_norm = \"ellinf\"\nepsilon = [\"1/4\", \"1/2\"]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_renorm"))
        .arg("--config")
        .arg(&cfg)
        .arg("plan")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decreasing"));
}

#[test]
fn missing_config_exits_with_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_renorm")).arg("plan").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn workspace_variable_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture(), dir.path().join("run.toml")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_renorm"))
        .env("RENORM_WORKSPACE", dir.path())
        .args(["--config", "run.toml", "plan"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/ellinf2/plan.json").is_file());
}
