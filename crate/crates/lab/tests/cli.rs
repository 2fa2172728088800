use std::fs;
use std::path::Path;
use std::process::Command;

use coco_lab::{Algorithm, RunConfig};
use coco_core::{ScenarioFamily, ScenarioSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coco-lab"))
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn run_writes_all_artifacts_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(
        ScenarioSpec::new(ScenarioFamily::DisjointAlternating, 150, 2),
        Algorithm::Coco2,
    );
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("run");
    let status = bin()
        .args(["run", "--emit-plotdata", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    for f in ["rounds.csv", "summary.json", "config.json", "plotdata.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("rounds.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x_0,f,g,gplus,Q,grad_norm_surrogate");
    let qs: Vec<f64> = lines
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(qs.len(), 150);
    assert!(qs.windows(2).all(|w| w[1] >= w[0]));
    let plot = fs::read_to_string(out.join("plotdata.csv")).unwrap();
    assert!(plot.starts_with("series,t,value\n"));
    assert!(plot.contains("\nregret_minimizers,150,"));

    assert_eq!(code(bin().args(["report", "--verify", "--out"]).arg(&out)), 0);
}

#[test]
fn seed_and_horizon_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(ScenarioSpec::new(ScenarioFamily::Static, 50, 1), Algorithm::Coco1);
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("r");
    let st = bin()
        .args(["run", "--seed", "9", "--horizons", "30", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(st.code(), Some(0));
    let stored = RunConfig::load(&out.join("config.json")).unwrap();
    assert_eq!(stored.seed, Some(9));
    assert_eq!(stored.scenario.horizon, 30);
    let csv = fs::read_to_string(out.join("rounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn sweep_writes_per_horizon_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(ScenarioSpec::new(ScenarioFamily::Static, 10, 1), Algorithm::Coco2);
    cfg.horizons = vec![50, 100, 200];
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("sw");
    let o = bin()
        .args(["sweep", "--metric", "ccv", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .env("COCO_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["points"].as_array().unwrap().len(), 3);
    for h in [50, 100, 200] {
        assert!(out.join(format!("T{h}")).join("summary.json").exists());
    }
    assert_eq!(
        code(bin().args(["sweep", "--config"]).arg(&path).env("COCO_LAB_THREADS", "zero")),
        2
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ \"scenario\": { \"family\": \"nope\", \"horizon\": 5 }, \"algorithm\": \"coco1\" }").unwrap();
    assert_eq!(code(bin().args(["run", "--out", "x", "--config"]).arg(&bad)), 2);
    assert_eq!(code(bin().args(["run", "--config"]).arg(tmp.path().join("missing.json"))), 2);
    assert_eq!(code(bin().args(["frobnicate"])), 2);

    let mut cfg = RunConfig::new(ScenarioSpec::new(ScenarioFamily::Static, 10, 1), Algorithm::Coco2);
    cfg.horizons = vec![100, 10, 1000];
    let path = write_config(tmp.path(), &cfg);
    assert_eq!(code(bin().args(["sweep", "--config"]).arg(&path)), 2);
    cfg.horizons = vec![10, 100];
    let path = write_config(tmp.path(), &cfg);
    assert_eq!(code(bin().args(["sweep", "--config"]).arg(&path)), 2);
}

#[test]
fn list_scenarios_names_every_family() {
    let o = bin().arg("list-scenarios").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for fam in ScenarioFamily::ALL {
        assert!(text.contains(fam.name()), "{}", fam.name());
    }
}
