//! Golden exit-status tests for the command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FRACTIONAL: &str = r#"
[equation]
name = "fractional"
gamma = 0.31622776601683794
p0 = 4.0

[basis]
m = 9

[solver]
dt = 1e-3
t_end = 0.02
seed = 4
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-galerkin"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn successful_run_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "frac.toml", FRACTIONAL);
    let out = tmp.path().join("run");
    let o = cli(&["run"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["task"], "simulate");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn subcommand_defaults_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "frac.toml", FRACTIONAL);
    let out = tmp.path().join("m");
    let o = Command::new(env!("CARGO_BIN_EXE_spde-galerkin"))
        .args(["moments", "--seed", "99", "--paths", "8", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status"));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    assert_eq!(m["summary"]["paths_used"], 8);
}

#[test]
fn default_output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "named.toml", FRACTIONAL);
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_spde-galerkin"))
        .args(["run", "--quiet", "--config"])
        .arg(&cfg)
        .env("SPDE_GALERKIN_OUT", &root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(root.join("named").join("manifest.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let missing = cli(&["run"], &tmp.path().join("nope.toml"), &out);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope.toml"));

    let unknown_name = write(tmp.path(), "a.toml", &FRACTIONAL.replace("\"fractional\"", "\"kdv\""));
    let o = cli(&["run"], &unknown_name, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kdv"), "{}", stderr(&o));

    let unknown_key = write(tmp.path(), "b.toml", &FRACTIONAL.replace("seed = 4", "seed = 4\nsede = 5"));
    let o = cli(&["run"], &unknown_key, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sede") && stderr(&o).contains("line"), "{}", stderr(&o));

    let even_torus = write(tmp.path(), "c.toml", &FRACTIONAL.replace("m = 9", "m = 8"));
    assert_eq!(cli(&["run"], &even_torus, &out).status.code(), Some(2));

    let bad_steps = write(tmp.path(), "d.toml", &FRACTIONAL.replace("t_end = 0.02", "t_end = 0.0205"));
    assert_eq!(cli(&["run"], &bad_steps, &out).status.code(), Some(2));

    let with_task = write(tmp.path(), "e.toml", &format!("{FRACTIONAL}\n[task]\nkind = \"check\"\n"));
    let o = cli(&["moments"], &with_task, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("check"));

    let o = Command::new(env!("CARGO_BIN_EXE_spde-galerkin")).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "frac.toml", FRACTIONAL);
    let blocker = write(tmp.path(), "file", "");
    assert_eq!(cli(&["run"], &cfg, &blocker).status.code(), Some(1));
}

#[test]
fn explosion_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[equation]
name = "burgers"
gamma = 0.3

[basis]
m = 32

[initial]
kind = "single-mode"
k = 1
amplitude = 10.0

[solver]
dt = 0.01
t_end = 1.0
scheme = "explicit-em"

[task]
kind = "simulate"
"#;
    let cfg = write(tmp.path(), "boom.toml", text);
    let out = tmp.path().join("boom");
    let o = cli(&["run"], &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "explosion");
    assert_eq!(m["summary"]["exploded_paths"], 1);

    let tolerant = write(tmp.path(), "boom2.toml", &text.replace("kind = \"simulate\"", "kind = \"simulate\"\nfail_on_explosion = false"));
    assert_eq!(cli(&["run"], &tolerant, &tmp.path().join("b2")).status.code(), Some(0));
}

#[test]
fn violation_exits_4_and_fitted_constants_are_frozen() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write(tmp.path(), "ok.toml", FRACTIONAL);
    let out = tmp.path().join("ok");
    let o = cli(&["check", "--paths", "100"], &ok, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let fitted = m["ledger"]["fitted"].as_object().unwrap();
    assert!(fitted.contains_key("coercivity.theta"));

    // reuse the frozen ledger in a later run
    let reuse = write(
        tmp.path(),
        "reuse.toml",
        &format!("frozen_ledger = \"ok/manifest.json\"\n{FRACTIONAL}"),
    );
    let o = cli(&["moments", "--paths", "4"], &reuse, &tmp.path().join("reuse"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("reuse/manifest.json")).unwrap()).unwrap();
    assert_eq!(r["ledger"], m["ledger"]);

    let bad = write(tmp.path(), "bad.toml", &FRACTIONAL.replace("0.31622776601683794", "0.5"));
    let out = tmp.path().join("bad");
    let o = cli(&["check", "--paths", "100"], &bad, &out);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("assumptions.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["coercivity"]["violated"], true);
}

#[test]
fn json_config_matches_toml_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let toml_cfg = write(tmp.path(), "t.toml", FRACTIONAL);
    let json = r#"{"equation": {"name": "fractional", "gamma": 0.31622776601683794, "p0": 4.0},
                  "basis": {"m": 9}, "solver": {"dt": 1e-3, "t_end": 0.02, "seed": 4}}"#;
    let json_cfg = write(tmp.path(), "j.json", json);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(cli(&["run"], &toml_cfg, &a).status.code(), Some(0));
    assert_eq!(cli(&["run"], &json_cfg, &b).status.code(), Some(0));
    let hash = |d: &Path| {
        let m: serde_json::Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
        m["config_hash"].clone()
    };
    assert_eq!(hash(&a), hash(&b));
    assert_eq!(fs::read(a.join("trajectory_0000.csv")).unwrap(), fs::read(b.join("trajectory_0000.csv")).unwrap());
}
