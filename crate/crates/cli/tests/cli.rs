use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn afp_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afp-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("AFP_LAB_BALL_CAP")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const Z_PROFILE: &str = r#"{
  "kind": "folner_profile",
  "group": {"group": "Z", "dim": 1},
  "schedule": {"type": "boxes", "sides": {"rule": "doubling"}},
  "max_index": 6
}"#;

#[test]
fn profile_run_writes_exact_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zbox.json", Z_PROFILE);
    let o = afp_lab(&["run", &cfg, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS zbox:"), "{}", stdout(&o));

    let csv = fs::read_to_string(dir.path().join("res/zbox.profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,set_size,generator,ratio_num,ratio_den,ratio_float"));
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let n: u64 = 1 << i;
        assert_eq!(cells[1].parse::<u64>().unwrap(), n);
        // 2/n in lowest terms
        let (num, den) = if n == 1 { (2, 1) } else { (1, n / 2) };
        assert_eq!((cells[3].parse::<u64>().unwrap(), cells[4].parse::<u64>().unwrap()), (num, den), "{line}");
    }

    let report = read_json(&dir.path().join("res/zbox.json"));
    assert_eq!(report["verdict"]["passed"], Value::Bool(true));
    assert_eq!(report["result"]["final_max_ratio"], serde_json::json!({"num": 1, "den": 32}));
    assert!(dir.path().join("res/zbox.meta.json").exists());
}

#[test]
fn malformed_configs_exit_2_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"kind": "folner_profile", "group": {"group": "Z", "dim": 1},
            "schedule": {"type": "boxes", "sides": {"rule": "linear", "start": 1, "stp": 1}}, "max_index": 2}"#,
    );
    let o = afp_lab(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("`schedule`") && err.contains("stp"), "{err}");

    let cfg = write(dir.path(), "typo.json", r#"{"kind": "kesten", "group": {"group": "F", "rank": 2}, "radius": -1}"#);
    let o = afp_lab(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`radius`"), "{}", stderr(&o));

    let cfg = write(dir.path(), "noseed.json", r#"{"kind": "embed", "domain": {"kind": "simplex", "coords": 3}}"#);
    let o = afp_lab(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`seed`"), "{}", stderr(&o));

    // Well-formed JSON naming an impossible action.
    let cfg = write(
        dir.path(),
        "mismatch.json",
        r#"{"kind": "afp_run", "group": {"group": "Z", "dim": 1}, "action": {"type": "permutation"},
            "schedule": {"type": "boxes", "sides": {"rule": "doubling"}}, "x0": [1, 0]}"#,
    );
    let o = afp_lab(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn ball_cap_exits_3_from_config_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "big.json",
        r#"{"kind": "kesten", "ball_cap": 1000, "group": {"group": "F", "rank": 2}, "radius": 8}"#,
    );
    let o = afp_lab(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let cfg = write(dir.path(), "env.json", r#"{"kind": "kesten", "group": {"group": "F", "rank": 2}, "radius": 8}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_afp-lab"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("AFP_LAB_BALL_CAP", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn empty_manifest_exits_0_with_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"experiments": []}"#);
    let o = afp_lab(&["suite", &m, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = read_json(&dir.path().join("res/suite.json"));
    assert_eq!(report["experiments"], serde_json::json!([]));
    assert_eq!(report["passed"], Value::Bool(true));
}

#[test]
fn failing_floor_assertion_names_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zbox.json", Z_PROFILE);
    let m = write(
        dir.path(),
        "m.json",
        r#"{"experiments": [
            "zbox.json",
            {"kind": "counterexample", "name": "too_strict", "radii": [0, 1, 2], "threshold": 1.5,
             "lp_max_radius": 2, "control_radius": 3}
        ]}"#,
    );
    let o = afp_lab(&["suite", &m, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("too_strict"), "{}", stderr(&o));
    let report = read_json(&dir.path().join("res/suite.json"));
    assert_eq!(report["failed"], serde_json::json!(["too_strict"]));
    assert_eq!(report["experiments"][0]["passed"], Value::Bool(true));
}

#[test]
fn invalid_entry_aborts_the_suite_before_running() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zbox.json", Z_PROFILE);
    let m = write(
        dir.path(),
        "m.json",
        r#"{"experiments": ["zbox.json", {"kind": "reiter", "name": "r", "group": {"group": "Z", "dim": 1}, "radius": 2}]}"#,
    );
    let o = afp_lab(&["suite", &m, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("method"), "{}", stderr(&o));
    assert!(!dir.path().join("res/zbox.json").exists());

    let dup = write(dir.path(), "dup.json", r#"{"experiments": ["zbox.json", "zbox.json"]}"#);
    let o = afp_lab(&["suite", &dup], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn seed_flag_reaches_the_report_and_runs_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "emb.json",
        r#"{"kind": "embed", "seed": 1, "domain": {"kind": "box", "lo": [0, -1], "hi": [1, 1]}, "samples": 50}"#,
    );
    for out in ["a", "b"] {
        let o = afp_lab(&["run", &cfg, "--seed", "77", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a/emb.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/emb.json")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a/emb.points.csv")).unwrap(),
        fs::read(dir.path().join("b/emb.points.csv")).unwrap()
    );
    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["seed"], serde_json::json!(77));
    assert_eq!(report["config"]["seed"], serde_json::json!(77));
}

#[test]
fn affine_action_configs_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    // x ↦ 1 − x on [0,1] is an involution, so ℤ/2 acts.
    let good = write(
        dir.path(),
        "flip.json",
        r#"{"kind": "afp_run", "seed": 2, "group": {"group": "Cyclic", "moduli": [2]},
            "action": {"type": "affine", "model": {"kind": "box", "lo": [0], "hi": [1]},
                       "maps": [{"matrix": [[-1]], "offset": [1]}]},
            "schedule": {"type": "whole_group"}, "x0": [0.25], "max_index": 0,
            "expect": "success", "decomposition_checks": 5}"#,
    );
    let o = afp_lab(&["run", &good, "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report = read_json(&dir.path().join("res/flip.json"));
    let avg = &report["result"]["records"][0]["average"];
    assert_eq!(avg[0].as_f64(), Some(0.5));

    // x ↦ x/2 is not of order 2.
    let bad = write(
        dir.path(),
        "half.json",
        r#"{"kind": "afp_run", "seed": 2, "group": {"group": "Cyclic", "moduli": [2]},
            "action": {"type": "affine", "model": {"kind": "box", "lo": [0], "hi": [1]},
                       "maps": [{"matrix": [[0.5]], "offset": [0]}]},
            "schedule": {"type": "whole_group"}, "x0": [0.25], "max_index": 0}"#,
    );
    let o = afp_lab(&["run", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
