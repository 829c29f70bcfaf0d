use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphprod"))
        .arg("--output")
        .arg(out)
        .args(args)
        .env_remove("GPG_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn with_config(out: &Path, config: &str, args: &[&str]) -> Output {
    let path = configs().join(config);
    let mut all = vec!["--config", path.to_str().unwrap()];
    all.extend_from_slice(args);
    run(out, &all)
}

fn json_file(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn normalize_prints_normal_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "p3.json", &["normalize", "b a"]);
    assert_eq!(stdout(&o), "a b\n");
    let m = json_file(dir.path(), "manifest.json");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["artifacts"][0]["name"], "normalize.json");
    assert_eq!(json_file(dir.path(), "normalize.json")["word_length"], 2);
}

#[test]
fn mul_cancels() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "p4.json", &["mul", "a b c", "c^-1 b^-1 a^-1"]);
    assert_eq!(stdout(&o), "1\n");
}

#[test]
fn stability_on_p4_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "p4.json", &["stability", "a b c d", "--nmax", "4"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Stable");
    assert_eq!(v["evidence"]["stabilized"], true);
    let csv = std::fs::read_to_string(dir.path().join("distortion.csv")).unwrap();
    assert_eq!(csv, "n,standard,cone_R1,cone_R2\n1,4,2,2\n2,8,4,4\n3,12,6,6\n4,16,8,8\n");
}

#[test]
fn hhs_fixture_round_trip_and_maximize() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["hhs", "maximize", configs().join("grid.json").to_str().unwrap(), "--M", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["T"], serde_json::json!(["S", "H", "V"]));
    assert!(v["topspace_diameter"].as_u64().unwrap() <= 2);

    let o = run(dir.path(), &["hhs", "fixture", "grid"]);
    let shipped = std::fs::read_to_string(configs().join("grid.json")).unwrap();
    assert_eq!(stdout(&o), shipped);
}

#[test]
fn hhs_check_reports_failures_without_erroring() {
    let dir = tempfile::tempdir().unwrap();
    let grid = configs().join("grid.json");
    let o = run(dir.path(), &["hhs", "check", grid.to_str().unwrap(), "--E", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_pass"], false);
    assert_eq!(v["minimal_e"], 2);
}

#[test]
fn errors_are_json_with_nonzero_exit_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "p3.json", &["normalize", "a q"]);
    assert!(!o.status.success());
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "word");
    let m = json_file(dir.path(), "manifest.json");
    assert_eq!(m["status"], "error");
    assert_eq!(m["error"]["kind"], "word");

    let o = run(dir.path(), &["normalize", "a"]);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema":1,"graph":{"vertices":["a"]},"vertex_groups":{"a":{"kind":"Z"}},"extra":0}"#).unwrap();
    let o = run(dir.path(), &["--config", bad.to_str().unwrap(), "normalize", "a"]);
    assert!(!o.status.success());
    assert_eq!(json_file(dir.path(), "manifest.json")["status"], "error");
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");
    let config = dir.path().join("c.json");
    let cfg_dir = dir.path().join("from_config");
    std::fs::write(
        &config,
        format!(
            r#"{{"schema":1,"graph":{{"vertices":["a"]}},"vertex_groups":{{"a":{{"kind":"Z"}}}},"output":{{"dir":{:?}}}}}"#,
            cfg_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_graphprod");
    let base = |c: &mut Command| {
        c.args(["--config", config.to_str().unwrap(), "normalize", "a"]);
    };

    let mut c = Command::new(bin);
    base(&mut c);
    assert!(c.env_remove("GPG_OUTPUT_DIR").output().unwrap().status.success());
    assert!(cfg_dir.join("manifest.json").exists());

    let mut c = Command::new(bin);
    base(&mut c);
    assert!(c.env("GPG_OUTPUT_DIR", &env_dir).output().unwrap().status.success());
    assert!(env_dir.join("manifest.json").exists());

    let mut c = Command::new(bin);
    base(&mut c);
    c.arg("--output").arg(&flag_dir);
    assert!(c.env("GPG_OUTPUT_DIR", &env_dir).output().unwrap().status.success());
    assert!(flag_dir.join("manifest.json").exists());
}

#[test]
fn probes_and_listings_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(dir.path(), "z2.json", &["probe", "detect", "a b", "--nmax", "10"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["standard_fit"]["ok"], true);
    assert_eq!(v["cone_fit"]["ok"], false);

    let o = with_config(dir.path(), "z2.json", &["probe", "mltg", "--spiral", "3,2", "--window", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["global_fit"]["ok"], false);

    let o = with_config(dir.path(), "f2.json", &["probe", "gauge", "a b a", "--samples", "50"]);
    stdout(&o);
    let csv = std::fs::read_to_string(dir.path().join("gauge.csv")).unwrap();
    assert!(csv.starts_with("k,c,hausdorff\n1,0,0\n"));

    let o = with_config(dir.path(), "p4.json", &["coning-family"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["family"].as_array().unwrap().len(), 6);

    let o = with_config(dir.path(), "p4.json", &["classes", "--relation", "1@a", "1@c"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["relation"], "transverse");

    let o = with_config(dir.path(), "p3.json", &["clean-containers", "--depth", "1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);

    let o = with_config(dir.path(), "p3.json", &["--threads", "1", "ball", "--radius", "2", "--metric", "cone"]);
    stdout(&o);
    let points = std::fs::read_to_string(dir.path().join("ball_points.csv")).unwrap();
    assert!(points.starts_with("point_id,word,dist\n0,1,0\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        stdout(&with_config(dir, "p4.json", &["--seed", "9", "delta", "--radius", "2", "--metric", "cone", "--budget", "5000"]));
    }
    for name in ["delta.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}
