use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn locword(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_locword"));
    cmd.args(args).env_remove("LOCWORD_SEED");
    if let Some(s) = seed_env {
        cmd.env("LOCWORD_SEED", s);
    }
    cmd.output().expect("spawn locword")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all = args.to_vec();
    all.extend(["--out", out]);
    locword(&all, None)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed(dir: &Path) -> BTreeSet<String> {
    manifest(dir)["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect()
}

fn on_disk(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect()
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reruns_are_byte_identical_across_directories_and_workers() {
    let tmp = TempDir::new().unwrap();
    let cases: [&[&str]; 3] =
        [&["lyapunov", "--sites", "1e4", "--step", "0.5"], &["edl", "--box", "60", "--N", "4"], &["cheb-check", "--polys", "20"]];
    for (k, args) in cases.iter().enumerate() {
        let a = tmp.path().join(format!("a{k}"));
        let b = tmp.path().join(format!("b{k}"));
        let mut with_workers = args.to_vec();
        with_workers.extend(["--workers", "1"]);
        assert_code(&run_in(&a, &with_workers), 0);
        with_workers.pop();
        with_workers.push("3");
        assert_code(&run_in(&b, &with_workers), 0);
        let files = listed(&a);
        assert_eq!(files, listed(&b));
        for f in &files {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{args:?}: {f} differs");
        }
        assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);
    }
}

#[test]
fn one_manifest_naming_every_file() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    assert_code(&run_in(&dir, &["spectrum", "--a", "-4", "--b", "4", "--vectors"]), 0);
    let mut expected = listed(&dir);
    expected.insert("manifest.json".into());
    assert_eq!(on_disk(&dir), expected);
    assert!(expected.contains("eigenvectors.csv") && expected.contains("operator.json"));
    let eig = fs::read_to_string(dir.join("eigenvalues.csv")).unwrap();
    assert!(eig.starts_with("index,eigenvalue\r\n"));
    assert_eq!(eig.lines().count(), 10);

    // a second run into the same directory replaces the first one's files
    assert_code(&run_in(&dir, &["cheb-check", "--polys", "5"]), 0);
    let mut expected = listed(&dir);
    expected.insert("manifest.json".into());
    assert_eq!(on_disk(&dir), expected);
    assert!(!expected.contains("eigenvalues.csv"));
}

#[test]
fn config_file_flags_and_seed_env() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"subcommand": "spectrum", "a": -3, "b": 3, "seed": 5}"#).unwrap();
    let dir = tmp.path().join("run");
    let out = run_in(&dir, &["run", "--config", cfg.to_str().unwrap(), "--b", "5"]);
    assert_code(&out, 0);
    let eig = fs::read_to_string(dir.join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 10);
    assert_eq!(manifest(&dir)["seed"], 5);

    let env_dir = tmp.path().join("env");
    let out = locword(&["spectrum", "--seed", "5", "--out", env_dir.to_str().unwrap()], Some("77"));
    assert_code(&out, 0);
    assert_eq!(manifest(&env_dir)["seed"], 77);
    let summary: Value = serde_json::from_str(&fs::read_to_string(env_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 77);
    assert_eq!(summary["config_hash"], manifest(&env_dir)["config_hash"]);

    fs::write(&cfg, r#"{"subcommand": "spectrum", "bogus": 1}"#).unwrap();
    assert_code(&run_in(&dir, &["run", "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn exit_codes_and_error_records() {
    let tmp = TempDir::new().unwrap();
    let d = |name: &str| tmp.path().join(name);

    assert_code(&locword(&["lyapunov", "--no-such-flag"], None), 2);
    assert_code(&run_in(&d("preset"), &["lyapunov", "--preset", "bogus"]), 2);

    let out = run_in(&d("refl"), &["transport", "--box", "100", "--N", "2"]);
    assert_code(&out, 8);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[reflection]"));
    let m = manifest(&d("refl"));
    assert_eq!(m["status"], "error");
    assert_eq!(m["error"]["code"], 8);
    assert_eq!(m["error"]["kind"], "reflection");

    let out = run_in(&d("ldp"), &["ldp", "--sites", "1e4", "--trials", "100", "--ns", "50,100,150,200,3000"]);
    assert_code(&out, 4);
    assert!(listed(&d("ldp")).contains("ldp.csv"));

    assert_code(&run_in(&d("cov"), &["correlator", "--box", "40", "--N", "2", "--site", "100"]), 3);
    assert_code(
        &run_in(
            &d("sing"),
            &["regularity", "--preset", "free", "--energy", "0", "--scale", "9", "--rate", "0.1", "--box", "80", "--N", "2"],
        ),
        5,
    );
    assert_code(&run_in(&d("inv"), &["lyapunov", "--sites", "10"]), 6);
    assert_code(&run_in(&d("band"), &["correlator", "--box", "40", "--N", "2", "--I", "10:11"]), 10);

    let file = tmp.path().join("file");
    fs::write(&file, "").unwrap();
    assert_code(&run_in(&file.join("sub"), &["cheb-check", "--polys", "5"]), 7);
}
