use std::path::Path;
use std::process::Command;

fn compop() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compop"))
}

fn status(args: &[&str]) -> i32 {
    compop().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["--version"]), 0);
    assert_eq!(status(&["rho", "--help"]), 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(status(&["no-such-command"]), 2);
    assert_eq!(status(&["rho"]), 2);
    assert_eq!(status(&["harmonic", "--domain", "disk", "--a", "0", "--paths", "many"]), 2);
}

#[test]
fn unknown_spec_keys_are_rejected() {
    let code = status(&["rho", "--symbol", r#"{"kind":"scaling","s":0.5,"extra":1}"#, "--h", "0.1"]);
    assert_eq!(code, 2);
    let code = status(&["report", "--symbol", r#"{"kind":"scaling","s":0.5}"#, "--psi", r#"{"family":"cubic"}"#]);
    assert_eq!(code, 2);
}

#[test]
fn resolution_floors_exit_four() {
    assert_eq!(status(&["calibrate", "--eps", "1e-9", "--paths", "1e5"]), 4);
    let code = status(&["rho", "--symbol", r#"{"kind":"scaling","s":0.5}"#, "--samples", "4096", "--h", "1e-4"]);
    assert_eq!(code, 4);
}

#[test]
fn accepts_float_path_counts() {
    let out = compop()
        .args(["harmonic", "--domain", "disk", "--a", "0.2+0.1i", "--paths", "2e3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["paths"], 2000);
}

fn sha256(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn manifest_hashes_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let code = status(&[
        "report",
        "--symbol",
        r#"{"kind":"scaling","s":0.5}"#,
        "--psi",
        r#"{"family":"power","p":2}"#,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "report");
    assert_eq!(manifest["seed"], 7);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let p = Path::new(o["path"].as_str().unwrap());
        assert_eq!(o["sha256"].as_str().unwrap(), sha256(p));
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["summary"], "compact, all S_p");
    assert!(std::fs::read_to_string(dir.path().join("report.csv")).unwrap().starts_with("h,rho"));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let code = status(&[
            "--workers",
            workers,
            "calibrate",
            "--n",
            "1..2",
            "--paths",
            "5e3",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "a.json"), run("3", "b.json"));
}

#[test]
fn slow_blaschke_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("slow.json");
    let code = status(&[
        "build-blaschke",
        "--psi",
        r#"{"family":"power","p":2}"#,
        "--depth",
        "10",
        "--out",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let inv: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("slow.invariants.json")).unwrap()).unwrap();
    assert_eq!(inv["all"], true);
    let symbol = format!(r#"{{"kind":"slow","spec":"{}"}}"#, spec.display());
    let out = compop().args(["rho", "--symbol", &symbol, "--samples", "4096", "--h", "0.1"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
