//! End-to-end runs of the `bcpatch` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bcpatch(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bcpatch")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn selftest_passes_on_a_coarse_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("st");
    let (code, stdout, _) = bcpatch(&["selftest", "--grid", "128", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let j = json(out.join("selftest.json"));
    assert_eq!(j["pass"], true);
    assert_eq!(j["result"]["items"].as_array().unwrap().len(), 7);
    assert_eq!(j["config"]["grid"]["n"], 128);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    assert_eq!(bcpatch(&["selftest", "--grid", "255", "--out", o]).0, 2);
    assert_eq!(bcpatch(&["solve", "--tol", "1e-13", "--out", o]).0, 2);
    assert_eq!(bcpatch(&["solve", "--profile", "singular:eps=1e-2", "--out", o]).0, 2);
    assert_eq!(bcpatch(&["barrier", "--s", "1.5", "--out", o]).0, 2);
    assert_eq!(bcpatch(&["trace", "--out", o]).0, 2);
    assert_eq!(bcpatch(&["rates", "--eps", "0.02", "--out", o]).0, 2);
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "command = \"solve\"\nmystery = 3\n").unwrap();
    assert_eq!(bcpatch(&["solve", "--config", cfg.to_str().unwrap()]).0, 2);
    assert_eq!(bcpatch(&["trace", "--field", "/nonexistent.field", "--out", o]).0, 2);
}

#[test]
fn failed_assertion_exits_with_one() {
    // eps = 0.08 and 0.04 collapse to the trivial state, so the rate leaves its band
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("r");
    let (code, _, _) = bcpatch(&[
        "rates",
        "--grid",
        "128",
        "--family",
        "mollified",
        "--eps",
        "0.08,0.04,0.02,0.01",
        "--tol",
        "1e-9",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    let j = json(o.join("rates.json"));
    assert_eq!(j["pass"], false);
    assert!(j["result"]["fit"]["slope"].as_f64().unwrap() > 1.2);
}

#[test]
fn identical_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("ref");
    let args = ["reference", "--grid", "256", "--out", o.to_str().unwrap()];
    assert_eq!(bcpatch(&args).0, 0);
    let first = dir_bytes(&o);
    assert_eq!(bcpatch(&args).0, 0);
    assert_eq!(first, dir_bytes(&o));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["level_set_area.csv", "properties.json", "psi0.field"]);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("solve");
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "command = \"solve\"\n[grid]\nn = 128\n[profile]\nspec = \"mollified:eps=1e-2\"\n[solver]\ntol = 1e-9\n[output]\ndir = \"{}\"\n",
            o.display()
        ),
    )
    .unwrap();
    let (code, stdout, stderr) = bcpatch(&["solve", "--config", cfg.to_str().unwrap(), "--grid", "256"]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    let j = json(o.join("report.json"));
    assert_eq!(j["config"]["grid"]["n"], 256);
    assert_eq!(j["config"]["solver"]["tol"], 1e-9);
    assert_eq!(j["result"]["state"]["summary"]["converged"], true);
    let rows = fs::read_to_string(o.join("convergence.csv")).unwrap();
    assert!(rows.starts_with("iteration,residual"));
}

#[test]
fn trace_reports_the_input_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("solve");
    let t = tmp.path().join("trace");
    let (code, _, _) = bcpatch(&[
        "solve",
        "--grid",
        "256",
        "--profile",
        "singular:eps=2e-2,s=0.5",
        "--tol",
        "1e-9",
        "--out",
        s.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let field = s.join("solution.field");
    let (code, stdout, stderr) =
        bcpatch(&["trace", "--field", field.to_str().unwrap(), "--start", "0.1", "--out", t.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    let bytes = fs::read(&field).unwrap();
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(&bytes);
    let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let j = json(t.join("diagnostic.json"));
    assert_eq!(j["inputs"]["field"], hex.as_str());
    assert_eq!(j["result"]["diagnostic"], "finite_arrival");
    let csv = fs::read_to_string(t.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,y,ln_y"));
}

#[test]
fn barrier_subcommand_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().join("b");
    let (code, _, _) = bcpatch(&["barrier", "--s", "0.5", "--out", o.to_str().unwrap()]);
    assert_eq!(code, 0);
    let j = json(o.join("barrier.json"));
    assert!((j["result"]["b0"].as_f64().unwrap() - 0.7485635953304363).abs() < 1e-9);
    let k = fs::read_to_string(o.join("K.csv")).unwrap();
    assert_eq!(k.lines().count(), 2002);
}
