use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momentum-lab"))
        .current_dir(dir)
        .env_remove("MOMENTUM_LAB_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn small_agd(dir: &Path, tag: &str) -> Output {
    let cfg = config("agd.cfg");
    lab(
        dir,
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--iterations",
            "200",
            "--set",
            "problem.dim=20",
            "--csv",
            &format!("{tag}.csv"),
            "--json",
            &format!("{tag}.json"),
            "--svg",
            &format!("{tag}.svg"),
        ],
    )
}

#[test]
fn run_writes_artifacts_and_certify_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_agd(dir.path(), "a");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("PASS"));
    for ext in ["csv", "json", "svg"] {
        assert!(dir.path().join(format!("a.{ext}")).exists(), "missing a.{ext}");
    }
    let cert: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(cert["overall"], true);

    let out = lab(dir.path(), &["certify", "--csv", "a.csv", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let re: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(re["overall"], true);
    assert_eq!(re["checks"], cert["checks"]);
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(small_agd(a.path(), "r").status.code(), Some(0));
    assert_eq!(small_agd(b.path(), "r").status.code(), Some(0));
    for f in ["r.csv", "r.json", "r.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn tampered_trace_fails_certification() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(small_agd(dir.path(), "t").status.code(), Some(0));
    let path = dir.path().join("t.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "E_k").expect("E_k column");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers).unwrap();
    for (i, rec) in rdr.records().enumerate() {
        let mut row: Vec<String> = rec.unwrap().iter().map(String::from).collect();
        if i == 50 {
            row[col] = "1e6".into();
        }
        w.write_record(&row).unwrap();
    }
    std::fs::write(&path, w.into_inner().unwrap()).unwrap();
    let out = lab(dir.path(), &["certify", "--csv", "t.csv"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(dir.path(), &["run", "--config", "missing.cfg"]).status.code(), Some(2));
    assert_eq!(lab(dir.path(), &["certify", "--csv", "missing.csv"]).status.code(), Some(2));
    let cfg = config("agd.cfg");
    let out = lab(dir.path(), &["run", "--config", cfg.to_str().unwrap(), "--set", "method.id=no_such_method"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_cell_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("quasi_monotone.cfg");
    let out = lab(
        dir.path(),
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--axis",
            "schedule.c=0.5,1,2",
            "--set",
            "run.iterations=50",
            "--set",
            "output.csv=",
            "--set",
            "output.json=",
            "--set",
            "output.svg=",
            "--out",
            "grid",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let entries = std::fs::read_dir(dir.path().join("grid")).unwrap().count();
    assert!(entries >= 3, "{entries} entries");
}

#[test]
fn dynamics_and_list_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["dynamics", "--kind", "first_el", "--dim", "5", "--t1", "5", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rep.is_object());
    let out = lab(dir.path(), &["list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("agd_family_I"));
}
