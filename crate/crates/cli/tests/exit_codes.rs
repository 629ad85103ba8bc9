use std::path::Path;
use std::process::{Command, Output};

fn symtorus(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symtorus")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn success_prints_a_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(&["gallery", "all", "--output", "g"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["triangle"]["passed"], true);
}

#[test]
fn injected_fault_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(&["verify", "polarization", "--inject-fault", "--dump", "cx"], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(dir.path().join("cx").read_dir().unwrap().next().is_some());
}

#[test]
fn bad_input_exits_two_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "phi = 0.3\nxi = 1.6\ntolerance = 1\n").unwrap();
    let o = symtorus(&["minimize", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tolerance"), "{}", stderr(&o));

    let o = symtorus(&["minimize", "--phi", "0.3", "--xi", "1.6", "--L", "20"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("phi = xi*L^(-d/(d+1))"), "{}", stderr(&o));

    let o = symtorus(&["symmetrize", "missing.field", "-o", "x.field"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.field"), "{}", stderr(&o));

    std::fs::write(dir.path().join("bad.field"), "symtorus-field 1\ndim 1\nn 4\nhalf_period 1\nvalues\n1 2 z 4\n").unwrap();
    let o = symtorus(&["geometry", "bad.field", "-o", "geo"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.field:6:"), "{}", stderr(&o));

    let o = symtorus(&["verify", "spectral"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn unconverged_minimize_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = symtorus(&["minimize", "--n", "32", "--max-iter", "1", "-o", "run"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(dir.path().join("run/report.json").is_file());
}
