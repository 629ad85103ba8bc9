use std::path::Path;

use serde_json::Value;
use symtorus::commands::{cmd_gallery, cmd_geometry, cmd_minimize, cmd_polarize, cmd_symmetrize, cmd_verify, minimize_pipeline};
use symtorus::gallery::{self, TWO_BUMPS_ELL, TWO_BUMPS_N};
use symtorus::io::{read_field, write_field};
use symtorus::verify::{self, faulty_polarize, Suite};
use symtorus::{CliError, RunConfig};
use symtorus_core::field::sample;
use symtorus_core::rearrange::polarize;
use symtorus_core::{Grid, ScalarField};

fn small_run(dir: &Path, seed: u64) -> RunConfig {
    RunConfig { n: Some(48), seed: Some(seed), output: Some(dir.to_path_buf()), ..RunConfig::default() }
}

#[test]
fn symmetric_input_is_already_aligned() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let u = sample(grid, |x| (-4.0 * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
    let input = dir.path().join("u.field");
    write_field(&input, &u).unwrap();
    let s = cmd_symmetrize(&input, &dir.path().join("s.field"), None, Some(0.3)).unwrap();
    assert_eq!(s["aligned_distance"], 0.0);
    assert_eq!(s["equimeasurable"], true);
    assert_eq!(s["sorted_values_sha256_before"], s["sorted_values_sha256_after"]);
}

#[test]
fn two_bumps_through_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let item = gallery::build("two_bumps").unwrap();
    let input = dir.path().join("bumps.field");
    write_field(&input, &item.fields[0].1).unwrap();
    let out = dir.path().join("sym.field");
    let s = cmd_symmetrize(&input, &out, Some(1), Some(0.3)).unwrap();
    let (e0, e1) = (s["energy_before"]["ch_energy"].as_f64().unwrap(), s["energy_after"]["ch_energy"].as_f64().unwrap());
    assert!((e0 - e1).abs() <= 1e-12 * e0, "{e0} vs {e1}");
    let delta = item.report["delta"].as_f64().unwrap();
    assert!(s["aligned_distance"].as_f64().unwrap() >= delta * (1.0 - 1e-12));
    assert_eq!(s["equimeasurable"], true);
    let back = read_field(&out).unwrap();
    assert_eq!(back.grid(), &Grid::new(2, TWO_BUMPS_N, TWO_BUMPS_ELL).unwrap());
    assert_eq!(back, item.fields[1].1);
}

#[test]
fn polarize_reports_fixed_points() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 16, 1.0).unwrap();
    let u = sample(grid, |x| (3.0 * x[0]).sin() + x[1]).unwrap();
    let input = dir.path().join("u.field");
    write_field(&input, &u).unwrap();
    let out = dir.path().join("t.field");
    let s = cmd_polarize(&input, &out, 1, 5, None).unwrap();
    assert_eq!(s["equimeasurable"], true);
    assert!(s["min_edge_gain"].as_f64().unwrap() >= 0.0);
    let t = cmd_polarize(&out, &dir.path().join("tt.field"), 1, 5, None).unwrap();
    assert_eq!(t["input_was_fixed"], true);
    assert_eq!(read_field(&out).unwrap(), polarize(&u, 1, 5).unwrap());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = cmd_symmetrize(&dir.path().join("nope.field"), &dir.path().join("o.field"), None, None).unwrap_err();
    assert!(matches!(e, CliError::Io { .. }));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn geometry_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let u = sample(grid, |x| 0.5 - x[0].hypot(x[1])).unwrap();
    let input = dir.path().join("u.field");
    write_field(&input, &u).unwrap();
    let out = dir.path().join("geo");
    let s = cmd_geometry(&input, &out, &[0.0, 2.0]).unwrap();
    assert_eq!(s["rows"], 1);
    assert_eq!(s["skipped"][0]["reason"], "empty");
    for f in ["sphericity.csv", "distribution.csv", "bumps.csv", "contours_0.csv", "contours_1.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let dist = std::fs::read_to_string(out.join("distribution.csv")).unwrap();
    assert_eq!(dist.lines().count(), 1 + 32 * 2);
}

#[test]
fn gallery_writes_fields_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_gallery("all", dir.path()).unwrap();
    for name in gallery::NAMES {
        assert_eq!(s[name]["passed"], true, "{name}");
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(name).join("report.json")).unwrap()).unwrap();
        assert!(report["claims"].as_array().is_some_and(|c| !c.is_empty()));
    }
    assert!(dir.path().join("triangle/x_then_y.field").is_file());
    assert!(matches!(cmd_gallery("square", dir.path()), Err(CliError::Config(_))));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_run(dir.path(), 3).resolve().unwrap();
    let files = ["report.json", "minimizer.field", "sphericity.csv", "contours_1.csv"];
    let read = || files.map(|f| std::fs::read(dir.path().join(f)).unwrap());
    let _ = cmd_minimize(&cfg);
    let first = read();
    let _ = cmd_minimize(&cfg);
    assert_eq!(first, read());
}

#[test]
fn seed_moves_the_droplet_but_not_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let a = minimize_pipeline(&small_run(dir.path(), 0).resolve().unwrap(), |_, _| {}).unwrap();
    let b = minimize_pipeline(&small_run(dir.path(), 5).resolve().unwrap(), |_, _| {}).unwrap();
    assert_ne!(a.json["droplet_center"], b.json["droplet_center"]);
    assert!(a.report.converged && b.report.converged);
    assert_eq!(a.audit_passed(), b.audit_passed());
    assert!((a.report.final_energy - b.report.final_energy).abs() <= 1e-9 * a.report.final_energy);
}

#[test]
fn checkpoints_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_run(dir.path(), 0);
    c.checkpoint_every = Some(5);
    let _ = cmd_minimize(&c.resolve().unwrap());
    let n = std::fs::read_dir(dir.path().join("checkpoints")).unwrap().count();
    assert!(n >= 1);
    assert!(read_field(&dir.path().join("checkpoints/iter_0000005.field")).is_ok());
}

#[test]
fn unconverged_run_is_a_numerical_failure_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_run(dir.path(), 0);
    c.max_iter = Some(2);
    let e = cmd_minimize(&c.resolve().unwrap()).unwrap_err();
    assert_eq!(e.exit_code(), 3, "{e}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["minimize"]["converged"], false);
    assert_eq!(report["config"]["max_iter"], 2);
}

#[test]
fn all_suites_pass() {
    let report = verify::run(Suite::All, &polarize);
    let failures: Vec<_> = report.failures().map(|c| format!("{}/{}: {}", c.suite, c.name, c.detail)).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn injected_fault_is_caught_with_a_counterexample() {
    let report = verify::run(Suite::Polarization, &faulty_polarize);
    assert!(!report.passed());
    let dir = tempfile::tempdir().unwrap();
    let e = cmd_verify(Suite::Polarization, Some(dir.path()), &faulty_polarize).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    let dumps: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!dumps.is_empty());
    for p in dumps {
        let u: ScalarField = read_field(&p).unwrap();
        let name = p.file_stem().unwrap().to_str().unwrap().trim_start_matches("polarization_").to_string();
        assert!(report.failures().any(|c| c.name == name && c.counterexample.as_ref() == Some(&u)), "{name}");
    }
}
