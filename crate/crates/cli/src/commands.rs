//! Subcommand bodies. Each returns a JSON summary; files are written
//! atomically into the paths it is given.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use symtorus_core::energy::{dirichlet_energy, fit_multipliers, potential_energy, Model, Multipliers, QuarticDoubleWell};
use symtorus_core::field::{reflect, shift_align};
use symtorus_core::geom::{contours, interface_deficit, level_set_geometry, regime_constants, sphericity_report, RegimeConstants, SphericityReport};
use symtorus_core::minimize::{
    constrained_descent, symmetry_audit, ChebyshevPreconditioner, ConstraintState, DescentOptions, MinimizeReport, StopReason, SymmetryAudit,
};
use symtorus_core::rearrange::{bump_structure, default_critical_threshold, distribution, dominates_reflection, iterated_steiner, polarization_edge_gain, polarize, steiner_axis};
use symtorus_core::{Error, ScalarField};

use crate::config::Resolved;
use crate::error::CliError;
use crate::gallery;
use crate::io::{read_field, sorted_values_hash, write_atomic, write_field, write_json};
use crate::synth::{droplet_center, initial_state};
use crate::tables::{bump_csv, contour_csv, distribution_csv, sphericity_csv};
use crate::verify::{self, PolarizeFn, Suite};

/// Tolerances of the minimizer audit.
pub const SYMMETRY_TOL: f64 = 1e-2;
pub const DICHOTOMY_TOL: f64 = 1e-2;
pub const MULTIPLIER_TOL: f64 = 1e-10;
/// Superlevel sets reported for a minimizer.
pub const LEVELS: [f64; 3] = [-0.5, 0.0, 0.5];

/// Sixteen even reflection indices spread over one period, so that every
/// `η = eta_index·h/2` is a grid point.
pub fn audit_etas(n: usize) -> Vec<i64> {
    (0..16).map(|k| 2 * ((k * n) / 16) as i64).collect()
}

fn energies(u: &ScalarField, phi: Option<f64>) -> Value {
    let d = dirichlet_energy(u);
    let p = potential_energy(u, &QuarticDoubleWell);
    let mut v = json!({ "dirichlet": d, "potential": p });
    if let Some(phi) = phi {
        v["ch_energy"] = json!(0.5 * phi * d + p / phi);
    }
    v
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
        StopReason::LineSearchStalled => "line_search_stalled",
    }
}

fn multipliers_json(m: &Multipliers) -> Value {
    json!({ "lambda_phi": m.lambda_phi, "lambda_omega": m.lambda_omega })
}

fn constraints_json(c: &ConstraintState) -> Value {
    json!({
        "mean_target": c.mean_target,
        "volume_target": c.volume_target,
        "mean_error": c.mean_error,
        "volume_error": c.volume_error,
        "feasible": c.is_feasible(),
    })
}

fn report_json(r: &MinimizeReport) -> Value {
    json!({
        "iterations": r.iterations,
        "stop_reason": stop_name(r.stop_reason),
        "converged": r.converged,
        "initial_projected_gradient": r.initial_projected_gradient,
        "final_projected_gradient": r.final_projected_gradient,
        "final_energy": r.final_energy,
        "multipliers": multipliers_json(&r.multipliers),
        "multipliers_degenerate": r.multipliers_degenerate,
        "el_residual_norm": r.el_residual_norm,
        "constraints": constraints_json(&r.constraints),
        "energy_trace": r.energy_trace,
        "step_trace": r.step_trace,
        "projected_gradient_trace": r.projected_gradient_trace,
    })
}

fn audit_json(a: &SymmetryAudit) -> Value {
    json!({
        "shift": a.shift,
        "aligned_distance": a.aligned_distance,
        "max_upper_slope": a.max_upper_slope,
        "slope_threshold": a.slope_threshold,
        "monotone": a.monotone,
        "max_dichotomy": a.max_dichotomy(),
        "dichotomy": a.dichotomy.iter().map(|r| json!({
            "axis": r.axis,
            "eta_index": r.eta_index,
            "fixed_distance": r.fixed_distance,
            "reflected_distance": r.reflected_distance,
            "energy_gain": r.energy_gain,
        })).collect::<Vec<_>>(),
    })
}

/// Multipliers of `u` against those of one reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierRow {
    pub axis: usize,
    pub eta_index: i64,
    pub reflected: Multipliers,
    /// Largest relative difference over the two multipliers.
    pub relative_gap: f64,
}

pub fn multiplier_invariance(u: &ScalarField, model: &Model, etas: &[i64]) -> Result<(Multipliers, Vec<MultiplierRow>), CliError> {
    let base = fit_multipliers(u, model)?;
    let rel = |a: f64, b: f64| {
        let s = a.abs().max(b.abs());
        if s == 0.0 {
            0.0
        } else {
            (a - b).abs() / s
        }
    };
    let mut rows = Vec::new();
    for axis in 0..u.grid().dim() {
        for &eta in etas {
            let m = fit_multipliers(&reflect(u, axis, eta), model)?;
            let relative_gap = rel(base.lambda_phi, m.lambda_phi).max(rel(base.lambda_omega, m.lambda_omega));
            rows.push(MultiplierRow { axis, eta_index: eta, reflected: m, relative_gap });
        }
    }
    Ok((base, rows))
}

fn sphericity_json(s: &SphericityReport) -> Value {
    json!({
        "r_omega": s.r_omega,
        "rows": s.rows.iter().map(|r| json!({
            "eta": r.geometry.level,
            "area": r.geometry.area,
            "perimeter": r.geometry.perimeter,
            "rho_in": r.geometry.rho_in,
            "rho_out": r.geometry.rho_out,
            "rho_vol": r.geometry.rho_vol,
            "delta_rho": r.delta_rho,
            "outer_deviation": r.outer_deviation,
            "inner_deviation": r.inner_deviation,
            "area_deviation": r.area_deviation,
            "bonnesen_slack": r.bonnesen_slack,
            "tol_geom": r.geometry.tol_geom(),
            "components": r.geometry.components,
        })).collect::<Vec<_>>(),
        "excluded": s.excluded.iter().map(|(l, why)| json!({ "eta": l, "reason": why })).collect::<Vec<_>>(),
    })
}

/// Everything computed by `minimize`.
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub initial: ScalarField,
    pub field: ScalarField,
    pub report: MinimizeReport,
    pub audit: SymmetryAudit,
    pub multipliers: Multipliers,
    pub multiplier_rows: Vec<MultiplierRow>,
    pub sphericity: SphericityReport,
    pub regime: RegimeConstants,
    pub interface_deficit: f64,
    pub json: Value,
}

impl MinimizeOutcome {
    pub fn max_multiplier_gap(&self) -> f64 {
        self.multiplier_rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max)
    }

    /// An empty superlevel set satisfies the inequality with equality; any
    /// other exclusion (full, disconnected, wrapping) counts as a failure.
    pub fn bonnesen_holds(&self) -> bool {
        self.sphericity.excluded.iter().all(|(_, why)| *why == "empty")
            && self.sphericity.rows.iter().all(|r| r.bonnesen_slack.is_some_and(|s| s >= -r.geometry.tol_geom()))
    }

    pub fn audit_passed(&self) -> bool {
        self.report.converged
            && self.audit.aligned_distance <= SYMMETRY_TOL
            && self.audit.monotone
            && self.audit.max_dichotomy() <= DICHOTOMY_TOL
            && self.max_multiplier_gap() <= MULTIPLIER_TOL
            && self.bonnesen_holds()
    }
}

/// Initial state, descent, symmetry audit and geometry for one configuration.
/// `checkpoint` sees every accepted iterate.
pub fn minimize_pipeline(cfg: &Resolved, mut checkpoint: impl FnMut(usize, &ScalarField)) -> Result<MinimizeOutcome, CliError> {
    let model = Model::new(cfg.params);
    let grid = cfg.grid;
    let u0 = initial_state(grid, &model, cfg.perturbation, cfg.seed)?;
    let pre = ChebyshevPreconditioner::new(&grid, cfg.phi);
    let options = DescentOptions { tol_rel: cfg.tol_g, max_iter: cfg.max_iter, ..DescentOptions::default() };
    let (u, report) = constrained_descent(&u0, &model, &pre, &options, |p| checkpoint(p.iteration, p.field))?;
    let etas = audit_etas(grid.n());
    let audit = symmetry_audit(&u, &model, &etas)?;
    let every_other: Vec<i64> = etas.iter().copied().step_by(2).collect();
    let (multipliers, multiplier_rows) = multiplier_invariance(&u, &model, &every_other)?;
    let (sphericity, regime, deficit) = if grid.dim() == 2 {
        (
            sphericity_report(&u, &cfg.params, &LEVELS)?,
            regime_constants(&cfg.params, &QuarticDoubleWell)?,
            interface_deficit(&u, cfg.phi, &QuarticDoubleWell, 41)?,
        )
    } else {
        return Err(CliError::Config("minimize reports geometry and needs dim = 2".into()));
    };
    let json = json!({
        "config": cfg,
        "droplet_center": droplet_center(&grid, cfg.seed),
        "minimize": report_json(&report),
        "audit": audit_json(&audit),
        "multiplier_invariance": {
            "multipliers": multipliers_json(&multipliers),
            "rows": multiplier_rows.iter().map(|r| json!({
                "axis": r.axis,
                "eta_index": r.eta_index,
                "reflected": multipliers_json(&r.reflected),
                "relative_gap": r.relative_gap,
            })).collect::<Vec<_>>(),
        },
        "sphericity": sphericity_json(&sphericity),
        "regime_constants": {
            "c0": regime.c0,
            "xi_tilde_2": regime.xi_tilde_2,
            "xi_2": regime.xi_2,
            "r_omega": regime.r_omega,
            "xi_in_range": regime.xi_in_range,
        },
        "interface_deficit": { "value": deficit, "weight": "G~ = G (model potential)", "levels": 41 },
        "sorted_values_sha256": sorted_values_hash(&u),
    });
    let mut out = MinimizeOutcome {
        initial: u0,
        field: u,
        report,
        audit,
        multipliers,
        multiplier_rows,
        sphericity,
        regime,
        interface_deficit: deficit,
        json,
    };
    let passed = out.audit_passed();
    out.json["passed"] = json!(passed);
    Ok(out)
}

/// Runs the pipeline and writes `minimizer.field`, `report.json`,
/// `sphericity.csv`, contour tables and optional checkpoints under
/// `cfg.output`. A run that does not converge is a numerical failure; a
/// converged run that fails the audit is a verification failure. The report
/// is written in both cases.
pub fn cmd_minimize(cfg: &Resolved) -> Result<Value, CliError> {
    let dir = cfg.output.clone();
    let every = cfg.checkpoint_every;
    let mut checkpoint_error = None;
    let outcome = minimize_pipeline(cfg, |it, u| {
        if every > 0 && it % every == 0 && checkpoint_error.is_none() {
            let path = dir.join("checkpoints").join(format!("iter_{it:07}.field"));
            checkpoint_error = write_field(&path, u).err();
        }
    });
    if let Some(e) = checkpoint_error {
        return Err(e);
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(CliError::Numerical(e)) => {
            let state = match &e {
                Error::NonFiniteEnergy { state, .. } => Some(state.as_ref().clone()),
                Error::Projection { last_iterate, .. } => Some(last_iterate.as_ref().clone()),
                _ => None,
            };
            if let Some(s) = state {
                write_field(&dir.join("failure_state.field"), &s)?;
            }
            write_json(&dir.join("report.json"), &json!({ "config": cfg, "error": e.to_string() }))?;
            return Err(CliError::Numerical(e));
        }
        Err(e) => return Err(e),
    };
    write_field(&dir.join("minimizer.field"), &outcome.field)?;
    write_json(&dir.join("report.json"), &outcome.json)?;
    let rows: Vec<_> = outcome.sphericity.rows.iter().map(|r| r.geometry.clone()).collect();
    write_atomic(&dir.join("sphericity.csv"), sphericity_csv(&rows)?.as_bytes())?;
    for (k, &level) in LEVELS.iter().enumerate() {
        let loops = contours(&outcome.field, level)?;
        write_atomic(&dir.join(format!("contours_{k}.csv")), contour_csv(&loops)?.as_bytes())?;
    }
    if !outcome.report.converged {
        return Err(CliError::Numerical(Error::InvalidParams(format!(
            "descent stopped without converging ({}); report written to {}",
            stop_name(outcome.report.stop_reason),
            dir.display()
        ))));
    }
    if !outcome.audit_passed() {
        return Err(CliError::Verification(format!("symmetry audit failed; see {}", dir.join("report.json").display())));
    }
    Ok(json!({
        "output": dir,
        "iterations": outcome.report.iterations,
        "final_energy": outcome.report.final_energy,
        "aligned_distance": outcome.audit.aligned_distance,
        "passed": true,
    }))
}

fn rearrangement_summary(u: &ScalarField, v: &ScalarField, phi: Option<f64>) -> Result<Value, CliError> {
    let (hu, hv) = (sorted_values_hash(u), sorted_values_hash(v));
    let align = shift_align(u, v)?;
    Ok(json!({
        "energy_before": energies(u, phi),
        "energy_after": energies(v, phi),
        "sorted_values_sha256_before": hu,
        "sorted_values_sha256_after": hv,
        "equimeasurable": hu == hv,
        "aligned_distance": align.distance,
        "aligned_shift": align.offsets(),
    }))
}

/// Steiner symmetrization along `axis`, or iterated over all axes.
pub fn cmd_symmetrize(input: &Path, output: &Path, axis: Option<usize>, phi: Option<f64>) -> Result<Value, CliError> {
    let u = read_field(input)?;
    let v = match axis {
        Some(a) => steiner_axis(&u, a)?,
        None => iterated_steiner(&u),
    };
    write_field(output, &v)?;
    let mut s = rearrangement_summary(&u, &v, phi)?;
    s["mode"] = json!(axis.map_or("iterated".to_string(), |a| format!("axis {a}")));
    s["output"] = json!(output);
    Ok(s)
}

pub fn cmd_polarize(input: &Path, output: &Path, axis: usize, eta_index: i64, phi: Option<f64>) -> Result<Value, CliError> {
    let u = read_field(input)?;
    let t = polarize(&u, axis, eta_index)?;
    write_field(output, &t)?;
    let mut s = rearrangement_summary(&u, &t, phi)?;
    s["axis"] = json!(axis);
    s["eta_index"] = json!(eta_index);
    s["input_was_fixed"] = json!(dominates_reflection(&u, axis, eta_index)?);
    s["min_edge_gain"] = json!(polarization_edge_gain(&u, axis, eta_index)?);
    s["output"] = json!(output);
    Ok(s)
}

/// Superlevel geometry, contours and per-column distribution and bump tables.
pub fn cmd_geometry(input: &Path, out_dir: &Path, levels: &[f64]) -> Result<Value, CliError> {
    let u = read_field(input)?;
    let grid = *u.grid();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (k, &level) in levels.iter().enumerate() {
        match level_set_geometry(&u, level) {
            Ok(g) => rows.push(g),
            Err(Error::DegenerateLevelSet { kind, .. }) => skipped.push(json!({ "eta": level, "reason": kind })),
            Err(e) => return Err(e.into()),
        }
        let loops = contours(&u, level)?;
        write_atomic(&out_dir.join(format!("contours_{k}.csv")), contour_csv(&loops)?.as_bytes())?;
    }
    write_atomic(&out_dir.join("sphericity.csv"), sphericity_csv(&rows)?.as_bytes())?;
    let eps = default_critical_threshold(&u);
    let mut dist = Vec::new();
    let mut bumps = Vec::new();
    for i in 0..grid.n() {
        let col = [i];
        let col = &col[..grid.dim() - 1];
        dist.extend(distribution(&u, col, levels, eps)?);
        for &t in levels {
            bumps.push(bump_structure(&u, col, t)?);
        }
        if grid.dim() == 1 {
            break;
        }
    }
    write_atomic(&out_dir.join("distribution.csv"), distribution_csv(&dist)?.as_bytes())?;
    write_atomic(&out_dir.join("bumps.csv"), bump_csv(&bumps)?.as_bytes())?;
    Ok(json!({
        "levels": levels,
        "rows": rows.len(),
        "skipped": skipped,
        "output": out_dir,
    }))
}

/// Writes the fields and `report.json` of one gallery item.
pub fn cmd_gallery(name: &str, out_dir: &Path) -> Result<Value, CliError> {
    let names: Vec<&str> = if name == "all" { gallery::NAMES.to_vec() } else { vec![name] };
    let mut summary = serde_json::Map::new();
    let mut failed = Vec::new();
    for name in names {
        let item = gallery::build(name)?;
        let dir = out_dir.join(item.name);
        for (label, f) in &item.fields {
            write_field(&dir.join(format!("{label}.field")), f)?;
        }
        let mut report = item.report.clone();
        report["claims"] = serde_json::to_value(&item.claims).expect("claims serialize");
        report["passed"] = json!(item.passed());
        write_json(&dir.join("report.json"), &report)?;
        if !item.passed() {
            failed.push(item.name);
        }
        summary.insert(item.name.into(), report);
    }
    if !failed.is_empty() {
        return Err(CliError::Verification(format!("gallery claims failed for {failed:?}")));
    }
    Ok(Value::Object(summary))
}

/// Runs a verification suite; counterexamples go to `dump_dir`.
pub fn cmd_verify(suite: Suite, dump_dir: Option<&Path>, polarize_fn: PolarizeFn<'_>) -> Result<Value, CliError> {
    let report = verify::run(suite, polarize_fn);
    let mut dumped: Vec<PathBuf> = Vec::new();
    if let Some(dir) = dump_dir {
        for c in report.failures() {
            if let Some(f) = &c.counterexample {
                let path = dir.join(format!("{}_{}.field", c.suite, c.name));
                write_field(&path, f)?;
                dumped.push(path);
            }
        }
    }
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["passed"] = json!(report.passed());
    v["counterexamples"] = json!(dumped);
    if !report.passed() {
        let names: Vec<String> = report.failures().map(|c| format!("{}/{}: {}", c.suite, c.name, c.detail)).collect();
        println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        return Err(CliError::Verification(names.join("; ")));
    }
    Ok(v)
}
