//! Seeded property suites run by `symtorus verify`.
//!
//! Each check draws its cases from a fixed seed, stops at the first failing
//! case and keeps that input as a counterexample. The polarization suite takes
//! the rearrangement as a parameter so that a faulty implementation can be fed
//! through the same checks.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use symtorus_core::energy::{
    ch_energy, dirichlet_energy, energy_gradient, energy_increment, fit_multipliers, potential_energy, Model, ModelParams,
    QuarticDoubleWell,
};
use symtorus_core::field::{inner, reflect, sample, shift};
use symtorus_core::geom::{bonnesen_check, level_set_geometry};
use symtorus_core::minimize::droplet_profile;
use symtorus_core::rearrange::{cyclic_energy, dominates_reflection, edge_gain, iterated_steiner, steiner_axis, steiner_column};
use symtorus_core::{Grid, ScalarField};

use crate::config::XI_MID;
use crate::error::CliError;

/// Signature of a two-point rearrangement `(u, axis, eta_index) ↦ T^η u`.
pub type PolarizeFn<'a> = &'a dyn Fn(&ScalarField, usize, i64) -> symtorus_core::Result<ScalarField>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Rearrange,
    Energy,
    Polarization,
    Geometry,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["rearrange", "energy", "polarization", "geometry", "all"];
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "rearrange" => Self::Rearrange,
            "energy" => Self::Energy,
            "polarization" => Self::Polarization,
            "geometry" => Self::Geometry,
            "all" => Self::All,
            _ => return Err(CliError::Config(format!("unknown suite {s:?}; expected one of {:?}", Self::NAMES))),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Cases run, including the failing one.
    pub cases: usize,
    pub detail: String,
    #[serde(skip)]
    pub counterexample: Option<ScalarField>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs `cases` trials; the first `Err((detail, field))` ends the check.
fn check(
    suite: &'static str,
    name: &'static str,
    cases: usize,
    seed: u64,
    mut trial: impl FnMut(&mut ChaCha8Rng) -> Result<(), (String, Option<ScalarField>)>,
) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..cases {
        if let Err((detail, counterexample)) = trial(&mut rng) {
            return CheckOutcome { suite, name, passed: false, cases: k + 1, detail, counterexample };
        }
    }
    CheckOutcome { suite, name, passed: true, cases, detail: String::new(), counterexample: None }
}

fn fail<T>(detail: String, u: &ScalarField) -> Result<T, (String, Option<ScalarField>)> {
    Err((detail, Some(u.clone())))
}

fn lift<T>(r: symtorus_core::Result<T>, u: &ScalarField) -> Result<T, (String, Option<ScalarField>)> {
    r.map_err(|e| (e.to_string(), Some(u.clone())))
}

/// Small grid with values that mix tied integers and uniform reals.
pub fn random_field(rng: &mut impl Rng) -> ScalarField {
    let dim = rng.gen_range(1..=2);
    let n = 2 * rng.gen_range(2..=8);
    let grid = Grid::new(dim, n, 1.0).expect("valid grid");
    let values = (0..grid.len())
        .map(|_| if rng.gen_bool(0.5) { f64::from(rng.gen_range(-3i32..=3)) } else { rng.gen_range(-1.0..1.0) })
        .collect();
    ScalarField::new(grid, values).expect("finite values")
}

/// Sum of random Fourier modes with wave numbers up to `k_max` per axis.
pub fn band_limited(grid: Grid, k_max: usize, rng: &mut impl Rng) -> ScalarField {
    let ell = grid.half_period();
    let mut modes = Vec::new();
    for _ in 0..3 * k_max {
        let k: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(0..=k_max) as f64).collect();
        modes.push((k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0)));
    }
    sample(grid, |x| {
        modes
            .iter()
            .map(|(k, phase, a)| a * (phase + k.iter().zip(x).map(|(k, x)| k * PI * x / ell).sum::<f64>()).cos())
            .sum()
    })
    .expect("finite samples")
}

fn fiber(u: &ScalarField, axis: usize, base: usize) -> Vec<f64> {
    let g = u.grid();
    (0..g.n()).map(|j| u.values()[base + j * g.stride(axis)]).collect()
}

fn sorted_fibers(u: &ScalarField, axis: usize) -> Vec<Vec<f64>> {
    u.grid()
        .fiber_bases(axis)
        .map(|b| {
            let mut f = fiber(u, axis, b);
            f.sort_by(f64::total_cmp);
            f
        })
        .collect()
}

fn sorted(u: &ScalarField) -> Vec<f64> {
    let mut v = u.values().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn model(phi: f64) -> Model {
    Model::new(ModelParams::from_phi_xi(2, phi, XI_MID, XI_MID.powi(3) / 4.0).expect("valid parameters"))
}

pub fn rearrange_suite() -> Vec<CheckOutcome> {
    const S: &str = "rearrange";
    vec![
        check(S, "steiner_preserves_fibers", 100, 1, |rng| {
            let u = random_field(rng);
            for axis in 0..u.grid().dim() {
                let s = lift(steiner_axis(&u, axis), &u)?;
                if sorted_fibers(&u, axis) != sorted_fibers(&s, axis) {
                    return fail(format!("fiber multisets differ along axis {axis}"), &u);
                }
            }
            Ok(())
        }),
        check(S, "iterated_preserves_values", 100, 2, |rng| {
            let u = random_field(rng);
            if sorted(&u) != sorted(&iterated_steiner(&u)) {
                return fail("value multiset changed".into(), &u);
            }
            Ok(())
        }),
        check(S, "steiner_idempotent", 100, 3, |rng| {
            let u = random_field(rng);
            for axis in 0..u.grid().dim() {
                let s = lift(steiner_axis(&u, axis), &u)?;
                if lift(steiner_axis(&s, axis), &u)? != s {
                    return fail(format!("second pass along axis {axis} changed the field"), &u);
                }
            }
            Ok(())
        }),
        check(S, "column_energy_minimal", 200, 4, |rng| {
            let n = rng.gen_range(1..=6);
            let mut v: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-3i32..=3)) + 0.25 * rng.gen_range(0..3) as f64).collect();
            let ours = cyclic_energy(&steiner_column(&v));
            let mut best = f64::INFINITY;
            permutations(&mut v, 0, &mut |p| best = best.min(cyclic_energy(p)));
            if ours > best * (1.0 + 1e-14) {
                let len = (n + n % 2).max(4);
                let u = ScalarField::new(Grid::new(1, len, 1.0).unwrap(), pad(&v, len)).unwrap();
                return fail(format!("{v:?}: arrangement {ours} vs minimum {best}"), &u);
            }
            Ok(())
        }),
        check(S, "dirichlet_not_increased", 10, 5, |rng| {
            let grid = Grid::new(2, 64, 1.0).unwrap();
            let u = band_limited(grid, 5, rng);
            let (e, es) = (dirichlet_energy(&u), dirichlet_energy(&iterated_steiner(&u)));
            if es > e * (1.0 + 1e-10) {
                return fail(format!("D(u*) = {es} > D(u) = {e}"), &u);
            }
            Ok(())
        }),
    ]
}

/// Zero-padding for storing a short column as a field of even length.
fn pad(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(n, 0.0);
    out
}

fn permutations(v: &mut Vec<f64>, k: usize, out: &mut dyn FnMut(&[f64])) {
    if k == v.len() {
        out(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, out);
        v.swap(k, i);
    }
}

fn axpy(u: &ScalarField, v: &ScalarField, s: f64) -> ScalarField {
    ScalarField::new(*u.grid(), u.values().iter().zip(v.values()).map(|(a, b)| a + s * b).collect()).expect("finite")
}

pub fn energy_suite() -> Vec<CheckOutcome> {
    const S: &str = "energy";
    let m = model(0.3);
    vec![
        check(S, "gradient_matches_finite_differences", 8, 11, |rng| {
            let grid = Grid::new(2, 32, m.params.ell).unwrap();
            let u = band_limited(grid, 4, rng);
            let v = band_limited(grid, 4, rng);
            let eps = 1e-5;
            let fd = (energy_increment(&u, &v.map(|x| eps * x).unwrap(), &m) - energy_increment(&u, &v.map(|x| -eps * x).unwrap(), &m))
                / (2.0 * eps);
            let directional = inner(&energy_gradient(&u, &m), &v);
            if (fd - directional).abs() > 1e-6 * fd.abs().max(directional.abs()) {
                return fail(format!("finite difference {fd} vs gradient {directional}"), &u);
            }
            Ok(())
        }),
        check(S, "increment_matches_difference", 8, 12, |rng| {
            let grid = Grid::new(2, 32, m.params.ell).unwrap();
            let u = band_limited(grid, 3, rng);
            let s = band_limited(grid, 3, rng).map(|x| 0.1 * x).unwrap();
            let direct = ch_energy(&axpy(&u, &s, 1.0), &m) - ch_energy(&u, &m);
            let inc = energy_increment(&u, &s, &m);
            if (direct - inc).abs() > 1e-12 * ch_energy(&u, &m) {
                return fail(format!("difference {direct} vs increment {inc}"), &u);
            }
            Ok(())
        }),
        check(S, "energy_invariant_under_symmetries", 50, 13, |rng| {
            let u = random_field(rng);
            let e = ch_energy(&u, &m);
            let n = u.grid().n() as i64;
            let offsets: Vec<i64> = (0..u.grid().dim()).map(|_| rng.gen_range(-n..n)).collect();
            let eta = rng.gen_range(-n..2 * n);
            let axis = rng.gen_range(0..u.grid().dim());
            let (es, er) = (ch_energy(&shift(&u, &offsets), &m), ch_energy(&reflect(&u, axis, eta), &m));
            if es != e || er != e {
                return fail(format!("E = {e}, shifted {es}, reflected {er}"), &u);
            }
            Ok(())
        }),
        check(S, "reflection_keeps_multipliers", 6, 14, |rng| {
            let grid = Grid::new(2, 32, m.params.ell).unwrap();
            let c = [rng.gen_range(8.0..24.0), rng.gen_range(8.0..24.0)];
            let u = axpy(&lift(droplet_profile(grid, &m, &c), &ScalarField::constant(grid, 0.0))?, &band_limited(grid, 2, rng), 0.02);
            let eta = rng.gen_range(0..64);
            let a = lift(fit_multipliers(&u, &m), &u)?;
            let b = lift(fit_multipliers(&reflect(&u, 1, eta), &m), &u)?;
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
            if rel(a.lambda_phi, b.lambda_phi) > 1e-10 || rel(a.lambda_omega, b.lambda_omega) > 1e-10 {
                return fail(format!("{a:?} vs reflected {b:?} at eta index {eta}"), &u);
            }
            Ok(())
        }),
    ]
}

pub fn polarization_suite(polarize: PolarizeFn<'_>) -> Vec<CheckOutcome> {
    const S: &str = "polarization";
    let draw = |rng: &mut ChaCha8Rng| {
        let u = random_field(rng);
        let axis = rng.gen_range(0..u.grid().dim());
        let eta = rng.gen_range(-40..40);
        (u, axis, eta)
    };
    vec![
        check(S, "preserves_fibers", 100, 21, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            if sorted_fibers(&u, axis) != sorted_fibers(&t, axis) {
                return fail(format!("fiber multisets differ (axis {axis}, eta index {eta})"), &u);
            }
            Ok(())
        }),
        check(S, "idempotent", 100, 22, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            if lift(polarize(&t, axis, eta), &u)? != t {
                return fail(format!("second application changed the field (axis {axis}, eta index {eta})"), &u);
            }
            Ok(())
        }),
        check(S, "dominates_reflection", 100, 23, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            if !lift(dominates_reflection(&t, axis, eta), &u)? {
                return fail(format!("T u < (T u)^eta somewhere on the upper half (axis {axis}, eta index {eta})"), &u);
            }
            Ok(())
        }),
        check(S, "edge_inequality", 100, 24, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            let gain = lift(edge_gain(&u, &t, axis, eta), &u)?;
            if gain < 0.0 {
                return fail(format!("edge pair energy rose by {:e} (axis {axis}, eta index {eta})", -gain), &u);
            }
            Ok(())
        }),
        check(S, "column_potential_preserved", 100, 25, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            let g = u.grid();
            let line = Grid::new(1, g.n(), g.half_period()).unwrap();
            for b in g.fiber_bases(axis) {
                let p = |f: Vec<f64>| potential_energy(&ScalarField::new(line, f).unwrap(), &QuarticDoubleWell);
                if p(fiber(&u, axis, b)) != p(fiber(&t, axis, b)) {
                    return fail(format!("potential integral of the fiber at {b} changed (axis {axis}, eta index {eta})"), &u);
                }
            }
            Ok(())
        }),
        check(S, "shifted_center_reflects", 100, 26, |rng| {
            let (u, axis, eta) = draw(rng);
            let t = lift(polarize(&u, axis, eta), &u)?;
            let n = u.grid().n() as i64;
            if lift(polarize(&t, axis, eta + n), &u)? != reflect(&t, axis, eta) {
                return fail(format!("T at eta + l differs from the reflection of a fixed point (axis {axis}, eta index {eta})"), &u);
            }
            Ok(())
        }),
    ]
}

fn disk(n: usize, ell: f64, r: f64, c: [f64; 2]) -> ScalarField {
    let grid = Grid::new(2, n, ell).unwrap();
    let w = 3.0 * grid.spacing();
    // Periodic distance, so disks may straddle the seam.
    let wrap = |d: f64| d - 2.0 * ell * (d / (2.0 * ell)).round();
    sample(grid, |x| ((r - wrap(x[0] - c[0]).hypot(wrap(x[1] - c[1]))) / w).tanh()).unwrap()
}

pub fn geometry_suite() -> Vec<CheckOutcome> {
    const S: &str = "geometry";
    vec![
        check(S, "disk_radii_and_perimeter", 10, 31, |rng| {
            let r = rng.gen_range(0.3..0.9);
            let u = disk(128, 1.5, r, [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]);
            let g = lift(level_set_geometry(&u, 0.0), &u)?;
            let tol = g.tol_geom();
            let per = 2.0 * PI * r;
            if !g.contained_in_disk || (g.rho_in - r).abs() > tol || (g.rho_out - r).abs() > tol || (g.perimeter - per).abs() > tol {
                return fail(format!("r = {r}: {g:?}"), &u);
            }
            let b = lift(bonnesen_check(&g), &u)?;
            if !b.holds {
                return fail(format!("Bonnesen slack {} below -{}", b.slack, b.tolerance), &u);
            }
            Ok(())
        }),
        check(S, "rectangle_bonnesen", 1, 32, |_| {
            let grid = Grid::new(2, 128, 2.0).unwrap();
            let u = sample(grid, |x| (1.0 - x[0].abs()).min(0.5 - x[1].abs())).unwrap();
            let g = lift(level_set_geometry(&u, 0.0), &u)?;
            let b = lift(bonnesen_check(&g), &u)?;
            // Closed form for the 2 × 1 rectangle: 6 − √π (8 + (√5/2 − 1/2)²)^{1/2}.
            let exact = 6.0 - PI.sqrt() * (8.0 + (5f64.sqrt() / 2.0 - 0.5).powi(2)).sqrt();
            if (b.slack - exact).abs() > b.tolerance {
                return fail(format!("slack {} vs closed form {exact}", b.slack), &u);
            }
            Ok(())
        }),
        check(S, "band_not_contained", 1, 33, |_| {
            let grid = Grid::new(2, 64, 1.0).unwrap();
            let u = sample(grid, |x| 0.3 - x[0].abs()).unwrap();
            let g = lift(level_set_geometry(&u, 0.0), &u)?;
            if g.contained_in_disk || (g.perimeter - 4.0).abs() > 1e-9 {
                return fail(format!("{g:?}"), &u);
            }
            Ok(())
        }),
        check(S, "invariant_under_shifts", 10, 34, |rng| {
            let u = disk(64, 1.0, rng.gen_range(0.2..0.6), [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let s = shift(&u, &[rng.gen_range(-64..64), rng.gen_range(-64..64)]);
            let (a, b) = (lift(level_set_geometry(&u, 0.1), &u)?, lift(level_set_geometry(&s, 0.1), &u)?);
            let h = u.grid().spacing();
            if (a.perimeter - b.perimeter).abs() > 1e-10
                || (a.area - b.area).abs() > 1e-10
                || (a.rho_out - b.rho_out).abs() > 1e-10
                || (a.rho_in - b.rho_in).abs() > 1e-3 * h
            {
                return fail(format!("{a:?} vs shifted {b:?}"), &u);
            }
            Ok(())
        }),
    ]
}

/// Runs `suite`, with `polarize` standing in for the two-point rearrangement.
pub fn run(suite: Suite, polarize: PolarizeFn<'_>) -> VerifyReport {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Rearrange | Suite::All) {
        checks.extend(rearrange_suite());
    }
    if matches!(suite, Suite::Energy | Suite::All) {
        checks.extend(energy_suite());
    }
    if matches!(suite, Suite::Polarization | Suite::All) {
        checks.extend(polarization_suite(polarize));
    }
    if matches!(suite, Suite::Geometry | Suite::All) {
        checks.extend(geometry_suite());
    }
    VerifyReport { checks }
}

/// Polarization with `max` and `min` exchanged, i.e. a sign error in the
/// comparison. Used to check that the suite notices.
pub fn faulty_polarize(u: &ScalarField, axis: usize, eta: i64) -> symtorus_core::Result<ScalarField> {
    let neg = u.map(|v| -v)?;
    symtorus_core::rearrange::polarize(&neg, axis, eta)?.map(|v| -v)
}
