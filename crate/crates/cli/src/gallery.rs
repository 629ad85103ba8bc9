//! Fields on which rearrangement leaves the energy unchanged without the
//! field being a translate of its rearrangement, plus the order dependence
//! of iterated set symmetrization.
//!
//! Every construction is pinned to grid-aligned offsets, so the equalities
//! below are exact in floating point rather than tolerance statements.

use std::f64::consts::PI;

use serde::Serialize;
use symtorus_core::energy::{ch_energy, dirichlet_energy, Model, ModelParams};
use symtorus_core::field::{distance_l2, sample, shift, shift_align};
use symtorus_core::rearrange::{default_critical_threshold, distribution, set_steiner, steiner_axis};
use symtorus_core::{BinaryMask, Grid, ScalarField};

use crate::config::XI_MID;
use crate::error::CliError;

pub const NAMES: [&str; 3] = ["two_bumps", "layer_cake", "triangle"];

/// One checked statement about a construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn claim(name: &str, passed: bool, detail: String) -> Claim {
    Claim { name: name.into(), passed, detail }
}

#[derive(Debug, Clone)]
pub struct GalleryItem {
    pub name: &'static str,
    /// Named fields to write next to the report.
    pub fields: Vec<(&'static str, ScalarField)>,
    pub report: serde_json::Value,
    pub claims: Vec<Claim>,
}

impl GalleryItem {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|c| c.passed)
    }
}

pub fn build(name: &str) -> Result<GalleryItem, CliError> {
    match name {
        "two_bumps" => two_bumps(),
        "layer_cake" => layer_cake(),
        "triangle" => triangle(),
        _ => Err(CliError::Config(format!("unknown gallery item {name:?}; expected one of {NAMES:?}"))),
    }
}

/// `cos²` bump of half-width `w`, C¹ with compact support.
fn bump(r: f64, w: f64) -> f64 {
    if r.abs() < w {
        (0.5 * PI * r / w).cos().powi(2)
    } else {
        0.0
    }
}

/// Only `φ` enters the energy of a field; the area is irrelevant here.
fn energy_model() -> Model {
    Model::new(ModelParams::from_phi_xi(2, 0.3, XI_MID, 1.0).expect("default parameters are valid"))
}

pub const TWO_BUMPS_N: usize = 64;
pub const TWO_BUMPS_ELL: f64 = 2.0;
/// Vertical offsets of the two bumps, in samples.
pub const TWO_BUMPS_OFFSETS: [i64; 2] = [8, -12];

fn two_bump_field(grid: Grid, offsets: [i64; 2]) -> Result<ScalarField, CliError> {
    let h = grid.spacing();
    let (wx, wy) = (0.8, 0.6);
    // Centers at x = ∓ℓ/2 so the supports |x ± ℓ/2| < 0.8 are disjoint.
    let xs = [-0.5 * grid.half_period(), 0.5 * grid.half_period()];
    let ys = offsets.map(|o| o as f64 * h);
    Ok(sample(grid, |x| {
        let mut v = -1.0;
        for k in 0..2 {
            v += 2.0 * bump(x[0] - xs[k], wx) * bump(x[1] - ys[k], wy);
        }
        v
    })?)
}

/// Two equal bumps, each symmetric in `y` about its own height, with
/// disjoint `x`-supports and different heights. Steiner symmetrization in
/// `y` moves each bump rigidly, so the energy is unchanged, yet no
/// translation of the field matches its symmetrization.
pub fn two_bumps() -> Result<GalleryItem, CliError> {
    let grid = Grid::new(2, TWO_BUMPS_N, TWO_BUMPS_ELL)?;
    let u = two_bump_field(grid, TWO_BUMPS_OFFSETS)?;
    let s = steiner_axis(&u, 1)?;
    let centered = two_bump_field(grid, [0, 0])?;
    let model = energy_model();
    let (e, es) = (ch_energy(&u, &model), ch_energy(&s, &model));
    let (d, ds) = (dirichlet_energy(&u), dirichlet_energy(&s));
    let align = shift_align(&u, &s)?;
    // Constructed gap: best vertical shift with the bumps kept in place.
    let n = grid.n() as i64;
    let delta = (0..n).map(|t| distance_l2(&shift(&u, &[0, t]), &s)).fold(f64::INFINITY, f64::min);
    let claims = vec![
        claim("symmetrization_moves_bumps_rigidly", s == centered, "u^s equals the field with both bumps at y = 0".into()),
        claim("energy_equal", (e - es).abs() <= 1e-12 * e.abs(), format!("E(u) = {e:e}, E(u^s) = {es:e}")),
        claim("dirichlet_equal", d == ds, format!("D(u) = {d:e}, D(u^s) = {ds:e}")),
        claim(
            "aligned_distance_at_least_delta",
            delta > 0.0 && align.distance >= delta * (1.0 - 1e-12),
            format!("aligned distance {:e}, constructed delta {delta:e}, shift {:?}", align.distance, align.offsets()),
        ),
    ];
    let report = serde_json::json!({
        "grid": { "n": grid.n(), "half_period": grid.half_period() },
        "offsets": TWO_BUMPS_OFFSETS,
        "energy": e,
        "energy_symmetrized": es,
        "dirichlet": d,
        "dirichlet_symmetrized": ds,
        "aligned_distance": align.distance,
        "aligned_shift": align.offsets(),
        "delta": delta,
    });
    Ok(GalleryItem { name: "two_bumps", fields: vec![("field", u), ("symmetrized", s)], report, claims })
}

pub const LAYER_CAKE_N: usize = 64;
pub const LAYER_CAKE_ELL: f64 = 2.0;

/// A flat-topped layer carrying a narrower flat-topped layer that sits off
/// center. Every column is a multiple of the same profile, so sliding the top
/// layer to the center (which is what symmetrization does) keeps the energy,
/// while the plateaus carry singular distribution mass.
pub fn layer_cake() -> Result<GalleryItem, CliError> {
    let grid = Grid::new(2, LAYER_CAKE_N, LAYER_CAKE_ELL)?;
    let h = grid.spacing();
    // Cake |y| < 20h, top layer 6h ≤ y < 16h, all in whole cells.
    let profile = |y: f64| {
        let j = (y / h).round() as i64;
        let cake = f64::from(u8::from(j.abs() < 20));
        let top = f64::from(u8::from((6..16).contains(&j)));
        cake + top
    };
    let u = sample(grid, |x| -1.0 + bump(x[0], 1.2) * profile(x[1]))?;
    let s = steiner_axis(&u, 1)?;
    let model = energy_model();
    let (e, es) = (ch_energy(&u, &model), ch_energy(&s, &model));
    let align = shift_align(&u, &s)?;
    let mid = [grid.origin_index()];
    let level = -0.5;
    let eps = default_critical_threshold(&u);
    let dist = distribution(&u, &mid, &[level], eps)?;
    let mu_sing = dist[0].mu_sing;
    let claims = vec![
        claim("energy_equal", (e - es).abs() <= 1e-12 * e.abs(), format!("E(u) = {e:e}, E(u^s) = {es:e}")),
        claim("not_a_translate", align.distance > 0.0, format!("aligned distance {:e}", align.distance)),
        claim("singular_mass_detected", mu_sing > 0.0, format!("mu_sing = {mu_sing:e} at column {mid:?}, t = {level}")),
    ];
    let report = serde_json::json!({
        "grid": { "n": grid.n(), "half_period": grid.half_period() },
        "energy": e,
        "energy_symmetrized": es,
        "aligned_distance": align.distance,
        "column": mid,
        "level": level,
        "mu": dist[0].mu,
        "mu_reg": dist[0].mu_reg,
        "mu_sing": mu_sing,
    });
    Ok(GalleryItem { name: "layer_cake", fields: vec![("field", u), ("symmetrized", s)], report, claims })
}

pub const TRIANGLE_N: usize = 256;
pub const TRIANGLE_ELL: f64 = 2.0;
/// `1 + √5 + √8`.
const TRIANGLE_PERIMETER: f64 = 1.0 + 2.23606797749979 + 2.8284271247461903;

/// Cells whose centers lie in the closed triangle `(−1, 0), (0, 0), (1, 2)`.
pub fn triangle_mask(grid: &Grid) -> BinaryMask {
    let inside = |x: f64, y: f64| {
        let e = |ax: f64, ay: f64, bx: f64, by: f64| (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        let (a, b, c) = (e(-1.0, 0.0, 0.0, 0.0), e(0.0, 0.0, 1.0, 2.0), e(1.0, 2.0, -1.0, 0.0));
        (a >= 0.0 && b >= 0.0 && c >= 0.0) || (a <= 0.0 && b <= 0.0 && c <= 0.0)
    };
    let n = grid.n();
    let cells = (0..grid.len()).map(|k| inside(grid.coordinate(k / n), grid.coordinate(k % n))).collect();
    BinaryMask::new(grid, cells).expect("mask has one cell per grid point")
}

/// Symmetrizing in `x` then `y` and in `y` then `x` gives different sets.
pub fn triangle() -> Result<GalleryItem, CliError> {
    let grid = Grid::new(2, TRIANGLE_N, TRIANGLE_ELL)?;
    let tri = triangle_mask(&grid);
    let x_then_y = set_steiner(&set_steiner(&tri, 0)?, 1)?;
    let y_then_x = set_steiner(&set_steiner(&tri, 1)?, 0)?;
    let counts = [tri.count(), x_then_y.count(), y_then_x.count()];
    let diff = x_then_y.symmetric_difference(&y_then_x);
    let area = counts[0] as f64 * grid.cell_volume();
    let claims = vec![
        claim("counts_equal", counts[0] == counts[1] && counts[1] == counts[2], format!("cell counts {counts:?}")),
        claim("orders_differ", diff > 0, format!("{diff} cells in the symmetric difference")),
        // Cells on the boundary count in full: the error is at most one cell
        // layer along the perimeter.
        claim(
            "area_within_boundary_layer",
            (area - 1.0).abs() <= TRIANGLE_PERIMETER * grid.spacing(),
            format!("rasterized area {area:e}, exact 1, allowance {:e}", TRIANGLE_PERIMETER * grid.spacing()),
        ),
    ];
    let report = serde_json::json!({
        "grid": { "n": grid.n(), "half_period": grid.half_period() },
        "cell_counts": counts,
        "area": area,
        "symmetric_difference": diff,
    });
    Ok(GalleryItem {
        name: "triangle",
        fields: vec![("mask", tri.indicator(grid)), ("x_then_y", x_then_y.indicator(grid)), ("y_then_x", y_then_x.indicator(grid))],
        report,
        claims,
    })
}
