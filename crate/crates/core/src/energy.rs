//! Cahn-Hilliard energy with mean and volume constraints.
//!
//! ```text
//! E_φ(u) = ∫ φ/2 |∇u|² + G(u)/φ,    mean(u) = −1 + φ,    ∫ ζ(u) = ω
//! ```
//!
//! Gradients use periodic forward differences and the Laplacian is the
//! `(2d+1)`-point stencil, so `energy_gradient` is the exact derivative of the
//! discrete energy with respect to the cell values (divided by `h^d`).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{self, ScalarField};
use crate::math::{self, ExactSum};

/// Double-well energy density with wells at ±1.
pub trait Potential {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;
    fn second_derivative(&self, s: f64) -> f64;

    /// `G(s + d) − G(s)`, ideally without cancellation for small `d`.
    fn increment(&self, s: f64, d: f64) -> f64 {
        self.value(s + d) - self.value(s)
    }
}

/// `G(s) = (1 − s²)²/4`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuarticDoubleWell;

impl Potential for QuarticDoubleWell {
    fn value(&self, s: f64) -> f64 {
        let a = 1.0 - s * s;
        0.25 * a * a
    }

    fn derivative(&self, s: f64) -> f64 {
        s * s * s - s
    }

    fn second_derivative(&self, s: f64) -> f64 {
        3.0 * s * s - 1.0
    }

    fn increment(&self, s: f64, d: f64) -> f64 {
        let s2 = s * s;
        d * ((s2 * s - s) + d * (0.5 * (3.0 * s2 - 1.0) + d * (s + 0.25 * d)))
    }
}

/// Smooth volume switch `ζ`: 0 below `1 − 2φ^{1/3}`, 1 above `1 − φ^{1/3}`,
/// the quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    lower: f64,
    upper: f64,
    width: f64,
}

impl Cutoff {
    pub fn new(phi: f64) -> Self {
        let c = math::cbrt(phi);
        Self { lower: 1.0 - 2.0 * c, upper: 1.0 - c, width: c }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    fn unit(&self, s: f64) -> Option<f64> {
        if s <= self.lower || s >= self.upper {
            None
        } else {
            Some((s - self.lower) / self.width)
        }
    }

    pub fn zeta(&self, s: f64) -> f64 {
        match self.unit(s) {
            Some(x) => x * x * x * (10.0 + x * (-15.0 + 6.0 * x)),
            None if s >= self.upper => 1.0,
            None => 0.0,
        }
    }

    pub fn dzeta(&self, s: f64) -> f64 {
        match self.unit(s) {
            Some(x) => {
                let y = x * (1.0 - x);
                30.0 * y * y / self.width
            }
            None => 0.0,
        }
    }

    /// `ζ(s + ds) − ζ(s)`, accurate relative to the increment rather than to
    /// `ζ` itself.
    pub fn zeta_increment(&self, s: f64, ds: f64) -> f64 {
        let t = (s - self.lower) / self.width;
        let sigma = ds / self.width;
        let t0 = t.clamp(0.0, 1.0);
        let t1 = (t + sigma).clamp(0.0, 1.0);
        let sigma = if t0 == t && t1 == t + sigma { sigma } else { t1 - t0 };
        if sigma == 0.0 {
            return 0.0;
        }
        let t = t0;
        let c1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let c2 = t * (30.0 + t * (-90.0 + 60.0 * t));
        let c3 = 10.0 + t * (-60.0 + 60.0 * t);
        let c4 = -15.0 + 30.0 * t;
        sigma * (c1 + sigma * (c2 + sigma * (c3 + sigma * (c4 + 6.0 * sigma))))
    }

    pub fn d2zeta(&self, s: f64) -> f64 {
        match self.unit(s) {
            Some(x) => 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (self.width * self.width),
            None => 0.0,
        }
    }
}

/// Physical parameters tied together by `ℓ = φL/2` and `φ = ξ L^{−d/(d+1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub phi: f64,
    pub omega: f64,
    pub big_l: f64,
    pub xi: f64,
    pub ell: f64,
}

const RELATION_TOL: f64 = 1e-12;

impl ModelParams {
    /// Parameters from `φ` and `ξ`; `L` and `ℓ` are derived.
    pub fn from_phi_xi(dim: usize, phi: f64, xi: f64, omega: f64) -> Result<Self> {
        check_positive("phi", phi)?;
        check_positive("xi", xi)?;
        let d = dim as f64;
        let big_l = math::pow(xi / phi, (d + 1.0) / d);
        Self::new(dim, phi, omega, big_l, xi, 0.5 * phi * big_l)
    }

    /// Parameters from `φ` and `L`; `ξ` and `ℓ` are derived.
    pub fn from_phi_length(dim: usize, phi: f64, big_l: f64, omega: f64) -> Result<Self> {
        check_positive("phi", phi)?;
        check_positive("L", big_l)?;
        let d = dim as f64;
        let xi = phi * math::pow(big_l, d / (d + 1.0));
        Self::new(dim, phi, omega, big_l, xi, 0.5 * phi * big_l)
    }

    /// Validates a fully specified parameter set.
    pub fn new(dim: usize, phi: f64, omega: f64, big_l: f64, xi: f64, ell: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dimension {dim} is not 1, 2 or 3")));
        }
        for (name, v) in [("phi", phi), ("L", big_l), ("xi", xi), ("ell", ell)] {
            check_positive(name, v)?;
        }
        if !(phi < 1.0) {
            return Err(Error::InvalidParams(format!("phi = {phi} must be below 1 for the cutoff band to exist")));
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        if rel(ell, 0.5 * phi * big_l) > RELATION_TOL {
            return Err(Error::InvalidParams(format!(
                "ell = phi*L/2 violated: ell = {ell}, phi*L/2 = {}",
                0.5 * phi * big_l
            )));
        }
        let d = dim as f64;
        let predicted = xi * math::pow(big_l, -d / (d + 1.0));
        if rel(phi, predicted) > RELATION_TOL {
            return Err(Error::InvalidParams(format!(
                "phi = xi*L^(-d/(d+1)) violated: phi = {phi}, xi*L^(-d/(d+1)) = {predicted}"
            )));
        }
        let box_measure = math::pow(2.0 * ell, d);
        if !(omega.is_finite() && omega > 0.0 && omega < box_measure) {
            return Err(Error::InvalidParams(format!(
                "0 < omega < (2*ell)^d violated: omega = {omega}, (2*ell)^d = {box_measure}"
            )));
        }
        Ok(Self { dim, phi, omega, big_l, xi, ell })
    }

    /// Prescribed mean `−1 + φ`.
    pub fn mean_target(&self) -> f64 {
        -1.0 + self.phi
    }

    /// Volume radius `r_ω`: `√(ω/π)` in two dimensions, `ω/2` in one.
    pub fn r_omega(&self) -> f64 {
        match self.dim {
            1 => 0.5 * self.omega,
            2 => math::sqrt(self.omega / math::PI),
            _ => math::cbrt(3.0 * self.omega / (4.0 * math::PI)),
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} = {v} must be positive and finite")))
    }
}

/// Parameters together with the potential and the volume cutoff.
#[derive(Debug, Clone, Copy)]
pub struct Model<P = QuarticDoubleWell> {
    pub params: ModelParams,
    pub potential: P,
    pub cutoff: Cutoff,
}

impl Model<QuarticDoubleWell> {
    pub fn new(params: ModelParams) -> Self {
        Self::with_potential(params, QuarticDoubleWell)
    }
}

impl<P: Potential> Model<P> {
    pub fn with_potential(params: ModelParams, potential: P) -> Self {
        Self { params, potential, cutoff: Cutoff::new(params.phi) }
    }

    pub fn phi(&self) -> f64 {
        self.params.phi
    }
}

/// Lagrange multipliers of the mean (`λ_φ`) and volume (`λ_ω`) constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Multipliers {
    pub lambda_phi: f64,
    pub lambda_omega: f64,
}

/// `h^d Σ_cells Σ_axes (forward difference)²`.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let h = grid.spacing();
    let v = u.values();
    let mut acc = ExactSum::new();
    for axis in 0..grid.dim() {
        for i in 0..v.len() {
            let d = (v[grid.neighbor(i, axis, 1)] - v[i]) / h;
            acc.add(d * d);
        }
    }
    grid.cell_volume() * acc.total()
}

/// `h^d Σ G(u)`.
pub fn potential_energy<P: Potential>(u: &ScalarField, potential: &P) -> f64 {
    u.grid().cell_volume() * math::sum(u.values().iter().map(|&s| potential.value(s)))
}

/// `(φ/2)·dirichlet_energy + (1/φ)·h^d Σ G(u)`.
pub fn ch_energy<P: Potential>(u: &ScalarField, model: &Model<P>) -> f64 {
    let phi = model.phi();
    0.5 * phi * dirichlet_energy(u) + potential_energy(u, &model.potential) / phi
}

/// `ch_energy(u + s) − ch_energy(u)` evaluated without subtracting two
/// nearly equal energies.
pub fn energy_increment<P: Potential>(u: &ScalarField, s: &ScalarField, model: &Model<P>) -> f64 {
    let grid = u.grid();
    let h = grid.spacing();
    let phi = model.phi();
    let (uv, sv) = (u.values(), s.values());
    let mut grad = ExactSum::new();
    for axis in 0..grid.dim() {
        for i in 0..uv.len() {
            let j = grid.neighbor(i, axis, 1);
            let du = (uv[j] - uv[i]) / h;
            let ds = (sv[j] - sv[i]) / h;
            grad.add(ds * (2.0 * du + ds));
        }
    }
    let pot = math::sum(uv.iter().zip(sv).map(|(&a, &b)| model.potential.increment(a, b)));
    grid.cell_volume() * (0.5 * phi * grad.total() + pot / phi)
}

/// `h^d Σ ζ(u)`.
pub fn volume(u: &ScalarField, cutoff: &Cutoff) -> f64 {
    u.grid().cell_volume() * math::sum(u.values().iter().map(|&s| cutoff.zeta(s)))
}

/// True iff `ζ′(u)` vanishes on at least one cell.
pub fn support_check(u: &ScalarField, cutoff: &Cutoff) -> bool {
    u.values().iter().any(|&s| cutoff.dzeta(s) == 0.0)
}

/// Periodic `(2d+1)`-point Laplacian.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let grid = *u.grid();
    let h2 = grid.spacing() * grid.spacing();
    let v = u.values();
    let d = grid.dim() as f64;
    let out = (0..v.len())
        .map(|i| {
            let mut s = 0.0;
            for axis in 0..grid.dim() {
                s += v[grid.neighbor(i, axis, 1)] + v[grid.neighbor(i, axis, -1)];
            }
            (s - 2.0 * d * v[i]) / h2
        })
        .collect();
    ScalarField::from_raw(grid, out)
}

/// `−φ Δ_h u + G′(u)/φ`; the derivative of `ch_energy` with respect to a
/// cell value is `h^d` times this.
pub fn energy_gradient<P: Potential>(u: &ScalarField, model: &Model<P>) -> ScalarField {
    let phi = model.phi();
    let lap = laplacian(u);
    let out = u
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&s, &l)| -phi * l + model.potential.derivative(s) / phi)
        .collect();
    ScalarField::from_raw(*u.grid(), out)
}

/// Unconstrained part of the Euler-Lagrange residual, `−Δ_h u + G′(u)/φ²`.
fn base_residual<P: Potential>(u: &ScalarField, model: &Model<P>) -> Vec<f64> {
    let phi2 = model.phi() * model.phi();
    let lap = laplacian(u);
    u.values()
        .iter()
        .zip(lap.values())
        .map(|(&s, &l)| -l + model.potential.derivative(s) / phi2)
        .collect()
}

/// `−Δ_h u + G′(u)/φ² + (λ_φ + λ_ω ζ′(u))/φ` and its L² norm.
pub fn el_residual<P: Potential>(u: &ScalarField, model: &Model<P>, m: &Multipliers) -> (ScalarField, f64) {
    let phi = model.phi();
    let r0 = base_residual(u, model);
    let out: Vec<f64> = r0
        .iter()
        .zip(u.values())
        .map(|(&r, &s)| r + (m.lambda_phi + m.lambda_omega * model.cutoff.dzeta(s)) / phi)
        .collect();
    let field = ScalarField::from_raw(*u.grid(), out);
    let norm = field::norm_l2(&field);
    (field, norm)
}

/// Relative spread below which `ζ′(u)` counts as numerically constant.
const DEGENERACY_TOL: f64 = 1e-12;

/// Least-squares multipliers minimizing the Euler-Lagrange residual.
///
/// Solved in the orthogonal basis `{1, ζ′(u) − mean ζ′(u)}`, so the normal
/// equations are diagonal.
pub fn fit_multipliers<P: Potential>(u: &ScalarField, model: &Model<P>) -> Result<Multipliers> {
    let phi = model.phi();
    let r0 = base_residual(u, model);
    let dz: Vec<f64> = u.values().iter().map(|&s| model.cutoff.dzeta(s)).collect();
    let n = dz.len() as f64;
    let m = math::sum(dz.iter().copied()) / n;
    let centered: Vec<f64> = dz.iter().map(|&z| z - m).collect();
    let cc = math::sum_squares(&centered);
    let zz = math::sum_squares(&dz);
    let spread = if zz > 0.0 { math::sqrt(cc / zz) } else { 0.0 };
    let r_mean = math::sum(r0.iter().copied()) / n;
    if spread <= DEGENERACY_TOL {
        return Err(Error::DegenerateMultipliers { spread });
    }
    let b = -phi * math::dot(&centered, &r0) / cc;
    let a = -phi * r_mean - b * m;
    Ok(Multipliers { lambda_phi: a, lambda_omega: b })
}

/// [`fit_multipliers`], falling back to `λ_ω = 0` when the fit is degenerate.
pub fn fit_multipliers_or_mean<P: Potential>(u: &ScalarField, model: &Model<P>) -> (Multipliers, bool) {
    match fit_multipliers(u, model) {
        Ok(m) => (m, false),
        Err(_) => {
            let r0 = base_residual(u, model);
            let r_mean = math::sum(r0.iter().copied()) / r0.len() as f64;
            (Multipliers { lambda_phi: -model.phi() * r_mean, lambda_omega: 0.0 }, true)
        }
    }
}

/// `‖−Δ_h w + f′(u) w‖₂` for `w` the centered difference of `u` along `axis`
/// and `f′ = G″/φ² + (λ_ω/φ) ζ″`.
pub fn linearized_residual<P: Potential>(u: &ScalarField, model: &Model<P>, m: &Multipliers, axis: usize) -> Result<f64> {
    u.grid().check_axis(axis)?;
    let phi = model.phi();
    let w = field::centered_partial(u, axis);
    let lap = laplacian(&w);
    let out = u
        .values()
        .iter()
        .zip(w.values())
        .zip(lap.values())
        .map(|((&s, &wi), &l)| {
            let fp = model.potential.second_derivative(s) / (phi * phi) + m.lambda_omega * model.cutoff.d2zeta(s) / phi;
            -l + fp * wi
        })
        .collect();
    Ok(field::norm_l2(&ScalarField::from_raw(*u.grid(), out)))
}
