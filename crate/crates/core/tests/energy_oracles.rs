mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use symtorus_core::energy::*;
use symtorus_core::field::{self, reflect, sample, shift};
use symtorus_core::minimize::*;
use symtorus_core::{Grid, ScalarField};

const XI: f64 = 1.606260828191923;

fn model(phi: f64) -> Model {
    Model::new(ModelParams::from_phi_xi(2, phi, XI, XI.powi(3) / 4.0).unwrap())
}

fn add(u: &ScalarField, v: &ScalarField, s: f64) -> ScalarField {
    ScalarField::new(*u.grid(), u.values().iter().zip(v.values()).map(|(a, b)| a + s * b).collect()).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let m = model(0.3);
    let grid = Grid::new(2, 64, m.params.ell).unwrap();
    let mut r = rng(21);
    for _ in 0..20 {
        let u = band_limited(grid, 5, &mut r);
        let v = band_limited(grid, 5, &mut r);
        let g = energy_gradient(&u, &m);
        let eps = 1e-5;
        let fd = (energy_increment(&u, &scale(&v, eps), &m) - energy_increment(&u, &scale(&v, -eps), &m)) / (2.0 * eps);
        let directional = grid.cell_volume() * g.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>();
        assert!((fd - directional).abs() <= 1e-6 * fd.abs().max(directional.abs()), "{fd} vs {directional}");
    }
}

fn scale(v: &ScalarField, s: f64) -> ScalarField {
    v.map(|x| s * x).unwrap()
}

#[test]
fn increment_agrees_with_energy_difference() {
    let m = model(0.3);
    let grid = Grid::new(2, 32, m.params.ell).unwrap();
    let mut r = rng(8);
    for _ in 0..10 {
        let u = band_limited(grid, 3, &mut r);
        let s = scale(&band_limited(grid, 3, &mut r), 0.1);
        let direct = ch_energy(&add(&u, &s, 1.0), &m) - ch_energy(&u, &m);
        let inc = energy_increment(&u, &s, &m);
        assert!((direct - inc).abs() <= 1e-12 * ch_energy(&u, &m), "{direct} {inc}");
    }
}

/// `G + φ(α s + β ζ(s))` shifts the fitted multipliers by exactly `(−α, −β)`.
struct Planted {
    alpha: f64,
    beta: f64,
    phi: f64,
    cutoff: Cutoff,
}

impl Potential for Planted {
    fn value(&self, s: f64) -> f64 {
        QuarticDoubleWell.value(s) + self.phi * (self.alpha * s + self.beta * self.cutoff.zeta(s))
    }
    fn derivative(&self, s: f64) -> f64 {
        QuarticDoubleWell.derivative(s) + self.phi * (self.alpha + self.beta * self.cutoff.dzeta(s))
    }
    fn second_derivative(&self, s: f64) -> f64 {
        QuarticDoubleWell.second_derivative(s) + self.phi * self.beta * self.cutoff.d2zeta(s)
    }
}

#[test]
fn planted_multipliers_are_recovered() {
    let base = model(0.3);
    let grid = Grid::new(2, 64, base.params.ell).unwrap();
    let u = droplet_profile(grid, &base, &[30.0, 35.0]).unwrap();
    let m0 = fit_multipliers(&u, &base).unwrap();
    let mut r = rng(2);
    for _ in 0..10 {
        let (alpha, beta) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let p = Planted { alpha, beta, phi: base.phi(), cutoff: base.cutoff };
        let planted = Model::with_potential(base.params, p);
        let m1 = fit_multipliers(&u, &planted).unwrap();
        assert!((m1.lambda_phi - (m0.lambda_phi - alpha)).abs() < 1e-9, "{m0:?} {m1:?} {alpha}");
        assert!((m1.lambda_omega - (m0.lambda_omega - beta)).abs() < 1e-9, "{m0:?} {m1:?} {beta}");
    }
}

#[test]
fn constant_state_has_degenerate_multipliers() {
    let m = model(0.3);
    let grid = Grid::new(2, 16, m.params.ell).unwrap();
    let u = ScalarField::constant(grid, m.params.mean_target());
    assert!(fit_multipliers(&u, &m).is_err());
    let (mult, degenerate) = fit_multipliers_or_mean(&u, &m);
    assert!(degenerate);
    assert_eq!(mult.lambda_omega, 0.0);
    // The fallback zeroes the mean of the residual.
    let (res, _) = el_residual(&u, &m, &mult);
    assert!(field::mean(&res).abs() < 1e-12);
}

#[test]
fn contradictory_parameters_are_rejected() {
    let p = ModelParams::from_phi_xi(2, 0.3, XI, 1.0).unwrap();
    let err = ModelParams::new(2, 0.3, 1.0, p.big_l, XI, p.ell * 1.1).unwrap_err().to_string();
    assert!(err.contains("ℓ") || err.contains("ell"), "{err}");
    assert!(ModelParams::from_phi_xi(2, 1.2, XI, 1.0).is_err());
    assert!(ModelParams::from_phi_xi(2, 0.3, XI, 1e9).is_err());
    assert!(ModelParams::from_phi_xi(2, 0.3, XI, 0.0).is_err());
}

#[test]
fn projection_lands_on_the_constraint_set() {
    let m = model(0.3);
    let grid = Grid::new(2, 64, m.params.ell).unwrap();
    let mut r = rng(4);
    for _ in 0..5 {
        let u = droplet_profile(grid, &m, &[32.0, 32.0]).unwrap();
        let u = add(&u, &band_limited(grid, 3, &mut r), 0.05);
        let p = project_constraints_detailed(&u, &m).unwrap();
        assert!(p.state.is_feasible(), "{:?}", p.state);
        assert!((field::mean(&p.field) - m.params.mean_target()).abs() < 1e-10);
        assert!((volume(&p.field, &m.cutoff) - m.params.omega).abs() < 1e-8);
    }
}

#[test]
fn short_descent_is_monotone_and_feasible() {
    let m = model(0.3);
    let grid = Grid::new(2, 32, m.params.ell).unwrap();
    let u0 = init_droplet(grid, &m, &[17.0, 15.0]).unwrap();
    let u0 = add(&u0, &band_limited(grid, 2, &mut rng(1)), 0.02);
    let pre = ChebyshevPreconditioner::new(&grid, m.phi());
    let opts = DescentOptions { max_iter: 30, ..DescentOptions::default() };
    let (u, rep) = constrained_descent(&u0, &m, &pre, &opts, |_| {}).unwrap();
    assert!(rep.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(rep.constraints.is_feasible());
    assert!(ConstraintState::of(&u, &m).is_feasible());
    assert!(rep.final_projected_gradient < rep.initial_projected_gradient);
    assert!((rep.final_energy - rep.energy_trace.last().unwrap()).abs() < 1e-10);
}

#[test]
fn chebyshev_preconditioner_approximates_the_inverse() {
    let phi = 0.3;
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let pre = ChebyshevPreconditioner::new(&grid, phi);
    let v = band_limited(grid, 6, &mut rng(9));
    let x = pre.apply(&v);
    // Apply (α − φΔ) to the result and compare with v.
    let alpha = 2.0 / phi;
    let lap = laplacian(&x);
    let back: Vec<f64> = x.values().iter().zip(lap.values()).map(|(a, l)| alpha * a - phi * l).collect();
    let err = back.iter().zip(v.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = v.values().iter().map(|a| a * a).sum::<f64>().sqrt();
    // Degree 1.15√κ bounds the residual by about 2e^{−2.3}.
    assert!(err <= 0.25 * norm, "{err} / {norm}");
    // Symmetric positive definite, which is what the descent relies on.
    let w = band_limited(grid, 6, &mut rng(10));
    let pw = pre.apply(&w);
    let (a, b) = (field::inner(&w, &x), field::inner(&pw, &v));
    assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    assert!(field::inner(&v, &x) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_invariant_under_grid_symmetries(seed in any::<u64>(), sx in -20i64..20, sy in -20i64..20, eta in -20i64..20) {
        let m = model(0.3);
        let grid = Grid::new(2, 16, m.params.ell).unwrap();
        let u = noise(grid, &mut rng(seed));
        let e = ch_energy(&u, &m);
        prop_assert_eq!(ch_energy(&shift(&u, &[sx, sy]), &m), e);
        prop_assert_eq!(ch_energy(&reflect(&u, 0, eta), &m), e);
        prop_assert_eq!(ch_energy(&reflect(&u, 1, eta), &m), e);
    }

    #[test]
    fn reflected_fields_share_multipliers(seed in any::<u64>(), eta in -20i64..20) {
        let m = model(0.3);
        let grid = Grid::new(2, 32, m.params.ell).unwrap();
        let mut r = rng(seed);
        let c = [r.gen_range(8.0..24.0), r.gen_range(8.0..24.0)];
        let u = droplet_profile(grid, &m, &c).unwrap();
        let u = add(&u, &band_limited(grid, 2, &mut r), 0.02);
        let a = fit_multipliers(&u, &m).unwrap();
        let b = fit_multipliers(&reflect(&u, 1, eta), &m).unwrap();
        prop_assert!((a.lambda_phi - b.lambda_phi).abs() <= 1e-12 * a.lambda_phi.abs().max(1.0));
        prop_assert!((a.lambda_omega - b.lambda_omega).abs() <= 1e-12 * a.lambda_omega.abs().max(1.0));
    }
}

#[test]
fn laplacian_of_a_mode_is_its_symbol() {
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let h = grid.spacing();
    let k = std::f64::consts::PI * 3.0;
    let u = sample(grid, |x| (k * x[0]).cos()).unwrap();
    let lap = laplacian(&u);
    let symbol = -(2.0 - 2.0 * (k * h).cos()) / (h * h);
    for (l, v) in lap.values().iter().zip(u.values()) {
        assert!((l - symbol * v).abs() < 1e-9);
    }
}
