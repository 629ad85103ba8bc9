//! Seeded initial states for the minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symtorus_core::energy::Model;
use symtorus_core::minimize::{droplet_profile, project_constraints};
use symtorus_core::{Grid, ScalarField};

use crate::error::CliError;

/// Highest wave number of the perturbation along each axis.
pub const K_MAX: usize = 4;

/// Droplet center index per axis: the middle of the grid plus a seeded
/// offset of at most `n/8` samples.
pub fn droplet_center(grid: &Grid, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n() as i64;
    (0..grid.dim()).map(|_| (n / 2 + rng.gen_range(-n / 8..=n / 8)).rem_euclid(n) as usize).collect()
}

/// Band-limited noise `Σ a_k Π cos(k_a π (x_a − c_a)/ℓ)` over `k_a ≤ K_MAX`,
/// scaled so its largest magnitude is `amplitude`. Each term is even about
/// the grid point `center` along every axis, which keeps the perturbed
/// droplet from drifting by a fraction of a cell while still breaking the
/// monotonicity of the profile.
pub fn symmetric_noise(grid: &Grid, center: &[usize], amplitude: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_d0_17);
    let d = grid.dim();
    let n = grid.n();
    let modes = (K_MAX + 1).pow(d as u32);
    let coef: Vec<f64> = (0..modes).map(|m| if m == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    // cos(k π j / (n/2)) by integer offset j from the center, so that the
    // values at ±j are the same float.
    let table: Vec<Vec<f64>> = (0..=K_MAX)
        .map(|k| (0..=n / 2).map(|j| (k as f64 * std::f64::consts::PI * 2.0 * j as f64 / n as f64).cos()).collect())
        .collect();
    let mut values = vec![0.0; grid.len()];
    for (flat, slot) in values.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        let offs: Vec<usize> = (0..d)
            .map(|a| {
                let j = (idx[a] + n - center[a]) % n;
                // Fold onto 0..=n/2 so that j and n − j share a table entry.
                j.min(n - j)
            })
            .collect();
        let mut acc = 0.0;
        for (m, &c) in coef.iter().enumerate().skip(1) {
            let mut term = c;
            let mut rest = m;
            for &o in &offs {
                term *= table[rest % (K_MAX + 1)][o];
                rest /= K_MAX + 1;
            }
            acc += term;
        }
        *slot = acc;
    }
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    ScalarField::new(*grid, values.into_iter().map(|v| v * scale).collect()).expect("finite noise")
}

/// Perturbed droplet about the seeded center, projected onto the constraints.
pub fn initial_state(grid: Grid, model: &Model, perturbation: f64, seed: u64) -> Result<ScalarField, CliError> {
    let center = droplet_center(&grid, seed);
    let c: Vec<f64> = center.iter().map(|&i| i as f64).collect();
    let droplet = droplet_profile(grid, model, &c)?;
    let noise = symmetric_noise(&grid, &center, perturbation, seed);
    let sum: Vec<f64> = droplet.values().iter().zip(noise.values()).map(|(a, b)| a + b).collect();
    Ok(project_constraints(&ScalarField::new(grid, sum)?, model)?)
}
