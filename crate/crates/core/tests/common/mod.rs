#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symtorus_core::{Grid, ScalarField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// White noise in `[-1, 1)`.
pub fn noise(grid: Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::new(grid, values).unwrap()
}

/// Sum of random Fourier modes with wavenumbers up to `k_max` per axis.
pub fn band_limited(grid: Grid, k_max: i32, rng: &mut ChaCha8Rng) -> ScalarField {
    let ell = grid.half_period();
    let mut modes = Vec::new();
    for kx in -k_max..=k_max {
        for ky in 0..=k_max {
            let k = if grid.dim() == 1 { [ky as f64, 0.0] } else { [kx as f64, ky as f64] };
            modes.push((k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU)));
        }
        if grid.dim() == 1 {
            break;
        }
    }
    symtorus_core::field::sample(grid, |x| {
        modes
            .iter()
            .map(|(k, a, p)| {
                let arg = std::f64::consts::PI / ell * (k[0] * x[0] + if x.len() > 1 { k[1] * x[1] } else { 0.0 });
                a * (arg + p).cos()
            })
            .sum::<f64>()
    })
    .unwrap()
}

pub fn sorted(u: &ScalarField) -> Vec<f64> {
    let mut v = u.values().to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn sorted_column(u: &ScalarField, column: &[usize]) -> Vec<f64> {
    let mut v = u.column(column);
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
