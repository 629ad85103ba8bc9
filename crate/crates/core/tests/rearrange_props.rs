mod common;

use common::*;
use proptest::prelude::*;
use symtorus_core::energy::{dirichlet_energy, potential_energy, QuarticDoubleWell};
use symtorus_core::field::{reflect, sample, shift};
use symtorus_core::rearrange::*;
use symtorus_core::{BinaryMask, Grid, ScalarField};

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

fn field_strategy() -> impl Strategy<Value = ScalarField> {
    (1usize..=2, 2usize..=8).prop_flat_map(|(dim, half)| {
        let n = 2 * half;
        let len = n.pow(dim as u32);
        // Small integers make ties common, which exercises the stable sort.
        prop::collection::vec(prop_oneof![(-3i32..=3).prop_map(f64::from), -1.0f64..1.0], len)
            .prop_map(move |v| ScalarField::new(Grid::new(dim, n, 1.0).unwrap(), v).unwrap())
    })
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn steiner_axis_preserves_every_fiber(u in field_strategy()) {
        for axis in 0..u.grid().dim() {
            let s = steiner_axis(&u, axis).unwrap();
            prop_assert_eq!(sorted_fibers(&u, axis), sorted_fibers(&s, axis));
        }
    }

    #[test]
    fn iterated_steiner_preserves_values(u in field_strategy()) {
        prop_assert_eq!(sorted(&u), sorted(&iterated_steiner(&u)));
    }

    #[test]
    fn steiner_axis_is_idempotent(u in field_strategy()) {
        for axis in 0..u.grid().dim() {
            let s = steiner_axis(&u, axis).unwrap();
            prop_assert_eq!(steiner_axis(&s, axis).unwrap(), s);
        }
    }

    #[test]
    fn steiner_fibers_decrease_away_from_origin(u in field_strategy()) {
        let n = u.grid().n();
        let c = u.grid().origin_index();
        for axis in 0..u.grid().dim() {
            let s = steiner_axis(&u, axis).unwrap();
            for b in s.grid().fiber_bases(axis) {
                let f = fiber(&s, axis, b);
                for k in 0..n / 2 {
                    prop_assert!(f[(c + k + 1) % n] <= f[(c + k) % n]);
                    prop_assert!(f[(c + n - k - 1) % n] <= f[(c + n - k) % n]);
                }
            }
        }
    }

    #[test]
    fn steiner_column_never_raises_cyclic_energy(v in prop::collection::vec(-1.0f64..1.0, 1..64)) {
        let s = steiner_column(&v);
        prop_assert!(cyclic_energy(&s) <= cyclic_energy(&v) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn polarize_preserves_fibers_and_is_idempotent(u in field_strategy(), axis_pick in 0usize..2, eta in -40i64..40) {
        let axis = axis_pick % u.grid().dim();
        let t = polarize(&u, axis, eta).unwrap();
        prop_assert_eq!(sorted_fibers(&u, axis), sorted_fibers(&t, axis));
        prop_assert_eq!(polarize(&t, axis, eta).unwrap(), t.clone());
        prop_assert!(dominates_reflection(&t, axis, eta).unwrap());
    }

    #[test]
    fn polarize_edge_inequality_is_exact(u in field_strategy(), axis_pick in 0usize..2, eta in -40i64..40) {
        let axis = axis_pick % u.grid().dim();
        prop_assert!(polarization_edge_gain(&u, axis, eta).unwrap() >= 0.0);
    }

    #[test]
    fn fixed_points_are_exactly_the_dominating_fields(u in field_strategy(), axis_pick in 0usize..2, eta in -40i64..40) {
        let axis = axis_pick % u.grid().dim();
        let fixed = polarize(&u, axis, eta).unwrap() == u;
        prop_assert_eq!(fixed, dominates_reflection(&u, axis, eta).unwrap());
    }

    #[test]
    fn shifted_polarization_is_the_reflection(u in field_strategy(), axis_pick in 0usize..2, eta in -40i64..40) {
        let axis = axis_pick % u.grid().dim();
        let t = polarize(&u, axis, eta).unwrap();
        let r = polarize_shifted_identity_check(&t, axis, eta).unwrap();
        prop_assert!(r.precondition_holds);
        prop_assert_eq!(r.discrepancy, 0.0);
    }

    #[test]
    fn distribution_is_monotone_and_equimeasurable(u in field_strategy(), t0 in -1.0f64..1.0) {
        let grid = *u.grid();
        let column = vec![0; grid.dim() - 1];
        let levels: Vec<f64> = (0..8).map(|k| t0 - 0.3 + 0.1 * k as f64).collect();
        let eps = default_critical_threshold(&u);
        let d = distribution(&u, &column, &levels, eps).unwrap();
        let s = steiner_axis(&u, grid.dim() - 1).unwrap();
        let ds = distribution(&s, &column, &levels, eps).unwrap();
        for w in d.windows(2) {
            prop_assert!(w[1].mu <= w[0].mu);
        }
        for (a, b) in d.iter().zip(&ds) {
            prop_assert_eq!(a.mu, b.mu);
            prop_assert!(a.mu_reg + a.mu_sing <= a.mu * (1.0 + 1e-15));
            prop_assert!(a.mu <= 2.0 * grid.half_period());
        }
    }
}

#[test]
fn brute_force_cyclic_minimum() {
    let mut r = rng(11);
    for n in 1..=7 {
        for trial in 0..40 {
            use rand::Rng;
            let mut v: Vec<f64> = (0..n)
                .map(|_| if trial % 2 == 0 { f64::from(r.gen_range(-4i32..=4)) } else { r.gen_range(-1.0..1.0) })
                .collect();
            let ours = cyclic_energy(&steiner_column(&v));
            let mut best = f64::INFINITY;
            permutations(&mut v, 0, &mut |p| best = best.min(cyclic_energy(p)));
            assert!(ours <= best * (1.0 + 1e-14), "n = {n}, {v:?}: {ours} vs {best}");
        }
    }
}

#[test]
fn polarization_keeps_column_potential_exact() {
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let mut r = rng(3);
    for eta in [-7, 0, 1, 5, 32, 63] {
        let u = band_limited(grid, 4, &mut r);
        for axis in 0..2 {
            let t = polarize(&u, axis, eta).unwrap();
            for b in grid.fiber_bases(axis) {
                let g = |f: Vec<f64>| {
                    let f = ScalarField::new(Grid::new(1, 32, 1.0).unwrap(), f).unwrap();
                    potential_energy(&f, &QuarticDoubleWell)
                };
                assert_eq!(g(fiber(&u, axis, b)), g(fiber(&t, axis, b)));
            }
            assert!(dirichlet_energy(&t) <= dirichlet_energy(&u) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn polarization_energy_defect_shrinks_with_refinement() {
    // For a smooth field the pairwise swaps only cost energy along the switch
    // curve, so the relative gap falls as the grid is refined.
    let gap = |n: usize| {
        let grid = Grid::new(2, n, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let u = sample(grid, |x| (pi * (x[0] - 0.2)).cos() * (pi * x[1]).sin() + 0.3 * (2.0 * pi * x[0]).cos()).unwrap();
        let t = polarize(&u, 1, 3 * n as i64 / 16).unwrap();
        (dirichlet_energy(&u) - dirichlet_energy(&t)).abs() / dirichlet_energy(&u)
    };
    let (coarse, fine) = (gap(32), gap(128));
    assert!(coarse > 0.0 && fine < coarse, "{coarse} {fine}");
}

#[test]
fn reflect_is_an_involution_preserving_energy() {
    let grid = Grid::new(2, 16, 1.0).unwrap();
    let u = noise(grid, &mut rng(5));
    for eta in -5..20 {
        for axis in 0..2 {
            let r = reflect(&u, axis, eta);
            assert_eq!(reflect(&r, axis, eta), u);
            assert_eq!(sorted(&r), sorted(&u));
            assert_eq!(dirichlet_energy(&r), dirichlet_energy(&u));
        }
    }
}

#[test]
fn set_steiner_matches_thresholded_field_path() {
    let grid = Grid::new(2, 40, 2.0).unwrap();
    let tri = triangle(grid);
    for axis in 0..2 {
        let a = set_steiner(&tri, axis).unwrap();
        let b = BinaryMask::superlevel(&steiner_axis(&tri.indicator(grid), axis).unwrap(), 0.5);
        assert_eq!(a, b);
        assert_eq!(a.count(), tri.count());
    }
}

fn triangle(grid: Grid) -> BinaryMask {
    // Vertices (−1, 0), (0, 0), (1, 2).
    let inside = |x: f64, y: f64| {
        let e = |ax: f64, ay: f64, bx: f64, by: f64| (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        let (a, b, c) = (e(-1.0, 0.0, 0.0, 0.0), e(0.0, 0.0, 1.0, 2.0), e(1.0, 2.0, -1.0, 0.0));
        (a >= 0.0 && b >= 0.0 && c >= 0.0) || (a <= 0.0 && b <= 0.0 && c <= 0.0)
    };
    let n = grid.n();
    let cells = (0..grid.len()).map(|k| inside(grid.coordinate(k / n), grid.coordinate(k % n))).collect();
    BinaryMask::new(&grid, cells).unwrap()
}

#[test]
fn iteration_order_matters_for_the_triangle() {
    let grid = Grid::new(2, 256, 2.0).unwrap();
    let tri = triangle(grid);
    let y_then_x = set_steiner(&set_steiner(&tri, 1).unwrap(), 0).unwrap();
    let x_then_y = set_steiner(&set_steiner(&tri, 0).unwrap(), 1).unwrap();
    assert_eq!(y_then_x.count(), x_then_y.count());
    assert!(y_then_x.symmetric_difference(&x_then_y) > 0);
    let area = |n: usize| {
        let g = Grid::new(2, n, 2.0).unwrap();
        triangle(g).count() as f64 * g.cell_volume()
    };
    let (coarse, fine) = ((area(64) - 1.0).abs(), (area(512) - 1.0).abs());
    assert!(fine < coarse && fine < 0.02, "{coarse} {fine}");
}

#[test]
fn radial_profile_is_a_fixed_point() {
    let grid = Grid::new(2, 32, 1.0).unwrap();
    // Strictly decreasing in |x|₁ with distinct values, so no ties.
    let u = sample(grid, |x| -(x[0].abs() * 1.001 + x[1].abs())).unwrap();
    assert_eq!(iterated_steiner(&u), u);
    let shifted = shift(&u, &[3, -5]);
    assert_eq!(iterated_steiner(&shifted), u);
}
