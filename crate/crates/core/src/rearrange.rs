//! Steiner symmetrization, two-point rearrangement and column distribution
//! functions.
//!
//! Steiner symmetrization acts on the 1D fibers ("columns") along one axis.
//! On a field the symmetric-decreasing profile is centered at the coordinate
//! origin (sample `n/2`); [`steiner_column`] itself centers at index 0 of the
//! sequence it is given. Distribution functions and bump structures are always
//! taken along the last axis, written `y`, with `x′` the remaining indices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{reflect, BinaryMask, Grid, ScalarField};
use crate::math::{self, wrap_index, ExactSum};

/// Position of the `k`-th largest value in the cyclic symmetric-decreasing
/// arrangement: `0, +1, −1, +2, −2, …` (mod n).
#[inline]
fn placement(k: usize, n: usize) -> usize {
    if k == 0 {
        0
    } else if k % 2 == 1 {
        (k + 1) / 2
    } else {
        n - k / 2
    }
}

/// Order of indices of `values` by descending value, stable on ties.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Symmetric-decreasing cyclic rearrangement of a sequence about index 0.
///
/// The largest value goes to index 0, the next to +1, then −1, +2, −2, …;
/// for even length the smallest value ends at index `n/2`.
pub fn steiner_column(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let order = descending_order(values);
    let mut out = vec![0.0; n];
    for (k, &src) in order.iter().enumerate() {
        out[placement(k, n)] = values[src];
    }
    out
}

/// Cyclic 1D Dirichlet sum `Σ_j (v_{j+1} − v_j)²`.
pub fn cyclic_energy(values: &[f64]) -> f64 {
    let n = values.len();
    math::sum((0..n).map(|j| {
        let d = values[(j + 1) % n] - values[j];
        d * d
    }))
}

/// Steiner symmetrization of every fiber along `axis`, centered at the origin.
pub fn steiner_axis(u: &ScalarField, axis: usize) -> Result<ScalarField> {
    let grid = *u.grid();
    grid.check_axis(axis)?;
    let n = grid.n();
    let center = grid.origin_index();
    let stride = grid.stride(axis);
    let src = u.values();
    let mut out = vec![0.0; grid.len()];
    let mut fiber = vec![0.0; n];
    for base in grid.fiber_bases(axis) {
        for (j, slot) in fiber.iter_mut().enumerate() {
            *slot = src[base + j * stride];
        }
        let order = descending_order(&fiber);
        for (k, &i) in order.iter().enumerate() {
            let j = (center + placement(k, n)) % n;
            out[base + j * stride] = fiber[i];
        }
    }
    ScalarField::new(grid, out)
}

/// Iterated Steiner symmetrization `u⋆`: the last axis first, then down to axis 0.
pub fn iterated_steiner(u: &ScalarField) -> ScalarField {
    let axes: Vec<usize> = (0..u.grid().dim()).rev().collect();
    iterated_steiner_order(u, &axes).expect("axes are in range")
}

/// Steiner symmetrization along `axes`, applied in the given order.
pub fn iterated_steiner_order(u: &ScalarField, axes: &[usize]) -> Result<ScalarField> {
    let mut v = u.clone();
    for &axis in axes {
        v = steiner_axis(&v, axis)?;
    }
    Ok(v)
}

/// Steiner symmetrization of a set: the `k` occupied cells of every fiber
/// are moved to the `k` cells nearest the origin.
pub fn set_steiner(mask: &BinaryMask, axis: usize) -> Result<BinaryMask> {
    let grid = Grid::new(mask.dim(), mask.n(), 1.0)?;
    grid.check_axis(axis)?;
    let n = grid.n();
    let center = grid.origin_index();
    let stride = grid.stride(axis);
    let cells = mask.cells();
    let mut out = vec![false; cells.len()];
    for base in grid.fiber_bases(axis) {
        let k = (0..n).filter(|&j| cells[base + j * stride]).count();
        for m in 0..k {
            out[base + ((center + placement(m, n)) % n) * stride] = true;
        }
    }
    BinaryMask::new(&grid, out)
}

/// Which side of the reflection a sample lies on, as a doubled offset.
///
/// Returns `(2(y_j − η) mod 4ℓ) / h` in `0..2n`; values in `(0, n)` are on the
/// half `(η, η + ℓ)`, values in `(n, 2n)` on `(η − ℓ, η)`, and `0`, `n` are
/// fixed by the reflection.
#[inline]
fn half_offset(j: usize, eta_index: i64, n: usize) -> usize {
    wrap_index(2 * j as i64 - eta_index - n as i64, 2 * n)
}

/// Two-point rearrangement `T^η` with `η = eta_index·h/2` along `axis`.
///
/// Takes `max(u, u^η)` on the half `(η, η + ℓ)`, `min(u, u^η)` on
/// `(η − ℓ, η)`, and leaves samples on the reflection line unchanged.
pub fn polarize(u: &ScalarField, axis: usize, eta_index: i64) -> Result<ScalarField> {
    let grid = *u.grid();
    grid.check_axis(axis)?;
    let r = reflect(u, axis, eta_index);
    let n = grid.n();
    let out = u
        .values()
        .iter()
        .zip(r.values())
        .enumerate()
        .map(|(flat, (&a, &b))| {
            let k = half_offset(grid.axis_index(flat, axis), eta_index, n);
            if k == 0 || k == n {
                a
            } else if k < n {
                a.max(b)
            } else {
                a.min(b)
            }
        })
        .collect();
    ScalarField::new(grid, out)
}

/// True iff `u ≥ u^η` on the half `(η, η + ℓ)`, i.e. `u` is fixed by `T^η`.
pub fn dominates_reflection(u: &ScalarField, axis: usize, eta_index: i64) -> Result<bool> {
    let grid = *u.grid();
    grid.check_axis(axis)?;
    let r = reflect(u, axis, eta_index);
    let n = grid.n();
    Ok(u.values().iter().zip(r.values()).enumerate().all(|(flat, (&a, &b))| {
        let k = half_offset(grid.axis_index(flat, axis), eta_index, n);
        k == 0 || k >= n || a >= b
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedIdentityReport {
    /// `max |u − T^η u|`; the identity is only asserted when this is zero.
    pub precondition_discrepancy: f64,
    pub precondition_holds: bool,
    /// `max |T^{η+ℓ} u − u^η|`.
    pub discrepancy: f64,
}

/// Checks `T^{η+ℓ} u = u^η` for a `u` with `u = T^η u`.
pub fn polarize_shifted_identity_check(u: &ScalarField, axis: usize, eta_index: i64) -> Result<ShiftedIdentityReport> {
    let n = u.grid().n() as i64;
    let t = polarize(u, axis, eta_index)?;
    let t_shifted = polarize(u, axis, eta_index + n)?;
    let r = reflect(u, axis, eta_index);
    let max_diff =
        |a: &ScalarField, b: &ScalarField| a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()));
    let pre = max_diff(u, &t);
    Ok(ShiftedIdentityReport {
        precondition_discrepancy: pre,
        precondition_holds: pre == 0.0,
        discrepancy: max_diff(&t_shifted, &r),
    })
}

/// Exact value of `a·b` as an unevaluated pair.
#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

/// Smallest gain `Σ_{e, e^η} |Du|² − Σ_{e, e^η} |D T^η u|²` over all
/// reflected edge pairs, evaluated in exact arithmetic.
///
/// Edge pairs are `{(p, p + e_a), (p^η, (p + e_a)^η)}` for every cell `p` and
/// every axis `a`. A negative result is a violation of the pairwise
/// polarization inequality.
pub fn polarization_edge_gain(u: &ScalarField, axis: usize, eta_index: i64) -> Result<f64> {
    u.grid().check_axis(axis)?;
    let t = polarize(u, axis, eta_index)?;
    edge_gain(u, &t, axis, eta_index)
}

/// [`polarization_edge_gain`] for a given candidate `t` in place of `T^η u`,
/// so that other implementations of the rearrangement can be checked.
pub fn edge_gain(u: &ScalarField, t: &ScalarField, axis: usize, eta_index: i64) -> Result<f64> {
    u.same_grid(t)?;
    let grid = *u.grid();
    grid.check_axis(axis)?;
    let n = grid.n();
    let stride = grid.stride(axis);
    let image = |flat: usize| {
        let j = grid.axis_index(flat, axis);
        let jr = wrap_index(eta_index - j as i64, n);
        flat + jr * stride - j * stride
    };
    let squared_diff = |acc: &mut ExactSum, sign: f64, x: f64, y: f64| {
        // (x − y)² = x² − 2xy + y², each product split exactly.
        for (a, b, c) in [(x, x, 1.0), (x, y, -2.0), (y, y, 1.0)] {
            let (p, e) = two_product(a, b);
            acc.add(sign * c * p);
            acc.add(sign * c * e);
        }
    };
    let (uv, tv) = (u.values(), t.values());
    let mut worst = f64::INFINITY;
    for p in 0..grid.len() {
        let pr = image(p);
        for a in 0..grid.dim() {
            let q = grid.neighbor(p, a, 1);
            let qr = image(q);
            let mut acc = ExactSum::new();
            squared_diff(&mut acc, 1.0, uv[p], uv[q]);
            squared_diff(&mut acc, 1.0, uv[pr], uv[qr]);
            squared_diff(&mut acc, -1.0, tv[p], tv[q]);
            squared_diff(&mut acc, -1.0, tv[pr], tv[qr]);
            worst = worst.min(acc.total());
        }
    }
    Ok(worst)
}

/// Distribution function of one column at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSample {
    pub column: Vec<usize>,
    pub level: f64,
    /// `h·#{y : u(x′, y) > t}`.
    pub mu: f64,
    /// Part of `mu` carried by non-critical samples.
    pub mu_reg: f64,
    /// `h·#{y : critical, t < u(x′, y) < M(x′)}`.
    pub mu_sing: f64,
}

/// Default critical-slope threshold `10⁻⁸·(range of u)/h`.
pub fn default_critical_threshold(u: &ScalarField) -> f64 {
    1e-8 * u.range() / u.grid().spacing()
}

fn check_column(grid: &Grid, column: &[usize]) -> Result<()> {
    if column.len() + 1 != grid.dim() {
        return Err(Error::InvalidGrid("column index must have d−1 components".into()));
    }
    if column.iter().any(|&c| c >= grid.n()) {
        return Err(Error::InvalidGrid("column index out of range".into()));
    }
    Ok(())
}

/// Centered `y`-difference of a cyclic column.
fn centered_slopes(col: &[f64], h: f64) -> Vec<f64> {
    let n = col.len();
    (0..n).map(|j| (col[(j + 1) % n] - col[(j + n - 1) % n]) / (2.0 * h)).collect()
}

/// Distribution function and its regular/singular split at each level.
///
/// A sample is critical when its centered `y`-difference is smaller than
/// `eps_crit` in magnitude. Critical samples at the column maximum belong to
/// neither part, so `mu − mu_reg − mu_sing` is `h` times their count.
pub fn distribution(u: &ScalarField, column: &[usize], levels: &[f64], eps_crit: f64) -> Result<Vec<DistributionSample>> {
    let grid = *u.grid();
    check_column(&grid, column)?;
    let h = grid.spacing();
    let col = u.column(column);
    let top = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let critical: Vec<bool> = centered_slopes(&col, h).iter().map(|s| s.abs() < eps_crit).collect();
    Ok(levels
        .iter()
        .map(|&t| {
            let (mut all, mut reg, mut sing) = (0usize, 0usize, 0usize);
            for (&v, &c) in col.iter().zip(&critical) {
                if v > t {
                    all += 1;
                    if !c {
                        reg += 1;
                    } else if v < top {
                        sing += 1;
                    }
                }
            }
            DistributionSample {
                column: column.to_vec(),
                level: t,
                mu: h * all as f64,
                mu_reg: h * reg as f64,
                mu_sing: h * sing as f64,
            }
        })
        .collect())
}

/// Length of `{y : ũ(y) > t}` for the piecewise-linear interpolant `ũ` of a
/// cyclic column.
pub fn interpolated_measure(col: &[f64], h: f64, t: f64) -> f64 {
    let n = col.len();
    math::sum((0..n).map(|j| {
        let (a, b) = (col[j], col[(j + 1) % n]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if t >= hi {
            0.0
        } else if t < lo {
            h
        } else {
            h * (hi - t) / (hi - lo)
        }
    }))
}

/// One crossing of level `t` between samples `j` and `j + 1` of a column.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    j: usize,
    /// Fraction of the way from `j` to `j + 1`.
    theta: f64,
    /// Secant slope `(u_{j+1} − u_j)/h`.
    slope: f64,
}

fn crossings(col: &[f64], h: f64, t: f64) -> Vec<Crossing> {
    let n = col.len();
    (0..n)
        .filter_map(|j| {
            let (a, b) = (col[j], col[(j + 1) % n]);
            ((a > t) != (b > t)).then(|| Crossing { j, theta: (t - a) / (b - a), slope: (b - a) / h })
        })
        .collect()
}

fn regular_crossings(col: &[f64], h: f64, t: f64, eps_crit: f64) -> Result<Vec<Crossing>> {
    let cs = crossings(col, h, t);
    if cs.iter().any(|c| c.slope.abs() < eps_crit) {
        return Err(Error::NonRegularLevel { level: t });
    }
    Ok(cs)
}

/// Two independent estimates of one derivative of the distribution function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    /// Central difference of the interpolated measure.
    pub finite_difference: f64,
    /// Sum over level crossings.
    pub crossing_sum: f64,
}

impl DerivativeCheck {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.finite_difference.abs().max(self.crossing_sum.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.finite_difference - self.crossing_sum).abs() / scale
        }
    }
}

/// `∂_t μ(x′, t)` by finite differences and by `−Σ 1/|∂_y u|` over crossings.
pub fn mu_t_derivative_check(u: &ScalarField, column: &[usize], t: f64, eps_crit: f64) -> Result<DerivativeCheck> {
    let grid = *u.grid();
    check_column(&grid, column)?;
    let h = grid.spacing();
    let col = u.column(column);
    let cs = regular_crossings(&col, h, t, eps_crit)?;
    let crossing_sum = -math::sum(cs.iter().map(|c| 1.0 / c.slope.abs()));
    let delta = 1e-4 * u.range().max(f64::MIN_POSITIVE);
    let fd = (interpolated_measure(&col, h, t + delta) - interpolated_measure(&col, h, t - delta)) / (2.0 * delta);
    Ok(DerivativeCheck { finite_difference: fd, crossing_sum })
}

/// `∂_i μ(x′, t)` by centered differences across neighbouring columns and by
/// `Σ ∂_i u/|∂_y u|` over crossings.
pub fn mu_i_derivative_check(u: &ScalarField, column: &[usize], t: f64, axis: usize, eps_crit: f64) -> Result<DerivativeCheck> {
    let grid = *u.grid();
    check_column(&grid, column)?;
    if axis + 1 >= grid.dim() {
        return Err(Error::InvalidAxis { axis, dim: grid.dim() - 1 });
    }
    let n = grid.n();
    let h = grid.spacing();
    let col = u.column(column);
    let cs = regular_crossings(&col, h, t, eps_crit)?;
    let neighbour = |offset: i64| {
        let mut c = column.to_vec();
        c[axis] = wrap_index(c[axis] as i64 + offset, n);
        u.column(&c)
    };
    let (next, prev) = (neighbour(1), neighbour(-1));
    let di: Vec<f64> = (0..n).map(|j| (next[j] - prev[j]) / (2.0 * h)).collect();
    let crossing_sum = math::sum(cs.iter().map(|c| {
        let dix = (1.0 - c.theta) * di[c.j] + c.theta * di[(c.j + 1) % n];
        dix / c.slope.abs()
    }));
    let fd = (interpolated_measure(&next, h, t) - interpolated_measure(&prev, h, t)) / (2.0 * h);
    Ok(DerivativeCheck { finite_difference: fd, crossing_sum })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpKind {
    Empty,
    Full,
    /// Number of maximal cyclic runs of samples above the level.
    Runs(usize),
}

/// Superlevel structure of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpStructure {
    pub column: Vec<usize>,
    pub level: f64,
    pub kind: BumpKind,
    /// Lower crossing (coordinate), only for a single bump.
    pub y1: Option<f64>,
    /// Upper crossing, unwrapped so that `y1 < y2 ≤ y1 + 2ℓ`.
    pub y2: Option<f64>,
    /// Midpoint `(y1 + y2)/2`, wrapped into `[−ℓ, ℓ)`.
    pub b: Option<f64>,
    pub is_single_bump: bool,
}

impl BumpStructure {
    /// Number of level crossings, the discrete `H⁰` of `{u = t}` in the column.
    pub fn crossing_count(&self) -> usize {
        match self.kind {
            BumpKind::Runs(r) => 2 * r,
            _ => 0,
        }
    }
}

/// Cyclic superlevel set of a column and, for a single bump, its endpoints.
pub fn bump_structure(u: &ScalarField, column: &[usize], t: f64) -> Result<BumpStructure> {
    let grid = *u.grid();
    check_column(&grid, column)?;
    let n = grid.n();
    let h = grid.spacing();
    let col = u.column(column);
    let above: Vec<bool> = col.iter().map(|&v| v > t).collect();
    let count = above.iter().filter(|&&a| a).count();
    let mut out = BumpStructure {
        column: column.to_vec(),
        level: t,
        kind: BumpKind::Empty,
        y1: None,
        y2: None,
        b: None,
        is_single_bump: false,
    };
    if count == 0 {
        return Ok(out);
    }
    if count == n {
        out.kind = BumpKind::Full;
        return Ok(out);
    }
    let starts: Vec<usize> = (0..n).filter(|&j| above[j] && !above[(j + n - 1) % n]).collect();
    out.kind = BumpKind::Runs(starts.len());
    if starts.len() == 1 {
        let start = starts[0];
        let prev = (start + n - 1) % n;
        let theta1 = (t - col[prev]) / (col[start] - col[prev]);
        let y1 = grid.coordinate(prev) + theta1 * h;
        let last = (start + count - 1) % n;
        let next = (last + 1) % n;
        let theta2 = (col[last] - t) / (col[last] - col[next]);
        let offset = (last + n - prev) % n;
        let y2 = y1 + (offset as f64 - theta1 + theta2) * h;
        out.y1 = Some(y1);
        out.y2 = Some(y2);
        out.b = Some(math::wrap_periodic(0.5 * (y1 + y2), grid.half_period()));
        out.is_single_bump = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample;
    use alloc::vec;

    #[test]
    fn steiner_column_examples() {
        assert_eq!(steiner_column(&[5.0; 4]), vec![5.0; 4]);
        assert_eq!(steiner_column(&[0.0, 1.0, 3.0, 2.0]), vec![3.0, 2.0, 0.0, 1.0]);
        assert_eq!(steiner_column(&[7.0]), vec![7.0]);
        assert_eq!(steiner_column(&[1.0, 2.0, 3.0, 4.0, 5.0]), vec![5.0, 4.0, 2.0, 1.0, 3.0]);
    }

    #[test]
    fn placement_covers_every_index() {
        for n in 1..12 {
            let mut seen = vec![false; n];
            for k in 0..n {
                seen[placement(k, n)] = true;
            }
            assert!(seen.iter().all(|&s| s), "n = {n}");
        }
        assert_eq!(placement(3, 4), 2);
    }

    #[test]
    fn steiner_axis_centers_on_origin() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let u = ScalarField::new(g, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let s = steiner_axis(&u, 0).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 3.0, 5.0, 7.0, 6.0, 4.0, 2.0]);
    }

    #[test]
    fn set_steiner_full_and_centered_columns() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let full = BinaryMask::new(&g, vec![true; 64]).unwrap();
        assert_eq!(set_steiner(&full, 1).unwrap(), full);
        let centered = BinaryMask::superlevel(&sample(g, |x| -x[1].abs()).unwrap(), -0.6);
        assert_eq!(set_steiner(&centered, 1).unwrap(), centered);
    }

    #[test]
    fn polarize_fixes_cells_on_the_reflection_line() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let u = ScalarField::new(g, vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]).unwrap();
        // η = 0 (origin, index 4): fixed samples 4 and 0; upper half is 5..8.
        let t = polarize(&u, 0, 0).unwrap();
        assert_eq!(t.values(), &[3.0, 1.0, 2.0, 1.0, 5.0, 9.0, 4.0, 6.0]);
        assert!(dominates_reflection(&t, 0, 0).unwrap());
        assert!(!dominates_reflection(&u, 0, 0).unwrap());
    }

    #[test]
    fn bump_of_cosine() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let u = sample(g, |x| math::cos(math::PI * x[1])).unwrap();
        let b = bump_structure(&u, &[5], 0.0).unwrap();
        assert!(b.is_single_bump);
        assert!((b.y1.unwrap() + 0.5).abs() < 1e-12);
        assert!((b.y2.unwrap() - 0.5).abs() < 1e-12);
        assert!(b.b.unwrap().abs() < 1e-12);
        assert_eq!(b.crossing_count(), 2);
        assert_eq!(bump_structure(&u, &[5], 2.0).unwrap().kind, BumpKind::Empty);
        assert_eq!(bump_structure(&u, &[5], -2.0).unwrap().kind, BumpKind::Full);
    }

    #[test]
    fn bump_wrapping_the_seam() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let u = ScalarField::new(g, vec![1.0, 0.0, -1.0, -1.0, -1.0, -1.0, 0.0, 1.0]).unwrap();
        let b = bump_structure(&u, &[], -0.5).unwrap();
        assert!(b.is_single_bump);
        assert!((b.y1.unwrap() - 0.375).abs() < 1e-15);
        assert!((b.y2.unwrap() - 1.375).abs() < 1e-15);
        assert!((b.b.unwrap() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_crossing_sum() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let h = g.spacing();
        let s = 0.75;
        let vals: Vec<f64> = (0..16).map(|j| if j <= 8 { s * h * j as f64 } else { s * h * (16 - j) as f64 }).collect();
        let u = ScalarField::new(g, vals).unwrap();
        let c = mu_t_derivative_check(&u, &[], 0.3 * s * h * 8.0, default_critical_threshold(&u)).unwrap();
        assert!((c.crossing_sum + 2.0 / s).abs() < 1e-12);
        assert!((c.finite_difference + 2.0 / s).abs() < 1e-8);
    }
}
