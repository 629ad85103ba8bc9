//! Periodic lattices and sampled fields.
//!
//! A [`Grid`] is the uniform collocation lattice on `[-ℓ, ℓ)^d` with `n`
//! samples per axis, spacing `h = 2ℓ/n`, and sample `i` of every axis at the
//! coordinate `-ℓ + i·h`. Index arithmetic is cyclic. Values are stored
//! row-major, so the last axis (the `y` axis of the rearrangement module) is
//! contiguous.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, wrap_index};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_period: f64,
    spacing: f64,
}

impl Grid {
    /// Builds a grid; `n` must be even and at least 4.
    ///
    /// The stored half-period is re-derived from the spacing so that
    /// `h·n == 2ℓ` holds exactly in floating point.
    pub fn new(dim: usize, n: usize, half_period: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid("dimension must be 1, 2 or 3".to_string()));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid("samples per axis must be even and at least 4".to_string()));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid("half period must be positive and finite".to_string()));
        }
        if n.checked_pow(dim as u32).is_none() {
            return Err(Error::InvalidGrid("too many cells".to_string()));
        }
        let spacing = 2.0 * half_period / n as f64;
        let half_period = spacing * n as f64 / 2.0;
        Ok(Self { dim, n, half_period, spacing })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// ℓ, half of the period.
    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    /// h = 2ℓ/n.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of cells, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure `h^d` of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).fold(1.0, |acc, _| acc * self.spacing)
    }

    /// Measure `(2ℓ)^d` of the torus.
    pub fn measure(&self) -> f64 {
        (0..self.dim).fold(1.0, |acc, _| acc * 2.0 * self.half_period)
    }

    /// Coordinate of sample `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_period + i as f64 * self.spacing
    }

    /// Index of the coordinate origin along any axis (`n/2`).
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Flat-index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(Error::InvalidAxis { axis, dim: self.dim })
        }
    }

    /// Multi-index of a flat index (unused trailing slots are zero).
    pub fn unravel(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    /// Flat index of a multi-index, wrapping every component.
    pub fn ravel(&self, idx: &[i64]) -> usize {
        debug_assert_eq!(idx.len(), self.dim);
        idx.iter().fold(0, |acc, &i| acc * self.n + wrap_index(i, self.n))
    }

    /// Index of `flat` along `axis`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    /// Flat index of the cell `offset` samples away from `flat` along `axis`.
    #[inline]
    pub fn neighbor(&self, flat: usize, axis: usize, offset: i64) -> usize {
        let stride = self.stride(axis);
        let i = (flat / stride) % self.n;
        let j = wrap_index(i as i64 + offset, self.n);
        flat + j * stride - i * stride
    }

    /// Flat indices of the first cell of every fiber along `axis`.
    ///
    /// The cells of a fiber are `base + k·stride(axis)` for `k in 0..n`.
    pub fn fiber_bases(&self, axis: usize) -> impl Iterator<Item = usize> + '_ {
        let stride = self.stride(axis);
        let outer = self.len() / (stride * self.n);
        let n = self.n;
        (0..outer).flat_map(move |o| (0..stride).map(move |i| o * n * stride + i))
    }

    /// Number of fibers along any axis, `n^(d-1)`.
    pub fn fiber_count(&self) -> usize {
        self.len() / self.n
    }

    /// Flat index of the first cell of the fiber along the last axis whose
    /// remaining (d-1) indices are `column`.
    pub fn column_base(&self, column: &[usize]) -> usize {
        debug_assert_eq!(column.len() + 1, self.dim);
        column.iter().fold(0, |acc, &i| acc * self.n + i % self.n) * self.n
    }
}

/// Discretized order parameter on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: grid.unravel(pos)[..grid.dim()].to_vec(),
                value: values[pos],
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        assert!(value.is_finite());
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Internal constructor for values produced by finite arithmetic on finite inputs.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at a (wrapped) multi-index.
    pub fn at(&self, idx: &[i64]) -> f64 {
        self.values[self.grid.ravel(idx)]
    }

    /// Cellwise map; fails if the map produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max - min`.
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    /// Values of the fiber along the last axis with transverse index `column`.
    pub fn column(&self, column: &[usize]) -> Vec<f64> {
        let base = self.grid.column_base(column);
        self.values[base..base + self.grid.n()].to_vec()
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Samples `f` at the cell coordinates `(-ℓ + i₀h, …)`.
pub fn sample(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<ScalarField> {
    let mut coords = [0.0; MAX_DIM];
    let mut values = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let idx = grid.unravel(flat);
        for axis in 0..grid.dim() {
            coords[axis] = grid.coordinate(idx[axis]);
        }
        values.push(f(&coords[..grid.dim()]));
    }
    ScalarField::new(grid, values)
}

/// Reflection `y ↦ 2η − y` along `axis` with `η = eta_index·h/2`.
///
/// On the grid this is the index map `j ↦ eta_index − j (mod n)`.
pub fn reflect(u: &ScalarField, axis: usize, eta_index: i64) -> ScalarField {
    let grid = *u.grid();
    assert!(axis < grid.dim(), "axis out of range");
    let n = grid.n();
    let stride = grid.stride(axis);
    let mut out = vec![0.0; grid.len()];
    for base in grid.fiber_bases(axis) {
        for j in 0..n {
            let src = wrap_index(eta_index - j as i64, n);
            out[base + j * stride] = u.values[base + src * stride];
        }
    }
    ScalarField::from_raw(grid, out)
}

/// Integer translation along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisShift {
    pub axis: usize,
    /// Number of samples, interpreted modulo `n`.
    pub offset: i64,
}

/// Translation `u(· − s·h)`: `out[i] = u[i − s]` on every axis.
pub fn shift(u: &ScalarField, offsets: &[i64]) -> ScalarField {
    let grid = *u.grid();
    assert_eq!(offsets.len(), grid.dim());
    let n = grid.n();
    let mut out = vec![0.0; grid.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        let mut src = 0;
        for axis in 0..grid.dim() {
            src = src * n + wrap_index(idx[axis] as i64 - offsets[axis], n);
        }
        *slot = u.values[src];
    }
    ScalarField::from_raw(grid, out)
}

/// Result of [`shift_align`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub shifts: Vec<AxisShift>,
    /// Discrete L² distance `‖u(· − s·h) − v‖₂` at the optimal shift.
    pub distance: f64,
}

impl Alignment {
    pub fn offsets(&self) -> Vec<i64> {
        self.shifts.iter().map(|s| s.offset).collect()
    }
}

/// Finds the integer shift `s ∈ {0..n}^d` minimizing `‖shift(u, s) − v‖₂`.
///
/// Exhaustive over all `n^d` shifts with early termination: cells are visited
/// in a fixed order (most energetic slices of `v` first) and a candidate is
/// abandoned once its partial sum exceeds the best complete one. Completed
/// candidates are compared with exactly rounded sums, and ties resolve to the
/// lexicographically smallest shift.
pub fn shift_align(u: &ScalarField, v: &ScalarField) -> Result<Alignment> {
    u.same_grid(v)?;
    let grid = *u.grid();
    let d = grid.dim();
    let n = grid.n();
    let total_shifts = grid.len();

    // Slices along axis 0, visited in decreasing order of the variance of v.
    let slice_len = grid.len() / n;
    let v_mean = mean(v);
    let mut slice_order: Vec<usize> = (0..n).collect();
    let slice_energy: Vec<f64> = (0..n)
        .map(|s| {
            v.values[s * slice_len..(s + 1) * slice_len]
                .iter()
                .map(|x| (x - v_mean) * (x - v_mean))
                .sum()
        })
        .collect();
    slice_order.sort_by(|&a, &b| slice_energy[b].total_cmp(&slice_energy[a]).then(a.cmp(&b)));

    let shift_of = |k: usize| -> [i64; MAX_DIM] {
        let idx = grid.unravel(k);
        let mut s = [0i64; MAX_DIM];
        for a in 0..d {
            s[a] = idx[a] as i64;
        }
        s
    };

    // Source index of destination `flat` under shift `s`: per-axis tables.
    let mut tables = vec![vec![0usize; n]; d];
    let fill_tables = |s: &[i64; MAX_DIM], tables: &mut Vec<Vec<usize>>| {
        for a in 0..d {
            let stride = grid.stride(a);
            for i in 0..n {
                tables[a][i] = wrap_index(i as i64 - s[a], n) * stride;
            }
        }
    };

    let exact_distance_sq = |tables: &Vec<Vec<usize>>| -> f64 {
        let mut acc = math::ExactSum::new();
        for flat in 0..grid.len() {
            let idx = grid.unravel(flat);
            let src: usize = (0..d).map(|a| tables[a][idx[a]]).sum();
            let diff = u.values[src] - v.values[flat];
            acc.add(diff * diff);
        }
        acc.total()
    };

    // Initial bound: align the maxima.
    let arg_max = |f: &ScalarField| {
        f.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
            .0
    };
    let (iu, iv) = (grid.unravel(arg_max(u)), grid.unravel(arg_max(v)));
    let mut guess = [0i64; MAX_DIM];
    for a in 0..d {
        guess[a] = wrap_index(iv[a] as i64 - iu[a] as i64, n) as i64;
    }
    fill_tables(&guess, &mut tables);
    let mut best_exact = exact_distance_sq(&tables);
    let mut best_shift: Option<[i64; MAX_DIM]> = None;

    for k in 0..total_shifts {
        let s = shift_of(k);
        fill_tables(&s, &mut tables);
        // Relaxed bound so near-ties always reach the exact comparison.
        let bound = best_exact * (1.0 + 1e-9) + f64::MIN_POSITIVE;
        let mut partial = 0.0;
        let mut abandoned = false;
        'slices: for &s0 in &slice_order {
            let off0 = tables[0][s0];
            let base = s0 * slice_len;
            for r in 0..slice_len {
                let flat = base + r;
                let src = if d == 1 {
                    off0
                } else {
                    let idx = grid.unravel(flat);
                    off0 + (1..d).map(|a| tables[a][idx[a]]).sum::<usize>()
                };
                let diff = u.values[src] - v.values[flat];
                partial += diff * diff;
            }
            if partial > bound {
                abandoned = true;
                break 'slices;
            }
        }
        if abandoned {
            continue;
        }
        let exact = exact_distance_sq(&tables);
        let better = match best_shift {
            None => exact <= best_exact,
            Some(_) => exact < best_exact,
        };
        if better {
            best_exact = exact;
            best_shift = Some(s);
        }
    }

    let s = best_shift.unwrap_or(guess);
    Ok(Alignment {
        shifts: (0..d).map(|axis| AxisShift { axis, offset: s[axis] }).collect(),
        distance: math::sqrt(grid.cell_volume() * best_exact),
    })
}

/// Spatial average `h^d Σ u / (2ℓ)^d`.
pub fn mean(u: &ScalarField) -> f64 {
    math::sum(u.values.iter().copied()) / u.values.len() as f64
}

/// Discrete inner product `h^d Σ u v`.
pub fn inner(u: &ScalarField, v: &ScalarField) -> f64 {
    u.grid().cell_volume() * math::dot(&u.values, &v.values)
}

/// Discrete L² norm `(h^d Σ u²)^{1/2}`.
pub fn norm_l2(u: &ScalarField) -> f64 {
    math::sqrt(u.grid().cell_volume() * math::sum_squares(&u.values))
}

pub fn norm_linf(u: &ScalarField) -> f64 {
    u.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// `‖u − v‖₂`.
pub fn distance_l2(u: &ScalarField, v: &ScalarField) -> f64 {
    assert_eq!(u.grid(), v.grid());
    let diff: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
    math::sqrt(u.grid().cell_volume() * math::sum_squares(&diff))
}

/// Periodic forward difference `(u(x + h e_axis) − u(x)) / h`.
pub fn discrete_partial(u: &ScalarField, axis: usize) -> ScalarField {
    difference(u, axis, |next, _prev, here, h| (next - here) / h)
}

/// Periodic centered difference `(u(x + h e_axis) − u(x − h e_axis)) / 2h`.
pub fn centered_partial(u: &ScalarField, axis: usize) -> ScalarField {
    difference(u, axis, |next, prev, _here, h| (next - prev) / (2.0 * h))
}

fn difference(u: &ScalarField, axis: usize, op: impl Fn(f64, f64, f64, f64) -> f64) -> ScalarField {
    let grid = *u.grid();
    assert!(axis < grid.dim(), "axis out of range");
    let n = grid.n();
    let h = grid.spacing();
    let stride = grid.stride(axis);
    let mut out = vec![0.0; grid.len()];
    for base in grid.fiber_bases(axis) {
        for j in 0..n {
            let here = u.values[base + j * stride];
            let next = u.values[base + ((j + 1) % n) * stride];
            let prev = u.values[base + ((j + n - 1) % n) * stride];
            out[base + j * stride] = op(next, prev, here, h);
        }
    }
    ScalarField::from_raw(grid, out)
}

/// Cellwise boolean set on a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    grid_n: usize,
    grid_dim: usize,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(grid: &Grid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: cells.len() });
        }
        Ok(Self { grid_n: grid.n(), grid_dim: grid.dim(), cells })
    }

    /// Cells where `u > level`.
    pub fn superlevel(u: &ScalarField, level: f64) -> Self {
        Self {
            grid_n: u.grid().n(),
            grid_dim: u.grid().dim(),
            cells: u.values().iter().map(|&v| v > level).collect(),
        }
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.grid_n
    }

    pub fn dim(&self) -> usize {
        self.grid_dim
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Indicator field (1 inside, 0 outside).
    pub fn indicator(&self, grid: Grid) -> ScalarField {
        assert_eq!((grid.n(), grid.dim()), (self.grid_n, self.grid_dim));
        ScalarField::from_raw(grid, self.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect())
    }

    /// Number of cells in exactly one of the two masks.
    pub fn symmetric_difference(&self, other: &Self) -> usize {
        self.cells.iter().zip(&other.cells).filter(|(a, b)| a != b).count()
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| a || !b)
    }
}
