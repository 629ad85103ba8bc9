//! Superlevel-set geometry of two-dimensional fields: contours, perimeter,
//! area, inner and outer radii, and the Bonnesen deficit.
//!
//! Contours come from marching squares on the periodic lattice of cell
//! values, with bilinear interpolation along edges and saddles resolved by
//! the cell-center average. Contours are oriented with the superlevel set on
//! the left, so the shoelace sum over all loops of a set contained in a disk
//! is its area.

use alloc::vec;
use alloc::vec::Vec;

use crate::energy::{ModelParams, Potential};
use crate::error::{Error, Result};
use crate::field::{BinaryMask, Grid, ScalarField};
use crate::math::{self, ExactSum};

fn require_plane(grid: &Grid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, actual: grid.dim() });
    }
    Ok(())
}

/// Superlevel mask together with its number of periodic 4-connected components.
#[derive(Debug, Clone)]
pub struct Superlevel {
    pub mask: BinaryMask,
    pub components: usize,
}

pub fn superlevel_mask(u: &ScalarField, level: f64) -> Result<Superlevel> {
    require_plane(u.grid())?;
    let mask = BinaryMask::superlevel(u, level);
    let components = component_count(&mask)?;
    Ok(Superlevel { mask, components })
}

/// Number of 4-connected components of a two-dimensional periodic mask.
pub fn component_count(mask: &BinaryMask) -> Result<usize> {
    if mask.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, actual: mask.dim() });
    }
    let n = mask.n();
    let cells = mask.cells();
    let mut seen = vec![false; cells.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..cells.len() {
        if !cells[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k / n, k % n);
            let neighbors = [
                ((i + 1) % n) * n + j,
                ((i + n - 1) % n) * n + j,
                i * n + (j + 1) % n,
                i * n + (j + n - 1) % n,
            ];
            for m in neighbors {
                if cells[m] && !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
    }
    Ok(count)
}

/// Cell corners in counterclockwise order in the `(x, y)` plane. Edge `k`
/// runs from corner `k` to corner `k + 1`.
const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

#[derive(Debug, Clone, Copy)]
struct Segment {
    /// Endpoints in grid units, unwrapped relative to the cell.
    from: [f64; 2],
    to: [f64; 2],
    from_edge: usize,
    to_edge: usize,
}

/// Identifier of the lattice edge `k` of cell `(i, j)`, shared with the
/// neighbouring cell.
fn edge_id(n: usize, i: usize, j: usize, k: usize) -> usize {
    let (axis, a, b) = match k {
        0 => (0, i, j),
        1 => (1, i + 1, j),
        2 => (0, i, j + 1),
        _ => (1, i, j),
    };
    (axis * n + a % n) * n + b % n
}

fn segments(u: &ScalarField, level: f64) -> Vec<Segment> {
    let n = u.grid().n();
    let v = u.values();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let vals = CORNERS.map(|(di, dj)| v[((i + di) % n) * n + (j + dj) % n]);
            let above = vals.map(|s| s > level);
            let point = |k: usize| {
                let (a, b) = (CORNERS[k], CORNERS[(k + 1) % 4]);
                let t = (level - vals[k]) / (vals[(k + 1) % 4] - vals[k]);
                [
                    i as f64 + a.0 as f64 + t * (b.0 as f64 - a.0 as f64),
                    j as f64 + a.1 as f64 + t * (b.1 as f64 - a.1 as f64),
                ]
            };
            // Crossings in counterclockwise order, tagged exit (above to below).
            let mut crossings = [(0usize, false); 4];
            let mut m = 0;
            for k in 0..4 {
                if above[k] != above[(k + 1) % 4] {
                    crossings[m] = (k, above[k]);
                    m += 1;
                }
            }
            if m == 0 {
                continue;
            }
            // With four crossings, a center above the level joins the above
            // corners, so each exit pairs with the next entry; otherwise with
            // the previous one. With two crossings both rules agree.
            let center_above = 0.25 * (vals[0] + vals[1] + vals[2] + vals[3]) > level;
            for c in 0..m {
                let (k, exit) = crossings[c];
                if !exit {
                    continue;
                }
                let partner = if center_above { crossings[(c + 1) % m].0 } else { crossings[(c + m - 1) % m].0 };
                out.push(Segment {
                    from: point(k),
                    to: point(partner),
                    from_edge: edge_id(n, i, j, k),
                    to_edge: edge_id(n, i, j, partner),
                });
            }
        }
    }
    out
}

/// Total length of the level contour of `{u > level}`. Zero for empty or
/// full sets.
pub fn perimeter(u: &ScalarField, level: f64) -> Result<f64> {
    require_plane(u.grid())?;
    let h = u.grid().spacing();
    let len = math::sum(segments(u, level).iter().map(|s| {
        let (dx, dy) = (s.to[0] - s.from[0], s.to[1] - s.from[1]);
        libm::hypot(dx, dy)
    }));
    Ok(h * len)
}

/// Closed contour in physical coordinates on the universal cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Vertices in order, superlevel set on the left; the closing vertex is
    /// not repeated.
    pub points: Vec<[f64; 2]>,
    /// Number of periods the loop wraps along each axis.
    pub winding: [i64; 2],
}

impl Contour {
    pub fn length(&self) -> f64 {
        let m = self.points.len();
        math::sum((0..m).map(|k| {
            let (p, q) = (self.points[k], self.points[(k + 1) % m]);
            libm::hypot(q[0] - p[0], q[1] - p[1])
        }))
    }

    /// Shoelace area; positive for outer boundaries, negative for holes.
    /// Meaningful only for loops with zero winding.
    pub fn signed_area(&self) -> f64 {
        let m = self.points.len();
        let o = self.points[0];
        0.5 * math::sum((0..m).map(|k| {
            let (p, q) = (self.points[k], self.points[(k + 1) % m]);
            (p[0] - o[0]) * (q[1] - o[1]) - (q[0] - o[0]) * (p[1] - o[1])
        }))
    }

    fn translate(&mut self, dx: f64, dy: f64) {
        for p in &mut self.points {
            p[0] += dx;
            p[1] += dy;
        }
    }
}

/// All level contours of `{u > level}`, chained into closed loops.
pub fn contours(u: &ScalarField, level: f64) -> Result<Vec<Contour>> {
    let grid = *u.grid();
    require_plane(&grid)?;
    let n = grid.n();
    let nf = n as f64;
    let segs = segments(u, level);
    let mut by_start = vec![usize::MAX; 2 * n * n];
    for (k, s) in segs.iter().enumerate() {
        by_start[s.from_edge] = k;
    }
    let h = grid.spacing();
    let ell = grid.half_period();
    let to_physical = |p: [f64; 2]| [-ell + h * p[0], -ell + h * p[1]];
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    for first in 0..segs.len() {
        if used[first] {
            continue;
        }
        let mut points = vec![segs[first].from];
        let mut offset = [0.0, 0.0];
        let mut cur = first;
        loop {
            used[cur] = true;
            let s = segs[cur];
            let end = [s.to[0] + offset[0], s.to[1] + offset[1]];
            let next = by_start[s.to_edge];
            if next == usize::MAX || next == first {
                let start = points[0];
                let winding = [
                    libm::round((end[0] - start[0]) / nf) as i64,
                    libm::round((end[1] - start[1]) / nf) as i64,
                ];
                out.push(Contour { points: points.iter().map(|&p| to_physical(p)).collect(), winding });
                break;
            }
            points.push(end);
            let ns = segs[next].from;
            offset = [
                offset[0] + nf * libm::round((end[0] - (ns[0] + offset[0])) / nf),
                offset[1] + nf * libm::round((end[1] - (ns[1] + offset[1])) / nf),
            ];
            cur = next;
        }
    }
    Ok(out)
}

/// Geometry of one superlevel set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetGeometry {
    pub level: f64,
    pub area: f64,
    pub perimeter: f64,
    pub rho_in: f64,
    pub rho_out: f64,
    pub rho_vol: f64,
    pub bonnesen_rhs: f64,
    /// The set fits in an open disk of radius `ℓ` about its periodic
    /// centroid and no contour wraps the torus. When false, `rho_out` is only
    /// a lower bound.
    pub contained_in_disk: bool,
    pub components: usize,
    pub centroid: [f64; 2],
    pub spacing: f64,
}

impl LevelSetGeometry {
    /// Geometric tolerance: `4h` times the isoperimetric ratio
    /// `Per / (2√(π|A|))`, which is 1 for a disk.
    pub fn tol_geom(&self) -> f64 {
        4.0 * self.spacing * (self.perimeter / (2.0 * math::sqrt(math::PI * self.area))).max(1.0)
    }
}

/// Circular mean of the occupied indices along each axis, as coordinates.
/// `None` when an axis has no preferred direction (e.g. a full band).
fn periodic_centroid(grid: &Grid, cells: &[bool]) -> Option<[f64; 2]> {
    let n = grid.n();
    let mut out = [0.0; 2];
    for (axis, slot) in out.iter_mut().enumerate() {
        let mut c = ExactSum::new();
        let mut s = ExactSum::new();
        let mut count = 0usize;
        for (k, _) in cells.iter().enumerate().filter(|(_, &b)| b) {
            let i = if axis == 0 { k / n } else { k % n };
            let theta = 2.0 * math::PI * i as f64 / n as f64;
            c.add(math::cos(theta));
            s.add(math::sin(theta));
            count += 1;
        }
        let (c, s) = (c.total(), s.total());
        if libm::hypot(c, s) <= 1e-9 * count as f64 {
            return None;
        }
        let index = math::atan2(s, c) * n as f64 / (2.0 * math::PI);
        *slot = math::wrap_periodic(-grid.half_period() + grid.spacing() * index, grid.half_period());
    }
    Some(out)
}

/// Geometry of `{u > level}`. Fails when the set is empty or full.
pub fn level_set_geometry(u: &ScalarField, level: f64) -> Result<LevelSetGeometry> {
    let grid = *u.grid();
    require_plane(&grid)?;
    let sup = superlevel_mask(u, level)?;
    let count = sup.mask.count();
    if count == 0 {
        return Err(Error::DegenerateLevelSet { level, kind: "empty" });
    }
    if count == grid.len() {
        return Err(Error::DegenerateLevelSet { level, kind: "full" });
    }
    let h = grid.spacing();
    let ell = grid.half_period();
    let n = grid.n();
    let mut loops = contours(u, level)?;
    let perimeter = h * math::sum(segments(u, level).iter().map(|s| libm::hypot(s.to[0] - s.from[0], s.to[1] - s.from[1])));

    let centroid = periodic_centroid(&grid, sup.mask.cells());
    let c = centroid.unwrap_or([0.0, 0.0]);
    let mut contained = centroid.is_some() && loops.iter().all(|l| l.winding == [0, 0]);

    // Occupied cell centers in the cover about the centroid.
    let mut cell_points = Vec::with_capacity(count);
    for (k, _) in sup.mask.cells().iter().enumerate().filter(|(_, &b)| b) {
        let dx = math::wrap_periodic(grid.coordinate(k / n) - c[0], ell);
        let dy = math::wrap_periodic(grid.coordinate(k % n) - c[1], ell);
        if libm::hypot(dx, dy) >= ell {
            contained = false;
        }
        cell_points.push([c[0] + dx, c[1] + dy]);
    }
    for l in &mut loops {
        let p = l.points[0];
        let dx = math::wrap_periodic(p[0] - c[0], ell) + c[0] - p[0];
        let dy = math::wrap_periodic(p[1] - c[1], ell) + c[1] - p[1];
        l.translate(dx, dy);
        if l.points.iter().any(|q| libm::hypot(q[0] - c[0], q[1] - c[1]) >= ell) {
            contained = false;
        }
    }

    let (area, rho_out, rho_in) = if contained {
        let area = math::sum(loops.iter().map(Contour::signed_area));
        let vertices: Vec<[f64; 2]> = loops.iter().flat_map(|l| l.points.iter().copied()).collect();
        let rho_out = min_enclosing_circle(&vertices).1;
        let rho_in = inner_radius(&sup.mask, &grid, &loops, c);
        (area, rho_out, rho_in)
    } else {
        let area = count as f64 * grid.cell_volume();
        let rho_out = min_enclosing_circle(&cell_points).1;
        let rho_in = (math::sqrt(max_edt(&sup.mask).1) - 0.5) * h;
        (area, rho_out, rho_in)
    };
    let rho_vol = math::sqrt(area / math::PI);
    let dr = rho_out - rho_in;
    let bonnesen_rhs = math::sqrt(math::PI) * math::sqrt(4.0 * area + dr * dr);
    Ok(LevelSetGeometry {
        level,
        area,
        perimeter,
        rho_in,
        rho_out,
        rho_vol,
        bonnesen_rhs,
        contained_in_disk: contained,
        components: sup.components,
        centroid: c,
        spacing: h,
    })
}

/// Radii alone: `(ρ_in, ρ_out, contained_in_disk)`.
pub fn radii(u: &ScalarField, level: f64) -> Result<(f64, f64, bool)> {
    let g = level_set_geometry(u, level)?;
    Ok((g.rho_in, g.rho_out, g.contained_in_disk))
}

/// Minimal enclosing circle `(center, radius)` by Welzl's algorithm over a
/// fixed pseudo-random order.
pub fn min_enclosing_circle(points: &[[f64; 2]]) -> ([f64; 2], f64) {
    if points.is_empty() {
        return ([0.0, 0.0], 0.0);
    }
    let mut p = points.to_vec();
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for k in (1..p.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        p.swap(k, (state % (k as u64 + 1)) as usize);
    }
    let outside = |c: [f64; 2], r: f64, q: [f64; 2]| libm::hypot(q[0] - c[0], q[1] - c[1]) > r * (1.0 + 1e-12) + 1e-15;
    let diameter = |a: [f64; 2], b: [f64; 2]| {
        ([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])], 0.5 * libm::hypot(a[0] - b[0], a[1] - b[1]))
    };
    let (mut c, mut r) = (p[0], 0.0);
    for i in 1..p.len() {
        if !outside(c, r, p[i]) {
            continue;
        }
        (c, r) = (p[i], 0.0);
        for j in 0..i {
            if !outside(c, r, p[j]) {
                continue;
            }
            (c, r) = diameter(p[i], p[j]);
            for k in 0..j {
                if outside(c, r, p[k]) {
                    (c, r) = circumcircle(p[i], p[j], p[k]);
                }
            }
        }
    }
    (c, r)
}

fn circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> ([f64; 2], f64) {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d == 0.0 {
        // Collinear: the circle on the farthest pair.
        let pairs = [(a, b), (a, c), (b, c)];
        let (p, q) = pairs
            .into_iter()
            .max_by(|x, y| {
                let lx = libm::hypot(x.0[0] - x.1[0], x.0[1] - x.1[1]);
                let ly = libm::hypot(y.0[0] - y.1[0], y.0[1] - y.1[1]);
                lx.total_cmp(&ly)
            })
            .unwrap_or((a, b));
        return ([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])], 0.5 * libm::hypot(p[0] - q[0], p[1] - q[1]));
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ([a[0] + ux, a[1] + uy], libm::hypot(ux, uy))
}

/// Squared Euclidean distance (grid units) from every cell to the nearest
/// cell outside the mask, on the periodic lattice.
pub fn distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let n = mask.n();
    let big = 1e30;
    let mut d: Vec<f64> = mask.cells().iter().map(|&b| if b { big } else { 0.0 }).collect();
    let mut line = vec![0.0; 3 * n];
    let mut out = vec![0.0; 3 * n];
    let mut buf = EnvelopeBuffers::new(3 * n);
    for axis in [1usize, 0] {
        for base in 0..n {
            let at = |t: usize| if axis == 1 { base * n + t } else { t * n + base };
            for t in 0..3 * n {
                line[t] = d[at(t % n)];
            }
            lower_envelope(&line, big, &mut out, &mut buf);
            for t in 0..n {
                d[at(t)] = out[n + t];
            }
        }
    }
    d
}

struct EnvelopeBuffers {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl EnvelopeBuffers {
    fn new(len: usize) -> Self {
        Self { v: vec![0; len], z: vec![0.0; len + 1] }
    }
}

/// One-dimensional squared distance transform (Felzenszwalb and
/// Huttenlocher): `out[q] = min_p (q − p)² + f[p]` over the samples with
/// `f[p] < big`.
fn lower_envelope(f: &[f64], big: f64, out: &mut [f64], buf: &mut EnvelopeBuffers) {
    let (v, z) = (&mut buf.v, &mut buf.z);
    let mut finite = f.iter().enumerate().filter(|(_, &x)| x < big).map(|(p, _)| p);
    let Some(first) = finite.next() else {
        out.fill(big);
        return;
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
    for q in finite {
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Cell with the largest distance to the complement and that squared distance.
fn max_edt(mask: &BinaryMask) -> (usize, f64) {
    distance_transform(mask)
        .into_iter()
        .enumerate()
        .fold((0, 0.0), |best, (k, d)| if d > best.1 { (k, d) } else { best })
}

fn distance_to_contours(p: [f64; 2], loops: &[Contour]) -> f64 {
    let mut best = f64::INFINITY;
    for l in loops {
        let m = l.points.len();
        for k in 0..m {
            let (a, b) = (l.points[k], l.points[(k + 1) % m]);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len2 = ex * ex + ey * ey;
            let t = if len2 > 0.0 { (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = libm::hypot(p[0] - a[0] - t * ex, p[1] - a[1] - t * ey);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Inscribed radius: the deepest cells of the distance transform seed a
/// compass search for the point farthest from the contours.
fn inner_radius(mask: &BinaryMask, grid: &Grid, loops: &[Contour], c: [f64; 2]) -> f64 {
    let n = grid.n();
    let h = grid.spacing();
    let ell = grid.half_period();
    let edt = distance_transform(mask);
    let deepest = edt.iter().copied().fold(0.0, f64::max);
    let floor = (math::sqrt(deepest) - 1.0).max(0.0);
    let mut seeds: Vec<(f64, usize)> =
        edt.iter().enumerate().filter(|(_, &d)| d >= floor * floor && d > 0.0).map(|(k, &d)| (d, k)).collect();
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    seeds.truncate(16);
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2),
        (core::f64::consts::FRAC_1_SQRT_2, -core::f64::consts::FRAC_1_SQRT_2),
        (-core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2),
        (-core::f64::consts::FRAC_1_SQRT_2, -core::f64::consts::FRAC_1_SQRT_2),
    ];
    let mut best = 0.0f64;
    for (_, k) in seeds {
        let mut p = [
            c[0] + math::wrap_periodic(grid.coordinate(k / n) - c[0], ell),
            c[1] + math::wrap_periodic(grid.coordinate(k % n) - c[1], ell),
        ];
        let mut d = distance_to_contours(p, loops);
        let mut step = 0.5 * h;
        while step > 1e-4 * h {
            let mut moved = false;
            for (dx, dy) in DIRS {
                let s = step.min(0.5 * d);
                let q = [p[0] + s * dx, p[1] + s * dy];
                let dq = distance_to_contours(q, loops);
                if dq > d {
                    (p, d, moved) = (q, dq, true);
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(d);
    }
    best
}

/// Outcome of the Bonnesen comparison `Per ≥ √π (4|A| + (ρ_out − ρ_in)²)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonnesenCheck {
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Fails with [`Error::DegenerateLevelSet`] when the set is not a single
/// component contained in a disk.
pub fn bonnesen_check(g: &LevelSetGeometry) -> Result<BonnesenCheck> {
    if !g.contained_in_disk {
        return Err(Error::DegenerateLevelSet { level: g.level, kind: "not contained in a disk" });
    }
    if g.components != 1 {
        return Err(Error::DegenerateLevelSet { level: g.level, kind: "not connected" });
    }
    let slack = g.perimeter - g.bonnesen_rhs;
    let tolerance = g.tol_geom();
    Ok(BonnesenCheck { slack, tolerance, holds: slack >= -tolerance })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericityRow {
    pub geometry: LevelSetGeometry,
    /// `ρ_out − r_ω`.
    pub outer_deviation: f64,
    /// `r_ω − ρ_in`.
    pub inner_deviation: f64,
    pub delta_rho: f64,
    /// `|A| − ω`.
    pub area_deviation: f64,
    pub bonnesen_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericityReport {
    pub r_omega: f64,
    pub rows: Vec<SphericityRow>,
    /// Levels left out, with the reason.
    pub excluded: Vec<(f64, &'static str)>,
}

pub fn sphericity_report(u: &ScalarField, params: &ModelParams, levels: &[f64]) -> Result<SphericityReport> {
    require_plane(u.grid())?;
    let r_omega = params.r_omega();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for &level in levels {
        let geometry = match level_set_geometry(u, level) {
            Ok(g) => g,
            Err(Error::DegenerateLevelSet { kind, .. }) => {
                excluded.push((level, kind));
                continue;
            }
            Err(e) => return Err(e),
        };
        if !geometry.contained_in_disk {
            excluded.push((level, "not contained in a disk"));
            continue;
        }
        rows.push(SphericityRow {
            outer_deviation: geometry.rho_out - r_omega,
            inner_deviation: r_omega - geometry.rho_in,
            delta_rho: geometry.rho_out - geometry.rho_in,
            area_deviation: geometry.area - params.omega,
            bonnesen_slack: bonnesen_check(&geometry).ok().map(|b| b.slack),
            geometry,
        });
    }
    Ok(SphericityReport { r_omega, rows, excluded })
}

/// Constants of the two-dimensional droplet regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeConstants {
    /// `∫_{−1}^{1} √(2G)`.
    pub c0: f64,
    pub xi_tilde_2: f64,
    pub xi_2: f64,
    pub r_omega: f64,
    /// Whether `ξ̃₂ < ξ ≤ ξ₂`.
    pub xi_in_range: bool,
}

pub fn regime_constants(params: &ModelParams, potential: &impl Potential) -> Result<RegimeConstants> {
    let c0 = adaptive_simpson(&|s| math::sqrt(2.0 * potential.value(s).max(0.0)), -1.0, 1.0, 1e-10)?;
    let xi_tilde_2 = 3.0 * math::cbrt(c0 * c0 * math::PI) / math::pow(2.0, 5.0 / 3.0);
    let xi_2 = core::f64::consts::SQRT_2 * xi_tilde_2;
    Ok(RegimeConstants {
        c0,
        xi_tilde_2,
        xi_2,
        r_omega: params.r_omega(),
        xi_in_range: params.xi > xi_tilde_2 && params.xi <= xi_2,
    })
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> core::result::Result<f64, (f64, f64)> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            return Err((left + right, err.abs()));
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
        .map_err(|(estimate, error)| Error::Quadrature { estimate, error })
}

/// Weighted perimeter deficit
/// `∫ √(2G(t)) (Per{u > t} − 2√(π|{u > t}|)) dt` over
/// `[−1 + φ^{1/3}, 1 − φ^{1/3}]`, by the trapezoid rule on `samples` levels.
/// The weight uses the model potential itself.
pub fn interface_deficit(u: &ScalarField, phi: f64, potential: &impl Potential, samples: usize) -> Result<f64> {
    require_plane(u.grid())?;
    let samples = samples.max(2);
    let a = -1.0 + math::cbrt(phi);
    let b = 1.0 - math::cbrt(phi);
    let step = (b - a) / (samples - 1) as f64;
    let mut total = ExactSum::new();
    for k in 0..samples {
        let t = a + step * k as f64;
        let deficit = match level_set_geometry(u, t) {
            Ok(g) => g.perimeter - 2.0 * math::sqrt(math::PI * g.area),
            Err(Error::DegenerateLevelSet { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        let w = if k == 0 || k == samples - 1 { 0.5 } else { 1.0 };
        total.add(w * step * math::sqrt(2.0 * potential.value(t).max(0.0)) * deficit);
    }
    Ok(total.total())
}
