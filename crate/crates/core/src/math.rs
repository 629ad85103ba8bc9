//! Floating point helpers shared by every module.
//!
//! Transcendental functions come from `libm` so that results are identical on
//! every target. Sums go through [`ExactSum`], which returns the correctly
//! rounded value of the exact sum of its inputs (Shewchuk's algorithm with the
//! final half-way correction used by Python's `math.fsum`).

use alloc::vec::Vec;

pub use libm::{acos, atan2, cbrt, cos, exp, log, pow, sin, sqrt, tanh};

pub const PI: f64 = core::f64::consts::PI;

/// Accumulator whose total is the correctly rounded sum of all added terms.
///
/// The total is independent of the order in which terms are added.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                core::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn total(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round half-way cases the way the infinite-precision sum would.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Correctly rounded sum of an iterator of finite values.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    acc.extend(values);
    acc.total()
}

/// Correctly rounded `Σ a_i b_i` (each product rounded once).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Correctly rounded `Σ a_i²`.
pub fn sum_squares(a: &[f64]) -> f64 {
    sum(a.iter().map(|x| x * x))
}

/// Reduces `i` modulo `n` into `0..n`.
#[inline]
pub fn wrap_index(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Maps a length onto the symmetric period `[-half, half)`.
#[inline]
pub fn wrap_periodic(x: f64, half: f64) -> f64 {
    let period = 2.0 * half;
    let mut y = x - period * libm::floor((x + half) / period);
    if y >= half {
        y -= period;
    }
    if y < -half {
        y += period;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_sum_recovers_cancelled_terms() {
        assert_eq!(sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(sum([0.1; 10]), 1.0);
        assert_eq!(sum(vec![]), 0.0);
    }

    #[test]
    fn exact_sum_is_order_independent() {
        let mut v: Vec<f64> = (0..1000)
            .map(|i| libm::sin(i as f64 * 1.7) * libm::pow(10.0, (i % 17) as f64 - 8.0))
            .collect();
        let forward = sum(v.iter().copied());
        v.reverse();
        assert_eq!(forward.to_bits(), sum(v.iter().copied()).to_bits());
        v.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(forward.to_bits(), sum(v.iter().copied()).to_bits());
    }

    #[test]
    fn periodic_wrap() {
        assert_eq!(wrap_periodic(1.5, 1.0), -0.5);
        assert_eq!(wrap_periodic(-1.0, 1.0), -1.0);
        assert_eq!(wrap_periodic(1.0, 1.0), -1.0);
        assert_eq!(wrap_index(-1, 4), 3);
        assert_eq!(wrap_index(9, 4), 1);
    }
}
