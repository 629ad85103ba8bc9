//! Rearrangements, constrained Cahn-Hilliard minimization and superlevel-set
//! geometry for scalar fields on the flat periodic torus `[-ℓ, ℓ)^d`.
//!
//! The crate is `no_std` and only needs `alloc`. It is organised as
//!
//! * [`field`]: the periodic [`Grid`](field::Grid), [`ScalarField`](field::ScalarField),
//!   reflections, shifts, norms and shift alignment;
//! * [`rearrange`]: Steiner symmetrization, two-point rearrangement (polarization),
//!   distribution functions and bump structure of columns;
//! * [`energy`]: the Cahn-Hilliard energy, volume cutoff, variational derivative,
//!   Euler-Lagrange residual and Lagrange multiplier fits;
//! * [`minimize`]: feasible initial droplets, constraint projection, projected
//!   gradient descent and the symmetry audit of computed minimizers;
//! * [`geom`]: superlevel-set geometry in two dimensions (perimeter, radii,
//!   Bonnesen deficit, sphericity tables, regime constants).
//!
//! Every reduction (means, norms, energies, inner products) is computed with a
//! correctly rounded sum, so the result does not depend on summation order.
//! Rearrangements only permute cells, hence quantities that are invariant in
//! exact arithmetic are bitwise invariant here as well.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod energy;
pub mod error;
pub mod field;
pub mod geom;
pub mod math;
pub mod minimize;
pub mod rearrange;

pub use error::{Error, Result};
pub use field::{AxisShift, BinaryMask, Grid, ScalarField};
