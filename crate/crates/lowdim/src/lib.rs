//! Recovery of structured matrices from rank-1 bilinear measurements, at
//! problem sizes where exact oracles are feasible.
//!
//! The crate is organized around six pieces:
//!
//! * [`measurement`] — measurement ensembles `y_i = a_i^T X b_i`, the general
//!   trace-inner-product map, adjoints, and support-restricted linearizations.
//! * [`setmodel`] — a descriptor algebra for structured matrix sets (sparse,
//!   low rank, orthogonal, products, sums, Kronecker products, difference
//!   sets, fractal attractors) with a symbolic dimension calculus and the
//!   measurement-count thresholds it implies.
//! * [`rifs`] — recurrent iterated function systems: validation, contraction
//!   dimension via Perron–Frobenius root finding, and attractor sampling by a
//!   recurrent chaos game.
//! * [`dimest`] — covering numbers and box-counting (Minkowski) dimension
//!   estimation from point clouds.
//! * [`recovery`] — decoders (exhaustive sparse search, alternating least
//!   squares, projected gradient), an exact null-space-property oracle,
//!   Hölder-quotient estimation, and small-ball concentration bounds.
//! * [`harness`] — seeded, reproducible experiment runners behind the
//!   `lowdim-mc` CLI, emitting CSV/JSON.

pub mod dimest;
pub mod harness;
pub mod measurement;
pub mod recovery;
pub mod rifs;
pub mod rng;
pub mod setmodel;

/// Dense real matrix; the object being measured and recovered.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;

/// True when every entry of `x` is finite (no NaN or infinity).
pub fn all_finite(x: &Matrix) -> bool {
    x.iter().all(|v| v.is_finite())
}
