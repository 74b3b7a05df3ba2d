//! Closed-form neural kernels over finite-group orbits and the spectral
//! analysis of their Gram matrices.
//!
//! The library is organized around one numeric pipeline:
//!
//! 1. [`datasets`] builds group orbits (circular point sets in R^3, image
//!    translation/rotation orbits, a signed-permutation orbit on 2x2 images)
//!    with interleaved +-1 labels.
//! 2. [`kernels`] evaluates closed-form kernels (RBF, infinite-width ReLU
//!    MLP in NNGP/NTK mode, one-layer convolutional kernels with FC or GAP
//!    readout) and assembles Gram matrices.
//! 3. [`spectral`] analyzes circulant Gram matrices through the DFT: the
//!    spectral prediction error on a held-out orbit point, the multi-point
//!    linear system, diagonal-wise circularization, and exact GP regression
//!    as the independent cross-check.
//! 4. [`groups`] generalizes the cyclic machinery to arbitrary constructible
//!    finite groups (cyclic, D4, direct products) via unitary irreducible
//!    representations and the generalized Fourier transform.
//! 5. [`experiments`] composes the above into reproducible sweep/scatter
//!    drivers; [`finite_width`] samples finite-width random networks as a
//!    Monte-Carlo oracle for the closed-form kernels.
//!
//! All numeric code is generic over a [`Scalar`] floating-point type; the
//! crate-level aliases pin the default precision used by the experiment
//! drivers and the CLI.

// Index loops mirror the matrix notation, and negated comparisons keep NaN
// rejection explicit in validation guards.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use thiserror::Error;

pub mod datasets;
pub mod experiments;
pub mod finite_width;
pub mod groups;
pub mod kernels;
pub mod linalg;
pub mod spectral;

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented by `f32` and `f64`. Tolerances quoted throughout the crate
/// documentation assume `f64`; `f32` works but needs looser thresholds.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting literal constants.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert")
    }

    /// Lossy view as f64, used for diagnostics in errors.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Sum
        + fmt::Debug
        + fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Default precision for the experiment drivers and the CLI.
pub type Real = f64;

/// Complex number over the default precision.
pub type Complex = num_complex::Complex<Real>;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("group order must be positive")]
    InvalidOrder,

    #[error("composition table is not a group: {0}")]
    InvalidGroup(&'static str),

    #[error("no irrep construction for this group family")]
    UnsupportedGroup,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("size must be even, got {0}")]
    OddSize(usize),

    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("kernel Fourier block for irrep {irrep} is singular (rcond {rcond:.3e})")]
    SingularKernelBlock { irrep: usize, rcond: f64 },

    #[error("matrix is not group-stationary (max deviation {max_dev:.3e})")]
    NotStationary { max_dev: f64 },

    #[error("Nyquist eigenvalue is numerically zero: the two classes are collapsed in kernel space")]
    DegenerateNyquist,

    #[error("linear system is singular or underdetermined")]
    Underdetermined,

    #[error("solve failed: matrix ill-conditioned (pivot {pivot:.3e})")]
    IllConditioned { pivot: f64 },

    #[error("gram matrix violates positive semidefiniteness beyond tolerance")]
    NotPositiveSemidefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("image must be square, got {0} pixels")]
    NotSquareImage(usize),

    #[error("stride {stride} does not divide image side {side}")]
    StrideMismatch { stride: usize, side: usize },

    #[error("cannot normalize a zero-norm point")]
    ZeroNorm,

    #[error("train/test sets must partition 0..{size}")]
    BadPartition { size: usize },

    #[error("idx format error: {0}")]
    IdxFormat(String),

    #[error("idx payload truncated: expected {expected} bytes, got {got}")]
    IdxLength { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
