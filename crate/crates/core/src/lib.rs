//! Fourier-side evaluation of the linearized two-phase Stokes semigroup with
//! surface tension and gravity.
//!
//! The interface height `H`, velocity `U` and pressure `P` are assembled from
//! contour integrals in the Laplace variable `λ` at each tangential frequency
//! `ξ'`. The boundary symbol `L(A, λ)` (with `A = |ξ'|`) controls everything:
//! its two slow zeros `λ±(A)` produce the algebraic decay of the low band,
//! while mid and high frequencies decay exponentially.

pub mod cli;
pub mod contours;
pub mod decay;
pub mod error;
pub mod kernels;
pub mod layers;
pub mod oracles;
pub mod quadrature;
pub mod roots;
pub mod symbols;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
