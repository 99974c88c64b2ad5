//! Numerics for screened Laplace equations posed on trace spaces.
//!
//! The crate covers the lifting map between particle coordinates and the
//! higher-dimensional space of positions and pair differences
//! ([`tspace`]), the volume-ratio function and concentration bounds for that
//! map ([`concentration`]), exponential-sum approximations of `1/r`
//! ([`expsum`]), closed-form solves for Gaussian right-hand sides
//! ([`gausscalc`]) and a family of Fourier-side mollifiers ([`smoothing`]).
//! [`problem`] reads and writes the TOML problem and solution files.

pub mod concentration;
pub mod error;
pub mod expsum;
pub mod gausscalc;
pub mod problem;
pub mod quadrature;
pub mod smoothing;
pub mod tspace;

pub use error::{Error, Result};
pub use tspace::{Permutation, PermutationAction, SystemDims};
