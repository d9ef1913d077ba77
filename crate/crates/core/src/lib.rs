//! Concavity powers of even log-concave measures on planar convex bodies.
//!
//! The crate computes `p(μ, K)` for a measure `dμ = e^{-u} dx` and a convex
//! body `K` given by its support function, through a trigonometric Galerkin
//! discretization of a boundary elliptic operator, and checks the
//! Brunn–Minkowski-type inequalities and integral identities that surround it.

pub mod body;
pub mod cli;
pub mod config;
pub mod error;
pub mod measure;
pub mod operator;
pub mod quad;
pub mod report;
pub mod scan;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
