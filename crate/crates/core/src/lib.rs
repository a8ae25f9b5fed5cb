//! Discrete verification of singular-kernel potential bounds, the Cauchy
//! transform, the gradient identity for Hermitian bundles, Moser-type norm
//! iteration constants and a weighted ∂̄ least-squares solver on polydisks.

pub mod bochner;
pub mod bundle;
pub mod catalog;
pub mod cli;
pub mod cauchy;
pub mod dbar;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod moser;
pub mod potential;
pub mod report;
pub mod suites;

pub use error::{Error, Result};
