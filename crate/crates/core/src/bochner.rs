//! Discrete check of the gradient identity
//!
//! ```text
//! ‖∂̄_1 f‖² = -(Θ_{11̄} f, f) + ‖∇_1 f‖²
//! ```
//!
//! for sections vanishing on the z1-boundary. Nodes next to the z1-boundary
//! (where one-sided stencils are used) are left out of every sum.
//! A twist `K` on the metric means all norms and the curvature are those of
//! `h_K = e^{-K|z|^2} h`.

use rayon::prelude::*;

use crate::bundle::{
    check_z1_boundary_vanishing, chern_curvature, covariant_derivative, twisted_sq_norm, MetricField, SectionField,
};
use crate::error::Result;
use crate::grid::ProductGrid;
use crate::report::CheckRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct GradientIdentity {
    /// `‖∂̄_1 f‖²`
    pub dbar_sq: f64,
    /// `(Θ_{11̄} f, f)`
    pub curvature_term: f64,
    /// `‖∇_1 f‖²`
    pub nabla_sq: f64,
    pub residual: f64,
    /// `residual / max(‖∂̄_1 f‖², ‖∇_1 f‖²)`, 0 when both vanish.
    pub relative_residual: f64,
}

impl GradientIdentity {
    pub fn rhs(&self) -> f64 {
        self.nabla_sq - self.curvature_term
    }

    pub fn to_check(&self, label: &str, relative_tolerance: f64) -> CheckRecord {
        let scale = self.dbar_sq.max(self.nabla_sq);
        CheckRecord::close(label, "gradient-identity", self.dbar_sq, self.rhs(), relative_tolerance * scale)
            .with("relative_residual", self.relative_residual)
            .with("curvature_term", self.curvature_term)
            .with("nabla_sq", self.nabla_sq)
    }
}

pub fn verify_gradient_identity(f: &SectionField, h: &MetricField, grid: &ProductGrid) -> Result<GradientIdentity> {
    check_z1_boundary_vanishing(f, grid)?;
    let inside = |k: usize| !grid.is_factor_boundary(k, 0);
    let dbar = covariant_derivative(f, h, grid, 0, false)?;
    let nabla = covariant_derivative(f, h, grid, 0, true)?;
    let theta = chern_curvature(h, grid)?;
    let r = f.rank();
    let curv: f64 = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !inside(k) {
                return 0.0;
            }
            let t = theta.twisted_component(h, grid, k, 0, 0);
            let v = f.at(k);
            let mut s = 0.0;
            for a in 0..r {
                for b in 0..r {
                    s += (t[a * r + b] * v[a] * v[b].conj()).re;
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        * grid.cell_volume();
    let dbar_sq = twisted_sq_norm(&dbar, h, grid, inside);
    let nabla_sq = twisted_sq_norm(&nabla, h, grid, inside);
    let residual = (dbar_sq - (nabla_sq - curv)).abs();
    let scale = dbar_sq.max(nabla_sq);
    Ok(GradientIdentity {
        dbar_sq,
        curvature_term: curv,
        nabla_sq,
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}
