//! Cauchy integral formula for smooth, not necessarily holomorphic,
//! functions on disks and annuli:
//!
//! ```text
//! φ(z) = (1/2πi) ∮ φ(ζ)/(ζ - z) dζ  -  (1/π) ∬ ∂̄φ(ζ)/(ζ - z) dA(ζ)
//! ```
//!
//! The area term is a midpoint sum in which the cell containing `z` is
//! integrated in closed form.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::catalog::PlanarFunction;
use crate::error::{Error, Result};
use crate::grid::{build_disk_grid, wirtinger_derivatives, PlanarDomainGrid, ScalarField};
use crate::report::CheckRecord;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Values on a circle `|ζ| = radius` at angles `2πk/M`.
#[derive(Clone, Debug)]
pub struct CircleSamples {
    pub radius: f64,
    pub values: Vec<Complex64>,
    /// Orientation as part of the domain boundary (inner circles of an
    /// annulus run clockwise).
    pub counterclockwise: bool,
}

impl CircleSamples {
    pub fn sample(radius: f64, samples: usize, counterclockwise: bool, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..samples)
            .map(|k| f(Complex64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64)))
            .collect();
        Self {
            radius,
            values,
            counterclockwise,
        }
    }

    pub fn point(&self, k: usize) -> Complex64 {
        Complex64::from_polar(self.radius, 2.0 * PI * k as f64 / self.values.len() as f64)
    }
}

/// Trapezoidal rule for `(1/2πi) ∮ φ(ζ)/(ζ - z) dζ` over the given circles.
///
/// Rejects `z` closer to a circle than one sample arc length.
pub fn cauchy_boundary_integral(boundary: &[CircleSamples], z: Complex64) -> Result<Complex64> {
    let mut total = ZERO;
    for circle in boundary {
        let m = circle.values.len();
        if m == 0 {
            return Err(Error::InvalidParameter("circle without samples".into()));
        }
        let arc = 2.0 * PI * circle.radius / m as f64;
        let dist = (z.norm() - circle.radius).abs();
        if dist < arc {
            return Err(Error::TooCloseToBoundary {
                point: format!("{z}"),
                distance: dist,
                minimum: arc,
            });
        }
        // dζ = i ζ dθ, so the summand is φ ζ/(ζ - z) dθ / 2π
        let s: Complex64 = (0..m)
            .map(|k| {
                let zeta = circle.point(k);
                circle.values[k] * zeta / (zeta - z)
            })
            .sum();
        let sign = if circle.counterclockwise { 1.0 } else { -1.0 };
        total += s * (sign / m as f64);
    }
    Ok(total)
}

/// Corner combination `F(b,d) - F(a,d) - F(b,c) + F(a,c)`.
fn corners<T: std::ops::Add<Output = T> + std::ops::Sub<Output = T>>(
    f: impl Fn(f64, f64) -> T,
    (a, b): (f64, f64),
    (c, d): (f64, f64),
) -> T {
    f(b, d) - f(a, d) - f(b, c) + f(a, c)
}

/// `x ln(x^2 + y^2)` and friends with the removable singularity at 0.
fn xlog(x: f64, r2: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * r2.ln()
    }
}

fn xatan(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (y / x).atan()
    }
}

fn xasinh(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (y / x.abs()).asinh()
    }
}

/// `∬_{[u0,u1]x[v0,v1]} du dv / (u + iv)` in closed form.
pub fn cell_integral_inverse(u: (f64, f64), v: (f64, f64)) -> Complex64 {
    // ∂u∂v P = u/(u²+v²), ∂u∂v Q = v/(u²+v²)
    let p = |x: f64, y: f64| xatan(x, y) + 0.5 * xlog(y, x * x + y * y);
    let q = |x: f64, y: f64| xatan(y, x) + 0.5 * xlog(x, x * x + y * y);
    Complex64::new(corners(p, u, v), -corners(q, u, v))
}

/// `∬_{[u0,u1]x[v0,v1]} du dv / |u + iv|` in closed form.
pub fn cell_integral_inverse_abs(u: (f64, f64), v: (f64, f64)) -> f64 {
    corners(|x, y| xasinh(x, y) + xasinh(y, x), u, v)
}

/// Cell of `node` as offsets from `z`.
fn cell_offsets(grid: &PlanarDomainGrid, node: usize, z: Complex64) -> ((f64, f64), (f64, f64)) {
    let c = grid.node(node) - z;
    let hh = 0.5 * grid.spacing();
    ((c.re - hh, c.re + hh), (c.im - hh, c.im + hh))
}

/// `-(1/π) ∬ ∂̄φ(ζ)/(ζ - z) dA` with the cell nearest to `z` integrated
/// exactly.
pub fn cauchy_area_integral(dbar_phi: &ScalarField, grid: &PlanarDomainGrid, z: Complex64) -> Result<Complex64> {
    if dbar_phi.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, grid has {} nodes",
            dbar_phi.len(),
            grid.len()
        )));
    }
    let own = grid.nearest_node(z);
    let area = grid.cell_area();
    let mut s = ZERO;
    for (k, (zeta, d)) in grid.nodes().iter().zip(dbar_phi.values()).enumerate() {
        if *d == ZERO {
            continue;
        }
        if k == own {
            let (u, v) = cell_offsets(grid, k, z);
            s += d * cell_integral_inverse(u, v);
        } else {
            s += d * area / (zeta - z);
        }
    }
    Ok(-s / PI)
}

/// `(1/π) ∬ |g(ζ)|/|ζ - z| dA` with the same self-cell treatment.
pub fn abs_kernel_integral(g: &ScalarField, grid: &PlanarDomainGrid, z: Complex64) -> f64 {
    let own = grid.nearest_node(z);
    let area = grid.cell_area();
    let mut s = 0.0;
    for (k, (zeta, d)) in grid.nodes().iter().zip(g.values()).enumerate() {
        let m = d.norm();
        if m == 0.0 {
            continue;
        }
        if k == own {
            let (u, v) = cell_offsets(grid, k, z);
            s += m * cell_integral_inverse_abs(u, v);
        } else {
            s += m * area / (zeta - z).norm();
        }
    }
    s / PI
}

/// Lipschitz boundary-vanishing test on a planar grid (see
/// [`crate::bundle::check_z1_boundary_vanishing`]).
pub fn check_planar_boundary_vanishing(phi: &ScalarField, grid: &PlanarDomainGrid) -> Result<()> {
    let (dz, dzb) = wirtinger_derivatives(phi, grid)?;
    let lip = dz
        .values()
        .iter()
        .zip(dzb.values())
        .map(|(a, b)| a.norm() + b.norm())
        .fold(0.0, f64::max);
    let tol = 1e-8 * phi.max_abs() + 1.5 * grid.spacing() * lip;
    for k in 0..grid.len() {
        let v = phi.values()[k].norm();
        if grid.is_boundary(k) && v > tol {
            return Err(Error::BoundaryNotVanishing {
                node: k,
                value: v,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// `|φ(z)| <= (1/π) ∬ |∂̄φ|/|ζ - z| dA` at every interior node, with `∂̄φ`
/// taken from the grid stencil. Tolerance `2 spacing max|∂̄φ|`.
pub fn kernel_bound_check(phi: &ScalarField, grid: &PlanarDomainGrid) -> Result<CheckRecord> {
    check_planar_boundary_vanishing(phi, grid)?;
    let (_, dbar) = wirtinger_derivatives(phi, grid)?;
    let tol = 2.0 * grid.spacing() * dbar.max_abs();
    let worst = (0..grid.len())
        .into_par_iter()
        .filter(|&k| !grid.is_boundary(k))
        .map(|k| {
            let lhs = phi.values()[k].norm();
            let rhs = abs_kernel_integral(&dbar, grid, grid.node(k));
            (lhs - rhs, lhs, rhs)
        })
        .reduce(
            || (f64::NEG_INFINITY, 0.0, 0.0),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 > a.1) { b } else { a },
        );
    let (lhs, rhs) = if worst.0.is_finite() { (worst.1, worst.2) } else { (0.0, 0.0) };
    Ok(CheckRecord::le("kernel bound (worst node)", "cauchy-kernel-bound", lhs, rhs, tol)
        .with("spacing", grid.spacing()))
}

/// Reconstruction of a catalog function from its area integral alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub spacing: f64,
    /// max |area integral - φ| / max|φ| over nodes at least `margin` cells
    /// inside the unit circle.
    pub max_relative_error: f64,
    pub nodes_checked: usize,
}

pub fn reconstruct_catalog(f: PlanarFunction, spacing: f64, margin: f64) -> Result<Reconstruction> {
    let grid = build_disk_grid(1.0, spacing)?;
    let dbar = grid.sample(|z| f.dbar(z));
    let scale = grid.nodes().iter().map(|z| f.value(*z).norm()).fold(0.0, f64::max);
    let inner: Vec<usize> = (0..grid.len())
        .filter(|&k| 1.0 - grid.node(k).norm() >= margin * spacing)
        .collect();
    let err = inner
        .par_iter()
        .map(|&k| {
            let z = grid.node(k);
            let rec = cauchy_area_integral(&dbar, &grid, z).expect("shapes agree");
            (rec - f.value(z)).norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(Reconstruction {
        spacing,
        max_relative_error: err / scale,
        nodes_checked: inner.len(),
    })
}
