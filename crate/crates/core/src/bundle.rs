//! Hermitian metrics, sections and Chern curvature on a single trivializing
//! chart over a [`ProductGrid`].
//!
//! Conventions. A metric is stored per node as the matrix `H[a][b] = h_{a b̄}`
//! so that `|f|^2 = f^T H conj(f)`. The Chern connection in direction `z_j` is
//!
//! ```text
//! ∇_j f = ∂_j f + G^{-1} (∂_j G) f,   G = H^T,
//! ```
//!
//! which is the unique connection with `∂_j <f, g> = <∇_j f, g> + <f, ∂̄_j g>`.
//! The curvature stored in [`CurvatureField`] is the lowered form
//!
//! ```text
//! Θ_{j k̄} = -∂_j ∂_{k̄} H + (∂_j H) H^{-1} (∂_{k̄} H),
//! ```
//!
//! so that `f^T Θ_{1 1̄} conj(f) = <[∇_1, ∂̄_1] f, f>`. With this sign a weight
//! `h = e^{-φ}` on a line bundle has `Θ = φ_{z z̄} h`, and the gradient
//! identity `‖∂̄_1 f‖² = -(Θ_{11̄} f, f) + ‖∇_1 f‖²` holds for sections vanishing
//! on the z1-boundary (checked numerically in `bochner`).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ProductGrid, Quadrature, ScalarField, Wirtinger};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct MetricField {
    rank: usize,
    values: Vec<Complex64>,
    twist: f64,
}

impl MetricField {
    /// Validates Hermitian symmetry (to 1e-12) and positive definiteness at
    /// every node.
    pub fn new(rank: usize, values: Vec<Complex64>) -> Result<Self> {
        if rank == 0 || values.len() % (rank * rank) != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} metric values are not a whole number of {rank}x{rank} blocks",
                values.len()
            )));
        }
        let m = Self {
            rank,
            values,
            twist: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_fn(
        grid: &ProductGrid,
        rank: usize,
        f: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync,
    ) -> Result<Self> {
        let blocks: Vec<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(&grid.coords(k)))
            .collect();
        Self::new(rank, blocks.concat())
    }

    pub fn identity(grid: &ProductGrid, rank: usize) -> Self {
        let id = linalg::identity(rank);
        Self {
            rank,
            values: id.repeat(grid.len()),
            twist: 0.0,
        }
    }

    /// Records the extra weight `e^{-K|z|^2}` (the metric `h_K`).
    pub fn with_twist(mut self, k: f64) -> Self {
        self.twist = k;
        self
    }

    fn validate(&self) -> Result<()> {
        let r = self.rank;
        self.values
            .par_chunks(r * r)
            .enumerate()
            .try_for_each(|(node, h)| {
                if linalg::hermitian_deviation(h, r) > 1e-12 || linalg::cholesky(h, r).is_none() {
                    Err(Error::NotPositiveDefinite { node })
                } else {
                    Ok(())
                }
            })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn len(&self) -> usize {
        self.values.len() / (self.rank * self.rank)
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn twist(&self) -> f64 {
        self.twist
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn at(&self, k: usize) -> &[Complex64] {
        let rr = self.rank * self.rank;
        &self.values[k * rr..(k + 1) * rr]
    }

    /// `e^{-K|z|^2} h` at node `k`.
    pub fn twisted_at(&self, grid: &ProductGrid, k: usize) -> Vec<Complex64> {
        let w = (-self.twist * grid.norm_sqr(k)).exp();
        self.at(k).iter().map(|v| v * w).collect()
    }

    /// `a^T H conj(b)` with the untwisted metric.
    pub fn inner(&self, k: usize, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let h = self.at(k);
        let r = self.rank;
        let mut s = ZERO;
        for al in 0..r {
            for be in 0..r {
                s += h[al * r + be] * a[al] * b[be].conj();
            }
        }
        s
    }

    pub fn norm_sqr(&self, k: usize, f: &[Complex64]) -> f64 {
        self.inner(k, f, f).re.max(0.0)
    }

    /// Pointwise change of frame `H -> T^T H conj(T)` with a per-node matrix.
    pub fn gauge_transform(&self, frames: &[Vec<Complex64>]) -> Result<Self> {
        let r = self.rank;
        let values: Vec<Complex64> = (0..self.len())
            .flat_map(|k| congruence(self.at(k), &frames[k], r))
            .collect();
        Ok(Self::new(r, values)?.with_twist(self.twist))
    }
}

/// `T^T A conj(T)`.
pub(crate) fn congruence(a: &[Complex64], t: &[Complex64], r: usize) -> Vec<Complex64> {
    let tt = linalg::transpose(t, r);
    let tc: Vec<Complex64> = t.iter().map(|v| v.conj()).collect();
    linalg::matmul(&linalg::matmul(&tt, a, r), &tc, r)
}

/// A rank-`r` vector per node, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionField {
    rank: usize,
    values: Vec<Complex64>,
}

impl SectionField {
    pub fn new(rank: usize, values: Vec<Complex64>) -> Result<Self> {
        if rank == 0 || values.len() % rank != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} section values do not split into rank {rank} vectors",
                values.len()
            )));
        }
        Ok(Self { rank, values })
    }

    pub fn zeros(rank: usize, nodes: usize) -> Self {
        Self {
            rank,
            values: vec![ZERO; rank * nodes],
        }
    }

    pub fn from_fn(
        grid: &ProductGrid,
        rank: usize,
        f: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync,
    ) -> Self {
        let blocks: Vec<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let v = f(&grid.coords(k));
                assert_eq!(v.len(), rank, "section closure returned wrong rank");
                v
            })
            .collect();
        Self {
            rank,
            values: blocks.concat(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn len(&self) -> usize {
        self.values.len() / self.rank
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
    pub fn at(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.rank..(k + 1) * self.rank]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rank: self.rank,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_against(&self, h: &MetricField, grid: &ProductGrid) -> Result<()> {
        if self.rank != h.rank() {
            return Err(Error::ShapeMismatch(format!(
                "section rank {} differs from metric rank {}",
                self.rank,
                h.rank()
            )));
        }
        if self.len() != grid.len() || h.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "section has {} nodes, metric {}, grid {}",
                self.len(),
                h.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// An `E`-valued (0,1)-form: one section per `dz̄_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    pub components: Vec<SectionField>,
}

impl FormField {
    pub fn zeros(n: usize, rank: usize, nodes: usize) -> Self {
        Self {
            components: vec![SectionField::zeros(rank, nodes); n],
        }
    }
    pub fn dim(&self) -> usize {
        self.components.len()
    }
    pub fn rank(&self) -> usize {
        self.components[0].rank()
    }
    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            components: self.components.iter().map(|s| s.scale(c)).collect(),
        }
    }
}

/// Lowered curvature components `Θ_{a b̄ j k̄}` per node.
#[derive(Clone, Debug)]
pub struct CurvatureField {
    rank: usize,
    dim: usize,
    values: Vec<Complex64>,
    twist: f64,
}

impl CurvatureField {
    pub fn zeros(rank: usize, dim: usize, nodes: usize) -> Self {
        Self {
            rank,
            dim,
            values: vec![ZERO; nodes * dim * dim * rank * rank],
            twist: 0.0,
        }
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.values.len() / (self.dim * self.dim * self.rank * self.rank)
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn twist(&self) -> f64 {
        self.twist
    }

    /// The `r x r` block `Θ_{j k̄}` at node `node`.
    pub fn component(&self, node: usize, j: usize, k: usize) -> &[Complex64] {
        let rr = self.rank * self.rank;
        let off = ((node * self.dim + j) * self.dim + k) * rr;
        &self.values[off..off + rr]
    }

    fn component_mut(&mut self, node: usize, j: usize, k: usize) -> &mut [Complex64] {
        let rr = self.rank * self.rank;
        let off = ((node * self.dim + j) * self.dim + k) * rr;
        &mut self.values[off..off + rr]
    }

    /// Extra curvature of the weight `e^{-K|z|^2}`: `K δ_{jk} h` at `node`.
    pub fn twist_term(&self, h: &MetricField, node: usize, j: usize, k: usize) -> Vec<Complex64> {
        if j != k || self.twist == 0.0 {
            return vec![ZERO; self.rank * self.rank];
        }
        h.at(node).iter().map(|v| v * self.twist).collect()
    }

    /// Curvature of `h_K` lowered with `h_K`: `e^{-K|z|^2}(Θ + K δ_{jk} h)`.
    pub fn twisted_component(
        &self,
        h: &MetricField,
        grid: &ProductGrid,
        node: usize,
        j: usize,
        k: usize,
    ) -> Vec<Complex64> {
        let w = (-self.twist * grid.norm_sqr(node)).exp();
        self.component(node, j, k)
            .iter()
            .zip(self.twist_term(h, node, j, k))
            .map(|(a, b)| (a + b) * w)
            .collect()
    }

    /// Applies `T^T Θ_{jk̄} conj(T)` per node.
    pub fn gauge_transform(&self, frames: &[Vec<Complex64>]) -> Self {
        let mut out = self.clone();
        for node in 0..self.len() {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let t = congruence(self.component(node, j, k), &frames[node], self.rank);
                    out.component_mut(node, j, k).copy_from_slice(&t);
                }
            }
        }
        out
    }
}

/// Chern curvature of `h` by finite differences of the sampled metric.
///
/// The stored components belong to the untwisted `h`; a twist recorded on
/// the metric is carried as [`CurvatureField::twist`] and enters through
/// [`CurvatureField::twist_term`].
pub fn chern_curvature(h: &MetricField, grid: &ProductGrid) -> Result<CurvatureField> {
    if h.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "metric has {} nodes, grid {}",
            h.len(),
            grid.len()
        )));
    }
    h.validate()?;
    let r = h.rank();
    let rr = r * r;
    let n = grid.dim();
    let d: Vec<Vec<Complex64>> = (0..n)
        .map(|j| grid.derivative(h.values(), rr, j, Wirtinger::Holomorphic))
        .collect();
    let db: Vec<Vec<Complex64>> = (0..n)
        .map(|k| grid.derivative(h.values(), rr, k, Wirtinger::Antiholomorphic))
        .collect();
    let inv: Vec<Vec<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|node| linalg::inverse(h.at(node), r).expect("validated metric is invertible"))
        .collect();

    let mut out = CurvatureField::zeros(r, n, grid.len());
    out.twist = h.twist();
    for j in 0..n {
        for k in 0..n {
            let ddb = if j == k {
                grid.laplace_quarter(h.values(), rr, j)
            } else {
                grid.derivative(&db[k], rr, j, Wirtinger::Holomorphic)
            };
            let block = n * n * rr;
            out.values
                .par_chunks_mut(block)
                .enumerate()
                .for_each(|(node, dst)| {
                    let s = node * rr..(node + 1) * rr;
                    let quad = linalg::matmul(
                        &linalg::matmul(&d[j][s.clone()], &inv[node], r),
                        &db[k][s.clone()],
                        r,
                    );
                    let off = (j * n + k) * rr;
                    for e in 0..rr {
                        dst[off + e] = quad[e] - ddb[s.start + e];
                    }
                });
        }
    }
    Ok(out)
}

/// `∇_{z_j} f` (holomorphic) or `∇_{z̄_j} f = ∂̄_j f` (antiholomorphic).
///
/// A twist `K` on the metric adds `-K z̄_j f` to the holomorphic direction.
pub fn covariant_derivative(
    f: &SectionField,
    h: &MetricField,
    grid: &ProductGrid,
    j: usize,
    holomorphic: bool,
) -> Result<SectionField> {
    f.check_against(h, grid)?;
    if j >= grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "direction {j} out of range for dimension {}",
            grid.dim()
        )));
    }
    let r = f.rank();
    if !holomorphic {
        return SectionField::new(r, grid.derivative(f.values(), r, j, Wirtinger::Antiholomorphic));
    }
    let mut df = grid.derivative(f.values(), r, j, Wirtinger::Holomorphic);
    let dh = grid.derivative(h.values(), r * r, j, Wirtinger::Holomorphic);
    let twist = h.twist();
    df.par_chunks_mut(r).enumerate().for_each(|(node, dst)| {
        let g = linalg::transpose(h.at(node), r);
        let dg = linalg::transpose(&dh[node * r * r..(node + 1) * r * r], r);
        let gamma = linalg::matmul(&linalg::inverse(&g, r).expect("metric invertible"), &dg, r);
        let fk = f.at(node);
        let conn = linalg::matvec(&gamma, fk, r);
        let zbar = grid.coord(node, j).conj();
        for a in 0..r {
            dst[a] += conn[a] - twist * zbar * fk[a];
        }
    });
    SectionField::new(r, df)
}

/// `|f|_h` per node (untwisted metric).
pub fn pointwise_norm(f: &SectionField, h: &MetricField) -> Vec<f64> {
    (0..f.len())
        .into_par_iter()
        .map(|k| h.norm_sqr(k, f.at(k)).sqrt())
        .collect()
}

/// `(∫ |f|_h^p)^{1/p}`; `h = None` uses the Euclidean fiber norm and
/// `p = ∞` gives the max norm.
pub fn lp_norm(f: &SectionField, h: Option<&MetricField>, p: f64, grid: &ProductGrid) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent {p} < 1")));
    }
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "section has {} nodes, grid {}",
            f.len(),
            grid.len()
        )));
    }
    let pw: Vec<f64> = match h {
        Some(h) => {
            f.check_against(h, grid)?;
            pointwise_norm(f, h)
        }
        None => (0..f.len())
            .map(|k| f.at(k).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect(),
    };
    Ok(lp_of_pointwise(&pw, p, grid.cell_volume()))
}

/// `Σ e^{-K|z|^2} |f|_h^2 dV` over the nodes accepted by `include`, where
/// `K` is the metric's twist.
pub fn twisted_sq_norm(
    f: &SectionField,
    h: &MetricField,
    grid: &ProductGrid,
    include: impl Fn(usize) -> bool + Sync,
) -> f64 {
    let k = h.twist();
    let parts: Vec<f64> = (0..f.len())
        .into_par_iter()
        .map(|n| {
            if include(n) {
                (-k * grid.norm_sqr(n)).exp() * h.norm_sqr(n, f.at(n))
            } else {
                0.0
            }
        })
        .collect();
    parts.iter().sum::<f64>() * grid.cell_volume()
}

/// Discrete `L^p` norm of nonnegative node values.
pub fn lp_of_pointwise(values: &[f64], p: f64, cell_volume: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = values.iter().map(|v| v.powf(p)).sum();
    (s * cell_volume).powf(1.0 / p)
}

/// Frobenius norm of `Θ_{jk̄}` in an h-orthonormal frame.
fn frame_norm_sqr(theta: &[Complex64], h: &[Complex64], r: usize) -> f64 {
    let l = linalg::cholesky(h, r).expect("metric positive definite");
    // X = L^{-1} Θ, then Θ' = L^{-1} X^H up to a Hermitian conjugate
    let mut x = vec![ZERO; r * r];
    for col in 0..r {
        let b: Vec<Complex64> = (0..r).map(|i| theta[i * r + col]).collect();
        let s = linalg::forward_substitute(&l, &b, r);
        for i in 0..r {
            x[i * r + col] = s[i];
        }
    }
    let xh = linalg::conj_transpose(&x, r);
    let mut total = 0.0;
    for col in 0..r {
        let b: Vec<Complex64> = (0..r).map(|i| xh[i * r + col]).collect();
        total += linalg::forward_substitute(&l, &b, r)
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>();
    }
    total
}

/// `|Θ|`: h-orthonormal fiber frame, Euclidean base frame, Frobenius norm.
pub fn curvature_pointwise_norm(theta: &CurvatureField, h: &MetricField) -> Result<ScalarField> {
    check_curvature_shape(theta, h)?;
    let n = theta.dim();
    let r = theta.rank();
    Ok(ScalarField::from_real(
        (0..theta.len())
            .into_par_iter()
            .map(|node| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += frame_norm_sqr(theta.component(node, j, k), h.at(node), r);
                    }
                }
                s.sqrt()
            })
            .collect::<Vec<f64>>(),
    ))
}

/// `|Θ_{jk̄}|` for a single base slice, same frame convention.
pub fn curvature_slice_norm(
    theta: &CurvatureField,
    h: &MetricField,
    j: usize,
    k: usize,
) -> Result<ScalarField> {
    check_curvature_shape(theta, h)?;
    let r = theta.rank();
    Ok(ScalarField::from_real(
        (0..theta.len())
            .into_par_iter()
            .map(|node| frame_norm_sqr(theta.component(node, j, k), h.at(node), r).sqrt())
            .collect::<Vec<f64>>(),
    ))
}

fn check_curvature_shape(theta: &CurvatureField, h: &MetricField) -> Result<()> {
    if theta.rank() != h.rank() || theta.len() != h.len() {
        return Err(Error::ShapeMismatch(format!(
            "curvature (rank {}, {} nodes) vs metric (rank {}, {} nodes)",
            theta.rank(),
            theta.len(),
            h.rank(),
            h.len()
        )));
    }
    Ok(())
}

/// `Σ Θ_{a b̄ j k̄} f^a conj(f^b)` per node.
pub fn curvature_contraction(theta: &CurvatureField, f: &SectionField, j: usize, k: usize) -> Vec<Complex64> {
    let r = f.rank();
    (0..f.len())
        .into_par_iter()
        .map(|node| {
            let t = theta.component(node, j, k);
            let v = f.at(node);
            let mut s = ZERO;
            for a in 0..r {
                for b in 0..r {
                    s += t[a * r + b] * v[a] * v[b].conj();
                }
            }
            s
        })
        .collect()
}

/// Curvature budget `(∫ |Θ|^{N/(N-2)})^{(N-2)/N}` and the raw integral.
pub fn curvature_budget(norm: &ScalarField, grid: &impl Quadrature, iteration_exponent: u32) -> (f64, f64) {
    let n = iteration_exponent as f64;
    let p = n / (n - 2.0);
    let integral: f64 = norm.values().iter().map(|v| v.re.powf(p)).sum::<f64>() * grid.cell_volume();
    (integral.powf(1.0 / p), integral)
}

/// Boundary-vanishing test on the z1 factor.
///
/// Lattice nodes never lie on the boundary circle, so vanishing is read as
/// Lipschitz decay: at every node flagged near the z1-boundary,
/// `|f| <= 1e-8 max|f| + 1.5 * spacing * max(|∂_1 f| + |∂̄_1 f|)`.
pub fn check_z1_boundary_vanishing(f: &SectionField, grid: &ProductGrid) -> Result<()> {
    let r = f.rank();
    let dz = grid.derivative(f.values(), r, 0, Wirtinger::Holomorphic);
    let dzb = grid.derivative(f.values(), r, 0, Wirtinger::Antiholomorphic);
    let euclid = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut max_f: f64 = 0.0;
    let mut lip: f64 = 0.0;
    for k in 0..grid.len() {
        let s = k * r..(k + 1) * r;
        max_f = max_f.max(euclid(&f.values()[s.clone()]));
        lip = lip.max(euclid(&dz[s.clone()]) + euclid(&dzb[s]));
    }
    let tol = 1e-8 * max_f + 1.5 * grid.factor(0).spacing() * lip;
    for k in 0..grid.len() {
        if grid.is_factor_boundary(k, 0) {
            let v = euclid(f.at(k));
            if v > tol {
                return Err(Error::BoundaryNotVanishing {
                    node: k,
                    value: v,
                    tolerance: tol,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{MetricSpec, SectionSpec};
    use crate::grid::build_disk_grid;

    fn bidisk(h1: f64, h2: f64) -> ProductGrid {
        ProductGrid::new(
            vec![build_disk_grid(1.0, h1).unwrap(), build_disk_grid(1.0, h2).unwrap()],
            1.1,
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_indefinite_metric() {
        let g = bidisk(0.2, 0.2);
        let err = MetricField::from_fn(&g, 1, |z| vec![c(z[0].re, 0.0)]);
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
        let non_herm = MetricField::new(2, vec![c(1.0, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(1.0, 0.0)]);
        assert!(non_herm.is_err());
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let g = bidisk(0.2, 0.2);
        let h = MetricField::identity(&g, 2);
        let th = chern_curvature(&h, &g).unwrap();
        assert!(th.values.iter().all(|v| *v == ZERO));
        let n = curvature_pointwise_norm(&th, &h).unwrap();
        assert!(n.values().iter().all(|v| *v == ZERO));
    }

    #[test]
    fn gaussian_weight_curvature() {
        // h = e^{-K|z|^2}: Θ_{jk̄} = K δ_{jk} h up to O(spacing^2)
        let kk = 1.5;
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&s| {
                let g = bidisk(s, 0.2);
                let h = MetricSpec::Gaussian { k: kk }.build(&g, 1).unwrap();
                let th = chern_curvature(&h, &g).unwrap();
                let mut e: f64 = 0.0;
                for node in 0..g.len() {
                    if g.is_factor_boundary(node, 0) || g.is_factor_boundary(node, 1) {
                        continue;
                    }
                    let hv = h.at(node)[0];
                    e = e.max((th.component(node, 0, 0)[0] - hv * kk).norm() / hv.re);
                    e = e.max(th.component(node, 0, 1)[0].norm() / hv.re);
                }
                e
            })
            .collect();
        assert!(errs[0] < 0.05, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn twist_term_matches_gaussian_curvature() {
        let g = bidisk(0.1, 0.2);
        let kk = 2.0;
        let twisted = MetricField::identity(&g, 1).with_twist(kk);
        let th = chern_curvature(&twisted, &g).unwrap();
        let gauss = MetricSpec::Gaussian { k: kk }.build(&g, 1).unwrap();
        let th_g = chern_curvature(&gauss, &g).unwrap();
        for node in 0..g.len() {
            if g.is_factor_boundary(node, 0) || g.is_factor_boundary(node, 1) {
                continue;
            }
            let a = th.twisted_component(&twisted, &g, node, 0, 0)[0];
            let b = th_g.component(node, 0, 0)[0];
            assert!((a - b).norm() < 0.03 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn quartic_weight_curvature() {
        // h = e^{-|z1|^4}: Θ_{11̄}/h = ∂∂̄|z1|^4 = 4|z1|^2
        let g = bidisk(0.05, 0.2);
        let h = MetricField::from_fn(&g, 1, |z| vec![c((-z[0].norm_sqr().powi(2)).exp(), 0.0)]).unwrap();
        let th = chern_curvature(&h, &g).unwrap();
        for node in 0..g.len() {
            if g.is_factor_boundary(node, 0) {
                continue;
            }
            let z1 = g.coord(node, 0);
            let v = th.component(node, 0, 0)[0] / h.at(node)[0];
            assert!((v.re - 4.0 * z1.norm_sqr()).abs() < 0.05, "{v} at {z1}");
        }
    }

    #[test]
    fn covariant_derivative_examples() {
        let g = bidisk(0.05, 0.2);
        let flat = MetricField::identity(&g, 2);
        let f = SectionField::from_fn(&g, 2, |z| vec![z[0] * z[0] * z[1], z[0].conj()]);
        let cov = covariant_derivative(&f, &flat, &g, 0, true).unwrap();
        let plain = g.derivative(f.values(), 2, 0, Wirtinger::Holomorphic);
        assert_eq!(cov.values(), &plain[..]);
        let hol = SectionField::from_fn(&g, 2, |z| vec![z[0] * z[0] - z[1], c(3.0, 1.0) * z[0]]);
        let dbar = covariant_derivative(&hol, &flat, &g, 0, false).unwrap();
        assert!(dbar.max_abs() < 1e-10);

        // r = 1, h = e^{-|z1|^2}, f = 1: ∇f = -z̄1
        let h = MetricField::from_fn(&g, 1, |z| vec![c((-z[0].norm_sqr()).exp(), 0.0)]).unwrap();
        let one = SectionField::from_fn(&g, 1, |_| vec![c(1.0, 0.0)]);
        let nab = covariant_derivative(&one, &h, &g, 0, true).unwrap();
        for node in 0..g.len() {
            if g.is_factor_boundary(node, 0) {
                continue;
            }
            assert!((nab.at(node)[0] + g.coord(node, 0).conj()).norm() < 5e-3);
        }
    }

    #[test]
    fn leibniz_compatibility() {
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&s| {
                let g = bidisk(s, 0.2);
                let h = MetricSpec::OffDiagonal { strength: 0.5 }.build(&g, 2).unwrap();
                let f = SectionField::from_fn(&g, 2, |z| vec![z[0] * z[0] + z[1], (z[0].conj() * 0.5).exp()]);
                let gs = SectionField::from_fn(&g, 2, |z| vec![z[0].conj() * z[1], c(1.0, 0.5) + z[0]]);
                let pair: Vec<Complex64> = (0..g.len()).map(|k| h.inner(k, f.at(k), gs.at(k))).collect();
                let lhs = g.derivative(&pair, 1, 0, Wirtinger::Holomorphic);
                let nf = covariant_derivative(&f, &h, &g, 0, true).unwrap();
                let dg = covariant_derivative(&gs, &h, &g, 0, false).unwrap();
                (0..g.len())
                    .filter(|&k| !g.is_factor_boundary(k, 0))
                    .map(|k| (lhs[k] - h.inner(k, nf.at(k), gs.at(k)) - h.inner(k, f.at(k), dg.at(k))).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 0.02 && errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn lp_norm_examples() {
        let g = bidisk(0.05, 0.05);
        let h = MetricField::identity(&g, 2);
        let e1 = SectionField::from_fn(&g, 2, |_| vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let n2 = lp_norm(&e1, Some(&h), 2.0, &g).unwrap();
        // ‖e1‖_2 = sqrt(vol) = π on the unit bidisk
        let pi = std::f64::consts::PI;
        assert!((n2 - pi).abs() / pi < 0.03, "{n2}");
        let f = SectionField::from_fn(&g, 2, |z| vec![z[0], z[1].conj() * 2.0]);
        for p in [1.0, 2.5, 7.0, f64::INFINITY] {
            let a = lp_norm(&f.scale(c(0.0, -3.0)), Some(&h), p, &g).unwrap();
            let b = lp_norm(&f, Some(&h), p, &g).unwrap();
            assert!((a - 3.0 * b).abs() <= 1e-10 * a, "{p}: {a} {b}");
        }
        assert!(lp_norm(&f, Some(&h), 0.5, &g).is_err());
    }

    #[test]
    fn lp4_gaussian_matches_separable_oracle() {
        // f = e^{-|z1|^2 - 2|z2|^2} e1, flat metric: ∫|f|^4 = I(4) I(8) with
        // I(a) = ∫_{|z|<1} e^{-a|z|^2} dA, evaluated by a fine 1-D rule.
        let radial = |a: f64| {
            let m = 20_000;
            let dr = 1.0 / m as f64;
            (0..m)
                .map(|i| {
                    let r = (i as f64 + 0.5) * dr;
                    2.0 * std::f64::consts::PI * r * (-a * r * r).exp() * dr
                })
                .sum::<f64>()
        };
        let oracle = (radial(4.0) * radial(8.0)).powf(0.25);
        let g = bidisk(0.05, 0.05);
        let f = SectionSpec::Gaussian { a1: 1.0, a2: 2.0 }.build(&g, 1);
        let v = lp_norm(&f, None, 4.0, &g).unwrap();
        assert!((v - oracle).abs() / oracle < 0.05, "{v} vs {oracle}");
    }

    #[test]
    fn rank_one_slice_norm() {
        let g = bidisk(0.1, 0.2);
        let h = MetricSpec::Gaussian { k: 0.7 }.build(&g, 1).unwrap();
        let th = chern_curvature(&h, &g).unwrap();
        let s = curvature_slice_norm(&th, &h, 0, 0).unwrap();
        for node in 0..g.len() {
            let expect = th.component(node, 0, 0)[0].norm() / h.at(node)[0].re;
            assert!((s.values()[node].re - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn norm_is_frame_invariant() {
        use rand::{Rng, SeedableRng};
        let g = bidisk(0.2, 0.2);
        let h = MetricSpec::OffDiagonal { strength: 0.6 }.build(&g, 2).unwrap();
        let th = chern_curvature(&h, &g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let frames: Vec<Vec<Complex64>> = (0..g.len())
            .map(|_| {
                let mut t: Vec<Complex64> = (0..4)
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                t[0] += 2.0;
                t[3] += 2.0;
                t
            })
            .collect();
        let h2 = h.gauge_transform(&frames).unwrap();
        let th2 = th.gauge_transform(&frames);
        let a = curvature_pointwise_norm(&th, &h).unwrap();
        let b = curvature_pointwise_norm(&th2, &h2).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() <= 1e-8 * x.norm().max(1.0));
        }
    }

    #[test]
    fn constant_gauge_covariance_of_curvature() {
        let g = bidisk(0.1, 0.2);
        let h = MetricSpec::OffDiagonal { strength: 0.4 }.build(&g, 2).unwrap();
        let t = vec![c(1.0, 0.5), c(0.3, 0.0), c(-0.2, 0.1), c(0.8, 0.0)];
        let frames = vec![t; g.len()];
        let th_of_transformed = chern_curvature(&h.gauge_transform(&frames).unwrap(), &g).unwrap();
        let transformed = chern_curvature(&h, &g).unwrap().gauge_transform(&frames);
        let h2 = h.gauge_transform(&frames).unwrap();
        let a = curvature_pointwise_norm(&th_of_transformed, &h2).unwrap();
        let b = curvature_pointwise_norm(&transformed, &h2).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
        }
    }

    #[test]
    fn curvature_hermitian_symmetry() {
        let g = bidisk(0.1, 0.2);
        let h = MetricSpec::OffDiagonal { strength: 0.5 }.build(&g, 2).unwrap();
        let th = chern_curvature(&h, &g).unwrap();
        for node in (0..g.len()).step_by(7) {
            for j in 0..2 {
                for k in 0..2 {
                    let a = th.component(node, j, k);
                    let b = th.component(node, k, j);
                    for al in 0..2 {
                        for be in 0..2 {
                            let d = (a[al * 2 + be] - b[be * 2 + al].conj()).norm();
                            assert!(d < 1e-9, "node {node} ({j},{k}) {d}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn contraction_bounded_by_slice_norm() {
        use rand::SeedableRng;
        let g = bidisk(0.1, 0.2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for spec in [
            MetricSpec::OffDiagonal { strength: 0.7 },
            MetricSpec::Gaussian { k: 1.0 },
            MetricSpec::Singular { a: 0.75, scale: 1.0 },
        ] {
            let h = spec.build(&g, 2).unwrap();
            let th = chern_curvature(&h, &g).unwrap();
            let slice = curvature_slice_norm(&th, &h, 0, 0).unwrap();
            for _ in 0..5 {
                let f = SectionSpec::random(&mut rng).build(&g, 2);
                let contr = curvature_contraction(&th, &f, 0, 0);
                for node in 0..g.len() {
                    let rhs = slice.values()[node].re * h.norm_sqr(node, f.at(node));
                    assert!(contr[node].norm() <= rhs * (1.0 + 1e-9) + 1e-300);
                }
            }
        }
    }

    #[test]
    fn boundary_vanishing_check() {
        let g = bidisk(0.05, 0.2);
        let good = SectionField::from_fn(&g, 1, |z| vec![c(1.0 - z[0].norm_sqr(), 0.0)]);
        assert!(check_z1_boundary_vanishing(&good, &g).is_ok());
        let bad = SectionField::from_fn(&g, 1, |z| vec![c(1.0, 0.0) + z[1]]);
        assert!(matches!(
            check_z1_boundary_vanishing(&bad, &g),
            Err(Error::BoundaryNotVanishing { .. })
        ));
    }
}
