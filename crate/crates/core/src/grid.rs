//! Lattice discretizations of disks, annuli and their products.
//!
//! Every planar domain is a uniform Cartesian lattice `spacing * (i, j)`
//! clipped to the open disk or annulus. Each node carries the constant cell
//! area `spacing^2` (midpoint rule, no cut-cell correction), so quadrature
//! errors are first order in the spacing near curved boundaries.
//!
//! Wirtinger derivatives use central differences where both lattice
//! neighbours exist and second-order one-sided differences otherwise. Both
//! stencils are exact on quadratic polynomials.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when testing lattice points against circles.
const RADIUS_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    Annulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFlag {
    Interior,
    NearOuter,
    NearInner,
}

impl BoundaryFlag {
    pub fn is_boundary(self) -> bool {
        self != BoundaryFlag::Interior
    }
}

/// Compressed sparse rows with complex coefficients.
#[derive(Clone, Debug, Default)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseRows {
    fn from_rows(rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// Conjugate transpose, with columns of each row in ascending order.
    pub fn conj_transpose(&self) -> Self {
        let n = self.rows();
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (c, v) in self.row(i) {
                rows[c].push((i, v.conj()));
            }
        }
        Self::from_rows(rows)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows())
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct PlanarDomainGrid {
    kind: DomainKind,
    outer_radius: f64,
    inner_radius: f64,
    spacing: f64,
    nodes: Vec<Complex64>,
    lattice: Vec<[i32; 2]>,
    boundary: Vec<BoundaryFlag>,
    half_width: i32,
    lookup: Vec<u32>,
    d_z: SparseRows,
    d_zbar: SparseRows,
    d_zzbar: SparseRows,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDescription {
    pub kind: DomainKind,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub spacing: f64,
    pub node_count: usize,
}

/// Builds the lattice grid of `inner < |z| < outer`; `inner == 0` gives the
/// full disk (origin included).
pub fn build_annulus_grid(outer: f64, inner: f64, spacing: f64) -> Result<PlanarDomainGrid> {
    let kind = if inner == 0.0 {
        DomainKind::Disk
    } else {
        DomainKind::Annulus
    };
    PlanarDomainGrid::new(kind, outer, inner, spacing)
}

pub fn build_disk_grid(radius: f64, spacing: f64) -> Result<PlanarDomainGrid> {
    PlanarDomainGrid::new(DomainKind::Disk, radius, 0.0, spacing)
}

/// Disk with the origin removed.
pub fn build_punctured_disk_grid(radius: f64, spacing: f64) -> Result<PlanarDomainGrid> {
    PlanarDomainGrid::new(DomainKind::Annulus, radius, 0.0, spacing)
}

impl PlanarDomainGrid {
    pub fn new(kind: DomainKind, outer: f64, inner: f64, spacing: f64) -> Result<Self> {
        if !(outer.is_finite() && inner.is_finite() && spacing.is_finite()) {
            return Err(Error::InvalidGrid("non-finite parameter".into()));
        }
        if inner < 0.0 || inner >= outer {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= inner < outer, got inner = {inner}, outer = {outer}"
            )));
        }
        if kind == DomainKind::Disk && inner != 0.0 {
            return Err(Error::InvalidGrid("disk grids have inner radius 0".into()));
        }
        if spacing <= 0.0 || spacing >= (outer - inner) / 4.0 {
            return Err(Error::InvalidGrid(format!(
                "spacing {spacing} too coarse for radii ({inner}, {outer})"
            )));
        }

        let half_width = (outer / spacing).ceil() as i32 + 1;
        let side = (2 * half_width + 1) as usize;
        let mut lookup = vec![u32::MAX; side * side];
        let mut nodes = Vec::new();
        let mut lattice = Vec::new();
        let mut boundary = Vec::new();
        let tol = RADIUS_EPS * spacing;
        for i in -half_width..=half_width {
            for j in -half_width..=half_width {
                let z = Complex64::new(i as f64 * spacing, j as f64 * spacing);
                let r = z.norm();
                if r >= outer - tol {
                    continue;
                }
                if kind == DomainKind::Annulus && r <= inner + tol {
                    continue;
                }
                let to_outer = outer - r;
                let to_inner = r - inner;
                let flag = if to_outer <= spacing * (1.0 + RADIUS_EPS) {
                    BoundaryFlag::NearOuter
                } else if kind == DomainKind::Annulus && to_inner <= spacing * (1.0 + RADIUS_EPS) {
                    BoundaryFlag::NearInner
                } else {
                    BoundaryFlag::Interior
                };
                let slot = (i + half_width) as usize * side + (j + half_width) as usize;
                lookup[slot] = nodes.len() as u32;
                nodes.push(z);
                lattice.push([i, j]);
                boundary.push(flag);
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidGrid("spacing too coarse to contain any node".into()));
        }

        let mut grid = Self {
            kind,
            outer_radius: outer,
            inner_radius: inner,
            spacing,
            nodes,
            lattice,
            boundary,
            half_width,
            lookup,
            d_z: SparseRows::default(),
            d_zbar: SparseRows::default(),
            d_zzbar: SparseRows::default(),
        };
        grid.build_stencils();
        Ok(grid)
    }

    fn build_stencils(&mut self) {
        let h = self.spacing;
        let mut dz_rows = Vec::with_capacity(self.len());
        let mut dzb_rows = Vec::with_capacity(self.len());
        for node in 0..self.len() {
            let [i, j] = self.lattice[node];
            let dx = self.axis_stencil(node, |k| (i + k, j), h);
            let dy = self.axis_stencil(node, |k| (i, j + k), h);
            // d_z = (d_x - i d_y)/2, d_zbar = (d_x + i d_y)/2
            let mut dz: Vec<(usize, Complex64)> = Vec::new();
            let mut dzb: Vec<(usize, Complex64)> = Vec::new();
            for &(c, v) in &dx {
                push_merge(&mut dz, c, Complex64::new(0.5 * v, 0.0));
                push_merge(&mut dzb, c, Complex64::new(0.5 * v, 0.0));
            }
            for &(c, v) in &dy {
                push_merge(&mut dz, c, Complex64::new(0.0, -0.5 * v));
                push_merge(&mut dzb, c, Complex64::new(0.0, 0.5 * v));
            }
            dz.sort_by_key(|e| e.0);
            dzb.sort_by_key(|e| e.0);
            dz_rows.push(dz);
            dzb_rows.push(dzb);
        }
        self.d_z = SparseRows::from_rows(dz_rows);
        self.d_zbar = SparseRows::from_rows(dzb_rows);

        // ∂∂̄ = Δ/4: five-point stencil where all neighbours exist, otherwise
        // the composition of the first-derivative stencils
        let mut rows = Vec::with_capacity(self.len());
        for node in 0..self.len() {
            let [i, j] = self.lattice[node];
            let nbs = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)].map(|(a, b)| self.index_of(a, b));
            let mut row: Vec<(usize, Complex64)> = Vec::new();
            if nbs.iter().all(Option::is_some) {
                let w = 0.25 / (h * h);
                push_merge(&mut row, node, Complex64::new(-4.0 * w, 0.0));
                for c in nbs.into_iter().flatten() {
                    push_merge(&mut row, c, Complex64::new(w, 0.0));
                }
            } else {
                for (m, a) in self.d_z.row(node) {
                    for (c, b) in self.d_zbar.row(m) {
                        push_merge(&mut row, c, a * b);
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            rows.push(row);
        }
        self.d_zzbar = SparseRows::from_rows(rows);
    }

    fn axis_stencil(&self, node: usize, at: impl Fn(i32) -> (i32, i32), h: f64) -> Vec<(usize, f64)> {
        let nb = |k: i32| {
            let (a, b) = at(k);
            self.index_of(a, b)
        };
        match (nb(-2), nb(-1), nb(1), nb(2)) {
            (_, Some(m1), Some(p1), _) => vec![(m1, -0.5 / h), (p1, 0.5 / h)],
            (_, _, Some(p1), Some(p2)) => vec![(node, -1.5 / h), (p1, 2.0 / h), (p2, -0.5 / h)],
            (Some(m2), Some(m1), _, _) => vec![(node, 1.5 / h), (m1, -2.0 / h), (m2, 0.5 / h)],
            (_, _, Some(p1), None) => vec![(node, -1.0 / h), (p1, 1.0 / h)],
            (_, Some(m1), None, _) => vec![(node, 1.0 / h), (m1, -1.0 / h)],
            _ => Vec::new(),
        }
    }

    /// Node index at lattice coordinates `(i, j)`, if that point is in the domain.
    pub fn index_of(&self, i: i32, j: i32) -> Option<usize> {
        if i.abs() > self.half_width || j.abs() > self.half_width {
            return None;
        }
        let side = (2 * self.half_width + 1) as usize;
        let slot = (i + self.half_width) as usize * side + (j + self.half_width) as usize;
        match self.lookup[slot] {
            u32::MAX => None,
            k => Some(k as usize),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }
    pub fn node(&self, k: usize) -> Complex64 {
        self.nodes[k]
    }
    pub fn lattice(&self, k: usize) -> [i32; 2] {
        self.lattice[k]
    }
    pub fn boundary_flags(&self) -> &[BoundaryFlag] {
        &self.boundary
    }
    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary[k].is_boundary()
    }
    pub fn d_z_stencil(&self) -> &SparseRows {
        &self.d_z
    }
    pub fn d_zbar_stencil(&self) -> &SparseRows {
        &self.d_zbar
    }

    /// Distance from `z` to the nearest boundary circle.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let outer = self.outer_radius - r;
        match self.kind {
            DomainKind::Disk => outer,
            DomainKind::Annulus => outer.min(r - self.inner_radius),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r < self.outer_radius && (self.kind == DomainKind::Disk || r > self.inner_radius)
    }

    /// Index of the node closest to `z`.
    pub fn nearest_node(&self, z: Complex64) -> usize {
        let i = (z.re / self.spacing).round() as i32;
        let j = (z.im / self.spacing).round() as i32;
        if let Some(k) = self.index_of(i, j) {
            return k;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.nodes.iter().enumerate() {
            let d = (p - z).norm_sqr();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    pub fn description(&self) -> GridDescription {
        GridDescription {
            kind: self.kind,
            outer_radius: self.outer_radius,
            inner_radius: self.inner_radius,
            spacing: self.spacing,
            node_count: self.len(),
        }
    }

    pub fn sample(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> ScalarField {
        ScalarField(self.nodes.par_iter().map(|&z| f(z)).collect())
    }
}

fn push_merge(row: &mut Vec<(usize, Complex64)>, col: usize, v: Complex64) {
    if let Some(e) = row.iter_mut().find(|e| e.0 == col) {
        e.1 += v;
    } else {
        row.push((col, v));
    }
}

/// Complex value per node, in node-index order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScalarField(pub Vec<Complex64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n])
    }
    pub fn from_real(values: impl IntoIterator<Item = f64>) -> Self {
        Self(values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn values(&self) -> &[Complex64] {
        &self.0
    }
    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|v| v.conj()).collect())
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
    /// Flat `(re, im)` pairs in node order.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.0.iter().map(|v| [v.re, v.im]).collect()
    }
    pub fn from_pairs(pairs: &[[f64; 2]]) -> Self {
        Self(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// Anything that integrates node values with a constant cell volume.
pub trait Quadrature {
    fn node_count(&self) -> usize;
    fn cell_volume(&self) -> f64;
}

impl Quadrature for PlanarDomainGrid {
    fn node_count(&self) -> usize {
        self.len()
    }
    fn cell_volume(&self) -> f64 {
        self.cell_area()
    }
}

/// Midpoint quadrature, summed in node order.
pub fn integrate(field: &ScalarField, grid: &impl Quadrature) -> Result<Complex64> {
    if field.len() != grid.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, grid has {} nodes",
            field.len(),
            grid.node_count()
        )));
    }
    let sum: Complex64 = field.0.iter().sum();
    Ok(sum * grid.cell_volume())
}

/// Real-valued midpoint quadrature in node order.
pub fn integrate_real(values: &[f64], cell_volume: f64) -> f64 {
    values.iter().sum::<f64>() * cell_volume
}

/// `(d_z f, d_zbar f)` on a planar grid.
pub fn wirtinger_derivatives(
    field: &ScalarField,
    grid: &PlanarDomainGrid,
) -> Result<(ScalarField, ScalarField)> {
    if field.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, grid has {} nodes",
            field.len(),
            grid.len()
        )));
    }
    Ok((
        ScalarField(grid.d_z.apply(&field.0)),
        ScalarField(grid.d_zbar.apply(&field.0)),
    ))
}

/// Cartesian product of planar grids; the first factor is the z1 plane.
///
/// Node `k` has multi-index `(k_1, .., k_n)` with the first factor varying
/// slowest.
#[derive(Clone, Debug)]
pub struct ProductGrid {
    factors: Vec<PlanarDomainGrid>,
    polydisk_radius: f64,
    strides: Vec<usize>,
    len: usize,
    cell_volume: f64,
    dz_t: Vec<SparseRows>,
    dzbar_t: Vec<SparseRows>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wirtinger {
    Holomorphic,
    Antiholomorphic,
}

impl ProductGrid {
    /// `polydisk_radius` is the radius of a polydisk containing every node.
    pub fn new(factors: Vec<PlanarDomainGrid>, polydisk_radius: f64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGrid("product grid needs at least one factor".into()));
        }
        if polydisk_radius <= 1.0 {
            return Err(Error::InvalidGrid(format!(
                "containing polydisk radius must exceed 1, got {polydisk_radius}"
            )));
        }
        for (j, f) in factors.iter().enumerate() {
            if let Some(z) = f.nodes().iter().find(|z| z.norm() >= polydisk_radius) {
                return Err(Error::InvalidGrid(format!(
                    "factor {j} node {z} lies outside the polydisk of radius {polydisk_radius}"
                )));
            }
        }
        let mut strides = vec![1; factors.len()];
        for j in (0..factors.len() - 1).rev() {
            strides[j] = strides[j + 1] * factors[j + 1].len();
        }
        let len = strides[0] * factors[0].len();
        let cell_volume = factors.iter().map(|f| f.cell_area()).product();
        let dz_t = factors.iter().map(|f| f.d_z.conj_transpose()).collect();
        let dzbar_t = factors.iter().map(|f| f.d_zbar.conj_transpose()).collect();
        Ok(Self {
            factors,
            polydisk_radius,
            strides,
            len,
            cell_volume,
            dz_t,
            dzbar_t,
        })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }
    pub fn factors(&self) -> &[PlanarDomainGrid] {
        &self.factors
    }
    pub fn factor(&self, j: usize) -> &PlanarDomainGrid {
        &self.factors[j]
    }
    pub fn polydisk_radius(&self) -> f64 {
        self.polydisk_radius
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }
    pub fn spacings(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.spacing()).collect()
    }

    /// Node index of factor `j` inside product node `k`.
    #[inline]
    pub fn factor_node(&self, k: usize, j: usize) -> usize {
        (k / self.strides[j]) % self.factors[j].len()
    }

    #[inline]
    pub fn coord(&self, k: usize, j: usize) -> Complex64 {
        self.factors[j].node(self.factor_node(k, j))
    }

    pub fn coords(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|j| self.coord(k, j)).collect()
    }

    /// |z|^2 summed over all coordinates.
    pub fn norm_sqr(&self, k: usize) -> f64 {
        (0..self.dim()).map(|j| self.coord(k, j).norm_sqr()).sum()
    }

    pub fn is_factor_boundary(&self, k: usize, j: usize) -> bool {
        self.factors[j].is_boundary(self.factor_node(k, j))
    }

    pub fn sample(&self, f: impl Fn(&[Complex64]) -> Complex64 + Sync) -> ScalarField {
        ScalarField(
            (0..self.len)
                .into_par_iter()
                .map(|k| f(&self.coords(k)))
                .collect(),
        )
    }

    /// Applies the factor-`j` Wirtinger stencil to a field with `comps`
    /// values per node.
    pub fn derivative(
        &self,
        values: &[Complex64],
        comps: usize,
        j: usize,
        which: Wirtinger,
    ) -> Vec<Complex64> {
        let rows = match which {
            Wirtinger::Holomorphic => &self.factors[j].d_z,
            Wirtinger::Antiholomorphic => &self.factors[j].d_zbar,
        };
        self.apply_factor(rows, values, comps, j)
    }

    /// Applies the factor-`j` stencil for `∂_j ∂̄_j`.
    pub fn laplace_quarter(&self, values: &[Complex64], comps: usize, j: usize) -> Vec<Complex64> {
        self.apply_factor(&self.factors[j].d_zzbar, values, comps, j)
    }

    /// Conjugate transpose of [`Self::derivative`] with respect to the plain
    /// Euclidean sum over nodes and components.
    pub fn derivative_adjoint(
        &self,
        values: &[Complex64],
        comps: usize,
        j: usize,
        which: Wirtinger,
    ) -> Vec<Complex64> {
        let rows = match which {
            Wirtinger::Holomorphic => &self.dz_t[j],
            Wirtinger::Antiholomorphic => &self.dzbar_t[j],
        };
        self.apply_factor(rows, values, comps, j)
    }

    fn apply_factor(&self, rows: &SparseRows, values: &[Complex64], comps: usize, j: usize) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len * comps, "field shape does not match grid");
        let stride = self.strides[j];
        let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
        out.par_chunks_mut(comps).enumerate().for_each(|(k, dst)| {
            let local = self.factor_node(k, j);
            let base = k - local * stride;
            for (c, v) in rows.row(local) {
                let src = (base + c * stride) * comps;
                for (a, d) in dst.iter_mut().enumerate() {
                    *d += v * values[src + a];
                }
            }
        });
        out
    }
}

impl Quadrature for ProductGrid {
    fn node_count(&self) -> usize {
        self.len
    }
    fn cell_volume(&self) -> f64 {
        self.cell_volume
    }
}
