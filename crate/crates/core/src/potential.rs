//! Integral operators `(V f)(x) = ∫ k(x, y) f(y) dy` with nonnegative kernels
//! and the discrete Young-type bound
//!
//! ```text
//! ‖V f‖_q <= A^{1/r} ‖f‖_p,   1/r = 1 + 1/q - 1/p,
//! ```
//!
//! where `A` is the larger of the row and column suprema of `Σ k^r dV`.
//! The proof is a three-factor Hölder argument applied to the discrete sums,
//! so the inequality holds for the discrete operator up to rounding.
//!
//! A planar domain is handled as a one-factor [`ProductGrid`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{build_disk_grid, ProductGrid, Quadrature, ScalarField};
use crate::report::CheckRecord;

/// Finite stand-in for `q = ∞` in reports.
pub const Q_INFINITY_SURROGATE: f64 = 1e6;

type KernelFn = dyn Fn(&[Complex64], &[Complex64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum KernelSpec {
    /// `1/(π|x1 - y1|)`; pairs sharing the z1 node use the average of the
    /// kernel over that z1 cell.
    CauchySlice,
    Constant(f64),
    /// Must be finite and nonnegative on the diagonal.
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CauchySlice => write!(f, "CauchySlice"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl KernelSpec {
    pub fn custom(f: impl Fn(&[Complex64], &[Complex64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom(Arc::new(f))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CauchySlice => "cauchy-slice",
            Self::Constant(_) => "constant",
            Self::Custom(_) => "custom",
        }
    }
}

/// Average of `1/(π|w|)` over a centered square of side `spacing`.
pub fn cauchy_self_value(spacing: f64) -> f64 {
    4.0 * (1.0 + 2f64.sqrt()).ln() / (PI * spacing)
}

/// Kernel values `k(x1, y1)` on the z1 factor for the Cauchy slice.
fn slice_matrix(grid: &ProductGrid) -> Vec<Vec<f64>> {
    let f0 = grid.factor(0);
    let own = cauchy_self_value(f0.spacing());
    (0..f0.len())
        .into_par_iter()
        .map(|a| {
            let za = f0.node(a);
            (0..f0.len())
                .map(|b| if a == b { own } else { 1.0 / (PI * (za - f0.node(b)).norm()) })
                .collect()
        })
        .collect()
}

/// Volume of the factors after the first.
fn tail_volume(grid: &ProductGrid) -> f64 {
    grid.factors()[1..].iter().map(|f| f.len() as f64 * f.cell_area()).product()
}

/// Kernel entries by node index, with node coordinates laid out flat.
struct Entries<'a> {
    kernel: &'a KernelSpec,
    grid: &'a ProductGrid,
    coords: Vec<Complex64>,
}

impl<'a> Entries<'a> {
    fn new(kernel: &'a KernelSpec, grid: &'a ProductGrid) -> Self {
        let coords = match kernel {
            KernelSpec::Custom(_) => (0..grid.len()).flat_map(|k| grid.coords(k)).collect(),
            _ => Vec::new(),
        };
        Self { kernel, grid, coords }
    }

    fn get(&self, x: usize, y: usize) -> f64 {
        let grid = self.grid;
        match self.kernel {
            KernelSpec::Constant(c) => *c,
            KernelSpec::CauchySlice => {
                let (a, b) = (grid.factor_node(x, 0), grid.factor_node(y, 0));
                if a == b {
                    cauchy_self_value(grid.factor(0).spacing())
                } else {
                    1.0 / (PI * (grid.coord(x, 0) - grid.coord(y, 0)).norm())
                }
            }
            KernelSpec::Custom(f) => {
                let d = grid.dim();
                f(&self.coords[x * d..(x + 1) * d], &self.coords[y * d..(y + 1) * d])
            }
        }
    }
}

/// Discrete `V f`.
pub fn apply_potential(kernel: &KernelSpec, f: &ScalarField, grid: &ProductGrid) -> Result<ScalarField> {
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    let w = grid.cell_volume();
    let out = match kernel {
        KernelSpec::Constant(c) => {
            let total: Complex64 = f.values().iter().sum::<Complex64>() * (c * w);
            vec![total; grid.len()]
        }
        KernelSpec::CauchySlice => {
            // separable: collapse the tail factors, then a dense z1 sum
            let m1 = grid.factor(0).len();
            let tail = grid.len() / m1;
            let tail_w = w / grid.factor(0).cell_area();
            let collapsed: Vec<Complex64> = f
                .values()
                .chunks(tail)
                .map(|c| c.iter().sum::<Complex64>() * tail_w)
                .collect();
            let km = slice_matrix(grid);
            let h2 = grid.factor(0).cell_area();
            let per_z1: Vec<Complex64> = km
                .par_iter()
                .map(|row| row.iter().zip(&collapsed).map(|(k, v)| v * (k * h2)).sum())
                .collect();
            (0..grid.len()).map(|x| per_z1[x / tail]).collect()
        }
        KernelSpec::Custom(_) => {
            let e = Entries::new(kernel, grid);
            (0..grid.len())
                .into_par_iter()
                .map(|x| (0..grid.len()).map(|y| f.values()[y] * (e.get(x, y) * w)).sum())
                .collect()
        }
    };
    Ok(ScalarField(out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct YoungConstant {
    pub r: f64,
    /// `max(sup_x Σ_y k^r dV, sup_y Σ_x k^r dV)`; for `r = ∞`, `max k`.
    pub a: f64,
    /// `A^{1/r}`.
    pub a_root: f64,
    /// `(πŘ)^{n-1} ∫_{|ζ| < 2Ř} (π|ζ|)^{-r} dA` for the Cauchy slice with `r < 2`.
    pub analytic_bound: Option<f64>,
}

/// Closed form of `(πŘ)^{n-1} ∫_{|ζ|<2Ř} (π|ζ|)^{-r} dA` for `r < 2`.
pub fn cauchy_slice_analytic_bound(r: f64, n: usize, polydisk_radius: f64) -> Option<f64> {
    if r >= 2.0 {
        return None;
    }
    let rr = polydisk_radius;
    Some((PI * rr).powi(n as i32 - 1) * 2.0 * PI * (2.0 * rr).powf(2.0 - r) / ((2.0 - r) * PI.powf(r)))
}

pub fn young_constant(kernel: &KernelSpec, r: f64, grid: &ProductGrid) -> Result<YoungConstant> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("Young exponent r = {r} < 1")));
    }
    let w = grid.cell_volume();
    let a = if r.is_infinite() {
        match kernel {
            KernelSpec::Constant(c) => *c,
            KernelSpec::CauchySlice => cauchy_self_value(grid.factor(0).spacing()),
            KernelSpec::Custom(_) => {
                let e = Entries::new(kernel, grid);
                (0..grid.len())
                    .into_par_iter()
                    .map(|x| (0..grid.len()).map(|y| e.get(x, y)).fold(0.0, f64::max))
                    .reduce(|| 0.0, f64::max)
            }
        }
    } else {
        match kernel {
            KernelSpec::Constant(c) => c.powf(r) * w * grid.len() as f64,
            KernelSpec::CauchySlice => {
                let h2 = grid.factor(0).cell_area();
                let tv = tail_volume(grid);
                slice_matrix(grid)
                    .par_iter()
                    .map(|row| row.iter().map(|k| k.powf(r)).sum::<f64>() * h2 * tv)
                    .reduce(|| 0.0, f64::max)
            }
            KernelSpec::Custom(_) => {
                let e = Entries::new(kernel, grid);
                let (rows, cols): (Vec<f64>, Vec<f64>) = (0..grid.len())
                    .into_par_iter()
                    .map(|x| {
                        let mut row = 0.0;
                        let mut col = 0.0;
                        for y in 0..grid.len() {
                            row += e.get(x, y).powf(r);
                            col += e.get(y, x).powf(r);
                        }
                        (row * w, col * w)
                    })
                    .unzip();
                rows.into_iter().chain(cols).fold(0.0, f64::max)
            }
        }
    };
    let a_root = if r.is_infinite() { a } else { a.powf(1.0 / r) };
    let analytic_bound = match kernel {
        KernelSpec::CauchySlice => cauchy_slice_analytic_bound(r, grid.dim(), grid.polydisk_radius()),
        _ => None,
    };
    Ok(YoungConstant {
        r,
        a,
        a_root,
        analytic_bound,
    })
}

/// `1/r = 1 + 1/q - 1/p`; returns `∞` when the right side is 0.
pub fn young_exponent(p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    if p > q {
        return Err(Error::ExponentOrder { p, q });
    }
    let inv = 1.0 + 1.0 / q - 1.0 / p;
    Ok(if inv <= 0.0 { f64::INFINITY } else { 1.0 / inv })
}

/// Discrete `L^p` norm of `|f|` with the grid's cell volume.
pub fn scalar_lp(f: &ScalarField, p: f64, grid: &impl Quadrature) -> f64 {
    let abs: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    crate::bundle::lp_of_pointwise(&abs, p, grid.cell_volume())
}

/// `‖V|f|‖_q <= A^{1/r} ‖f‖_p` with relative slack `1e-9`. `q = ∞` uses the
/// max norm.
pub fn verify_potential_estimate(
    kernel: &KernelSpec,
    f: &ScalarField,
    p: f64,
    q: f64,
    grid: &ProductGrid,
) -> Result<CheckRecord> {
    let r = young_exponent(p, q)?;
    let abs = ScalarField::from_real(f.values().iter().map(|v| v.norm()));
    let vf = apply_potential(kernel, &abs, grid)?;
    let lhs = scalar_lp(&vf, q, grid);
    let young = young_constant(kernel, r, grid)?;
    let rhs = young.a_root * scalar_lp(f, p, grid);
    let shown = |x: f64| if x.is_infinite() { Q_INFINITY_SURROGATE } else { x };
    let mut rec = CheckRecord::le(
        format!("{} p={} q={}", kernel.name(), p, shown(q)),
        "potential-estimate",
        lhs,
        rhs,
        1e-9 * rhs,
    )
    .with("p", p)
    .with("q", shown(q))
    .with("r", shown(r))
    .with("A", young.a)
    .with("A_root", young.a_root);
    if let Some(b) = young.analytic_bound {
        rec = rec.with("A_analytic_bound", b);
    }
    Ok(rec)
}

/// `A(spacing/2) / A(spacing)` for the Cauchy slice on `D x W`, both unit
/// disks, with `W` fixed at the coarser spacing.
pub fn cauchy_slice_refinement_ratio(r: f64, spacing: f64, w_spacing: f64, polydisk_radius: f64) -> Result<f64> {
    let build = |h: f64| {
        ProductGrid::new(
            vec![build_disk_grid(1.0, h)?, build_disk_grid(1.0, w_spacing)?],
            polydisk_radius,
        )
    };
    let coarse = young_constant(&KernelSpec::CauchySlice, r, &build(spacing)?)?;
    let fine = young_constant(&KernelSpec::CauchySlice, r, &build(spacing / 2.0)?)?;
    Ok(fine.a / coarse.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::TrigPoly;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn planar(h: f64) -> ProductGrid {
        ProductGrid::new(vec![build_disk_grid(1.0, h).unwrap()], 1.1).unwrap()
    }

    fn bidisk(h: f64) -> ProductGrid {
        ProductGrid::new(vec![build_disk_grid(1.0, h).unwrap(), build_disk_grid(1.0, h).unwrap()], 1.1).unwrap()
    }

    fn random_field(grid: &ProductGrid, seed: u64) -> ScalarField {
        let poly = TrigPoly::random(&mut ChaCha8Rng::seed_from_u64(seed), 2 * grid.dim(), 1, 5, 3.0);
        grid.sample(|z| poly.eval(z)[0])
    }

    #[test]
    fn constant_kernel_examples() {
        let g = planar(0.05);
        let one = ScalarField::from_real(vec![1.0; g.len()]);
        let v = apply_potential(&KernelSpec::Constant(1.0), &one, &g).unwrap();
        for x in v.values() {
            assert!((x.re - PI).abs() < 3.0 * 0.05 * PI);
        }
        let y = young_constant(&KernelSpec::Constant(2.5), 1.0, &g).unwrap();
        assert!((y.a - 2.5 * g.len() as f64 * g.cell_volume()).abs() < 1e-12);
        let zero = ScalarField::zeros(g.len());
        let v = apply_potential(&KernelSpec::CauchySlice, &zero, &g).unwrap();
        assert!(v.values().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn cauchy_slice_at_origin() {
        // (1/π) ∫_D dA/|ζ| = 2
        let g = planar(0.02);
        let one = ScalarField::from_real(vec![1.0; g.len()]);
        let v = apply_potential(&KernelSpec::CauchySlice, &one, &g).unwrap();
        let origin = g.factor(0).nearest_node(Complex64::new(0.0, 0.0));
        assert!((v.values()[origin].re - 2.0).abs() < 0.1);
    }

    #[test]
    fn separable_path_matches_dense() {
        let g = bidisk(0.2);
        let f = random_field(&g, 1);
        let fast = apply_potential(&KernelSpec::CauchySlice, &f, &g).unwrap();
        let gg = g.clone();
        let dense_kernel = KernelSpec::custom(move |x, y| {
            let _ = &gg;
            if x[0] == y[0] {
                cauchy_self_value(0.2)
            } else {
                1.0 / (PI * (x[0] - y[0]).norm())
            }
        });
        let dense = apply_potential(&dense_kernel, &f, &g).unwrap();
        for (a, b) in fast.values().iter().zip(dense.values()) {
            assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        }
        let ya = young_constant(&KernelSpec::CauchySlice, 1.5, &g).unwrap();
        let yb = young_constant(&dense_kernel, 1.5, &g).unwrap();
        assert!((ya.a - yb.a).abs() < 1e-10 * ya.a);
    }

    #[test]
    fn discrete_bound_below_analytic() {
        let g = bidisk(0.1);
        let y = young_constant(&KernelSpec::CauchySlice, 1.5, &g).unwrap();
        let bound = y.analytic_bound.unwrap();
        assert!(y.a.is_finite() && y.a <= bound, "{} > {}", y.a, bound);
        // closed form against a radial quadrature of the same integral
        let m = 200_000;
        let rr = 1.1;
        let dr = 2.0 * rr / m as f64;
        let radial: f64 = (0..m)
            .map(|i| {
                let s = (i as f64 + 0.5) * dr;
                2.0 * PI * s * (PI * s).powf(-1.5) * dr
            })
            .sum();
        assert!((PI * rr * radial - bound).abs() < 1e-3 * bound);
    }

    #[test]
    fn divergent_exponent_flags_growth() {
        let ratio = cauchy_slice_refinement_ratio(3.0, 0.1, 0.2, 1.1).unwrap();
        assert!(ratio > 1.5, "{ratio}");
        let stable = cauchy_slice_refinement_ratio(1.5, 0.1, 0.2, 1.1).unwrap();
        assert!(stable < 1.1, "{stable}");
    }

    #[test]
    fn estimate_examples() {
        let g = planar(0.1);
        let zero = ScalarField::zeros(g.len());
        let r = verify_potential_estimate(&KernelSpec::CauchySlice, &zero, 1.0, 2.0, &g).unwrap();
        assert!(r.passed() && r.lhs == 0.0 && r.rhs == 0.0);
        let f = random_field(&g, 4);
        assert!(verify_potential_estimate(&KernelSpec::Constant(1.0), &f, 2.0, 2.0, &g).unwrap().passed());
        let eta = 0.5;
        let r = verify_potential_estimate(&KernelSpec::CauchySlice, &f, 1.0, 2.0 - eta, &g).unwrap();
        assert!(r.passed() && (r.extra["r"] - 1.5).abs() < 1e-12, "{r:?}");
        assert!(matches!(
            verify_potential_estimate(&KernelSpec::CauchySlice, &f, 3.0, 2.0, &g),
            Err(Error::ExponentOrder { .. })
        ));
        let inf = verify_potential_estimate(&KernelSpec::CauchySlice, &f, 1.0, f64::INFINITY, &g).unwrap();
        assert!(inf.passed() && inf.extra["q"] == Q_INFINITY_SURROGATE);
    }

    #[test]
    fn asymmetric_kernel_uses_column_sums() {
        // k(x, y) = 1 + 4 Re(y): rows are constant, columns are not
        let g = planar(0.1);
        let k = KernelSpec::custom(|_, y| 1.0 + 4.0 * y[0].re.max(0.0));
        let y = young_constant(&k, 1.0, &g).unwrap();
        let row = (0..g.len()).map(|j| 1.0 + 4.0 * g.coord(j, 0).re.max(0.0)).sum::<f64>() * g.cell_volume();
        assert!(y.a > row);
        for seed in 0..5 {
            let f = random_field(&g, seed);
            assert!(verify_potential_estimate(&k, &f, 1.0, 1.0, &g).unwrap().passed());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn estimate_holds_for_random_exponents(seed in 0u64..10_000, p in 1.0f64..4.0, dq in 0.0f64..4.0, kind in 0usize..3) {
            let g = planar(0.1);
            let f = random_field(&g, seed);
            let kernel = match kind {
                0 => KernelSpec::CauchySlice,
                1 => KernelSpec::Constant(0.7),
                _ => KernelSpec::custom(|x, y| (-(x[0] - y[0]).norm_sqr()).exp()),
            };
            let r = verify_potential_estimate(&kernel, &f, p, p + dq, &g).unwrap();
            prop_assert!(r.slack >= 0.0, "{:?}", r);
        }

        #[test]
        fn monotone_and_homogeneous(seed in 0u64..10_000, c in 0.0f64..5.0) {
            let g = planar(0.1);
            let f = ScalarField::from_real(random_field(&g, seed).values().iter().map(|v| v.norm()));
            let bump = ScalarField::from_real(random_field(&g, seed + 1).values().iter().map(|v| v.norm()));
            let g_field = ScalarField(f.values().iter().zip(bump.values()).map(|(a, b)| a + b).collect());
            let vf = apply_potential(&KernelSpec::CauchySlice, &f, &g).unwrap();
            let vg = apply_potential(&KernelSpec::CauchySlice, &g_field, &g).unwrap();
            for (a, b) in vf.values().iter().zip(vg.values()) {
                prop_assert!(a.re <= b.re);
            }
            let scaled = ScalarField(f.values().iter().map(|v| v * c).collect());
            let vs = apply_potential(&KernelSpec::CauchySlice, &scaled, &g).unwrap();
            for (a, b) in vs.values().iter().zip(vf.values()) {
                prop_assert!((a - b * c).norm() <= 1e-12 * a.norm().max(1e-300));
            }
        }
    }
}
