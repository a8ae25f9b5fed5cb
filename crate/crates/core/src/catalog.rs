//! Named test metrics, sections and planar functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::{MetricField, SectionField};
use crate::error::{Error, Result};
use crate::grid::ProductGrid;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MetricSpec {
    Identity,
    /// `e^{-k|z|^2}` times the identity.
    Gaussian { k: f64 },
    /// Rank 2: `I + s [[|z1|^2, z1], [conj(z1), |z2|^2]]`, positive for `s <= 1`.
    OffDiagonal { strength: f64 },
    /// `e^{-scale |z1|^{2a}}` times the identity; curvature of size `|z1|^{2a-2}`.
    Singular { a: f64, scale: f64 },
}

impl MetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Gaussian { .. } => "gaussian",
            Self::OffDiagonal { .. } => "off-diagonal",
            Self::Singular { .. } => "singular",
        }
    }

    pub fn build(&self, grid: &ProductGrid, rank: usize) -> Result<MetricField> {
        match *self {
            Self::Identity => Ok(MetricField::identity(grid, rank)),
            Self::Gaussian { k } => scalar_metric(grid, rank, move |z| {
                (-k * z.iter().map(|v| v.norm_sqr()).sum::<f64>()).exp()
            }),
            Self::Singular { a, scale } => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "singular metric exponent a = {a} must lie in (0, 1)"
                    )));
                }
                scalar_metric(grid, rank, move |z| (-scale * z[0].norm_sqr().powf(a)).exp())
            }
            Self::OffDiagonal { strength: s } => {
                if rank != 2 || grid.dim() < 2 {
                    return Err(Error::InvalidParameter(
                        "off-diagonal metric needs rank 2 and dimension >= 2".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidParameter(format!(
                        "off-diagonal strength {s} outside [0, 1]"
                    )));
                }
                MetricField::from_fn(grid, 2, move |z| {
                    vec![
                        c(1.0 + s * z[0].norm_sqr(), 0.0),
                        z[0] * s,
                        z[0].conj() * s,
                        c(1.0 + s * z[1].norm_sqr(), 0.0),
                    ]
                })
            }
        }
    }
}

fn scalar_metric(
    grid: &ProductGrid,
    rank: usize,
    w: impl Fn(&[Complex64]) -> f64 + Sync,
) -> Result<MetricField> {
    MetricField::from_fn(grid, rank, |z| {
        let v = w(z);
        let mut m = vec![c(0.0, 0.0); rank * rank];
        for a in 0..rank {
            m[a * rank + a] = c(v, 0.0);
        }
        m
    })
}

/// Sections vanishing on the z1-boundary circle(s), plus a Gaussian used for
/// quadrature checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SectionSpec {
    /// `b(z1) v`.
    Radial,
    /// `z1 b(z1) (1 + conj(z2)/2) v`.
    Twisted,
    /// `b(z1)^2 (1 + z2 conj(z1)) v'`.
    Squared,
    /// `e^{-a1|z1|^2 - a2|z2|^2} e_1`; does not vanish on the boundary.
    Gaussian { a1: f64, a2: f64 },
    /// `b(z1)` times a seeded random trigonometric polynomial.
    Random { seed: u64 },
}

impl SectionSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Radial => "radial".into(),
            Self::Twisted => "twisted".into(),
            Self::Squared => "squared".into(),
            Self::Gaussian { .. } => "gaussian".into(),
            Self::Random { seed } => format!("random-{seed}"),
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Self::Random { seed: rng.random() }
    }

    /// The boundary-vanishing catalog entries.
    pub fn vanishing() -> [Self; 3] {
        [Self::Radial, Self::Twisted, Self::Squared]
    }

    pub fn build(&self, grid: &ProductGrid, rank: usize) -> SectionField {
        let f0 = grid.factor(0);
        let (outer, inner) = (f0.outer_radius(), f0.inner_radius());
        // vanishes to first order on |z1| = outer and (if inner > 0) |z1| = inner
        let b = move |z: Complex64| {
            let t = 1.0 - z.norm_sqr() / (outer * outer);
            if inner > 0.0 {
                t * (z.norm_sqr() / (inner * inner) - 1.0)
            } else {
                t
            }
        };
        let v: Vec<Complex64> = (0..rank).map(|a| c(1.0 / (a as f64 + 1.0), 0.3 * a as f64)).collect();
        let w: Vec<Complex64> = (0..rank).map(|a| c(0.5 * a as f64 - 0.2, 1.0)).collect();
        let second = |z: &[Complex64]| if z.len() > 1 { z[1] } else { c(0.0, 0.0) };
        match *self {
            Self::Radial => SectionField::from_fn(grid, rank, |z| v.iter().map(|x| x * b(z[0])).collect()),
            Self::Twisted => SectionField::from_fn(grid, rank, |z| {
                let s = z[0] * b(z[0]) * (c(1.0, 0.0) + second(z).conj() * 0.5);
                v.iter().map(|x| x * s).collect()
            }),
            Self::Squared => SectionField::from_fn(grid, rank, |z| {
                let s = b(z[0]).powi(2) * (c(1.0, 0.0) + second(z) * z[0].conj());
                w.iter().map(|x| x * s).collect()
            }),
            Self::Gaussian { a1, a2 } => SectionField::from_fn(grid, rank, |z| {
                let mut out = vec![c(0.0, 0.0); rank];
                out[0] = c((-a1 * z[0].norm_sqr() - a2 * second(z).norm_sqr()).exp(), 0.0);
                out
            }),
            Self::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let poly = TrigPoly::random(&mut rng, 2 * grid.dim(), rank, 6, 2.5);
                SectionField::from_fn(grid, rank, |z| {
                    let bz = b(z[0]);
                    poly.eval(z).into_iter().map(|x| x * bz).collect()
                })
            }
        }
    }
}

/// Smooth planar test functions `P(z) (1 - |z|^2)^m` on the unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanarFunction {
    /// `(1 - |z|^2)`
    Bump1,
    /// `(1 - |z|^2)^2`
    Bump2,
    /// `conj(z) (1 - |z|^2)`
    ZbarBump,
    /// `conj(z) (1 - |z|^2)^2`
    ZbarBump2,
    /// `z (1 - |z|^2)^3`
    ZBump3,
}

#[derive(Clone, Copy)]
enum Prefactor {
    One,
    Z,
    Zbar,
}

impl PlanarFunction {
    pub const ALL: [Self; 5] = [Self::Bump1, Self::Bump2, Self::ZbarBump, Self::ZbarBump2, Self::ZBump3];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bump1 => "bump1",
            Self::Bump2 => "bump2",
            Self::ZbarBump => "zbar-bump",
            Self::ZbarBump2 => "zbar-bump2",
            Self::ZBump3 => "z-bump3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn parts(&self) -> (Prefactor, i32) {
        match self {
            Self::Bump1 => (Prefactor::One, 1),
            Self::Bump2 => (Prefactor::One, 2),
            Self::ZbarBump => (Prefactor::Zbar, 1),
            Self::ZbarBump2 => (Prefactor::Zbar, 2),
            Self::ZBump3 => (Prefactor::Z, 3),
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        let (p, m) = self.parts();
        let b = (1.0 - z.norm_sqr()).powi(m);
        match p {
            Prefactor::One => c(b, 0.0),
            Prefactor::Z => z * b,
            Prefactor::Zbar => z.conj() * b,
        }
    }

    /// Closed-form `∂_{z̄}`.
    pub fn dbar(&self, z: Complex64) -> Complex64 {
        let (p, m) = self.parts();
        let s = 1.0 - z.norm_sqr();
        let mf = m as f64;
        // ∂̄ (1-|z|^2)^m = -m z (1-|z|^2)^{m-1}
        let db = -z * mf * s.powi(m - 1);
        match p {
            Prefactor::One => db,
            Prefactor::Z => z * db,
            Prefactor::Zbar => c(s.powi(m), 0.0) + z.conj() * db,
        }
    }
}

/// `Σ_t a_t cos(ω_t · x + φ_t)` with complex vector amplitudes, where `x`
/// lists the real and imaginary parts of the coordinates.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    freqs: Vec<Vec<f64>>,
    phases: Vec<f64>,
    amps: Vec<Vec<Complex64>>,
}

impl TrigPoly {
    pub fn random(rng: &mut impl Rng, real_dims: usize, comps: usize, terms: usize, max_freq: f64) -> Self {
        let mut freqs = Vec::with_capacity(terms);
        let mut phases = Vec::with_capacity(terms);
        let mut amps = Vec::with_capacity(terms);
        for _ in 0..terms {
            freqs.push((0..real_dims).map(|_| rng.random_range(-max_freq..max_freq)).collect());
            phases.push(rng.random_range(0.0..std::f64::consts::TAU));
            amps.push(
                (0..comps)
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect(),
            );
        }
        Self { freqs, phases, amps }
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let comps = self.amps.first().map_or(0, |a| a.len());
        let mut out = vec![c(0.0, 0.0); comps];
        for ((w, ph), a) in self.freqs.iter().zip(&self.phases).zip(&self.amps) {
            let mut arg = *ph;
            for (i, zi) in z.iter().enumerate() {
                arg += w[2 * i] * zi.re + w[2 * i + 1] * zi.im;
            }
            let cs = arg.cos();
            for (o, ai) in out.iter_mut().zip(a) {
                *o += ai * cs;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_dbar_matches_finite_difference() {
        let z = c(0.31, -0.22);
        let e = 1e-6;
        for f in PlanarFunction::ALL {
            let dx = (f.value(z + e) - f.value(z - e)) / (2.0 * e);
            let dy = (f.value(z + c(0.0, e)) - f.value(z - c(0.0, e))) / (2.0 * e);
            let fd = (dx + c(0.0, 1.0) * dy) * 0.5;
            assert!((fd - f.dbar(z)).norm() < 1e-8, "{}", f.name());
            assert!(f.value(c(0.6, 0.8)).norm() < 1e-12);
            assert_eq!(PlanarFunction::from_name(f.name()), Some(f));
        }
    }

    #[test]
    fn trig_poly_is_deterministic() {
        let a = TrigPoly::random(&mut ChaCha8Rng::seed_from_u64(9), 4, 2, 5, 2.0);
        let b = TrigPoly::random(&mut ChaCha8Rng::seed_from_u64(9), 4, 2, 5, 2.0);
        let z = [c(0.1, 0.2), c(-0.3, 0.4)];
        assert_eq!(a.eval(&z), b.eval(&z));
    }
}
