//! Moser-type iteration of `L^p` norms driven by the Cauchy-slice potential
//! estimate: the exponent schedule, the constant ledger, and discrete checks
//! of each inequality in the chain.
//!
//! All norms here are unweighted Lebesgue norms of the pointwise `h`-norm;
//! a twist recorded on the metric is ignored.

use serde::{Deserialize, Serialize};

use crate::bundle::{
    check_z1_boundary_vanishing, chern_curvature, covariant_derivative, curvature_budget, curvature_pointwise_norm,
    curvature_slice_norm, lp_norm, MetricField, SectionField,
};
use crate::error::{Error, Result};
use crate::grid::{ProductGrid, Quadrature, ScalarField};
use crate::report::CheckRecord;

/// Relative slack for inequalities whose sides carry different
/// discretization errors.
pub const DISCRETIZATION_SLACK: f64 = 0.05;
/// Relative slack for inequalities between discrete sums.
pub const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub iteration_exponent: u32,
    pub eta: f64,
    pub nu_hat: usize,
    /// `γ_0 ..= γ_ν̂` from the recursion.
    pub gammas: Vec<f64>,
}

impl IterationSchedule {
    /// `(1/η)(1 - (1-η)(1-η/2)^ν)`.
    pub fn closed_form(&self, nu: usize) -> f64 {
        let e = self.eta;
        (1.0 - (1.0 - e) * (1.0 - e / 2.0).powi(nu as i32)) / e
    }

    pub fn final_gamma(&self) -> f64 {
        self.gammas[self.nu_hat]
    }

    /// `4γ_ν - 2`.
    pub fn exponent(&self, nu: usize) -> f64 {
        4.0 * self.gammas[nu] - 2.0
    }
}

/// `η = 2/(N+2)`, `ν̂ = ceil(log 2 / log((N+2)/(N+1)))`, `γ_0 = 1`,
/// `γ_{ν+1} = γ_ν (1 - η/2) + 1/2`.
pub fn gamma_schedule(iteration_exponent: u32) -> Result<IterationSchedule> {
    if iteration_exponent < 3 {
        return Err(Error::InvalidIterationExponent(iteration_exponent));
    }
    let n = iteration_exponent as f64;
    let eta = 2.0 / (n + 2.0);
    let nu_hat = (2f64.ln() / ((n + 2.0) / (n + 1.0)).ln()).ceil() as usize;
    let mut gammas = Vec::with_capacity(nu_hat + 1);
    gammas.push(1.0);
    for nu in 0..nu_hat {
        gammas.push(gammas[nu] * (1.0 - eta / 2.0) + 0.5);
    }
    Ok(IterationSchedule {
        iteration_exponent,
        eta,
        nu_hat,
        gammas,
    })
}

/// Choice of the free parameters `δ_ν > 0` of the arithmetic-geometric step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeltaPolicy {
    Unit,
    Constant { value: f64 },
    PerStep { values: Vec<f64> },
}

impl Default for DeltaPolicy {
    fn default() -> Self {
        Self::Unit
    }
}

impl DeltaPolicy {
    fn values(&self, steps: usize) -> Result<Vec<f64>> {
        let v = match self {
            Self::Unit => vec![1.0; steps],
            Self::Constant { value } => vec![*value; steps],
            Self::PerStep { values } => {
                if values.len() != steps {
                    return Err(Error::InvalidParameter(format!(
                        "{} per-step deltas given, {steps} steps needed",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        if let Some(bad) = v.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!("delta_nu = {bad} must be positive")));
        }
        Ok(v)
    }
}

/// The largest curvature budget `γ` meeting all three smallness conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    pub gamma: f64,
    /// `γ^{(N-2)/N}`.
    pub t: f64,
    /// `δ` at that budget.
    pub delta: f64,
    /// Which condition is tight.
    pub binding: String,
    /// Thresholds on `t` from each condition taken alone.
    pub t_absorption: f64,
    pub t_gradient: f64,
    pub t_coercivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantLedger {
    pub n: usize,
    pub schedule: IterationSchedule,
    pub polydisk_radius: f64,
    pub delta_policy: DeltaPolicy,
    pub delta_nu: Vec<f64>,
    pub delta_nu_star: Vec<f64>,
    pub c_r: f64,
    pub c_natural: f64,
    pub c_sharp: f64,
    pub c_flat: f64,
    pub k: f64,
    pub kappa: f64,
    pub smallness: Option<Smallness>,
}

/// `C_Ř = (2^{1+η} π^{n-2+η} Ř^{n-1+η} / η)^{1/(2-η)}`.
pub fn c_r(n: usize, eta: f64, polydisk_radius: f64) -> f64 {
    let nf = n as f64;
    (2f64.powf(1.0 + eta) * std::f64::consts::PI.powf(nf - 2.0 + eta) * polydisk_radius.powf(nf - 1.0 + eta) / eta)
        .powf(1.0 / (2.0 - eta))
}

pub fn compute_constants(
    n: usize,
    iteration_exponent: u32,
    polydisk_radius: f64,
    k: f64,
    policy: &DeltaPolicy,
) -> Result<ConstantLedger> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension n = {n} < 2")));
    }
    if !(polydisk_radius > 1.0 && polydisk_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "polydisk radius {polydisk_radius} must exceed 1"
        )));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("twist K = {k} must be nonnegative")));
    }
    let schedule = gamma_schedule(iteration_exponent)?;
    let nu_hat = schedule.nu_hat;
    let delta_nu = policy.values(nu_hat)?;
    let cr = c_r(n, schedule.eta, polydisk_radius);
    let mut delta_nu_star = Vec::with_capacity(nu_hat);
    let mut c_natural: f64 = 0.0;
    for nu in 0..nu_hat {
        let g = schedule.gammas[nu];
        let ds = delta_nu[nu].powf(1.0 / (2.0 * g - 1.0));
        delta_nu_star.push(ds);
        let three = 3f64.powf(1.0 / (2.0 * g));
        let first = three * g * cr * (2.0 * g - 1.0) / (g * ds);
        let second = three * 2.0 * g * cr * delta_nu[nu] / g;
        c_natural = c_natural.max(first).max(second);
    }
    let c_sharp: f64 = (0..nu_hat).map(|j| c_natural.powi(j as i32)).sum();
    let s = schedule.exponent(nu_hat);
    let nn = iteration_exponent as f64;
    let c_flat = (std::f64::consts::PI.powi(n as i32) * polydisk_radius.powi(2 * n as i32))
        .powf(2.0 * (s - nn) / s);
    let kappa = (-k * polydisk_radius * polydisk_radius).exp();
    let mut ledger = ConstantLedger {
        n,
        schedule,
        polydisk_radius,
        delta_policy: policy.clone(),
        delta_nu,
        delta_nu_star,
        c_r: cr,
        c_natural,
        c_sharp,
        c_flat,
        k,
        kappa,
        smallness: None,
    };
    ledger.smallness = ledger.solve_smallness().ok();
    Ok(ledger)
}

impl ConstantLedger {
    /// Ledger for the dimension and polydisk radius of `grid`.
    pub fn for_grid(grid: &ProductGrid, iteration_exponent: u32, k: f64, policy: &DeltaPolicy) -> Result<Self> {
        compute_constants(grid.dim(), iteration_exponent, grid.polydisk_radius(), k, policy)
    }

    pub fn iteration_exponent(&self) -> u32 {
        self.schedule.iteration_exponent
    }

    /// `(C^♮)^ν̂`.
    pub fn c_natural_pow(&self) -> f64 {
        self.c_natural.powi(self.schedule.nu_hat as i32)
    }

    /// `δ = 2 C^♭ t ((C^♮)^ν̂ + 2 C^♯)` for a budget `t`.
    pub fn delta(&self, t: f64) -> f64 {
        2.0 * self.c_flat * t * (self.c_natural_pow() + 2.0 * self.c_sharp)
    }

    /// `C^♯ C^♭ t < 1/2`.
    pub fn absorption_hypothesis(&self, t: f64) -> bool {
        self.c_sharp * self.c_flat * t < 0.5
    }

    fn t_exponent(&self) -> f64 {
        let nn = self.iteration_exponent() as f64;
        (nn - 2.0) / nn
    }

    /// Left sides of the three conditions at budget `t`, each divided by its
    /// right side (admissible iff all `< 1`, `<= 1`, `<= 1`).
    pub fn smallness_ratios(&self, t: f64) -> [f64; 3] {
        let n2 = (self.n * self.n) as f64;
        let d = self.delta(t);
        [
            self.c_sharp * self.c_flat * t / 0.5,
            n2 * t * (2.0 + d) * self.c_flat * self.c_sharp / (self.kappa / 2.0),
            n2 * t * self.c_flat * (self.c_natural_pow() + d * self.c_sharp) / (self.kappa * self.k / 2.0),
        ]
    }

    fn admissible(&self, t: f64) -> bool {
        let [a, b, c] = self.smallness_ratios(t);
        a < 1.0 && b <= 1.0 && c <= 1.0
    }

    /// Largest admissible `γ` by bisection in `t = γ^{(N-2)/N}`.
    pub fn solve_smallness(&self) -> Result<Smallness> {
        if !(self.k > 0.0) {
            return Err(Error::NoAdmissibleGamma);
        }
        let single = |idx: usize| {
            let (mut lo, mut hi) = (0.0, 1.0);
            while self.smallness_ratios(hi)[idx] <= 1.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.smallness_ratios(mid)[idx] <= 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while self.admissible(hi) {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if !(lo > 0.0) {
            return Err(Error::NoAdmissibleGamma);
        }
        let ts = [single(0), single(1), single(2)];
        let names = ["absorption", "gradient", "coercivity"];
        let binding = (0..3)
            .min_by(|&a, &b| ts[a].partial_cmp(&ts[b]).unwrap())
            .map(|i| names[i])
            .unwrap_or("none");
        Ok(Smallness {
            gamma: lo.powf(1.0 / self.t_exponent()),
            t: lo,
            delta: self.delta(lo),
            binding: binding.to_string(),
            t_absorption: ts[0],
            t_gradient: ts[1],
            t_coercivity: ts[2],
        })
    }

    /// The largest admissible `γ`, or [`Error::NoAdmissibleGamma`].
    pub fn admissible_gamma(&self) -> Result<f64> {
        self.smallness.as_ref().map(|s| s.gamma).ok_or(Error::NoAdmissibleGamma)
    }
}

/// Everything about `(h, grid)` the chain needs, computed once.
pub struct ChainContext<'a> {
    pub grid: &'a ProductGrid,
    pub metric: MetricField,
    /// `|Θ|` per node.
    pub curvature_norm: ScalarField,
    /// `|Θ_{11̄}|` per node.
    pub slice_norm: ScalarField,
}

impl<'a> ChainContext<'a> {
    pub fn new(h: &MetricField, grid: &'a ProductGrid) -> Result<Self> {
        let metric = h.clone().with_twist(0.0);
        let theta = chern_curvature(&metric, grid)?;
        Ok(Self {
            grid,
            curvature_norm: curvature_pointwise_norm(&theta, &metric)?,
            slice_norm: curvature_slice_norm(&theta, &metric, 0, 0)?,
            metric,
        })
    }

    /// `(∫|Θ|^{N/(N-2)})^{(N-2)/N}` and the raw integral.
    pub fn budget(&self, iteration_exponent: u32) -> (f64, f64) {
        curvature_budget(&self.curvature_norm, self.grid, iteration_exponent)
    }
}

/// Norms of one section entering the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionNorms {
    /// `‖f‖²_{L^{4γ_ν - 2}}` for `ν = 0..=ν̂`.
    pub gamma_norms_sq: Vec<f64>,
    pub l2_sq: f64,
    pub ln_sq: f64,
    pub dbar_sq: f64,
    pub nabla_sq: f64,
    /// `∫ |Θ_{11̄}| |f|²`
    pub curvature_integral: f64,
}

pub fn section_norms(ctx: &ChainContext, f: &SectionField, schedule: &IterationSchedule) -> Result<SectionNorms> {
    let (g, h) = (ctx.grid, &ctx.metric);
    check_z1_boundary_vanishing(f, g)?;
    let dbar = covariant_derivative(f, h, g, 0, false)?;
    let nabla = covariant_derivative(f, h, g, 0, true)?;
    let gamma_norms_sq = (0..=schedule.nu_hat)
        .map(|nu| lp_norm(f, Some(h), schedule.exponent(nu), g).map(|v| v * v))
        .collect::<Result<Vec<f64>>>()?;
    let curvature_integral = (0..g.len())
        .map(|k| ctx.slice_norm.values()[k].re * h.norm_sqr(k, f.at(k)))
        .sum::<f64>()
        * g.cell_volume();
    Ok(SectionNorms {
        l2_sq: lp_norm(f, Some(h), 2.0, g)?.powi(2),
        ln_sq: lp_norm(f, Some(h), schedule.iteration_exponent as f64, g)?.powi(2),
        dbar_sq: lp_norm(&dbar, Some(h), 2.0, g)?.powi(2),
        nabla_sq: lp_norm(&nabla, Some(h), 2.0, g)?.powi(2),
        gamma_norms_sq,
        curvature_integral,
    })
}

fn check_ledger(ctx: &ChainContext, ledger: &ConstantLedger) -> Result<()> {
    if ledger.n != ctx.grid.dim() || ledger.polydisk_radius != ctx.grid.polydisk_radius() {
        return Err(Error::InvalidParameter(format!(
            "ledger for n = {}, radius {} used on a grid with n = {}, radius {}",
            ledger.n,
            ledger.polydisk_radius,
            ctx.grid.dim(),
            ctx.grid.polydisk_radius()
        )));
    }
    Ok(())
}

/// Each step `‖f‖²_{L^{4γ_{ν+1}-2}} <= C^♮(‖f‖²_{L^{4γ_ν-2}} + ‖∂̄_1 f‖² + ‖∇_1 f‖²)`
/// and the aggregated bound after `ν̂` steps.
pub fn run_iteration_chain(ctx: &ChainContext, f: &SectionField, ledger: &ConstantLedger) -> Result<Vec<CheckRecord>> {
    check_ledger(ctx, ledger)?;
    let s = &ledger.schedule;
    let m = section_norms(ctx, f, s)?;
    let mut out = Vec::with_capacity(s.nu_hat + 1);
    for nu in 0..s.nu_hat {
        let lhs = m.gamma_norms_sq[nu + 1];
        let rhs = ledger.c_natural * (m.gamma_norms_sq[nu] + m.dbar_sq + m.nabla_sq);
        out.push(
            CheckRecord::le(format!("step {nu}"), "iteration-step", lhs, rhs, DISCRETIZATION_SLACK * rhs)
                .with("p_in", s.exponent(nu))
                .with("p_out", s.exponent(nu + 1)),
        );
    }
    let lhs = m.gamma_norms_sq[s.nu_hat];
    let rhs = ledger.c_natural_pow() * m.l2_sq + ledger.c_sharp * (2.0 * m.dbar_sq + m.curvature_integral);
    out.push(
        CheckRecord::le("aggregated", "iteration-aggregate", lhs, rhs, DISCRETIZATION_SLACK * rhs)
            .with("p_out", s.exponent(s.nu_hat)),
    );
    Ok(out)
}

/// `‖f‖²_{L^N} <= C^♭ ‖f‖²_{L^{4γ_ν̂-2}}`.
pub fn holder_bridge_check(ctx: &ChainContext, f: &SectionField, ledger: &ConstantLedger) -> Result<CheckRecord> {
    check_ledger(ctx, ledger)?;
    let m = section_norms(ctx, f, &ledger.schedule)?;
    let rhs = ledger.c_flat * m.gamma_norms_sq[ledger.schedule.nu_hat];
    Ok(CheckRecord::le("holder bridge", "holder-volume-factor", m.ln_sq, rhs, ROUNDING_SLACK * rhs))
}

fn budget_record(rec: CheckRecord, ledger: &ConstantLedger, t: f64) -> CheckRecord {
    let rec = rec
        .with("budget", t)
        .with("absorption_product", ledger.c_sharp * ledger.c_flat * t)
        .with("delta", ledger.delta(t));
    if ledger.absorption_hypothesis(t) {
        rec
    } else {
        rec.hypothesis_not_met(format!(
            "C_sharp C_flat budget = {:.3e} is not below 1/2",
            ledger.c_sharp * ledger.c_flat * t
        ))
    }
}

/// `∫ |Θ_{11̄}| |f|² <= δ (‖f‖² + ‖∂̄_1 f‖²)` with `δ` at the measured budget.
pub fn curvature_absorption_check(ctx: &ChainContext, f: &SectionField, ledger: &ConstantLedger) -> Result<CheckRecord> {
    check_ledger(ctx, ledger)?;
    let m = section_norms(ctx, f, &ledger.schedule)?;
    let (t, _) = ctx.budget(ledger.iteration_exponent());
    let rhs = ledger.delta(t) * (m.l2_sq + m.dbar_sq);
    let rec = CheckRecord::le("curvature absorption", "curvature-absorption", m.curvature_integral, rhs, DISCRETIZATION_SLACK * rhs);
    Ok(budget_record(rec, ledger, t))
}

/// `‖f‖²_{L^N} <= C^♭((C^♮)^ν̂ + δC^♯)‖f‖² + (2+δ)C^♭C^♯‖∂̄_1 f‖²`.
pub fn final_ln_bound_check(ctx: &ChainContext, f: &SectionField, ledger: &ConstantLedger) -> Result<CheckRecord> {
    check_ledger(ctx, ledger)?;
    let m = section_norms(ctx, f, &ledger.schedule)?;
    let (t, _) = ctx.budget(ledger.iteration_exponent());
    let d = ledger.delta(t);
    let rhs = ledger.c_flat * (ledger.c_natural_pow() + d * ledger.c_sharp) * m.l2_sq
        + (2.0 + d) * ledger.c_flat * ledger.c_sharp * m.dbar_sq;
    let rec = CheckRecord::le("final L^N bound", "final-ln-bound", m.ln_sq, rhs, DISCRETIZATION_SLACK * rhs);
    Ok(budget_record(rec, ledger, t))
}

/// Step checks, aggregated bound, Hölder bridge, absorption and final bound.
pub fn full_chain(ctx: &ChainContext, f: &SectionField, ledger: &ConstantLedger) -> Result<Vec<CheckRecord>> {
    let mut out = run_iteration_chain(ctx, f, ledger)?;
    out.push(holder_bridge_check(ctx, f, ledger)?);
    out.push(curvature_absorption_check(ctx, f, ledger)?);
    out.push(final_ln_bound_check(ctx, f, ledger)?);
    Ok(out)
}

/// Volume of the grid, for reference against `π^n Ř^{2n}`.
pub fn grid_volume(grid: &ProductGrid) -> f64 {
    grid.node_count() as f64 * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{MetricSpec, SectionSpec};
    use crate::grid::{build_annulus_grid, build_disk_grid};
    use num_rational::Ratio;
    use rand::SeedableRng;

    fn grid(h: f64) -> ProductGrid {
        ProductGrid::new(vec![build_disk_grid(1.0, h).unwrap(), build_disk_grid(1.0, 0.2).unwrap()], 1.1).unwrap()
    }

    #[test]
    fn schedule_against_rational_recursion() {
        let s = gamma_schedule(4).unwrap();
        assert!((s.eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.nu_hat, 4);
        let eta = Ratio::new(1i64, 3);
        let half = Ratio::new(1i64, 2);
        let mut g = Ratio::from_integer(1i64);
        let mut exact = vec![g];
        for _ in 0..4 {
            g = g * (Ratio::from_integer(1) - eta / 2) + half;
            exact.push(g);
        }
        assert_eq!(exact[4], Ratio::new(1319, 648));
        for (a, b) in s.gammas.iter().zip(&exact) {
            assert!((a - *b.numer() as f64 / *b.denom() as f64).abs() < 1e-14);
        }
        let s3 = gamma_schedule(3).unwrap();
        assert!((s3.eta - 0.4).abs() < 1e-15);
        assert_eq!(s3.nu_hat, 4);
        assert!(matches!(gamma_schedule(2), Err(Error::InvalidIterationExponent(2))));
    }

    #[test]
    fn schedule_invariants() {
        for n in 3..=64u32 {
            let s = gamma_schedule(n).unwrap();
            for nu in 0..=s.nu_hat {
                assert!((s.closed_form(nu) - s.gammas[nu]).abs() <= 1e-12);
            }
            assert!(s.final_gamma() >= (n as f64 + 2.0) / 4.0);
            assert!(s.exponent(s.nu_hat) >= n as f64);
        }
    }

    #[test]
    fn constants_against_frozen_values() {
        // high-precision evaluation of the closed forms
        let l = compute_constants(2, 4, 1.1, 4.0, &DeltaPolicy::Unit).unwrap();
        assert!((l.c_r - 4.567_103_692_442_759).abs() < 1e-12, "{}", l.c_r);
        let by_hand = (2f64.powf(4.0 / 3.0) * std::f64::consts::PI.powf(1.0 / 3.0) * 1.1f64.powf(4.0 / 3.0) * 3.0).powf(0.6);
        assert!((l.c_r - by_hand).abs() < 1e-13);
        let s = l.schedule.exponent(4);
        let flat = (std::f64::consts::PI.powi(2) * 1.1f64.powi(4)).powf(2.0 * (s - 4.0) / s);
        assert_eq!(l.c_flat, flat);
        assert_eq!(l.c_sharp, (0..4).map(|j| l.c_natural.powi(j)).sum::<f64>());
        assert_eq!(compute_constants(2, 4, 1.1, 0.0, &DeltaPolicy::Unit).unwrap().kappa, 1.0);
        assert!((l.kappa - (-4.84f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn smallness_matches_quadratic_oracle() {
        let l = compute_constants(2, 4, 1.1, 4.0, &DeltaPolicy::Unit).unwrap();
        let sm = l.smallness.clone().unwrap();
        let n2 = 4.0;
        let dd = 2.0 * l.c_flat * (l.c_natural_pow() + 2.0 * l.c_sharp);
        let root = |a: f64, b: f64, c: f64| (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        let tb = root(n2 * l.c_flat * l.c_sharp * dd, 2.0 * n2 * l.c_flat * l.c_sharp, -l.kappa / 2.0);
        let tc = root(n2 * l.c_flat * l.c_sharp * dd, n2 * l.c_flat * l.c_natural_pow(), -l.kappa * l.k / 2.0);
        let ta = 1.0 / (2.0 * l.c_sharp * l.c_flat);
        let expect = ta.min(tb).min(tc);
        assert!((sm.t - expect).abs() < 1e-9 * expect, "{} vs {expect}", sm.t);
        assert!((sm.gamma - expect.powf(2.0)).abs() < 1e-8 * sm.gamma);
        let r = l.smallness_ratios(sm.t);
        assert!(r[0] < 1.0 && r[1] <= 1.0 && r[2] <= 1.0);
    }

    #[test]
    fn no_gamma_without_twist() {
        let l = compute_constants(2, 4, 1.1, 0.0, &DeltaPolicy::Unit).unwrap();
        assert!(l.smallness.is_none());
        assert!(matches!(l.admissible_gamma(), Err(Error::NoAdmissibleGamma)));
    }

    #[test]
    fn threshold_decreases_with_dimension() {
        let a = compute_constants(2, 4, 1.1, 4.0, &DeltaPolicy::Unit).unwrap().admissible_gamma().unwrap();
        let b = compute_constants(3, 4, 1.1, 4.0, &DeltaPolicy::Unit).unwrap().admissible_gamma().unwrap();
        assert!(b < a);
    }

    #[test]
    fn delta_policy_validation() {
        assert!(compute_constants(2, 4, 1.1, 1.0, &DeltaPolicy::Constant { value: -1.0 }).is_err());
        assert!(compute_constants(2, 4, 1.1, 1.0, &DeltaPolicy::PerStep { values: vec![1.0; 3] }).is_err());
        let a = compute_constants(2, 4, 1.1, 1.0, &DeltaPolicy::PerStep { values: vec![1.0; 4] }).unwrap();
        let b = compute_constants(2, 4, 1.1, 1.0, &DeltaPolicy::Unit).unwrap();
        assert_eq!(a.c_natural, b.c_natural);
    }

    #[test]
    fn ledger_independent_of_domains() {
        let g1 = grid(0.1);
        let g2 = ProductGrid::new(
            vec![build_annulus_grid(0.9, 0.2, 0.05).unwrap(), build_disk_grid(0.5, 0.1).unwrap()],
            1.1,
        )
        .unwrap();
        let a = ConstantLedger::for_grid(&g1, 4, 2.0, &DeltaPolicy::Unit).unwrap();
        let b = ConstantLedger::for_grid(&g2, 4, 2.0, &DeltaPolicy::Unit).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_on_zero_section() {
        let g = grid(0.1);
        let h = MetricField::identity(&g, 1);
        let ctx = ChainContext::new(&h, &g).unwrap();
        let l = ConstantLedger::for_grid(&g, 4, 1.0, &DeltaPolicy::Unit).unwrap();
        let recs = full_chain(&ctx, &SectionField::zeros(1, g.len()), &l).unwrap();
        assert!(recs.iter().all(|r| r.passed()), "{recs:?}");
    }

    #[test]
    fn chain_on_catalog() {
        let g = grid(0.05);
        let l = ConstantLedger::for_grid(&g, 4, 1.0, &DeltaPolicy::Unit).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for metric in [MetricSpec::Identity, MetricSpec::Gaussian { k: 1e-6 }] {
            let h = metric.build(&g, 2).unwrap();
            let ctx = ChainContext::new(&h, &g).unwrap();
            for s in SectionSpec::vanishing().into_iter().chain([SectionSpec::random(&mut rng)]) {
                let recs = full_chain(&ctx, &s.build(&g, 2), &l).unwrap();
                for r in &recs {
                    assert!(r.passed() && (r.slack > 0.0 || r.rhs == 0.0), "{metric:?} {s:?} {r:?}");
                }
            }
        }
    }

    #[test]
    fn large_curvature_is_hypothesis_not_met() {
        let g = grid(0.1);
        let l = ConstantLedger::for_grid(&g, 5, 1.0, &DeltaPolicy::Unit).unwrap();
        let h = MetricSpec::Singular { a: 0.75, scale: 4.0 }.build(&g, 1).unwrap();
        let ctx = ChainContext::new(&h, &g).unwrap();
        let f = SectionSpec::Radial.build(&g, 1);
        let r = curvature_absorption_check(&ctx, &f, &l).unwrap();
        assert_eq!(r.outcome, crate::report::Outcome::HypothesisNotMet);
        let r = final_ln_bound_check(&ctx, &f, &l).unwrap();
        assert_eq!(r.outcome, crate::report::Outcome::HypothesisNotMet);
    }

    #[test]
    fn final_slack_stable_under_refinement() {
        let rel: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&s| {
                let g = grid(s);
                let l = ConstantLedger::for_grid(&g, 4, 1.0, &DeltaPolicy::Unit).unwrap();
                let h = MetricField::identity(&g, 1);
                let ctx = ChainContext::new(&h, &g).unwrap();
                let r = final_ln_bound_check(&ctx, &SectionSpec::Twisted.build(&g, 1), &l).unwrap();
                r.slack / r.rhs
            })
            .collect();
        assert!((rel[0] - rel[1]).abs() <= 0.1 * rel[1], "{rel:?}");
    }
}
