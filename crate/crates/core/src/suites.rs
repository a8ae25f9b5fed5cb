//! Verification suites: each takes a configuration and returns a [`Report`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bochner::verify_gradient_identity;
use crate::bundle::MetricField;
use crate::catalog::{MetricSpec, PlanarFunction, SectionSpec, TrigPoly};
use crate::cauchy::{kernel_bound_check, reconstruct_catalog};
use crate::dbar::{
    choose_gamma, curvature_norm, jet_interpolate, manufactured_solve_checks, omega_grid, punctured_polydisk,
    radius_for_budget, singular_budget_ratio, verify_coercivity, DbarOperator, JetSpec,
};
use crate::error::{Error, Result};
use crate::grid::{build_disk_grid, ProductGrid, ScalarField};
use crate::moser::{compute_constants, full_chain, gamma_schedule, ChainContext, ConstantLedger, DeltaPolicy};
use crate::potential::{verify_potential_estimate, KernelSpec};
use crate::report::{CheckRecord, Outcome, Report, Table};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub constants: ConstantsConfig,
    pub cauchy: CauchyConfig,
    pub potential: PotentialConfig,
    pub bochner: BochnerConfig,
    pub moser: MoserConfig,
    pub dbar: DbarConfig,
    pub jet: JetConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 7,
            constants: ConstantsConfig::default(),
            cauchy: CauchyConfig::default(),
            potential: PotentialConfig::default(),
            bochner: BochnerConfig::default(),
            moser: MoserConfig::default(),
            dbar: DbarConfig::default(),
            jet: JetConfig::default(),
        }
    }
}

impl Config {
    /// Parses TOML, reporting the offending field path on failure.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Replaces the primary spacing of every suite.
    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.cauchy.spacing = spacing;
        self.bochner.spacing = spacing;
        self.moser.spacing = spacing;
        self.dbar.spacing = spacing;
        self.potential.disk_spacing = spacing;
        self
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub n: usize,
    pub iteration_exponent: u32,
    pub polydisk_radius: f64,
    pub twist: f64,
    pub delta_policy: DeltaPolicy,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            n: 2,
            iteration_exponent: 4,
            polydisk_radius: 1.1,
            twist: 4.0,
            delta_policy: DeltaPolicy::Unit,
        }
    }
}

/// Ledger document plus schedule checks for every `N` in `3..=64`.
pub fn constants_suite(cfg: &ConstantsConfig) -> Result<Report> {
    let ledger = compute_constants(cfg.n, cfg.iteration_exponent, cfg.polydisk_radius, cfg.twist, &cfg.delta_policy)?;
    let mut report = Report::new("constants", serde_json::to_value(cfg)?);
    report.data = Some(serde_json::to_value(&ledger)?);
    report.extend(schedule_checks()?);
    if let Some(s) = &ledger.smallness {
        let [a, b, k] = ledger.smallness_ratios(s.t);
        report.push(
            CheckRecord::le("smallness at largest gamma", "smallness-conditions", a.max(b).max(k), 1.0, 1e-12)
                .with("gamma", s.gamma)
                .with("delta", s.delta),
        );
    }
    Ok(report)
}

/// Closed form against recursion, `γ_ν̂ >= (N+2)/4` and `4γ_ν̂ - 2 >= N`.
pub fn schedule_checks() -> Result<Vec<CheckRecord>> {
    let mut worst_closed: f64 = 0.0;
    let mut worst_gamma = f64::INFINITY;
    let mut worst_exp = f64::INFINITY;
    for n in 3..=64u32 {
        let s = gamma_schedule(n)?;
        for nu in 0..=s.nu_hat {
            worst_closed = worst_closed.max((s.closed_form(nu) - s.gammas[nu]).abs());
        }
        worst_gamma = worst_gamma.min(s.final_gamma() - (n as f64 + 2.0) / 4.0);
        worst_exp = worst_exp.min(s.exponent(s.nu_hat) - n as f64);
    }
    Ok(vec![
        CheckRecord::le("closed form equals recursion, N = 3..64", "gamma-schedule", worst_closed, 1e-12, 0.0),
        CheckRecord::ge("final gamma reaches (N+2)/4", "gamma-schedule", worst_gamma, 0.0, 0.0),
        CheckRecord::ge("final exponent reaches N", "gamma-schedule", worst_exp, 0.0, 0.0),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyConfig {
    pub functions: Vec<PlanarFunction>,
    /// Fine spacing; the coarse run uses twice this.
    pub spacing: f64,
    pub margin_cells: f64,
    pub max_error: f64,
    pub min_ratio: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            functions: vec![PlanarFunction::Bump2, PlanarFunction::ZbarBump2, PlanarFunction::ZBump3],
            spacing: 0.02,
            margin_cells: 5.0,
            max_error: 0.05,
            min_ratio: 1.7,
        }
    }
}

pub fn cauchy_suite(cfg: &CauchyConfig) -> Result<Report> {
    let mut report = Report::new("cauchy-check", serde_json::to_value(cfg)?);
    let mut table = Table::new("refinement", &["function", "spacing", "max_relative_error"]);
    for (i, f) in cfg.functions.iter().enumerate() {
        let fine = reconstruct_catalog(*f, cfg.spacing, cfg.margin_cells)?;
        let coarse = reconstruct_catalog(*f, 2.0 * cfg.spacing, cfg.margin_cells)?;
        table.push(vec![i as f64, coarse.spacing, coarse.max_relative_error]);
        table.push(vec![i as f64, fine.spacing, fine.max_relative_error]);
        report.push(
            CheckRecord::le(
                format!("{} reconstruction error", f.name()),
                "cauchy-reconstruction",
                fine.max_relative_error,
                cfg.max_error,
                0.0,
            )
            .with("spacing", cfg.spacing)
            .with("nodes", fine.nodes_checked as f64),
        );
        report.push(CheckRecord::ge(
            format!("{} error ratio under halving", f.name()),
            "cauchy-reconstruction",
            coarse.max_relative_error / fine.max_relative_error,
            cfg.min_ratio,
            0.0,
        ));
        let grid = build_disk_grid(1.0, cfg.spacing)?;
        let phi = grid.sample(|z| f.value(z));
        let mut rec = kernel_bound_check(&phi, &grid)?;
        rec.label = format!("{} {}", f.name(), rec.label);
        report.push(rec);
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub cases: usize,
    pub disk_spacing: f64,
    pub product_spacing: f64,
    pub iteration_exponent: u32,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            cases: 100,
            disk_spacing: 0.1,
            product_spacing: 0.2,
            iteration_exponent: 4,
        }
    }
}

fn random_kernel(rng: &mut impl Rng, product: bool) -> KernelSpec {
    match rng.random_range(0..4) {
        0 => KernelSpec::Constant(rng.random_range(0.1..3.0)),
        1 if product => KernelSpec::CauchySlice,
        2 => {
            let s = rng.random_range(0.5..4.0);
            KernelSpec::custom(move |x, y| {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
                (-s * d).exp()
            })
        }
        _ => KernelSpec::custom(|x, y| {
            let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
            (1.0 + x[0].norm()) / (1.0 + d.sqrt())
        }),
    }
}

fn random_scalar(grid: &ProductGrid, rng: &mut impl Rng) -> ScalarField {
    let poly = TrigPoly::random(rng, 2 * grid.dim(), 1, 5, 3.0);
    let amp = rng.random_range(0.1..10.0);
    grid.sample(|z| poly.eval(z)[0] * amp)
}

/// Seeded random `(kernel, f, p, q)` cases on a disk and a bidisk, plus the
/// Cauchy slice at `(r, p, q) = (2 - η, 1, 2 - η)`.
pub fn potential_suite(cfg: &PotentialConfig, seed: u64) -> Result<Report> {
    let mut report = Report::new("potential-check", serde_json::to_value(cfg)?);
    let disk = ProductGrid::new(vec![build_disk_grid(1.0, cfg.disk_spacing)?], 1.1)?;
    let bidisk = ProductGrid::new(
        vec![build_disk_grid(1.0, cfg.product_spacing)?, build_disk_grid(1.0, cfg.product_spacing)?],
        1.1,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = gamma_schedule(cfg.iteration_exponent)?.eta;
    let f = random_scalar(&bidisk, &mut rng);
    let mut rec = verify_potential_estimate(&KernelSpec::CauchySlice, &f, 1.0, 2.0 - eta, &bidisk)?;
    rec.label = format!("moser step exponents: {}", rec.label);
    report.push(rec);
    let mut worst = CheckRecord::le("worst random case", "potential-estimate", 0.0, 1.0, 0.0);
    let mut worst_rel = f64::INFINITY;
    let mut failures = 0usize;
    for i in 0..cfg.cases {
        let product = i % 2 == 1;
        let grid = if product { &bidisk } else { &disk };
        let kernel = random_kernel(&mut rng, product);
        let p = rng.random_range(1.0..4.0);
        let q = if rng.random_bool(0.1) {
            f64::INFINITY
        } else {
            p + rng.random_range(0.0..4.0)
        };
        let f = random_scalar(grid, &mut rng);
        let rec = verify_potential_estimate(&kernel, &f, p, q, grid)?;
        if !rec.passed() {
            failures += 1;
        }
        let rel = rec.slack / rec.rhs.max(f64::MIN_POSITIVE);
        if rel < worst_rel {
            worst_rel = rel;
            worst = rec;
        }
    }
    worst.label = format!("worst of {} random cases: {}", cfg.cases, worst.label);
    report.push(worst.with("failures", failures as f64).with("cases", cfg.cases as f64));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BochnerCase {
    pub metric: MetricSpec,
    pub section: SectionSpec,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BochnerConfig {
    pub cases: Vec<BochnerCase>,
    /// Coarse z1 spacing; the fine run halves it.
    pub spacing: f64,
    pub w_spacing: f64,
    pub max_residual: f64,
    pub min_ratio: f64,
}

impl Default for BochnerCase {
    fn default() -> Self {
        Self {
            metric: MetricSpec::Identity,
            section: SectionSpec::Twisted,
            rank: 1,
        }
    }
}

impl Default for BochnerConfig {
    fn default() -> Self {
        Self {
            cases: vec![
                BochnerCase::default(),
                BochnerCase {
                    metric: MetricSpec::Gaussian { k: 1.0 },
                    section: SectionSpec::Radial,
                    rank: 1,
                },
            ],
            spacing: 0.05,
            w_spacing: 0.2,
            max_residual: 0.05,
            min_ratio: 1.8,
        }
    }
}

fn metric_label(m: &MetricSpec) -> String {
    match m {
        MetricSpec::Identity => "identity".into(),
        MetricSpec::Gaussian { k } => format!("gaussian(k={k})"),
        MetricSpec::OffDiagonal { strength } => format!("off-diagonal({strength})"),
        MetricSpec::Singular { a, scale } => format!("singular(a={a}, scale={scale})"),
    }
}

fn bidisk(h1: f64, h2: f64, polydisk_radius: f64) -> Result<ProductGrid> {
    ProductGrid::new(vec![build_disk_grid(1.0, h1)?, build_disk_grid(1.0, h2)?], polydisk_radius)
}

pub fn bochner_suite(cfg: &BochnerConfig) -> Result<Report> {
    let mut report = Report::new("bochner-check", serde_json::to_value(cfg)?);
    let mut table = Table::new("refinement", &["case", "spacing", "relative_residual"]);
    for (i, case) in cfg.cases.iter().enumerate() {
        let name = format!("{}/{}", metric_label(&case.metric), case.section.name());
        let mut rel = Vec::new();
        for h in [cfg.spacing, cfg.spacing / 2.0] {
            let grid = bidisk(h, cfg.w_spacing, 1.1)?;
            let metric = case.metric.build(&grid, case.rank)?;
            let f = case.section.build(&grid, case.rank);
            let id = verify_gradient_identity(&f, &metric, &grid)?;
            table.push(vec![i as f64, h, id.relative_residual]);
            if h == cfg.spacing {
                report.push(id.to_check(&format!("{name} identity"), cfg.max_residual).with("spacing", h));
            }
            rel.push(id.relative_residual);
        }
        report.push(CheckRecord::ge(
            format!("{name} residual ratio under halving"),
            "gradient-identity",
            rel[0] / rel[1],
            cfg.min_ratio,
            0.0,
        ));
    }
    report.tables.push(table);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoserConfig {
    pub metrics: Vec<MetricSpec>,
    pub rank: usize,
    pub random_sections: usize,
    pub iteration_exponent: u32,
    pub twist: f64,
    pub spacing: f64,
    pub w_spacing: f64,
    pub polydisk_radius: f64,
    pub delta_policy: DeltaPolicy,
}

impl Default for MoserConfig {
    fn default() -> Self {
        Self {
            metrics: vec![
                MetricSpec::Identity,
                MetricSpec::Gaussian { k: 1e-6 },
                MetricSpec::Gaussian { k: 0.5 },
                MetricSpec::OffDiagonal { strength: 0.5 },
                MetricSpec::Singular { a: 0.75, scale: 1.0 },
            ],
            rank: 2,
            random_sections: 50,
            iteration_exponent: 4,
            twist: 4.0,
            spacing: 0.1,
            w_spacing: 0.2,
            polydisk_radius: 1.1,
            delta_policy: DeltaPolicy::Unit,
        }
    }
}

/// Full chain on every catalog metric times the boundary-vanishing sections
/// and `random_sections` seeded random ones. Per metric and check kind the
/// case with the least relative slack is reported, with failure counts.
pub fn moser_suite(cfg: &MoserConfig, seed: u64) -> Result<Report> {
    let mut report = Report::new("moser-run", serde_json::to_value(cfg)?);
    let grid = bidisk(cfg.spacing, cfg.w_spacing, cfg.polydisk_radius)?;
    let ledger = ConstantLedger::for_grid(&grid, cfg.iteration_exponent, cfg.twist, &cfg.delta_policy)?;
    let other = ProductGrid::new(
        vec![build_disk_grid(0.6, 0.1)?, build_disk_grid(1.0, 0.2)?],
        cfg.polydisk_radius,
    )?;
    let other_ledger = ConstantLedger::for_grid(&other, cfg.iteration_exponent, cfg.twist, &cfg.delta_policy)?;
    report.push(CheckRecord::flag(
        "ledger identical across domains",
        "ledger-domain-independence",
        ledger == other_ledger,
    ));
    report.data = Some(serde_json::to_value(&ledger)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sections: Vec<SectionSpec> = SectionSpec::vanishing()
        .into_iter()
        .chain((0..cfg.random_sections).map(|_| SectionSpec::random(&mut rng)))
        .collect();
    for metric in &cfg.metrics {
        let h = metric.build(&grid, cfg.rank)?;
        let ctx = ChainContext::new(&h, &grid)?;
        let (budget, _) = ctx.budget(cfg.iteration_exponent);
        // label -> (worst record, failures, hypothesis-not-met count)
        let mut worst: Vec<(CheckRecord, usize, usize)> = Vec::new();
        for s in &sections {
            let f = s.build(&grid, cfg.rank);
            for rec in full_chain(&ctx, &f, &ledger)? {
                let rel = rec.slack / rec.rhs.abs().max(f64::MIN_POSITIVE);
                match worst.iter_mut().find(|w| w.0.label == rec.label) {
                    Some(w) => {
                        w.1 += (rec.outcome == Outcome::Fail) as usize;
                        w.2 += (rec.outcome == Outcome::HypothesisNotMet) as usize;
                        let wrel = w.0.slack / w.0.rhs.abs().max(f64::MIN_POSITIVE);
                        let replace = match (w.0.outcome, rec.outcome) {
                            (Outcome::Fail, Outcome::Fail) | (Outcome::Pass, Outcome::Pass) => rel < wrel,
                            (_, Outcome::Fail) => true,
                            (Outcome::HypothesisNotMet, Outcome::HypothesisNotMet) => rel < wrel,
                            _ => false,
                        };
                        if replace {
                            w.0 = rec.with_note(format!("section {}", s.name()));
                        }
                    }
                    None => {
                        let f = (rec.outcome == Outcome::Fail) as usize;
                        let hn = (rec.outcome == Outcome::HypothesisNotMet) as usize;
                        worst.push((rec.with_note(format!("section {}", s.name())), f, hn));
                    }
                }
            }
        }
        for (mut rec, fails, hnm) in worst {
            rec.label = format!("{} {}", metric_label(metric), rec.label);
            report.push(
                rec.with("cases", sections.len() as f64)
                    .with("failures", fails as f64)
                    .with("hypothesis_not_met", hnm as f64)
                    .with("metric_budget", budget),
            );
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbarConfig {
    pub n: usize,
    pub outer: f64,
    pub eps: f64,
    pub w_radius: f64,
    pub spacing: f64,
    /// Coarser spacing for the coercivity refinement comparison.
    pub coarse_spacing: f64,
    pub polydisk_radius: f64,
    pub twist: f64,
    pub twist_study: Vec<f64>,
    pub metric: MetricSpec,
    pub rank: usize,
    pub trials: usize,
    pub manufactured_cases: usize,
    pub perturbations: usize,
    pub iteration_exponent: u32,
    pub singular_a: f64,
    pub budget_iteration_exponent: u32,
}

impl Default for DbarConfig {
    fn default() -> Self {
        Self {
            n: 2,
            outer: 1.0,
            eps: 0.2,
            w_radius: 1.0,
            spacing: 0.1,
            coarse_spacing: 0.125,
            polydisk_radius: 1.1,
            twist: 4.0,
            twist_study: vec![1.0, 2.0, 4.0],
            metric: MetricSpec::Identity,
            rank: 1,
            trials: 200,
            manufactured_cases: 3,
            perturbations: 20,
            iteration_exponent: 4,
            singular_a: 0.75,
            budget_iteration_exponent: 5,
        }
    }
}

impl DbarConfig {
    pub fn grid(&self, spacing: f64, eps: f64) -> Result<ProductGrid> {
        omega_grid(self.n, self.outer, eps, self.w_radius, spacing, self.polydisk_radius)
    }

    pub fn metric(&self, grid: &ProductGrid, twist: f64) -> Result<MetricField> {
        Ok(self.metric.build(grid, self.rank)?.with_twist(twist))
    }
}

/// Coercivity floor at two resolutions and over the twist study.
pub fn coercivity_checks(cfg: &DbarConfig, seed: u64) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let mut floors = Vec::new();
    for spacing in [cfg.coarse_spacing, cfg.spacing] {
        let grid = cfg.grid(spacing, cfg.eps)?;
        let h = cfg.metric(&grid, cfg.twist)?;
        let op = DbarOperator::new(&grid, &h)?;
        let mut rep = verify_coercivity(&op, cfg.trials, seed)?;
        let mut rec = rep.checks.remove(0);
        rec.label = format!("{} at spacing {spacing}, K = {}", rec.label, cfg.twist);
        floors.push((rec.lhs, rec.rhs));
        out.push(rec.with("spacing", spacing));
    }
    // the verified floor (κK/2)(1 - c h) rises toward κK/2 as h shrinks
    out.push(
        CheckRecord::ge(
            "verified coercivity floor rises under refinement",
            "coercivity",
            floors[1].1,
            floors[0].1,
            0.0,
        )
        .with("min_quotient_coarse", floors[0].0)
        .with("min_quotient_fine", floors[1].0),
    );
    let grid = cfg.grid(cfg.spacing, cfg.eps)?;
    let r2 = cfg.polydisk_radius.powi(2);
    for &k in &cfg.twist_study {
        let h = cfg.metric(&grid, k)?;
        let op = DbarOperator::new(&grid, &h)?;
        let mut rep = verify_coercivity(&op, cfg.trials.min(50), seed ^ k.to_bits())?;
        let rec = rep.checks.remove(0);
        let ratio = op.coercivity_constant() / (k * (-k * r2).exp());
        out.push(CheckRecord::le(format!("coercivity floor, K = {k}"), "coercivity", rec.rhs, rec.lhs, 0.0).with("ratio_to_k_kappa", ratio));
        out.push(CheckRecord::close(
            format!("bound proportional to K exp(-K R^2), K = {k}"),
            "coercivity",
            ratio,
            0.5,
            1e-12,
        ));
    }
    Ok(out)
}

/// Manufactured solves at `eps` and `eps/2`.
pub fn solver_checks(cfg: &DbarConfig, seed: u64) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let mut constants = Vec::new();
    for eps in [cfg.eps, cfg.eps / 2.0] {
        let grid = cfg.grid(cfg.spacing, eps)?;
        let h = cfg.metric(&grid, cfg.twist)?;
        let op = DbarOperator::new(&grid, &h)?;
        let cases = if eps == cfg.eps { cfg.manufactured_cases } else { 1 };
        for i in 0..cases {
            for mut rec in manufactured_solve_checks(&op, seed.wrapping_add(i as u64), cfg.perturbations)? {
                if let Some(bc) = rec.extra.get("bound_constant") {
                    if rec.anchor == "solver-bound" {
                        constants.push(*bc);
                    }
                }
                rec.label = format!("eps {eps} case {i}: {}", rec.label);
                out.push(rec);
            }
        }
    }
    let first = constants[0];
    out.push(CheckRecord::flag(
        "bound constant independent of eps",
        "eps-independence",
        constants.iter().all(|c| *c == first),
    ));
    Ok(out)
}

/// `choose_gamma` for the flat metric and `R_γ` monotonicity for the
/// singular catalog metric.
pub fn budget_checks(cfg: &DbarConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let grid = punctured_polydisk(cfg.n, cfg.polydisk_radius, cfg.w_radius, cfg.spacing, 0.2)?;
    let ledger = ConstantLedger::for_grid(&grid, cfg.iteration_exponent, cfg.twist, &DeltaPolicy::Unit)?;
    let (gamma, radius) = choose_gamma(&ScalarField::zeros(grid.len()), &grid, &ledger)?;
    out.push(
        CheckRecord::close(
            "flat metric admits the full radius",
            "choose-gamma",
            radius,
            cfg.polydisk_radius * (1.0 - cfg.spacing),
            1e-12,
        )
        .with("gamma", gamma),
    );
    let h = MetricSpec::Singular { a: cfg.singular_a, scale: 1.0 }.build(&grid, 1)?;
    let norm = curvature_norm(&h, &grid)?;
    let n = cfg.budget_iteration_exponent;
    let budgets = [2.0, 1.0, 0.5, 0.25];
    let radii = budgets
        .iter()
        .map(|&g| radius_for_budget(&norm, &grid, n, g))
        .collect::<Result<Vec<f64>>>()?;
    let decreasing = radii.windows(2).all(|w| w[1] < w[0]);
    let mut rec = CheckRecord::flag("radius shrinks with the budget (singular metric)", "choose-gamma", decreasing);
    for (g, r) in budgets.iter().zip(&radii) {
        rec = rec.with(&format!("radius_at_{g}"), *r);
    }
    out.push(rec);
    Ok(out)
}

/// Refinement ratio of `∫|Θ|^{N/(N-2)}` for `h = e^{-|z_1|^{2a}}`: `<= 1.1`
/// is read as integrable, `>= 1.5` as divergent.
pub fn singular_budget_check(a: f64, iteration_exponent: u32, spacing: f64, expect_divergent: bool) -> Result<CheckRecord> {
    let (coarse, fine, ratio) = singular_budget_ratio(a, iteration_exponent, spacing, 0.2)?;
    let label = format!("singular budget refinement ratio, a = {a}, N = {iteration_exponent}");
    let rec = if expect_divergent {
        CheckRecord::ge(label, "curvature-budget", ratio, 1.5, 0.0)
    } else {
        CheckRecord::le(label, "curvature-budget", ratio, 1.1, 0.0)
    };
    Ok(rec.with("integral_coarse", coarse).with("integral_fine", fine).with("spacing", spacing))
}

pub fn dbar_suite(cfg: &DbarConfig, seed: u64) -> Result<Report> {
    let mut report = Report::new("dbar-solve", serde_json::to_value(cfg)?);
    report.extend(coercivity_checks(cfg, seed)?);
    report.extend(solver_checks(cfg, seed)?);
    report.extend(budget_checks(cfg)?);
    report.push(singular_budget_check(cfg.singular_a, cfg.budget_iteration_exponent, 0.05, false)?);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JetConfig {
    pub rank: usize,
    pub point: Vec<Complex64>,
    /// Prescribed value for the `q = 0` run.
    pub value: Vec<Complex64>,
    /// Prescribed value and first `z_1`-derivative for the `q = 1` run.
    pub first_order: Vec<Vec<Complex64>>,
}

impl Default for JetConfig {
    fn default() -> Self {
        Self {
            rank: 2,
            point: vec![c(0.5, 0.0), c(0.0, 0.0)],
            value: vec![c(1.0, 0.0), c(0.0, 0.0)],
            first_order: vec![vec![c(1.0, 0.5), c(0.0, -1.0)], vec![c(0.7, 0.0), c(0.2, 0.3)]],
        }
    }
}

/// `q = 0` and `q = 1` jets on the problem domain, and linearity in the jet.
pub fn jet_suite(jet: &JetConfig, domain: &DbarConfig) -> Result<Report> {
    let mut report = Report::new(
        "jet-demo",
        serde_json::json!({ "jet": serde_json::to_value(jet)?, "domain": serde_json::to_value(domain)? }),
    );
    let grid = domain.grid(domain.spacing, domain.eps)?;
    let h = domain.metric.build(&grid, jet.rank)?.with_twist(domain.twist);
    let op = DbarOperator::new(&grid, &h)?;
    let specs = [
        ("q=0", JetSpec { point: jet.point.clone(), coefficients: vec![jet.value.clone()] }),
        ("q=1", JetSpec { point: jet.point.clone(), coefficients: jet.first_order.clone() }),
    ];
    for (name, spec) in &specs {
        let res = jet_interpolate(&op, spec)?;
        report.extend(res.checks.into_iter().map(|mut r| {
            r.label = format!("{name} {}", r.label);
            r
        }));
    }
    let base = jet_interpolate(&op, &specs[1].1)?;
    let doubled = jet_interpolate(&op, &specs[1].1.scale(c(2.0, 0.0)))?;
    let defect = base
        .section
        .values()
        .iter()
        .zip(doubled.section.values())
        .map(|(a, b)| (a * 2.0 - b).norm())
        .fold(0.0, f64::max);
    let size = doubled.section.max_abs();
    report.push(CheckRecord::le("doubling the jet doubles the section", "jet-linearity", defect, 1e-9 * size, 0.0));
    Ok(report)
}

/// Every suite with the given configuration.
pub fn full_suite(cfg: &Config) -> Result<Report> {
    let mut report = Report::new("full-suite", cfg.echo());
    report.absorb(constants_suite(&cfg.constants)?);
    report.absorb(potential_suite(&cfg.potential, cfg.seed)?);
    report.absorb(cauchy_suite(&cfg.cauchy)?);
    report.absorb(bochner_suite(&cfg.bochner)?);
    report.absorb(moser_suite(&cfg.moser, cfg.seed)?);
    report.absorb(dbar_suite(&cfg.dbar, cfg.seed)?);
    report.absorb(jet_suite(&cfg.jet, &cfg.dbar)?);
    report.data = None;
    Ok(report)
}
