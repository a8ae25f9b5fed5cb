use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::Result;
use crate::report::{Report, Table};
use crate::suites::{self, Config};

#[derive(Debug, Parser)]
#[command(name = "gradterm", version, about = "Numerical verification suites for weighted dbar estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; unspecified fields keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here (CSV tables go beside it) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the primary grid spacing of the selected suite.
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// Rerun at half the spacing and tabulate per-check ratios.
    #[arg(long, global = true)]
    pub resolution_study: bool,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Print the constant ledger.
    Constants,
    /// Cauchy-transform reconstruction and the kernel inequality on the disk.
    CauchyCheck,
    /// Young-type bound for integral operators on seeded random cases.
    PotentialCheck,
    /// Gradient identity for boundary-vanishing sections.
    BochnerCheck,
    /// Norm-iteration chain over the metric catalog and random sections.
    MoserRun,
    /// Coercivity, manufactured solves and curvature budgets.
    DbarSolve,
    /// Prescribed-jet holomorphic sections.
    JetDemo,
    /// Every suite in one report.
    FullSuite,
}

impl Cli {
    pub fn load_config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(h) = self.spacing {
            cfg = cfg.with_spacing(h);
        }
        Ok(cfg)
    }
}

pub fn run_suite(command: Command, cfg: &Config) -> Result<Report> {
    let start = Instant::now();
    let mut report = match command {
        Command::Constants => suites::constants_suite(&cfg.constants)?,
        Command::CauchyCheck => suites::cauchy_suite(&cfg.cauchy)?,
        Command::PotentialCheck => suites::potential_suite(&cfg.potential, cfg.seed)?,
        Command::BochnerCheck => suites::bochner_suite(&cfg.bochner)?,
        Command::MoserRun => suites::moser_suite(&cfg.moser, cfg.seed)?,
        Command::DbarSolve => suites::dbar_suite(&cfg.dbar, cfg.seed)?,
        Command::JetDemo => suites::jet_suite(&cfg.jet, &cfg.dbar)?,
        Command::FullSuite => suites::full_suite(cfg)?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Table of `lhs` at the base and halved spacing for checks present in both.
fn resolution_table(base: &Report, fine: &Report) -> Table {
    let mut t = Table::new("resolution-study", &["check", "lhs_base", "lhs_fine", "ratio"]);
    for (i, c) in base.checks.iter().enumerate() {
        if let Some(f) = fine.checks.iter().find(|f| f.label == c.label) {
            t.push(vec![i as f64, c.lhs, f.lhs, c.lhs / f.lhs]);
        }
    }
    t
}

/// Runs the parsed command line. Returns the process exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = cli.load_config()?;
    let mut report = run_suite(cli.command, &cfg)?;
    if cli.resolution_study {
        let base = spacing_of(cli.command, &cfg);
        let fine = run_suite(cli.command, &cfg.clone().with_spacing(base / 2.0))?;
        report.tables.push(resolution_table(&report, &fine));
        report.wall_time_s += fine.wall_time_s;
    }
    let json = report.to_json()?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, json)?;
            report.write_tables(path)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe (e.g. `| head`) is not an error
            if let Err(e) = writeln!(out, "{json}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(if report.all_ok() { 0 } else { 1 })
}

fn spacing_of(command: Command, cfg: &Config) -> f64 {
    match command {
        Command::CauchyCheck => cfg.cauchy.spacing,
        Command::PotentialCheck => cfg.potential.disk_spacing,
        Command::BochnerCheck => cfg.bochner.spacing,
        Command::MoserRun => cfg.moser.spacing,
        _ => cfg.dbar.spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["gradterm", "constants", "--seed", "3", "--spacing", "0.2"]).unwrap();
        let cfg = cli.load_config().unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.moser.spacing, 0.2);
    }

    #[test]
    fn unknown_subcommand_is_rejected() {
        assert!(Cli::try_parse_from(["gradterm", "frobnicate"]).is_err());
    }

    #[test]
    fn resolution_ratios() {
        let mut a = Report::new("s", serde_json::Value::Null);
        a.push(crate::report::CheckRecord::le("x", "plumbing", 4.0, 10.0, 0.0));
        let mut b = a.clone();
        b.checks[0].lhs = 1.0;
        let t = resolution_table(&a, &b);
        assert_eq!(t.rows, vec![vec![0.0, 4.0, 1.0, 4.0]]);
    }
}
