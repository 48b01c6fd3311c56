use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use kfuks::lab::{
    self,
    config::{parse_complex_list, DomainSpec, ExperimentConfig, Truncation},
    experiments::{BALL_ORACLE_LABELS, SCALING_LABELS},
};

#[derive(Parser)]
#[command(
    name = "kfuks",
    about = "Bergman and Kobayashi-Fuks metric laboratory on model domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Kobayashi-Fuks closed forms on the unit ball.
    BallOracle {
        /// Complex dimension (1..=3).
        #[arg(long)]
        n: usize,
    },
    /// Boundary-approach sweep along the inward normal.
    Asymptotics {
        /// Configuration file (line-based `key = value`).
        #[arg(long)]
        config: PathBuf,
    },
    /// Blow-up sweep against the Siegel half-space.
    Scaling {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monomial moments of a complex ellipsoid against quadrature.
    Moments {
        /// Ellipsoid exponents, e.g. `1,2`.
        #[arg(long)]
        p: String,
        /// Largest total monomial order to report.
        #[arg(long, visible_alias = "N", default_value_t = 6)]
        max_order: usize,
        /// Optional CSV output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kernel, metrics and invariants at a point.
    Eval {
        /// Domain, e.g. `ball 2`, `polydisc 3`, `siegel 2`, `ellipsoid 1,2`.
        #[arg(long)]
        domain: String,
        /// Interior point, comma-separated complex coordinates `a+bi`.
        #[arg(long)]
        point: String,
        /// Optional tangent vector for curvature output.
        #[arg(long)]
        vector: Option<String>,
        /// Series truncation for ellipsoids.
        #[arg(long)]
        truncation: Option<usize>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BallOracle { n } => {
            if !(1..=3).contains(&n) {
                bail!("ball-oracle supports n in 1..=3");
            }
            let report = lab::run_ball_oracle(n)?;
            println!("ball oracle, n = {}, {} seeded points (|z| <= 0.8)", report.n, report.points);
            for (label, err) in BALL_ORACLE_LABELS.iter().zip(&report.max_errors) {
                println!("  {label:<12} max relative error {err:.3e}");
            }
            if !report.pass {
                bail!("ball oracle failed");
            }
            println!("PASS");
        }
        Command::Asymptotics { config } => {
            let config = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let report = lab::run_asymptotics(&config)?;
            println!(
                "asymptotics on {} (error model {})",
                report.provider_tag,
                report.error_model.code()
            );
            println!("  Levi minimum eigenvalue at p0: {:.6e}", report.levi_min);
            for (k, q) in report.quantities.iter().enumerate() {
                let last = report.rows.last().unwrap();
                println!(
                    "  {:<18} target {:+.9e}  raw err {:.3e}  extrap err {}",
                    q.code(),
                    report.targets[k],
                    last.raw_err[k],
                    last.extrap_err[k].map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
                );
            }
            for note in &report.notes {
                println!("  note: {note}");
            }
            if let Some(out) = &config.output {
                println!("  wrote {}", out.display());
            }
            if !report.pass {
                bail!("asymptotics assertions failed");
            }
            println!("PASS");
        }
        Command::Scaling { config } => {
            let config = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let report = lab::run_scaling(&config)?;
            println!("blow-up sweep on {}", report.provider_tag);
            for (k, label) in SCALING_LABELS.iter().enumerate() {
                let last = report.rows.last().unwrap();
                println!(
                    "  {:<15} target {:+.9e}  raw err {:.3e}  extrap err {}  monotone {}",
                    label,
                    report.targets[k],
                    last.raw_err[k],
                    last.extrap_err[k].map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
                    report.monotone[k],
                );
            }
            for note in &report.notes {
                println!("  note: {note}");
            }
            if let Some(out) = &config.output {
                println!("  wrote {}", out.display());
            }
            if !report.pass {
                bail!("scaling assertions failed");
            }
            println!("PASS");
        }
        Command::Moments { p, max_order, output } => {
            let exponents: Vec<f64> = p
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("bad exponent"))
                .collect::<Result<_>>()?;
            let report = lab::run_moments(&exponents, max_order, output.as_deref())?;
            println!(
                "moments for p = {exponents:?}, |alpha| <= {max_order}: {} rows, max rel diff {:.3e}",
                report.rows.len(),
                report.max_rel
            );
            if !report.pass {
                bail!("moment validation failed");
            }
            println!("PASS");
        }
        Command::Eval { domain, point, vector, truncation } => {
            let spec = DomainSpec::parse(&domain)?;
            let z = parse_complex_list(&point)?;
            let x = vector.map(|v| parse_complex_list(&v)).transpose()?;
            let truncation = truncation.map_or(Truncation::Auto, Truncation::Fixed);
            let report = lab::eval_point(&spec, &z, x.as_deref(), truncation)?;
            println!("{} at {point}", report.provider_tag);
            println!("  K          = {:.12e}", report.kernel);
            print_matrix("G_b", &report.g_b);
            print_matrix("G_kf", &report.g_kf);
            println!("  beta_b     = {:.12e}", report.beta_b);
            println!("  beta_kf    = {:.12e}", report.beta_kf);
            if let (Some((hb, hk)), Some((rb, rk))) = (report.hsc, report.ricci) {
                println!("  R_b        = {hb:+.12e}   R_kf   = {hk:+.12e}");
                println!("  Ric_b      = {rb:+.12e}   Ric_kf = {rk:+.12e}");
            }
            for note in &report.notes {
                println!("  note: {note}");
            }
            if !report.pass {
                bail!("internal consistency checks failed");
            }
        }
    }
    Ok(())
}

fn print_matrix(label: &str, m: &[Vec<kfuks::Complex64>]) {
    for (i, row) in m.iter().enumerate() {
        let prefix = if i == 0 { format!("  {label:<10} =") } else { "            ".to_string() };
        let cells: Vec<String> =
            row.iter().map(|c| format!("{:+.9e}{:+.9e}i", c.re, c.im)).collect();
        println!("{prefix} [{}]", cells.join(", "));
    }
}
