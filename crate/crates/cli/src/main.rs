//! `transdiff`: runs one configured experiment and reports its assertions.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use transdiff::experiment::{parse_config, run_experiment, ExperimentConfig, ExperimentKind};

#[derive(Debug, Parser)]
#[command(name = "transdiff", version, about = "Measure transport sensitivity experiments")]
struct Cli {
    /// Experiment document (TOML); per-kind subcommands fall back to a built-in example.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; defaults to the document's `output`, then `out/<kind>`.
    #[arg(long, global = true, env = "TRANSDIFF_OUT")]
    out: Option<PathBuf>,

    /// Worker threads for particle and LP parallelism.
    #[arg(long, global = true, env = "TRANSDIFF_THREADS")]
    threads: Option<usize>,

    /// Overrides the document's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the experiment described by a document of any kind.
    Run {
        /// Experiment document; may also be given as --config.
        path: Option<PathBuf>,
    },
    /// Prints the document with every default filled in, without running it.
    Resolve { path: Option<PathBuf> },
    /// Prints the annotated example document of a kind.
    Example { kind: String },
    /// Flat-metric divergence of the counterexample quotients.
    Counterexample,
    /// Convergence rate of Cauchy gaps in the dual Hölder norm.
    CauchyRate,
    /// Difference quotients against the derivative functional.
    QuotientConvergence,
    /// Taylor remainder and Hölder continuity of x ↦ δₓ.
    DiracCurve,
    /// Certified approximation of measures by lattice Dirac sums.
    DiracApprox,
    /// Residual of the weak formulation on particle solutions.
    WeakResidual,
    /// Gradient-based minimization over h.
    Control,
}

fn example(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Counterexample => include_str!("../../../configs/counterexample.toml"),
        ExperimentKind::CauchyRate => include_str!("../../../configs/cauchy_rate.toml"),
        ExperimentKind::QuotientConvergence => include_str!("../../../configs/quotient_convergence.toml"),
        ExperimentKind::DiracCurve => include_str!("../../../configs/dirac_curve.toml"),
        ExperimentKind::DiracApprox => include_str!("../../../configs/dirac_approx.toml"),
        ExperimentKind::WeakResidual => include_str!("../../../configs/weak_residual.toml"),
        ExperimentKind::Control => include_str!("../../../configs/control.toml"),
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn kind_of(command: &Command) -> Option<ExperimentKind> {
    Some(match command {
        Command::Counterexample => ExperimentKind::Counterexample,
        Command::CauchyRate => ExperimentKind::CauchyRate,
        Command::QuotientConvergence => ExperimentKind::QuotientConvergence,
        Command::DiracCurve => ExperimentKind::DiracCurve,
        Command::DiracApprox => ExperimentKind::DiracApprox,
        Command::WeakResidual => ExperimentKind::WeakResidual,
        Command::Control => ExperimentKind::Control,
        _ => return None,
    })
}

/// The document named by a positional path or `--config`, or the built-in
/// example of `kind` when neither is given.
fn resolve_config(cli: &Cli, positional: Option<&PathBuf>, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    if let (Some(a), Some(b)) = (positional, &cli.config) {
        if a != b {
            bail!("two different documents given: {} and {}", a.display(), b.display());
        }
    }
    let mut cfg = match (positional.or(cli.config.as_ref()), kind) {
        (Some(path), _) => load(path)?,
        (None, Some(k)) => parse_config(example(k)).context("built-in example")?,
        (None, None) => bail!("no experiment document given (pass a path or --config)"),
    };
    if let Some(k) = kind {
        if cfg.kind != k {
            bail!("the document describes a `{}` experiment, not `{}`", cfg.kind.name(), k.name());
        }
    }
    if let Some(seed) = cli.seed {
        if seed > i64::MAX as u64 {
            bail!("--seed must not exceed {}", i64::MAX);
        }
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let cfg = match &cli.command {
        Command::Example { kind } => {
            let k = ExperimentKind::from_name(&kind.replace('-', "_")).with_context(|| format!("unknown kind `{kind}`"))?;
            print!("{}", example(k));
            return Ok(true);
        }
        Command::Resolve { path } => {
            print!("{}", resolve_config(&cli, path.as_ref(), None)?.to_toml()?);
            return Ok(true);
        }
        Command::Run { path } => resolve_config(&cli, path.as_ref(), None)?,
        other => resolve_config(&cli, None, kind_of(other))?,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(cfg.kind.name()));
    let summary = run_experiment(&cfg, &out)?;
    for a in &summary.assertions {
        let observed = a.observed.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        println!(
            "{} {:<32} observed {:>14} threshold {:.6e}  {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            observed,
            a.threshold,
            a.detail
        );
    }
    println!("{} {}: outputs in {}", if summary.passed { "PASSED" } else { "FAILED" }, summary.kind, out.display());
    Ok(summary.passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
