use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sradcat::commands::{self, RatesConfig};
use sradcat::config::{EngineKind, LabUnits, LabelSpec, RunConfig, RunConfigFile};
use sradcat::verify::{self, Fault, VerifyOptions};
use sradcat::{init_threads, output};

/// Decoherence of spin-j cat states under collective superradiant damping.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample n(τ) for one cat and write `tau,n1,n2,n_ratio` CSV.
    Decohere(DecohereArgs),
    /// Fit decay rates over a scan and compare them with the closed forms (JSON).
    Rates(RatesArgs),
    /// Dump every D_mn(k, τ) as `m,n,k,tau,value` CSV.
    Propagator {
        #[arg(long)]
        twice_j: u32,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Saddle, expansion coefficients and predictions for real (γ₁, γ₂) (JSON).
    Semiclassics {
        #[arg(long)]
        gamma1: f64,
        #[arg(long)]
        gamma2: f64,
        /// Spin j (not doubled) used for n(τ).
        #[arg(long, default_value_t = 60.0)]
        j: f64,
        /// Largest jτ sampled.
        #[arg(long, default_value_t = 0.1)]
        jtau_max: f64,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the twisting preparation and check the prepared cat (JSON).
    Prepare {
        #[arg(long)]
        twice_j: u32,
        /// Polar offset of the components from the poles, in radians.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta_offset: f64,
        /// Negative control: final pulse about the wrong axis.
        #[arg(long)]
        wrong_axis: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Verify {
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Args)]
struct DecohereArgs {
    /// TOML file with the same keys as the flags (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    twice_j: Option<u32>,
    /// Real γ (`0.5`) or θ,φ in degrees (`30,90`).
    #[arg(long, allow_hyphen_values = true)]
    label1: Option<LabelSpec>,
    #[arg(long, allow_hyphen_values = true)]
    label2: Option<LabelSpec>,
    #[arg(long)]
    t_max: Option<f64>,
    /// End time in seconds, converted with --g, --kappa, --delta.
    #[arg(long)]
    t_max_seconds: Option<f64>,
    #[arg(long, requires_all = ["kappa", "delta"])]
    g: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// TOML file with `twice_js`, `pairs`, and optionally `window`, `window_jtau`, `samples`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    twice_js: Vec<u32>,
    /// Real pair `g1:g2`; repeatable.
    #[arg(long = "pair", value_parser = parse_pair)]
    pairs: Vec<[f64; 2]>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    window_jtau: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<[f64; 2]> {
    let (a, b) = s.split_once(':').context("pair must look like g1:g2")?;
    Ok([a.trim().parse()?, b.trim().parse()?])
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn decohere(a: DecohereArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => RunConfigFile::load(p)?,
        None => RunConfigFile::default(),
    };
    let lab = match (a.g, a.kappa, a.delta) {
        (Some(g), Some(k), Some(d)) => Some(LabUnits::new(g, k, d)?),
        _ => None,
    };
    let flags = RunConfigFile {
        twice_j: a.twice_j,
        label1: a.label1,
        label2: a.label2,
        t_max: a.t_max,
        t_max_seconds: a.t_max_seconds,
        lab,
        samples: a.samples,
        engine: a.engine,
        tol: a.tol,
        output_path: a.output,
    };
    let cfg = RunConfig::resolve(file.overlay(flags))?;
    // the CSV header is fixed, so the resolved config goes to stderr
    eprint!("{}", output::json(&cfg)?);
    if cfg.weak_coupling == Some(false) {
        eprintln!("warning: g*sqrt(N)/kappa >= 0.1, outside the damping regime");
    }
    let curve = commands::decohere(&cfg)?;
    emit(&output::curve_csv(&curve)?, cfg.output_path.as_deref())
}

fn rates(a: RatesArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RatesConfig {
            twice_js: Vec::new(),
            pairs: Vec::new(),
            window: None,
            window_jtau: None,
            samples: 21,
        },
    };
    if !a.twice_js.is_empty() {
        cfg.twice_js = a.twice_js;
    }
    if !a.pairs.is_empty() {
        cfg.pairs = a.pairs;
    }
    cfg.window = a.window.or(cfg.window);
    cfg.window_jtau = a.window_jtau.or(cfg.window_jtau);
    cfg.samples = a.samples.unwrap_or(cfg.samples);
    emit(&output::json(&commands::rates(&cfg)?)?, a.output.as_deref())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Decohere(a) => decohere(a)?,
        Command::Rates(a) => rates(a)?,
        Command::Propagator { twice_j, tau, output } => emit(
            &output::propagator_csv(&commands::propagator(twice_j, tau)?)?,
            output.as_deref(),
        )?,
        Command::Semiclassics {
            gamma1,
            gamma2,
            j,
            jtau_max,
            samples,
            output,
        } => {
            let taus: Vec<f64> = (0..samples.max(2))
                .map(|i| jtau_max / j * i as f64 / (samples.max(2) - 1) as f64)
                .collect();
            emit(
                &output::json(&commands::semiclassics(gamma1, gamma2, j, &taus)?)?,
                output.as_deref(),
            )?
        }
        Command::Prepare {
            twice_j,
            theta_offset,
            wrong_axis,
            output,
        } => emit(
            &output::json(&commands::prepare(twice_j, theta_offset, wrong_axis)?)?,
            output.as_deref(),
        )?,
        Command::Verify { report, inject_fault } => {
            let r = verify::run(VerifyOptions { fault: inject_fault })?;
            print!("{}", r.render());
            if let Some(p) = report {
                emit(&output::json(&r)?, Some(&p))?;
            }
            if !r.all_passed {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
