use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tmor::analysis::ModeClass;
use tmor::scenario::{self, parse_methods, CheckStatus, RunOptions, RunSummary, ScenarioConfig};
use tmor::{Error, Result};

/// Thermoelastic model order reduction scenarios.
#[derive(Parser)]
#[command(name = "tmor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble, reduce, compare spectra, integrate and write all reports.
    Run(RunArgs),
    /// Check a config without running any numerics.
    Validate(ConfigArg),
    /// Write the assembled matrices as Matrix Market files.
    Assemble(OutArgs),
    /// Spectra and eigenvalue errors only; the transient stage is skipped.
    Eig(RunArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario file (`.toml`, or `.json`).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct OutArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    out: OutArgs,
    /// Comma-separated methods; overrides `reduction.methods`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Fixed-step RK4 with this step (s) instead of adaptive integration.
    #[arg(long, value_name = "SECONDS")]
    fixed_step: Option<f64>,
    /// Threads for dense kernels; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Validate(a) => validate(&a),
        Command::Assemble(a) => assemble(&a),
        Command::Run(a) => run(&a, true),
        Command::Eig(a) => run(&a, false),
    }
}

fn validate(a: &ConfigArg) -> Result<ExitCode> {
    let (cfg, _) = ScenarioConfig::load(&a.config)?;
    let v = cfg.validate();
    if v.is_ok() {
        println!(
            "ok: N_s = {}, N_T = {}",
            v.n_structural.unwrap_or(0),
            v.n_thermal.unwrap_or(0)
        );
        return Ok(ExitCode::SUCCESS);
    }
    for d in &v.diagnostics {
        println!("{d}");
    }
    Ok(ExitCode::from(2))
}

fn assemble(a: &OutArgs) -> Result<ExitCode> {
    let (cfg, _) = ScenarioConfig::load(&a.config.config)?;
    let built = scenario::build(&cfg)?;
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let files = scenario::export_matrices(&built, &dir)?;
    println!(
        "N_s = {}, N_T = {}, state dimension {}",
        built.ssm.n_structural(),
        built.ssm.n_thermal(),
        built.ssm.dim()
    );
    for f in files {
        println!("wrote {}", dir.join(f).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(a: &RunArgs, transient: bool) -> Result<ExitCode> {
    let (mut cfg, text) = ScenarioConfig::load(&a.out.config.config)?;
    if !transient {
        cfg.transient.enabled = false;
    }
    let methods = match &a.methods {
        Some(names) => Some(parse_methods(names, "--methods")?),
        None => None,
    };
    if let Some(step) = a.fixed_step {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config {
                path: "--fixed-step".into(),
                message: format!("step must be positive, got {step}"),
            });
        }
    }
    tmor::set_threads(a.threads);
    let opts = RunOptions {
        out_dir: a.out.out.clone(),
        methods,
        fixed_step: a.fixed_step,
    };
    let summary = scenario::run(&cfg, &text, &opts)?;
    print_summary(&summary);
    Ok(ExitCode::SUCCESS)
}

fn print_summary(s: &RunSummary) {
    println!(
        "N_s = {}, N_T = {}; full eigensolve {:.3} s (tol {:e})",
        s.n_structural, s.n_thermal, s.full_eig_seconds, s.full_spectrum.tol
    );
    println!(
        "{:<24} {:>11} {:>11} {:>11} {:>11} {:>10}",
        "model", "th max", "th mean", "st max", "st mean", "build s"
    );
    for m in &s.methods {
        let th = m.summary(ModeClass::Thermal);
        let st = m.summary(ModeClass::Structural);
        println!(
            "{:<24} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>10.4}",
            m.label, th.max, th.mean, st.max, st.mean, m.construction_seconds
        );
    }
    for o in &s.spectra.overlaps {
        match o.overlap {
            Some([lo, hi]) => println!("{}: |mu| overlap [{lo:.4e}, {hi:.4e}]", o.model),
            None => println!("{}: thermal and structural |mu| ranges are disjoint", o.model),
        }
    }
    for c in &s.timing_checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Warn => "warn",
            CheckStatus::Skipped => "skipped",
        };
        println!(
            "timing order at {}x{}: {status}",
            c.n_structural, c.n_thermal
        );
    }
    for t in &s.transient {
        match &t.difference {
            Some(d) => println!(
                "{:<24} max|dtheta| {:.6e} K, max|du| {:.6e} m ({} steps, {:.2} s)",
                t.label,
                d.peak_theta(),
                d.peak_u(),
                t.result.stats.steps,
                t.seconds
            ),
            None => println!(
                "{:<24} max|theta| {:.6e} K, max|u| {:.6e} m ({} steps, {:.2} s)",
                t.label,
                t.result.max_theta.iter().copied().fold(0.0, f64::max),
                t.result.max_u.iter().copied().fold(0.0, f64::max),
                t.result.stats.steps,
                t.seconds
            ),
        }
    }
    println!("reports in {}", s.out_dir.display());
}
