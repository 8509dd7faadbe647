use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vortlab_core::harness::{run_stages, verify, ExperimentConfig, Stage, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "vortlab", version, about = "Spectral Navier-Stokes runs and regularity diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the equations and write energy history and fields.
    Simulate(Common),
    /// Simulate, then split the final field into localized parts.
    Localize(Common),
    /// Simulate, then evaluate maximal functions on the final field.
    Maximal(Common),
    /// Simulate, then select blow-up scales at the probe points.
    Select(Common),
    /// Simulate, then compute truncation energies on shrinking cylinders.
    Degiorgi(Common),
    /// Simulate, then report the vorticity-gradient Lorentz functional.
    Report(Common),
    /// Run every stage in order.
    Run(Common),
    /// Run an acceptance suite and print JSON verdicts.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory; overrides `output` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// identities, lorentz, solver, localization, suitability, maximal, blowup, degiorgi, functional or all.
    #[arg(default_value = "all")]
    suite: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the verdicts to DIR/verdicts.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the tolerances of a criterion by unattainable ones.
    #[arg(long, value_name = "CRITERION", hide = true)]
    tamper: Vec<u8>,
}

fn load(config: &Option<PathBuf>) -> Result<ExperimentConfig, vortlab_core::Error> {
    match config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn stages(command: &Command) -> Vec<Stage> {
    match command {
        Command::Simulate(_) => vec![Stage::Simulate],
        Command::Localize(_) => vec![Stage::Localize],
        Command::Maximal(_) => vec![Stage::Maximal],
        Command::Select(_) => vec![Stage::Select],
        Command::Degiorgi(_) => vec![Stage::Degiorgi],
        Command::Report(_) => vec![Stage::Report],
        Command::Run(_) | Command::Verify(_) => Stage::ALL.to_vec(),
    }
}

fn experiment(common: &Common, stages: &[Stage]) -> Result<bool, vortlab_core::Error> {
    let mut cfg = load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let manifest = run_stages(&cfg, stages, &cfg.output)?;
    for s in &manifest.stages {
        eprintln!("{:?}: {:?} {}", s.stage, s.status, s.detail);
    }
    eprintln!("wrote {} files to {}", manifest.outputs.len() + 1, cfg.output.display());
    Ok(manifest.succeeded())
}

fn check(args: &VerifyArgs) -> Result<bool, vortlab_core::Error> {
    let suite: Suite = args.suite.parse()?;
    let cfg = load(&args.config)?;
    let options = VerifyOptions { seed: args.seed.unwrap_or(cfg.seed), tamper: args.tamper.clone() };
    let verdicts = verify(suite, &options);
    for v in &verdicts {
        eprintln!("{}", v.line());
    }
    let text = serde_json::to_string_pretty(&verdicts).map_err(|e| vortlab_core::Error::Format(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verdicts.json"), &text)?;
    }
    Ok(verdicts.iter().all(|v| v.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(args) => check(args),
        Command::Simulate(c)
        | Command::Localize(c)
        | Command::Maximal(c)
        | Command::Select(c)
        | Command::Degiorgi(c)
        | Command::Report(c)
        | Command::Run(c) => experiment(c, &stages(&cli.command)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
