use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use metastab_cli::commands;
use metastab_cli::{AnalysisConfig, CliError};

#[derive(Parser)]
#[command(
    name = "metastab",
    version,
    about = "Metastability analysis of noisy return maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON analysis config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed; overrides `estimator.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the chain and write the matrix, report and plots.
    Analyze,
    /// System MFPT across the configured noise standard deviations.
    SweepNoise,
    /// Per-state moments and leading eigenvalues for every estimator.
    CompareEstimators,
    /// Pick an indicator coordinate by PCA and Jacobian analysis.
    Reduce,
    /// Dump raw noisy trajectories.
    Simulate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut cfg = AnalysisConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.estimator.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    match cli.command {
        Command::Analyze => {
            let result = commands::analyze(&cfg, &out)?;
            let r = &result.report;
            println!("lambda2 = {}", r.lambda2().re);
            println!(
                "system MFPT = {} steps{}",
                r.system_mfpt.steps,
                if r.system_mfpt.reliable {
                    ""
                } else {
                    " (unreliable)"
                }
            );
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            if result.total_absorption() {
                return Err(CliError::TotalAbsorption);
            }
        }
        Command::SweepNoise => {
            for p in commands::sweep_noise(&cfg, &out)? {
                match (p.mfpt, &p.error) {
                    (Some(m), _) => println!(
                        "sigma = {}: M = {}{}",
                        p.sigma,
                        m.steps,
                        if m.reliable { "" } else { " (unreliable)" }
                    ),
                    (None, Some(e)) => println!("sigma = {}: failed: {e}", p.sigma),
                    (None, None) => {}
                }
            }
        }
        Command::CompareEstimators => {
            let c = commands::compare_estimators(&cfg, &out)?;
            for (method, s) in &c.spectra {
                let vals: Vec<String> = s.values.iter().map(|e| format!("{:.4}", e.re)).collect();
                println!("{:<11} {}", method.label(), vals.join(" "));
            }
        }
        Command::Reduce => {
            let r = commands::reduce(&cfg, &out)?;
            let label = |i: usize| r.dataset.labels()[i].clone();
            println!(
                "PCA indicator: {}{}",
                label(r.pca_choice.index),
                if r.pca_choice.tie { " (tie)" } else { "" }
            );
            if let Some(j) = &r.jacobian_choice {
                println!("Jacobian indicator: {}", label(j.index));
            }
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Simulate => {
            let rows = commands::simulate(&cfg, &out)?;
            println!("{rows} rows written");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
