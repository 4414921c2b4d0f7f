use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use frontlab::commands;
use frontlab::config::CandidateKind;
use frontlab::{list_experiments, run_experiment, Config, ExperimentConfig, ExperimentId};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "frontlab", version, about = "Pushed and pulled fronts: profiles, simulations, comparison certificates")]
struct Cli {
    /// TOML configuration; defaults are used for missing sections and keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (1 = single-thread mode)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record that the run is seedless (no command consults a random generator)
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shoot a front profile and write profile.csv
    Profile,
    /// Minimal speed and pushed/pulled classification
    Minspeed,
    /// 1D moving-frame run: trace.csv, final_state.csv
    Sim1d,
    /// 2D corrugated run: levelset.csv, diagnostics.csv
    Sim2d,
    /// Graph flows: graph.csv, compare.csv
    Frontdyn,
    /// Certify a super/subsolution pair
    VerifyComparison {
        /// Overrides `comparison.candidate`
        #[arg(long, value_enum)]
        candidate: Option<CandidateKind>,
        /// Use the configured constants instead of searching
        #[arg(long)]
        constants: bool,
        /// Write residual.csv with L along z through the critical points
        #[arg(long)]
        slices: bool,
    },
    /// Run acceptance experiments (E1..E7, or `all`) into <out>/<id>
    Experiment {
        #[arg(required = true)]
        ids: Vec<String>,
    },
    /// List the experiments
    List,
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out = &cli.out;
    let summary = match cli.command {
        Command::Profile => commands::profile(&cfg, out)?,
        Command::Minspeed => commands::minspeed(&cfg)?,
        Command::Sim1d => commands::sim1d(&cfg, out)?,
        Command::Sim2d => commands::sim2d(&cfg, out)?,
        Command::Frontdyn => commands::frontdyn(&cfg, out)?,
        Command::VerifyComparison { candidate, constants, slices } => {
            if let Some(c) = candidate {
                cfg.comparison.candidate = c;
            }
            if constants {
                cfg.comparison.search = false;
            }
            commands::verify_comparison(&cfg, out, slices)?
        }
        Command::List => {
            for e in list_experiments() {
                println!("{}  {}  (budget {:.0} s)\n    {}", e.id, e.title, e.budget, e.anchors);
            }
            return Ok(0);
        }
        Command::Experiment { ids } => {
            let ids: Vec<ExperimentId> = if ids.iter().any(|s| s.eq_ignore_ascii_case("all")) {
                ExperimentId::ALL.to_vec()
            } else {
                ids.iter().map(|s| s.parse()).collect::<Result<_>>()?
            };
            let mut code = 0;
            for id in ids {
                let mut ec = ExperimentConfig::new(id, cfg.clone(), out.join(id.to_string()))?;
                ec.seedless = cli.seedless;
                let report = run_experiment(&ec)?;
                print!("{}", report.to_text());
                println!();
                code = code.max(report.exit_code());
            }
            return Ok(code);
        }
    };
    print!("{summary}");
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
