use std::path::PathBuf;
use std::process::ExitCode;

use aniso_cli::{parse_config, run, Command, RunConfig};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aniso",
    version,
    about = "Anisotropic gamma-homogeneous elliptic problems: solve and verify interior estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the report and CSV exports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides problem.resolution and sweep.resolutions.
    #[arg(long)]
    resolution: Option<usize>,
    /// Print the canonical configuration (with derived exponents) and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the configured Dirichlet problem.
    Solve(Common),
    /// Classify a candidate field as solution, sub- or supersolution.
    Classify(Common),
    /// Solve and evaluate every interior-estimate ratio.
    Verify(Common),
    /// Random-instance sweep with refinement-drift alarms.
    Sweep(Common),
    /// Known-solution regressions.
    Oracle(Common),
    /// Exponent schedule of the local boundedness iteration.
    Schedule {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        k_max: Option<usize>,
    },
}

fn load(common: &Common, command: Command) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text)?
        }
        None => parse_config("")?,
    };
    if let Some(c) = cfg.command.filter(|c| *c != command) {
        anyhow::bail!("config command `{c}` does not match the requested command `{command}`");
    }
    Ok(RunConfig {
        command: Some(command),
        ..cfg
    })
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Oracle(c) => (Command::Oracle, c),
        Cmd::Schedule { common, .. } => (Command::Schedule, common),
    };
    let mut cfg = load(common, command)?;
    if let Cmd::Schedule { dim, gamma, k_max, .. } = &cli.command {
        if let Some(d) = dim {
            cfg.problem.dim = *d;
        }
        if let Some(g) = gamma {
            cfg.problem.gamma = *g;
        }
        if let Some(k) = k_max {
            cfg.schedule.k_max = *k;
        }
    }
    cfg.apply_overrides(common.seed, common.resolution)?;
    if common.print_config {
        print!("{}", cfg.to_canonical());
        return Ok(true);
    }
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let outcome = run(command, &cfg, &common.out)?;
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
