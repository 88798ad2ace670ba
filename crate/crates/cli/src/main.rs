use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use qamem_cli::commands;
use qamem_cli::config::{EngineKind, Loaded};

#[derive(Parser)]
#[command(name = "qamem", version, about = "Associative memory recall as Ising ground-state search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML). Built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EngineArgs {
    /// Ground-state engine, overriding `engine.kind`.
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Hebbian weight matrix.
    #[command(after_help = "Output:\n  weights.csv  N rows of N comma-separated weights W_ij, no header")]
    Learn(Common),
    /// Tabulate memory, flipped-memory and probe energies over the field grid.
    #[command(after_help = "Output:\n  energy_report.csv  h,E_probe,E_mem_1..E_mem_p,E_flip_1..E_flip_p\n                     total energies per grid h; memory columns count from 1")]
    EnergyReport(Common),
    /// Recall the memory nearest to the probe.
    #[command(after_help = "Output:\n  recall.json  engine, h, target, analytic field bound, success and, for the\n               oracle, the classification and ground states\n  counts.csv   qa and sa only: state,count sorted by count")]
    Recall {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        engine: EngineArgs,
        /// Probe field strength, overriding `probe.h`.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Sweep the probe field strength and record recall success.
    #[command(after_help = "Output:\n  sweep_h.csv  h,success,h_max,outcome\n    success  fraction of shots on the target (1/0 for the oracle)\n    h_max    analytic field bound for the target\n    outcome  oracle classification, or the modal sample for qa and sa")]
    SweepH {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        engine: EngineArgs,
        /// Score each field value as 1 when most shots hit the target.
        #[arg(long)]
        majority_vote: bool,
    },
    /// Report the distance condition for the configured probe.
    #[command(after_help = "Output:\n  radius.json  d_s, d_b, n, d(n), whether d_s + d_b <= n - 1 holds, radius bound")]
    Radius(Common),
    /// Check every probe within a Hamming radius of each memory.
    #[command(after_help = "Output:\n  basin_failures.csv  probe,d_s,d_b,h,classification for probes not recalled\n  basin_summary.json  counts of checked, failed, tied and skipped probes")]
    BasinVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_d: Option<usize>,
        /// Also check probes that violate the distance condition.
        #[arg(long)]
        include_violations: bool,
    },
    /// Tabulate tail probabilities and capacity bounds.
    #[command(after_help = "Output:\n  p_star.csv                N,x,exact,bound,exact_ge_bound,capacity_bound\n  tradeoff.csv              f,c1_plus_c2\n  exponential_capacity.csv  N,t_frac,C2,C1,approximate,unapproximated\n  hebbian_capacity.csv      N,capacity\n  montecarlo.csv            when capacity.montecarlo = true (see montecarlo)")]
    Capacity(Common),
    /// Estimate recall success for random memory sets.
    #[command(after_help = "Output:\n  montecarlo.csv  N,p,t_frac,trials,successes,rate,predicted_bound,engine\n                  one row per p; predicted_bound is the exact P* to the power p - 1")]
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Embed the recall problem on a Chimera graph.
    #[command(after_help = "Output:\n  embedding.txt         chain_strength line, then chain i: q1,q2,...\n  physical_problem.txt  n line, then h i v and J i j v lines\n  embed.json            qubit counts, chain lengths and, with --solve, decode results\n  decoded_counts.csv    with --solve: state,count of decoded logical states")]
    Embed {
        #[command(flatten)]
        common: Common,
        /// Anneal the physical problem and decode the samples.
        #[arg(long)]
        solve: bool,
    },
    /// Spectral gap of the annealing Hamiltonian along the schedule.
    #[command(after_help = "Output:\n  qa_gap.csv   s,e0,e1,gap on an evenly spaced grid of s\n  qa_gap.json  minimum gap and where it occurs")]
    QaGap(Common),
}

fn load(common: &Common) -> Result<Loaded> {
    let mut cfg = match &common.config {
        Some(p) => Loaded::from_file(p)?,
        None => Loaded::defaults(),
    };
    if let Some(out) = &common.out {
        // resolved against the working directory, not the config file
        cfg.config.output.dir = std::env::current_dir()?.join(out);
    }
    if let Some(seed) = common.seed {
        cfg.config.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn engine(cfg: &Loaded, e: &EngineArgs) -> EngineKind {
    e.engine.unwrap_or(cfg.config.engine.kind)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Learn(c) => commands::learn(&load(&c)?),
        Command::EnergyReport(c) => commands::energy_report_cmd(&load(&c)?),
        Command::Recall { common, engine: e, h } => {
            let mut cfg = load(&common)?;
            if let Some(h) = h {
                cfg.config.probe.h = h;
                cfg.validate()?;
            }
            let kind = engine(&cfg, &e);
            commands::recall(&cfg, kind)
        }
        Command::SweepH { common, engine: e, majority_vote } => {
            let mut cfg = load(&common)?;
            cfg.config.sweep.majority_vote |= majority_vote;
            let kind = engine(&cfg, &e);
            commands::sweep_h(&cfg, kind)
        }
        Command::Radius(c) => commands::radius(&load(&c)?),
        Command::BasinVerify { common, max_d, include_violations } => {
            let mut cfg = load(&common)?;
            if max_d.is_some() {
                cfg.config.basin.max_d = max_d;
            }
            cfg.config.basin.include_violations |= include_violations;
            commands::basin_verify(&cfg)
        }
        Command::Capacity(c) => commands::capacity(&load(&c)?),
        Command::Montecarlo { common, engine: e } => {
            let mut cfg = load(&common)?;
            if let Some(kind) = e.engine {
                cfg.config.montecarlo.engine = kind;
                cfg.validate()?;
            }
            commands::montecarlo(&cfg)
        }
        Command::Embed { common, solve } => {
            let mut cfg = load(&common)?;
            cfg.config.embed.solve |= solve;
            commands::embed(&cfg)
        }
        Command::QaGap(c) => commands::qa_gap(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(written) => {
            for p in written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(qamem_cli::exit_code(&err) as u8)
        }
    }
}
