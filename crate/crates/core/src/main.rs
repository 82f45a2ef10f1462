use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pareto_route::cli::{
    self, evaluate_solution_file, export_projections, gen_topology, read_archive_csv, relay_map,
    run_exhaustive, run_search, write_relay_map, CliError, ExperimentConfig,
};
use pareto_route::topology::load_topology;

#[derive(Parser)]
#[command(name = "pareto-route", version, about = "Pareto-optimal probabilistic routing strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the root seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for exhaustive enumeration.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured topology and write topology.json.
    GenTopology(Common),
    /// Evaluate one solution document.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Enumerate the M-relay problem exhaustively.
    ParetoExhaustive(Common),
    /// Approximate the Pareto set by stochastic search.
    ParetoSearch(Common),
    /// Write projection and relay-map datasets for an existing run.
    ExportPlots {
        /// Directory holding archive.csv and topology.json.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenTopology(c) => {
            let path = gen_topology(&c.load()?)?;
            println!("wrote {}", path.display());
        }
        Command::Eval { common, solution } => {
            let (o, path) = evaluate_solution_file(&common.load()?, &solution)?;
            println!(
                "f_R = {:?}  f_D = {:?}  f_E = {:?} J  ({})",
                o.robustness,
                o.delay,
                o.energy,
                path.display()
            );
        }
        Command::ParetoExhaustive(ref c) | Command::ParetoSearch(ref c) => {
            let exhaustive = matches!(command, Command::ParetoExhaustive(_));
            let cfg = c.load()?;
            let summary = if exhaustive {
                run_exhaustive(&cfg)?
            } else {
                run_search(&cfg)?
            };
            let m = &summary.manifest;
            println!(
                "{}: {} evaluated, {} feasible, {} Pareto-optimal in {:.2} s -> {}",
                m.command,
                m.counts.total,
                m.counts.feasible,
                m.counts.pareto,
                m.wall_time_s,
                cfg.output_dir.display()
            );
        }
        Command::ExportPlots { out } => {
            let archive = read_archive_csv(&out.join("archive.csv"))?;
            let topology = load_topology(out.join("topology.json"))?;
            let files = export_projections(&archive.entries, &out)?;
            let rows = relay_map(&archive.entries, &topology);
            write_relay_map(&rows, &out.join("relay_map.csv"))?;
            println!(
                "wrote {} projections and a relay map of {} nodes ({} reach f_R > {})",
                files.len(),
                rows.len(),
                rows.iter().filter(|r| r.near_perfect).count(),
                cli::NEAR_PERFECT_ROBUSTNESS
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
