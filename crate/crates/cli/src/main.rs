use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smashvat::experiments::commands::{self, OracleRequest};
use smashvat::experiments::RunConfig;
use smashvat::imagination::IntrinsicWeights;
use smashvat::Result;

#[derive(Parser)]
#[command(name = "smashvat", version, about = "Smash-Vat gridworld experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the verbs that train.
#[derive(Args)]
struct RunOpts {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    episodes: Option<u32>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Concurrent runs; 0 uses every CPU.
    #[arg(long)]
    workers: Option<usize>,
}

impl RunOpts {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a configuration and write CSVs, checkpoints and a summary.
    Train { config: PathBuf },
    /// Train the four reward combinations on one layout and print the table.
    Ablate {
        layout: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Train the full method at each weight pair and export curves.
    Sweep {
        layout: String,
        /// Weight pairs as `a:b`, or a single value for a = b; comma-separated.
        #[arg(long, default_value = "1,5,10,20")]
        weights: String,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Play a saved policy greedily and print its frames.
    Render {
        checkpoint: PathBuf,
        /// Layout name or map file.
        layout: String,
        #[arg(long, default_value_t = smashvat::gridworld::DEFAULT_MAX_STEPS)]
        max_steps: u32,
        /// Where to write the SVG trajectory.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Solve a layout exactly by value iteration.
    Oracle {
        /// Layout name or map file.
        layout: String,
        /// Ensemble checkpoint supplying frozen intrinsic rewards.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        #[arg(long)]
        no_nse: bool,
        #[arg(long)]
        no_emp: bool,
        /// Configuration supplying gamma and the imagination settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rebuild the aggregate table from a directory of finished runs.
    Report {
        dir: PathBuf,
        /// Also write the seed-mean curves as CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config } => {
            let report = commands::cmd_train(&config)?;
            print!("{}", report.to_table());
        }
        Command::Ablate { layout, run } => {
            let report = commands::cmd_ablate(&run.load()?, &layout)?;
            print!("{}", report.to_table());
        }
        Command::Sweep { layout, weights, run } => {
            let grid = commands::parse_weight_grid(&weights)?;
            let report = commands::cmd_sweep(&run.load()?, &layout, &grid)?;
            print!("{}", report.to_table());
        }
        Command::Render { checkpoint, layout, max_steps, svg } => {
            let r = commands::cmd_render(&checkpoint, &layout, max_steps)?;
            print!("{}", r.ascii);
            if let Some(path) = svg {
                std::fs::write(path, r.svg)?;
            }
        }
        Command::Oracle { layout, ensemble, alpha, beta, no_nse, no_emp, config } => {
            let settings = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            let req = OracleRequest {
                layout,
                gamma: settings.gamma,
                ensemble,
                weights: IntrinsicWeights::new(alpha, beta)?,
                use_nse: !no_nse,
                use_emp: !no_emp,
                settings,
            };
            print!("{}", commands::cmd_oracle(&req)?.text);
        }
        Command::Report { dir, curves } => {
            let report = commands::cmd_report(&dir)?;
            print!("{}", report.to_table());
            if let Some(path) = curves {
                std::fs::write(path, report.curves_csv())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
