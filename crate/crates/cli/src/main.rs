use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emuopt_cli::commands::{self, CliError, CliResult};
use emuopt_cli::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "emuopt", version, about = "Antenna layout optimization through simulator emulators")]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the simulator once and print the four SINR metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Columns of the array; must divide the element count.
        #[arg(long)]
        ny: Option<usize>,
        /// Horizontal spacing in wavelengths.
        #[arg(long)]
        dy: Option<f64>,
        /// Vertical spacing in wavelengths.
        #[arg(long)]
        dz: Option<f64>,
    },
    /// Sample layouts and simulate each into dataset.csv.
    Dataset {
        #[command(flatten)]
        common: Common,
        /// Overrides `sampling.count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Fit every configured emulator and score it on the test split.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Learning curves over training-set sizes.
    Curve {
        #[command(flatten)]
        common: Common,
    },
    /// Constrained search over the emulators.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Re-simulate the baseline, dataset argmax and emulator optimum.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> CliResult<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = &common.output_dir {
        cfg.output_dir = d.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { common, ny, dy, dz } => {
            let cfg = load(&common)?;
            let out = commands::simulate(&cfg, ny, dy, dz)?;
            let m = out.metrics;
            println!("config:     {}", out.config);
            println!("sinr_mean:  {:.3} dB", m.sinr_mean);
            println!("sinr_p5:    {:.3} dB", m.sinr_p5);
            println!("sinr_p50:   {:.3} dB", m.sinr_p50);
            println!("sinr_p95:   {:.3} dB", m.sinr_p95);
        }
        Command::Dataset { common, count } => {
            let mut cfg = load(&common)?;
            if let Some(n) = count {
                cfg.sampling.count = n;
                cfg.validate()?;
            }
            let ds = commands::dataset(&cfg)?;
            println!("{} rows -> {}", ds.len(), commands::RunDir::new(&cfg.output_dir).dataset().display());
        }
        Command::Train { common } => {
            let cfg = load(&common)?;
            for r in commands::train(&cfg)? {
                println!("{:<10} {:<14} test nRMSE {:.4}", r.metric, r.model, r.test_nrmse);
            }
        }
        Command::Curve { common } => {
            let cfg = load(&common)?;
            let rows = commands::curve(&cfg)?;
            println!("{rows} curve points -> {}", commands::RunDir::new(&cfg.output_dir).curves().display());
        }
        Command::Optimize { common } => {
            let cfg = load(&common)?;
            let out = commands::optimize_cmd(&cfg)?;
            let r = &out.result;
            println!("best: {} (feasible: {})", r.config, r.feasible);
            for (m, v) in &r.predicted_db {
                println!("predicted {m}: {v:.3} dB");
            }
            println!("speedup factor: {:.2}", out.speedup.factor);
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let out = commands::validate(&cfg)?;
            for r in &out.rows {
                println!(
                    "{:<17} {}  mean {:.3} dB  p5 {:.3} dB  constraints met: {}",
                    r.label, r.config, r.simulated.sinr_mean, r.simulated.sinr_p5, r.constraints_satisfied
                );
            }
            println!("improvement over baseline: {:.3} dB", out.improvement_over_baseline_db);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
