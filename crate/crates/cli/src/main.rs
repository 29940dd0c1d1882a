use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use t2u_core::scenario::{compare_schemes, generate_trajectory, parse_schemes, save_trajectory, Comparison};
use t2u_core::{Error, ScenarioConfig, Scheme, TrajectorySpec};

mod plot;

#[derive(Parser)]
#[command(name = "t2u", version, about = "Predictive target-to-user association simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme over Monte Carlo trials.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Run several schemes with common random numbers.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated list, e.g. IMM-PDA,CV-NN,GENIE.
        #[arg(long)]
        schemes: String,
    },
    /// Sample a trajectory spec into a trajectory CSV.
    Trajgen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sample interval in seconds.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario config; the built-in scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    plot: bool,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.num_trials = trials;
        }
        Ok(cfg)
    }

    fn execute(&self, cfg: &ScenarioConfig, schemes: &[Scheme]) -> Result<(), Error> {
        let cmp = compare_schemes(cfg, schemes, !self.serial)?;
        cmp.write_outputs(&self.out)?;
        if self.plot {
            plot::write_all(&cmp.report, &self.out)?;
        }
        print_summary(&cmp, &self.out);
        Ok(())
    }
}

fn print_summary(cmp: &Comparison, out: &Path) {
    let r = &cmp.report;
    println!(
        "{} trials, seed {}, outage threshold {} bps/Hz",
        r.num_trials, r.seed, r.outage_threshold
    );
    println!(
        "{:<12} {:>10} {:>12} {:>10} {:>8}",
        "scheme", "rmse_r[m]", "rmse_th[rad]", "rate", "outage"
    );
    for s in &r.schemes {
        println!(
            "{:<12} {:>10.4} {:>12.5} {:>10.4} {:>8.4}",
            s.scheme.name(),
            s.distance_rmse,
            s.angle_rmse,
            s.mean_rate,
            s.outage
        );
    }
    println!("wrote {}", out.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { run, scheme } => {
            let mut cfg = run.config()?;
            if let Some(name) = scheme {
                cfg.scheme = name.parse()?;
            }
            run.execute(&cfg, &[cfg.scheme])
        }
        Command::Compare { run, schemes } => {
            let schemes = parse_schemes(&schemes)?;
            let cfg = run.config()?;
            run.execute(&cfg, &schemes)
        }
        Command::Trajgen { spec, out, dt } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", spec.display())))?;
            let spec: TrajectorySpec =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            let traj = generate_trajectory(&spec, dt)?;
            save_trajectory(&out, &traj)?;
            println!("wrote {} samples to {}", traj.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
