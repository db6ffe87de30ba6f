use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spcnet::data::{generate_sbm, save_dataset, SbmConfig};
use spcnet::experiment::{run_with_workers, ExperimentConfig, PerturbConfig, PlotConfig, RobustnessConfig, RunReport, Task};
use spcnet::filter::FilterSpec;
use spcnet::robustness::PerturbMode;
use spcnet::{edge_homophily, Result, SpcError};

#[derive(Parser)]
#[command(name = "spcnet", version, about = "Poisson–Charlier graph filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Add,
    Remove,
    Mixed,
}

impl From<Mode> for PerturbMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Add => PerturbMode::Add,
            Mode::Remove => PerturbMode::Remove,
            Mode::Mixed => PerturbMode::Mixed,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; 1 for exact reproduction runs
    #[arg(long)]
    workers: Option<usize>,
    /// Report path; overrides the config's `output`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in a config file
    Run(RunArgs),
    /// Grid-search (k, t) for SPCNET_D
    Grid {
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the full grid table
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the filter response 1 + Σ C_n(k,t)(−λ)^n/n! as CSV
    PlotFilter {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "n", default_value_t = 10)]
        truncation: usize,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare ‖h(L_p) − h(L)‖₂ with the linear-stability bound on an SBM graph
    Stability {
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long, default_value_t = 0.02)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        ratio: f64,
        #[arg(long, value_enum, default_value_t = Mode::Mixed)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "n", default_value_t = 10)]
        truncation: usize,
    },
    /// Accuracy under random structural perturbation
    Robustness {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated perturb ratios
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Where to write ratio,mean_acc,ci95 rows
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a two-block SBM graph in the dataset directory layout
    SbmGen {
        #[arg(long, default_value_t = 500)]
        nodes: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn finish(report: &RunReport, out: Option<&PathBuf>) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, report.to_json()?)?;
    } else if report.config.output.is_none() {
        print!("{}", report.to_json()?);
    }
    println!("{}", report.summary());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let report = run_with_workers(&cfg, args.workers)?;
            if let (Task::PlotFilter, Some(csv)) = (cfg.task, &report.filter_curve) {
                if cfg.output.is_none() {
                    print!("{csv}");
                    return Ok(());
                }
            }
            finish(&report, cfg.output.as_ref())
        }
        Command::Grid { run, csv } => {
            let mut cfg = load_config(&run)?;
            cfg.task = Task::Grid;
            let report = run_with_workers(&cfg, run.workers)?;
            if let (Some(path), Some(grid)) = (csv, &report.grid) {
                std::fs::write(path, grid.to_csv())?;
            }
            finish(&report, cfg.output.as_ref())
        }
        Command::PlotFilter { k, t, truncation, step, lambda_max, out } => {
            let csv = spcnet::experiment::filter_curve_csv(
                &FilterSpec::spcnet(k, t, truncation),
                &PlotConfig { step, lambda_max },
            )?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Stability { nodes, p, q, seed, ratio, mode, k, t, truncation } => {
            let mut cfg = ExperimentConfig::new(Task::Stability);
            cfg.sbm = Some(SbmConfig { nodes, ..SbmConfig::new(p, q, 0) });
            cfg.seeds = vec![seed];
            cfg.perturb = Some(PerturbConfig { ratio, mode: mode.into() });
            cfg.model.k = k;
            cfg.model.t = t;
            cfg.model.truncation = truncation;
            let report = run_with_workers(&cfg, Some(1))?;
            let check = &report.stability.as_ref().expect("stability task")[0];
            let out = serde_json::json!({
                "bound": check.bound,
                "observed": check.observed,
                "margin": check.margin,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Robustness { run, ratios, seeds, mode, csv } => {
            let mut cfg = load_config(&run)?;
            cfg.task = Task::Robustness;
            let mut rc = cfg.robustness.clone().unwrap_or(RobustnessConfig { ratios: vec![], mode: PerturbMode::Mixed });
            if let Some(r) = ratios {
                rc.ratios = r;
            }
            if let Some(m) = mode {
                rc.mode = m.into();
            }
            cfg.robustness = Some(rc);
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            let report = run_with_workers(&cfg, run.workers)?;
            if let (Some(path), Some(sweep)) = (csv, &report.robustness) {
                std::fs::write(path, sweep.to_csv())?;
            }
            finish(&report, cfg.output.as_ref())
        }
        Command::SbmGen { nodes, p, q, sigma, seed, out } => {
            let cfg = SbmConfig { nodes, sigma, ..SbmConfig::new(p, q, seed) };
            let g = generate_sbm(&cfg)?;
            save_dataset(&g, &format!("sbm-p{p}-q{q}-s{seed}"), &out)?;
            let h = edge_homophily(&g).map(|h| format!("{h:.4}")).unwrap_or_else(|_| "n/a".into());
            println!("wrote {} nodes, {} edges, homophily {h} to {}", g.num_nodes(), g.num_edges(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(SpcError::InvalidConfig(msg)) => {
            eprintln!("spcnet: invalid config: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("spcnet: {e}");
            ExitCode::FAILURE
        }
    }
}
