use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pic_core::analysis::{check_feasibility, FeasibilityInputs};
use pic_core::graph::{laplacian, spectral_interval};
use pic_core::runner::{read_config, resolve_topology, run_experiment, ExperimentConfig, ProblemSpec, Setup};
use pic_core::{Error, Result};

#[derive(Parser)]
#[command(name = "pic", version, about = "Pre-conditioned PI consensus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of an experiment and write traces and reports.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Grid-tune every method and write the score tables.
    Tune {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the Laplacian spectrum of `kind:m` or an edge-list file.
    Spectra { topology: String },
    /// Evaluate the parameter conditions for `c1=.. c2=.. c3=.. alpha=.. beta=.. mu=.. lf=.. lambda=.. m=..`.
    CheckFeasibility { params: Vec<String> },
}

#[derive(clap::Args)]
struct Overrides {
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiment seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// IDX image file for a logistic_idx problem.
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file for a logistic_idx problem.
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl Overrides {
    fn load(&self, path: &Path) -> Result<ExperimentConfig> {
        let mut config = read_config(path)?;
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let ProblemSpec::LogisticIdx { images, labels, .. } = &mut config.problem {
            if let Some(p) = &self.images {
                *images = p.clone();
            }
            if let Some(p) = &self.labels {
                *labels = p.clone();
            }
        } else if self.images.is_some() || self.labels.is_some() {
            return Err(Error::Config("--images/--labels apply only to logistic_idx problems".into()));
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(overrides: &Overrides, path: &Path) -> Result<()> {
    let config = overrides.load(path)?;
    let report = run_experiment(&config)?;
    println!(
        "{:<22} {:>10} {:>12} {:>12} {:>12} {:>8}",
        "method", "iters", "grad_norm", "consensus", "rho", "status"
    );
    for m in &report.methods {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<22} {:>10} {:>12} {:>12} {:>12} {:>8}",
            m.method,
            m.iterations_to_tol.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            opt(m.final_grad_norm),
            opt(m.final_consensus_err),
            opt(m.rho),
            m.status
        );
    }
    println!("outputs written to {}", config.out.display());
    Ok(())
}

fn tune(overrides: &Overrides, path: &Path) -> Result<()> {
    let config = overrides.load(path)?;
    let setup = Setup::from_config(&config)?;
    std::fs::create_dir_all(&config.out)?;
    for spec in &config.methods {
        let result = setup.tune(spec, &config)?;
        let file = config.out.join(format!("tune_{}.csv", spec.method));
        let mut out = csv::Writer::from_path(&file)?;
        out.write_record(["alpha", "beta", "h", "gamma", "iterations", "outcome"])?;
        for s in &result.table {
            out.write_record([
                s.cell.alpha.to_string(),
                s.cell.beta.to_string(),
                s.cell.h.to_string(),
                s.cell.gamma.to_string(),
                s.iterations.map(|k| k.to_string()).unwrap_or_default(),
                format!("{:?}", s.outcome),
            ])?;
        }
        out.flush()?;
        println!("{:<22} best {} ({} iterations)", spec.method, result.best, result.best_iterations);
    }
    Ok(())
}

fn spectra(spec: &str) -> Result<()> {
    let topology = resolve_topology(spec)?;
    let lap = laplacian(&topology, 1)?;
    let (lambda_min, lambda_max) = spectral_interval(&lap)?;
    println!("agents {} edges {} max_degree {}", topology.agents(), topology.edges().len(), topology.max_degree());
    println!("lambda_min_nonzero {lambda_min:.12e}");
    println!("lambda_max {lambda_max:.12e}");
    let eig: Vec<String> = lap.eigenvalues().iter().map(|l| format!("{l:.12e}")).collect();
    println!("eigenvalues {}", eig.join(" "));
    Ok(())
}

fn check(params: &[String]) -> Result<()> {
    let mut map = HashMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {p:?}")))?;
        let v: f64 = v
            .parse()
            .map_err(|e| Error::Config(format!("{k}: {e}")))?;
        map.insert(k.to_ascii_lowercase(), v);
    }
    let mut get = |k: &str| map.remove(k).ok_or_else(|| Error::Config(format!("missing parameter {k}")));
    let inputs = FeasibilityInputs {
        c1: get("c1")?,
        c2: get("c2")?,
        c3: get("c3")?,
        alpha: get("alpha")?,
        beta: get("beta")?,
        mu: get("mu")?,
        lipschitz: get("lf")?,
        lambda_min: get("lambda")?,
        m: {
            let m = get("m")?;
            if m < 1.0 || m.fract() != 0.0 {
                return Err(Error::Config(format!("m must be a positive integer, got {m}")));
            }
            m as usize
        },
    };
    if let Some(k) = map.keys().next() {
        return Err(Error::Config(format!("unknown parameter {k}")));
    }
    let report = check_feasibility(inputs)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, overrides } => run(overrides, config),
        Command::Tune { config, overrides } => tune(overrides, config),
        Command::Spectra { topology } => spectra(topology),
        Command::CheckFeasibility { params } => check(params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = e.category();
            eprintln!("error [{category}]: {e}");
            ExitCode::from(code as u8)
        }
    }
}
