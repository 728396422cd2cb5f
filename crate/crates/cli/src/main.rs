use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frac_wear_cli::{commands, CliError, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "frac-wear",
    version,
    about = "Fractional-relaxation wear of a sliding punch under oscillatory load"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "N")]
    n_modes: Option<usize>,
    /// Accept P_Δ > P₀/2, where the total load turns negative for part of each period.
    #[arg(long)]
    allow_negative_load: bool,
    /// Override any config key, e.g. `--set model.alpha=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpairs and initial-data projection: eig.csv, phi.csv.
    Eig(Common),
    /// Transient pressure: pressure.csv, coeffs.csv.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_steps: Option<usize>,
    },
    /// Stationary state: stationary.csv, snapshots.csv.
    Stationary(Common),
    /// Convergence to the stationary state: decay.csv, rates.json.
    Converge(Common),
    /// α × μ sweep with manifest.json.
    Figures(Common),
    /// (x, E_α(−x), ℰ_α(x)) table for debugging.
    #[command(hide = true)]
    MlfTable {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-3)]
        x_min: f64,
        #[arg(long, default_value_t = 100.0)]
        x_max: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for item in &common.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| CliError::Syntax {
            line: 0,
            message: format!("--set expects KEY=VALUE, got `{item}`"),
        })?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(n) = common.n_modes {
        cfg.numerics.n_modes = n;
    }
    if common.allow_negative_load {
        cfg.load.allow_negative = true;
    }
    Ok(cfg)
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eig(c) => report(&commands::eig(&resolve(&c)?, &c.out)?),
        Command::Evolve {
            common,
            t_max,
            t_steps,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(t) = t_max {
                cfg.numerics.t_max = t;
            }
            if let Some(n) = t_steps {
                cfg.numerics.t_steps = n;
            }
            report(&commands::evolve(&cfg, &common.out)?);
        }
        Command::Stationary(c) => report(&commands::stationary(&resolve(&c)?, &c.out)?),
        Command::Converge(c) => {
            let (files, rates) = commands::converge(&resolve(&c)?, &c.out)?;
            report(&files);
            println!(
                "fitted {} rate {:.6} (predicted {:.6}) over t in [{}, {}]",
                rates.mode,
                rates.fitted_rate,
                rates.predicted_rate,
                rates.window[0],
                rates.window[1]
            );
        }
        Command::Figures(c) => {
            let manifest = commands::figures(&resolve(&c)?, &c.out)?;
            for case in &manifest.cases {
                println!("case {}", case.name);
                for note in &case.notes {
                    println!("  note: {note}");
                }
            }
            println!(
                "wrote {}",
                Path::new(&c.out).join("manifest.json").display()
            );
        }
        Command::MlfTable {
            alpha,
            x_min,
            x_max,
            n,
            out,
        } => {
            report(&[commands::mlf_table(alpha, x_min, x_max, n, &out)?]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
