use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Output};
use crate::config::{Command, Layer, RunConfig};
use crate::output::emit;
use crate::{exit, CliError};

#[derive(Parser)]
#[command(
    name = "lvsmile",
    version,
    about = "Spectral prices, smiles and densities for a local volatility model"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Call prices by order, with partial sums
    Price(RunArgs),
    /// Truncated implied-volatility smiles
    Smile(RunArgs),
    /// Transition density approximations on a log-price grid
    Density(RunArgs),
    /// Monte Carlo prices next to the spectral series
    Mc(RunArgs),
    /// Convergence diagnostics and contour choice, as text
    Check(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat key=value file; flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Manifest path (default <out>.manifest, or stderr without --out)
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,

    /// Base volatility
    #[arg(long, allow_negative_numbers = true)]
    a: Option<String>,
    /// Perturbation size
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<String>,
    /// Square root of the perturbation size
    #[arg(long = "sqrt-eps", allow_negative_numbers = true)]
    sqrt_eps: Option<String>,
    /// Exponent of the perturbation e^(beta y)
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<String>,
    /// Log-spot
    #[arg(long, allow_negative_numbers = true)]
    y: Option<String>,
    /// Maturity
    #[arg(long, allow_negative_numbers = true)]
    t: Option<String>,
    /// Series order
    #[arg(long)]
    order: Option<String>,

    /// Log-strikes, comma separated (repeatable)
    #[arg(long, allow_hyphen_values = true, action = clap::ArgAction::Append)]
    k: Vec<String>,
    #[arg(long = "lmmr-min", allow_negative_numbers = true)]
    lmmr_min: Option<String>,
    #[arg(long = "lmmr-max", allow_negative_numbers = true)]
    lmmr_max: Option<String>,
    #[arg(long = "lmmr-count")]
    lmmr_count: Option<String>,

    /// Im(lambda) of the integration contour
    #[arg(long = "contour-offset", allow_negative_numbers = true)]
    contour_offset: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<String>,
    /// Truncation of Re(lambda)
    #[arg(long = "half-width")]
    half_width: Option<String>,

    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    antithetic: bool,

    /// Add the implied vol of the full series price
    #[arg(long)]
    reference: bool,

    #[arg(long = "y-min", allow_negative_numbers = true)]
    y_min: Option<String>,
    #[arg(long = "y-max", allow_negative_numbers = true)]
    y_max: Option<String>,
    #[arg(long = "y-step")]
    y_step: Option<String>,
}

impl RunArgs {
    fn layer(&self) -> Layer {
        let mut l = Layer::new("command line");
        let opts = [
            ("a", &self.a),
            ("eps", &self.eps),
            ("sqrt-eps", &self.sqrt_eps),
            ("beta", &self.beta),
            ("y", &self.y),
            ("t", &self.t),
            ("order", &self.order),
            ("lmmr-min", &self.lmmr_min),
            ("lmmr-max", &self.lmmr_max),
            ("lmmr-count", &self.lmmr_count),
            ("contour-offset", &self.contour_offset),
            ("rel-tol", &self.rel_tol),
            ("half-width", &self.half_width),
            ("paths", &self.paths),
            ("dt", &self.dt),
            ("seed", &self.seed),
            ("y-min", &self.y_min),
            ("y-max", &self.y_max),
            ("y-step", &self.y_step),
        ];
        for (key, value) in opts {
            if let Some(v) = value {
                l.set(key, v.as_str());
            }
        }
        if !self.k.is_empty() {
            l.set("k", self.k.join(","));
        }
        if self.antithetic {
            l.set("antithetic", "true");
        }
        if self.reference {
            l.set("reference", "true");
        }
        l
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::SUCCESS
            };
        }
    };
    let (command, args) = match cli.command {
        Commands::Price(a) => (Command::Price, a),
        Commands::Smile(a) => (Command::Smile, a),
        Commands::Density(a) => (Command::Density, a),
        Commands::Mc(a) => (Command::Mc, a),
        Commands::Check(a) => (Command::Check, a),
    };
    match execute(command, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, args: &RunArgs) -> Result<i32, CliError> {
    let mut layers = vec![args.layer()];
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        layers.push(Layer::parse(&text, path.display().to_string())?);
    }
    let cfg = RunConfig::resolve(command, &layers)?;

    // the manifest goes out first so even a failed run can be reproduced
    write_manifest(&cfg, args)?;
    let outcome = commands::run(&cfg)?;
    let out = args.out.as_deref();
    match &outcome.output {
        Output::Table(table) => emit(out, |w| table.write_csv(w).map_err(std::io::Error::other))?,
        Output::Report(text) => emit(out, |w| w.write_all(text.as_bytes()))?,
    }
    for w in &outcome.warnings {
        eprintln!("{w}");
    }
    for (k, e) in &outcome.failures {
        eprintln!("error: strike k = {k}: {e}");
    }
    Ok(if outcome.failures.is_empty() {
        exit::SUCCESS
    } else {
        exit::NUMERICAL
    })
}

fn manifest_path(args: &RunArgs) -> Option<PathBuf> {
    if let Some(p) = &args.manifest {
        return Some(p.clone());
    }
    args.out.as_deref().map(|out: &Path| {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest");
        PathBuf::from(name)
    })
}

fn write_manifest(cfg: &RunConfig, args: &RunArgs) -> Result<(), CliError> {
    let text = cfg.manifest();
    match manifest_path(args) {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| CliError::io(path.display().to_string(), e))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}
