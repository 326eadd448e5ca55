mod config;
mod error;
mod modes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ExperimentConfig, Format, Mode, Start, SuiteArg};
use error::CliError;

/// Brownian motions on star graphs: kernels, S-matrices, simulation and verification.
///
/// Settings come from an optional JSON config (`--config`); every field can be
/// overridden by its dotted flag (`--run.dt`) or short alias (`--dt`).
#[derive(Debug, Parser)]
#[command(name = "starwalk", version)]
struct Cli {
    /// What to run; overrides `run.mode` from the config.
    mode: Option<Mode>,

    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print the effective config as JSON and exit.
    #[arg(long)]
    print_config: bool,

    #[arg(long = "graph.n_edges", visible_alias = "n", value_name = "N")]
    n_edges: Option<usize>,

    /// Killing weight `a` of the vertex condition.
    #[arg(long = "boundary.a", visible_alias = "a", value_name = "A")]
    a: Option<f64>,

    /// Per-edge reflection weights `b`, comma separated.
    #[arg(long = "boundary.b", visible_alias = "b", value_delimiter = ',', value_name = "B1,B2,...")]
    b: Option<Vec<f64>>,

    /// Stickiness weight `c`.
    #[arg(long = "boundary.c", visible_alias = "c", value_name = "C")]
    c: Option<f64>,

    #[arg(long = "run.mode", value_name = "MODE")]
    run_mode: Option<Mode>,

    /// Times for `kernel`, comma separated.
    #[arg(long = "run.t", visible_alias = "t", value_delimiter = ',', value_name = "T")]
    t: Option<Vec<f64>>,

    /// Spectral parameters for `resolvent` and `scatter`, comma separated.
    #[arg(long = "run.lambda", visible_alias = "lambda", value_delimiter = ',', value_name = "LAMBDA")]
    lambda: Option<Vec<f64>>,

    /// Wavenumber for the sticky time delay.
    #[arg(long = "run.k", visible_alias = "k", value_name = "K")]
    k: Option<f64>,

    /// `vertex` or `EDGE:X` with edges numbered from 1.
    #[arg(long = "run.start", visible_alias = "start", value_name = "START")]
    start: Option<Start>,

    #[arg(long = "run.y_max", visible_alias = "y-max", value_name = "Y")]
    y_max: Option<f64>,

    #[arg(long = "run.n_y", visible_alias = "n-y", value_name = "N")]
    n_y: Option<usize>,

    #[arg(long = "run.n_paths", visible_alias = "n-paths", value_name = "N")]
    n_paths: Option<usize>,

    #[arg(long = "run.dt", visible_alias = "dt", value_name = "DT")]
    dt: Option<f64>,

    #[arg(long = "run.horizon", visible_alias = "horizon", value_name = "T")]
    horizon: Option<f64>,

    #[arg(long = "run.record_every", visible_alias = "record-every", value_name = "K")]
    record_every: Option<usize>,

    #[arg(long = "run.seed", visible_alias = "seed", value_name = "SEED")]
    seed: Option<u64>,

    #[arg(long = "run.suite", visible_alias = "suite", value_name = "SUITE")]
    suite: Option<SuiteArg>,

    /// Output file (stdout if absent).
    #[arg(long = "run.output", visible_alias = "output", short = 'o', value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long = "run.format", visible_alias = "format", value_name = "FORMAT")]
    format: Option<Format>,
}

impl Cli {
    fn effective_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let (Some(a), Some(b)) = (self.mode, self.run_mode) {
            if a != b {
                return Err(CliError::Config("positional mode and --run.mode disagree".into()));
            }
        }
        if let Some(m) = self.mode.or(self.run_mode) {
            cfg.run.mode = m;
        }
        if let Some(b) = &self.b {
            cfg.boundary.b = b.clone();
            if self.n_edges.is_none() {
                cfg.graph.n_edges = b.len();
            }
        }
        let r = &mut cfg.run;
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = &self.$src { $dst = v.clone(); })*
            };
        }
        set!(
            n_edges => cfg.graph.n_edges,
            a => cfg.boundary.a,
            c => cfg.boundary.c,
            t => r.t,
            lambda => r.lambda,
            k => r.k,
            start => r.start,
            y_max => r.y_max,
            n_y => r.n_y,
            n_paths => r.n_paths,
            dt => r.dt,
            horizon => r.horizon,
            record_every => r.record_every,
            seed => r.seed,
            suite => r.suite,
            format => r.format,
        );
        if let Some(o) = &self.output {
            r.output = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = cli.effective_config()?;
    if cli.print_config {
        println!("{}", cfg.to_json());
        return Ok(true);
    }
    starwalk::simulate::configure_threads()?;
    modes::dispatch(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
