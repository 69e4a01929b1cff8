//! `canard-lab`: runs the canard constructions and writes CSV/JSON results.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 solver
//! failure (details in `diagnostic.json`). `manifest.json` is written in
//! every case.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use canard_core::CanardError;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use commands::Context;
use config::{RunConfig, ToleranceOverrides};
use output::{write_json, Diagnostic, Manifest, OutputDir};

const DEFAULT_OUT: &str = "canard-out";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Solver(CanardError),
}

impl From<CanardError> for CliError {
    fn from(e: CanardError) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Solver(e)
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) | CliError::Solver(_) => 2,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Io(_) => "io_error",
            CliError::Solver(_) => "solver_failure",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "canard-lab", version, about = "Canard cycles at a folded saddle-node: orbits, manifolds, branches")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration (system, tolerances, solver settings, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = DEFAULT_OUT)]
    out: PathBuf,
    /// Worker threads for the sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for randomized starting data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write long-format plot tables.
    #[arg(long, global = true)]
    plot_data: bool,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_abs: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_rel: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_newton: Option<f64>,
    #[arg(long, global = true)]
    tol_newton_iter: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol_event: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodic orbit of the planar layer problem with its first integral.
    Layer(commands::LayerArgs),
    /// Slow-manifold series in the scaling chart.
    SlowManifold(commands::SlowManifoldArgs),
    /// Hopf parameter over a list of r2 values, two ways.
    Hopf(commands::HopfArgs),
    /// Small periodic orbits from the Melnikov functions.
    SmallBranch(commands::SmallBranchArgs),
    /// Shilnikov boundary value problem of the entry-chart passage.
    Shilnikov(commands::ShilnikovArgs),
    /// Family of canard cycles at fixed eps.
    Branch(commands::BranchArgs),
    /// One canard cycle with its Hausdorff distance to the singular cycle.
    Orbit(commands::OrbitArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Layer(_) => "layer",
            Command::SlowManifold(_) => "slow-manifold",
            Command::Hopf(_) => "hopf",
            Command::SmallBranch(_) => "small-branch",
            Command::Shilnikov(_) => "shilnikov",
            Command::Branch(_) => "branch",
            Command::Orbit(_) => "orbit",
        }
    }

    fn parameters(&self) -> Value {
        let v = match self {
            Command::Layer(a) => serde_json::to_value(a),
            Command::SlowManifold(a) => serde_json::to_value(a),
            Command::Hopf(a) => serde_json::to_value(a),
            Command::SmallBranch(a) => serde_json::to_value(a),
            Command::Shilnikov(a) => serde_json::to_value(a),
            Command::Branch(a) => serde_json::to_value(a),
            Command::Orbit(a) => serde_json::to_value(a),
        };
        v.unwrap_or(Value::Null)
    }

    fn run(&self, ctx: &mut Context) -> Result<Value, CliError> {
        match self {
            Command::Layer(a) => commands::layer(a, ctx),
            Command::SlowManifold(a) => commands::slow_manifold(a, ctx),
            Command::Hopf(a) => commands::hopf(a, ctx),
            Command::SmallBranch(a) => commands::small_branch(a, ctx),
            Command::Shilnikov(a) => commands::shilnikov(a, ctx),
            Command::Branch(a) => commands::branch(a, ctx),
            Command::Orbit(a) => commands::orbit(a, ctx),
        }
    }
}

/// `--out` as given on the command line, for manifests of runs whose
/// arguments did not parse.
fn out_from_argv(argv: &[String]) -> PathBuf {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            if let Some(v) = it.next() {
                return PathBuf::from(v);
            }
        } else if let Some(v) = a.strip_prefix("--out=") {
            return PathBuf::from(v);
        }
    }
    PathBuf::from(DEFAULT_OUT)
}

struct ManifestDraft {
    argv: Vec<String>,
    command: String,
    seed: Option<u64>,
    jobs: usize,
    parameters: Value,
    config: Value,
    start: Instant,
}

impl ManifestDraft {
    fn finish(self, dir: &Path, outputs: Vec<String>, result: &Result<Value, CliError>) -> i32 {
        let (status, code, summary, error) = match result {
            Ok(s) => ("ok", 0, s.clone(), None),
            Err(e) => (e.status(), e.exit_code(), Value::Null, Some(e.to_string())),
        };
        let manifest = Manifest {
            tool: "canard-lab",
            version: env!("CARGO_PKG_VERSION"),
            core_version: canard_core::VERSION,
            command: self.command,
            argv: self.argv,
            status,
            exit_code: code,
            seed: self.seed,
            jobs: self.jobs,
            parameters: self.parameters,
            config: self.config,
            outputs,
            summary,
            error,
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
        };
        if std::fs::create_dir_all(dir).is_err() || write_json(&dir.join("manifest.json"), &manifest).is_err() {
            eprintln!("canard-lab: could not write {}", dir.join("manifest.json").display());
        }
        code
    }
}

fn run(argv: Vec<String>) -> i32 {
    let start = Instant::now();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let draft = ManifestDraft {
                command: argv.get(1).cloned().unwrap_or_default(),
                argv: argv.clone(),
                seed: None,
                jobs: 0,
                parameters: Value::Null,
                config: Value::Null,
                start,
            };
            return draft.finish(&out_from_argv(&argv), Vec::new(), &Err(CliError::Config(e.kind().to_string())));
        }
    };
    let c = &cli.common;
    let mut draft = ManifestDraft {
        argv: argv.clone(),
        command: cli.command.name().to_string(),
        seed: c.seed,
        jobs: c.jobs,
        parameters: cli.command.parameters(),
        config: Value::Null,
        start,
    };

    let tol = ToleranceOverrides {
        abs: c.tol_abs,
        rel: c.tol_rel,
        newton: c.tol_newton,
        newton_iter: c.tol_newton_iter,
        event: c.tol_event,
    };
    let cfg = match RunConfig::load(c.config.as_deref(), &tol, c.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("canard-lab: {e}");
            return draft.finish(&c.out, Vec::new(), &Err(e));
        }
    };
    draft.seed = Some(cfg.seed);
    draft.config = serde_json::to_value(&cfg).unwrap_or(Value::Null);

    let mut out = match OutputDir::create(&c.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("canard-lab: {e}");
            return draft.finish(&c.out, Vec::new(), &Err(e));
        }
    };
    let pool = match (c.jobs >= 1).then(|| rayon::ThreadPoolBuilder::new().num_threads(c.jobs).build()) {
        Some(Ok(p)) => p,
        Some(Err(e)) => {
            let err = CliError::Config(format!("cannot start {} workers: {e}", c.jobs));
            return draft.finish(&c.out, Vec::new(), &Err(err));
        }
        None => return draft.finish(&c.out, Vec::new(), &Err(CliError::Config("--jobs must be at least 1".into()))),
    };

    let mut ctx = Context { cfg: &cfg, out: &mut out, pool: &pool, plot_data: c.plot_data };
    let result = cli.command.run(&mut ctx);
    if let Err(e) = &result {
        eprintln!("canard-lab: {e}");
        if let CliError::Solver(err) = e {
            let diag = Diagnostic {
                command: cli.command.name().to_string(),
                kind: err.kind().to_string(),
                message: err.to_string(),
                detail: format!("{err:?}"),
            };
            if write_json(&out.root().join("diagnostic.json"), &diag).is_ok() {
                let mut files = out.written().to_vec();
                files.push("diagnostic.json".into());
                return draft.finish(&c.out, files, &result);
            }
        }
    }
    let files = out.written().to_vec();
    draft.finish(&c.out, files, &result)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CANARD_LAB_LOG", "warn")).init();
    std::process::exit(run(std::env::args().collect()));
}
