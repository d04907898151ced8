//! `gcba`: batch driver for validation, stratification, strainer atlases,
//! retraction flows, convergence families and charts.

mod commands;
mod svg;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gcba_core::complex::ComplexPoint;
use gcba_core::config::Config;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Version of every JSON document written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "gcba", version, about = "Geometry of finite piecewise-Euclidean complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here (and the run manifest next to it).
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Write an SVG plot here.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Geodesic completeness and curvature checks.
    Validate { input: PathBuf },
    /// Strata, canonical measure and dimension report.
    Analyze { input: PathBuf },
    /// Strainer atlas over candidate points.
    Strainers {
        input: PathBuf,
        /// Strainer quality; defaults to the configured delta0.
        #[arg(long)]
        delta: Option<f64>,
        /// Largest k searched; defaults to the top dimension.
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Retraction flows and fiber tests at a strained point.
    Flows {
        input: PathBuf,
        /// Center as `simplex:b0,b1,...`; defaults to a top-simplex barycenter.
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Number of random starts.
        #[arg(long, default_value_t = 20)]
        starts: usize,
    },
    /// Measure stability of a family given by a manifest.
    Converge { input: PathBuf },
    /// Strainer chart with tensor, length and alpha checks.
    Chart {
        input: PathBuf,
        /// Center as `simplex:b0,b1,...`; defaults to a top-simplex barycenter.
        #[arg(long)]
        point: Option<String>,
        /// Number of sampled geodesics for the length check.
        #[arg(long, default_value_t = 50)]
        geodesics: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Analyze { .. } => "analyze",
            Command::Strainers { .. } => "strainers",
            Command::Flows { .. } => "flows",
            Command::Converge { .. } => "converge",
            Command::Chart { .. } => "chart",
        }
    }

    fn input(&self) -> &Path {
        match self {
            Command::Validate { input }
            | Command::Analyze { input }
            | Command::Strainers { input, .. }
            | Command::Flows { input, .. }
            | Command::Converge { input }
            | Command::Chart { input, .. } => input,
        }
    }
}

/// Result of one command: the JSON report, whether every check passed,
/// the input files read, and an optional plot.
pub struct Outcome {
    pub report: serde_json::Value,
    pub pass: bool,
    pub inputs: Vec<PathBuf>,
    pub svg: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    command: &'a str,
    pass: bool,
    report: &'a serde_json::Value,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a Config,
    /// SHA-256 of every input file, keyed by path.
    input_hashes: BTreeMap<String, String>,
    outputs: Vec<String>,
    wall_time_s: f64,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<Config> {
    let mut cfg = match path {
        None => Config::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            if p.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            } else {
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Parses `simplex:b0,b1,...`.
pub fn parse_point(s: &str) -> anyhow::Result<(usize, Vec<f64>)> {
    let (simplex, bary) = s.split_once(':').context("point must look like simplex:b0,b1,...")?;
    let simplex = simplex.trim().parse().context("bad simplex index")?;
    let bary = bary.split(',').map(|b| b.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().context("bad barycentric coordinate")?;
    Ok((simplex, bary))
}

/// Worker count from GCBA_THREADS, defaulting to the available parallelism.
pub fn threads() -> usize {
    std::env::var("GCBA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on up to `threads()` scoped workers; results keep
/// the input order, so output does not depend on the worker count.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let n = threads().min(items.len()).max(1);
    if n == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(n);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn sha256_hex(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn check_point(c: &gcba_core::complex::MetricComplex, simplex: usize, bary: &[f64]) -> anyhow::Result<ComplexPoint> {
    anyhow::ensure!(simplex < c.num_simplices(), "simplex {simplex} out of range");
    let dim = c.simplex(simplex).dim;
    anyhow::ensure!(bary.len() == dim + 1, "simplex {simplex} needs {} coordinates", dim + 1);
    anyhow::ensure!(bary.iter().all(|b| *b >= 0.0) && (bary.iter().sum::<f64>() - 1.0).abs() < 1e-9, "coordinates must be nonnegative and sum to 1");
    Ok(c.point_in(simplex, bary))
}

/// Errors returned here are input errors (exit code 3).
fn run(cli: &Cli, cfg: &Config) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Validate { input } => commands::validate(input),
        Command::Analyze { input } => commands::analyze(input, cfg),
        Command::Strainers { input, delta, k_max } => commands::strainers(input, cfg, *delta, *k_max),
        Command::Flows { input, point, delta, starts } => commands::flows(input, cfg, point.as_deref(), *delta, *starts),
        Command::Converge { input } => commands::converge(input, cfg),
        Command::Chart { input, point, geodesics } => commands::chart(input, cfg, point.as_deref(), *geodesics),
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let start = Instant::now();
    let cfg = load_config(cli.config.as_deref(), cli.seed)?;
    let name = cli.command.name();
    let out = run(cli, &cfg)?;
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        command: name,
        pass: out.pass,
        report: &out.report,
    };
    let text = gcba_core::json::to_canonical_string(&envelope)? + "\n";
    let mut outputs = Vec::new();
    match &cli.json {
        Some(p) => {
            std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(p.display().to_string());
        }
        None => print!("{text}"),
    }
    if let Some(p) = &cli.svg {
        match &out.svg {
            Some(s) => {
                std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?;
                outputs.push(p.display().to_string());
            }
            None => eprintln!("gcba: no plot for `{name}`; {} not written", p.display()),
        }
    }
    if let Some(p) = &cli.json {
        let mut inputs = out.inputs.clone();
        if let Some(c) = &cli.config {
            inputs.push(c.clone());
        }
        let mut input_hashes = BTreeMap::new();
        for i in &inputs {
            input_hashes.insert(i.display().to_string(), sha256_hex(i)?);
        }
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: name,
            config: &cfg,
            input_hashes,
            outputs,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        let mp = manifest_path(p);
        std::fs::write(&mp, gcba_core::json::to_canonical_string(&manifest)? + "\n").with_context(|| format!("writing {}", mp.display()))?;
    }
    Ok(out.pass)
}

/// `report.json` gets its manifest at `report.manifest.json`.
fn manifest_path(json: &Path) -> PathBuf {
    let stem = json.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    json.with_file_name(format!("{stem}.manifest.json"))
}

/// The error chain joined by ": ", skipping causes whose text the
/// previous message already contains.
fn render_chain(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if parts.last().is_some_and(|p| p.contains(&text)) {
            continue;
        }
        parts.push(text);
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gcba {}: checks failed on {}", cli.command.name(), cli.command.input().display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("gcba {}: input error: {}", cli.command.name(), render_chain(&e));
            ExitCode::from(3)
        }
    }
}
