//! Command-line experiment runner: dataset generation, fitting with seeded
//! repetitions, and method comparison tables.
//!
//! Settings resolve as flags, then the optional TOML file given by
//! `--config`, then built-in defaults (tolerance 1e-6, cap 10^4, 30 runs,
//! seed 0).

pub mod io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::curve::{mlspia_weights, CurveMethod, CurveProblem, MlspiaWeights};
use crate::datasets;
use crate::error::Error;
use crate::report::{FitOptions, FitReport};
use crate::surface::{SurfaceMethod, SurfaceProblem};
use io::{Dataset, FitSummary, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "rpia", version, about = "Randomized progressive iterative approximation for B-spline fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a benchmark point set as CSV.
    Gen(GenArgs),
    /// Fit a point set with one method over seeded repetitions.
    Fit(FitArgs),
    /// Fit a point set with several methods and tabulate the results.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Example id: 1-4 are curves, 5-8 are surfaces.
    #[arg(long)]
    example: u8,
    /// Last data index in the first direction (m + 1 samples).
    #[arg(long)]
    m: usize,
    /// Last data index in the second direction; defaults to m.
    #[arg(long)]
    p: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Shared {
    /// Point-set CSV produced by `gen` or in the same format.
    #[arg(long)]
    input: PathBuf,
    /// Control points per direction minus one.
    #[arg(long)]
    n: Option<usize>,
    /// Block size for rpia.
    #[arg(long)]
    tau: Option<usize>,
    /// First seed of the seed ladder seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions of randomized methods.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Momentum weight overrides for mlspia.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// TOML file with defaults for any of the above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// rpia, lspia, slspia or mlspia; `rpia:<tau>` sets the block size.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    shared: Shared,
    /// Report path. The iteration history goes next to it as
    /// `<stem>.history.csv` and the first run's controls as
    /// `<stem>.controls.csv`. Without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated methods, e.g. `lspia,rpia:5,rpia:10`.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    shared: Shared,
    /// Table path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    method: Option<String>,
    methods: Option<Vec<String>>,
    n: Option<usize>,
    tau: Option<usize>,
    seed: Option<u64>,
    runs: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    omega: Option<f64>,
    gamma: Option<f64>,
    v: Option<f64>,
    format: Option<Format>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::Argument(_) => EXIT_USAGE,
                Error::Parse { .. } => EXIT_PARSE,
                Error::Config(_) | Error::Rank(_) | Error::DegenerateData(_) => EXIT_CONFIG,
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_OTHER,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Fully resolved settings shared by `fit` and `compare`.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub n: usize,
    pub tau: Option<usize>,
    pub seed: u64,
    pub runs: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub omega: Option<f64>,
    pub gamma: Option<f64>,
    pub v: Option<f64>,
}

impl Settings {
    pub fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            ..FitOptions::default()
        }
    }
}

/// A method name with an optional inline block size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: String,
    pub tau: Option<usize>,
}

impl MethodSpec {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let (name, tau) = match s.split_once(':') {
            Some((name, t)) => (name, Some(t.parse().map_err(|_| format!("invalid block size in {s:?}"))?)),
            None => (s, None),
        };
        let name = name.trim().to_ascii_lowercase();
        if !["rpia", "lspia", "slspia", "mlspia"].contains(&name.as_str()) {
            return Err(format!("unknown method {s:?}"));
        }
        if tau.is_some() && name != "rpia" {
            return Err(format!("only rpia takes a block size, got {s:?}"));
        }
        Ok(Self { name, tau })
    }

    /// Label used in comparison tables, e.g. `rpia:5`.
    pub fn label(&self, default_tau: Option<usize>) -> String {
        match self.tau.or(default_tau) {
            Some(t) if self.name == "rpia" => format!("rpia:{t}"),
            _ => self.name.clone(),
        }
    }
}

fn read_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        CliError::Core(Error::Parse {
            line,
            message: format!("{}: {}", path.display(), e.message()),
        })
    })
}

fn resolve(shared: &Shared, file: &FileConfig) -> CliResult<Settings> {
    let n = shared
        .n
        .or(file.n)
        .ok_or_else(|| CliError::Usage("--n is required (flag or config file)".into()))?;
    let runs = shared.runs.or(file.runs).unwrap_or(30);
    if runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    Ok(Settings {
        n,
        tau: shared.tau.or(file.tau),
        seed: shared.seed.or(file.seed).unwrap_or(0),
        runs,
        tol: shared.tol.or(file.tol).unwrap_or(1e-6),
        max_iter: shared.max_iter.or(file.max_iter).unwrap_or(10_000),
        omega: shared.omega.or(file.omega),
        gamma: shared.gamma.or(file.gamma),
        v: shared.v.or(file.v),
    })
}

/// Fits `data` with `method`. Randomized methods run `settings.runs` times
/// on seeds `seed, seed+1, ...` (in parallel); deterministic ones run once.
pub fn run_method(data: &Dataset, method: &MethodSpec, settings: &Settings) -> crate::Result<Vec<FitReport>> {
    let tau = method.tau.or(settings.tau);
    let seeds: Vec<u64> = if method.name == "rpia" {
        (0..settings.runs as u64).map(|k| settings.seed + k).collect()
    } else {
        vec![settings.seed]
    };
    match data {
        Dataset::Curve(points) => {
            let problem = CurveProblem::from_points(points, settings.n)?;
            let cm = match method.name.as_str() {
                "rpia" => CurveMethod::Rpia {
                    tau: tau.ok_or_else(|| Error::Argument("rpia needs a block size (--tau or rpia:<tau>)".into()))?,
                },
                "lspia" => CurveMethod::Lspia { weight: None },
                "slspia" => CurveMethod::Slspia { weight: None },
                _ => CurveMethod::Mlspia {
                    weights: mlspia_override(&problem, settings)?,
                },
            };
            seeds.par_iter().map(|&s| problem.fit(&cm, &settings.options(s))).collect()
        }
        Dataset::Surface(grid) => {
            let sm = match method.name.as_str() {
                "rpia" => SurfaceMethod::Rpia {
                    tau: tau.ok_or_else(|| Error::Argument("rpia needs a block size (--tau or rpia:<tau>)".into()))?,
                },
                "lspia" => SurfaceMethod::Lspia { weight: None },
                other => {
                    return Err(Error::Config(format!("{other} is available for curves only")));
                }
            };
            let problem = SurfaceProblem::from_grid(grid, settings.n)?;
            seeds.par_iter().map(|&s| problem.fit(&sm, &settings.options(s))).collect()
        }
    }
}

fn mlspia_override(problem: &CurveProblem, s: &Settings) -> crate::Result<Option<MlspiaWeights>> {
    if s.omega.is_none() && s.gamma.is_none() && s.v.is_none() {
        return Ok(None);
    }
    let base = match (s.omega, s.gamma, s.v) {
        (Some(omega), Some(gamma), Some(v)) => MlspiaWeights { omega, gamma, v },
        _ => mlspia_weights(problem.system().a())?,
    };
    Ok(Some(MlspiaWeights {
        omega: s.omega.unwrap_or(base.omega),
        gamma: s.gamma.unwrap_or(base.gamma),
        v: s.v.unwrap_or(base.v),
    }))
}

/// Aggregate report for a set of runs of one method.
pub fn summarize(reports: &[FitReport], history_path: Option<String>) -> FitSummary {
    let first = &reports[0];
    let per_run: Vec<RunSummary> = reports
        .iter()
        .map(|r| RunSummary {
            seed: r.seed,
            iterations: r.iterations,
            e_final: r.final_error(),
            wall_ms: r.wall_time.as_secs_f64() * 1e3,
            termination: r.termination.as_str().to_owned(),
        })
        .collect();
    FitSummary {
        method: first.method.to_owned(),
        m: first.m,
        n: first.n,
        p: first.p,
        tau: first.tau,
        seeds: reports.iter().filter_map(|r| r.seed).collect(),
        mean_iterations: reports.iter().map(|r| r.iterations as f64).sum::<f64>() / reports.len() as f64,
        per_run,
        history_path,
    }
}

fn create(path: &Path) -> crate::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_out(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> crate::Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush().map_err(|e| Error::io(format!("writing {}", p.display()), e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)
        }
    }
}

fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let data = if datasets::CURVE_IDS.contains(&args.example) {
        Dataset::Curve(datasets::gen_curve(args.example, args.m)?)
    } else if datasets::SURFACE_IDS.contains(&args.example) {
        Dataset::Surface(datasets::gen_surface(args.example, args.m, args.p.unwrap_or(args.m))?)
    } else {
        return Err(CliError::Usage(format!("unknown example id {}; expected 1-8", args.example)));
    };
    write_out(args.out.as_deref(), |w| io::write_dataset(w, &data))?;
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let file = read_config(args.shared.config.as_deref())?;
    let settings = resolve(&args.shared, &file)?;
    let method = args
        .method
        .clone()
        .or(file.method.clone())
        .ok_or_else(|| CliError::Usage("--method is required".into()))?;
    let method = MethodSpec::parse(&method).map_err(CliError::Usage)?;
    let format = args.format.or(file.format).unwrap_or_default();
    let data = io::read_dataset(&args.shared.input)?;
    let reports = run_method(&data, &method, &settings)?;

    let history = args.out.as_deref().map(|p| sibling(p, "history.csv"));
    if let Some(h) = &history {
        let mut w = create(h)?;
        io::write_history_csv(&mut w, reports.iter().map(|r| r.errors.as_slice()))?;
        w.flush().map_err(|e| Error::io(format!("writing {}", h.display()), e))?;
        let cpath = sibling(args.out.as_deref().unwrap(), "controls.csv");
        let mut w = create(&cpath)?;
        match &reports[0].controls {
            crate::Controls::Curve(c) => io::write_curve_csv(&mut w, c)?,
            crate::Controls::Surface(g) => io::write_surface_csv(&mut w, g)?,
        }
        w.flush().map_err(|e| Error::io(format!("writing {}", cpath.display()), e))?;
    }
    let summary = summarize(&reports, history.map(|h| h.display().to_string()));
    write_out(args.out.as_deref(), |w| match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &summary).map_err(|e| Error::io("writing report", e.into()))?;
            writeln!(w).map_err(|e| Error::io("writing report", e))
        }
        Format::Csv => io::write_summary_csv(w, &summary),
    })?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let file = read_config(args.shared.config.as_deref())?;
    let settings = resolve(&args.shared, &file)?;
    let names: Vec<String> = if args.methods.is_empty() {
        file.methods.clone().unwrap_or_default()
    } else {
        args.methods.clone()
    };
    let names: Vec<&String> = names.iter().filter(|s| !s.trim().is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::Usage("--methods needs at least one method".into()));
    }
    let methods = names
        .iter()
        .map(|s| MethodSpec::parse(s))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(CliError::Usage)?;
    let data = io::read_dataset(&args.shared.input)?;
    let mut rows = Vec::with_capacity(methods.len());
    for m in &methods {
        let reports = run_method(&data, m, &settings)?;
        let k = reports.len() as f64;
        rows.push([
            m.label(settings.tau),
            (reports.iter().map(FitReport::final_error).sum::<f64>() / k).to_string(),
            (reports.iter().map(|r| r.iterations as f64).sum::<f64>() / k).to_string(),
            (reports.iter().map(|r| r.wall_time.as_secs_f64() * 1e3).sum::<f64>() / k).to_string(),
        ]);
    }
    write_out(args.out.as_deref(), |w| {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::io("writing table", std::io::Error::other(e.to_string()));
        out.write_record(["method", "e_inf", "mean_iterations", "mean_cpu_ms"]).map_err(err)?;
        for r in &rows {
            out.write_record(r).map_err(err)?;
        }
        out.flush().map_err(|e| Error::io("writing table", e))
    })?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rpia: {e}");
            e.exit_code()
        }
    }
}
