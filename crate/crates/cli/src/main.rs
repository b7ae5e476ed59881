use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ransaac::benchmark::{
    ground_truth_pairs, mean_inlier_error, preset, reference_scenario, run_experiment,
    run_iteration_trace, trial_data, trial_seed, Execution, Experiment, PaperTable, Preset,
    TraceConfig,
};
use ransaac::geometry::symmetric_transfer_error;
use ransaac::io::{
    parse_homographies, parse_matches, write_cloud, write_consensus_trace, write_homography,
    write_iteration_trace, write_matches, write_report,
};
use ransaac::local_opt::LoConfig;
use ransaac::{estimate, Error, ImageExtents, Method, MethodConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ransaac",
    version,
    about = "Robust homography estimation and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a homography from a matches file (`x1 y1 x2 y2` per line).
    Estimate(EstimateArgs),
    /// Run a Monte-Carlo benchmark and write a report CSV.
    Bench(BenchArgs),
    /// Per-iteration error curves of RANSAC and RANSAAC (weighted mean).
    Trace(TraceArgs),
}

#[derive(Debug, Args)]
struct Tuning {
    /// Noise level in pixels; the inlier threshold is derived from it.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Scoring threshold in squared pixels, used as is.
    #[arg(long)]
    delta_d: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Stop once the iteration bound for the current inlier ratio is reached.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value_t = 0.99)]
    eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    adaptive_multiplier: f64,
    /// Weight exponent of the aggregation (default: 2 for lo-ransaac-wgmed, 5 otherwise).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 14)]
    s_is: usize,
    #[arg(long, default_value_t = 4.0)]
    m_delta: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 4)]
    ls_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    weiszfeld_tol: f64,
    #[arg(long, default_value_t = 100)]
    weiszfeld_max_iters: usize,
    /// Projections further than this many basis diagonals are discarded.
    #[arg(long, default_value_t = 100.0)]
    sanity_margin: f64,
}

impl Tuning {
    fn config(&self, method: Method) -> MethodConfig {
        MethodConfig {
            delta_d: self.delta_d,
            eta0: self.eta0,
            adaptive: self.adaptive,
            adaptive_multiplier: self.adaptive_multiplier,
            p: self.p,
            lo: LoConfig {
                s_is: self.s_is,
                m_delta: self.m_delta,
                reps: self.reps,
                ls_iters: self.ls_iters,
            },
            weiszfeld_tol: self.weiszfeld_tol,
            weiszfeld_max_iters: self.weiszfeld_max_iters,
            sanity_margin: self.sanity_margin,
            ..MethodConfig::new(method, self.sigma, self.iterations)
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    matches: PathBuf,
    #[arg(long, default_value = "lo-ransaac-wgmed")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Source image width; defaults to the largest source x.
    #[arg(long)]
    width: Option<f64>,
    /// Source image height; defaults to the largest source y.
    #[arg(long)]
    height: Option<f64>,
    /// Write the homography here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the consensus trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the aggregation cloud CSV here (RANSAAC methods only).
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Ground-truth homography file, for error reporting.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct Grid {
    /// Methods to compare (repeatable).
    #[arg(long = "method", default_values_t = ["ransac".to_string(), "ransaac-wmean".to_string(), "lo-ransaac-wgmed".to_string()])]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    n_inliers: usize,
    #[arg(long, default_value_t = 0.5)]
    outlier_ratio: f64,
}

#[derive(Debug, Args)]
struct Run {
    /// Trials per cell (bench: the preset's, or 100; trace: 1000).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it. 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Run {
    fn execution(&self) -> Execution {
        match self.workers {
            None => Execution::Parallel,
            Some(1) => Execution::Sequential,
            Some(n) => Execution::ParallelWith(n),
        }
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Run a predefined grid: 1, 3, adaptive, p-sweep, periter or random.
    #[arg(long)]
    paper_table: Option<String>,
    /// Write trial 0 of every scenario as `scenario_<id>.matches` plus its
    /// ground truth `scenario_<id>.gt` into this directory.
    #[arg(long)]
    emit_matches: Option<PathBuf>,
    /// Fill the runtime column (it varies between runs).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    run: Run,
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 20000)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    n_inliers: usize,
    #[arg(long, default_value_t = 0.5)]
    outlier_ratio: f64,
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Weight exponent of the weighted mean.
    #[arg(long, default_value_t = 5.0)]
    p: f64,
    #[command(flatten)]
    run: Run,
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Estimation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Estimation(_) => 3,
            Failure::Usage(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Parse(e.to_string()),
            Error::UnknownMethod(_) | Error::UnknownModelKind(_) | Error::InvalidConfig(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Estimation(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_to(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::File::create(p).and_then(|file| {
            let mut w = io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        }),
        None => f(&mut io::stdout().lock()),
    };
    res.map_err(|e| Failure::Io(e.to_string()))
}

fn in_file(path: &Path, e: Error) -> Failure {
    match Failure::from(e) {
        Failure::Parse(m) => Failure::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(), Failure> {
    let method: Method = a.method.parse()?;
    let cfg = a.tuning.config(method);
    cfg.validate()?;
    let gt = match &a.gt {
        Some(p) => {
            let hs = parse_homographies(&read(p)?).map_err(|e| in_file(p, e))?;
            let h = hs
                .into_iter()
                .next()
                .ok_or_else(|| Failure::Parse(format!("{}: no homography", p.display())))?;
            Some(h)
        }
        None => None,
    };
    let matches = parse_matches(&read(&a.matches)?).map_err(|e| in_file(&a.matches, e))?;
    let width = a
        .width
        .unwrap_or_else(|| matches.iter().map(|m| m.src.x).fold(0.0, f64::max));
    let height = a
        .height
        .unwrap_or_else(|| matches.iter().map(|m| m.src.y).fold(0.0, f64::max));
    let extents = ImageExtents::new(width, height).map_err(|_| {
        Failure::Usage("image extents must be positive; pass --width and --height".into())
    })?;

    let est = estimate(&matches, &cfg, a.seed, &extents, None)?;
    write_to(a.output.as_deref(), |w| write_homography(w, &est.model))?;

    let errs: Vec<f64> = matches
        .iter()
        .filter_map(|m| symmetric_transfer_error(&est.model, m).ok())
        .filter(|&e| e <= cfg.inlier_threshold())
        .collect();
    let mean = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
    let max = errs.iter().copied().fold(0.0, f64::max);
    eprintln!("method: {}", cfg.label());
    eprintln!("inliers: {} / {}", est.inliers, matches.len());
    eprintln!("iterations: {}", est.iterations);
    eprintln!("inlier symmetric transfer error (px^2): mean {mean:.4}, max {max:.4}");
    if est.fallback {
        eprintln!("aggregation fell back to the best hypothesis");
    }
    let reference = gt.map(|h| (ground_truth_pairs(&h, &matches, cfg.inlier_threshold()), h));
    if let Some((pairs, _)) = &reference {
        match mean_inlier_error(&est.model, pairs) {
            Ok(e) => eprintln!(
                "ground-truth error (px): {e:.4} over {} matches",
                pairs.len()
            ),
            Err(e) => eprintln!("ground-truth error unavailable: {e}"),
        }
    }

    if let Some(p) = &a.trace {
        let errors: Option<Vec<f64>> = reference.as_ref().map(|(pairs, _)| {
            est.trace
                .iter()
                .map(|t| mean_inlier_error(&t.model, pairs).unwrap_or(f64::NAN))
                .collect()
        });
        write_to(Some(p), |w| {
            write_consensus_trace(w, &est.trace, errors.as_deref())
        })?;
    }
    if let Some(p) = &a.cloud {
        let cloud = est
            .cloud
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("{method} does not build a cloud")))?;
        write_to(Some(p), |w| write_cloud(w, cloud))?;
    }
    Ok(())
}

fn emit(dir: &Path, exp: &Experiment) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    for (sid, s) in exp.scenarios.iter().enumerate() {
        let (s, data) = trial_data(
            s,
            exp.random_gt.as_ref(),
            trial_seed(exp.master_seed, sid, 0),
        )?;
        write_to(Some(&dir.join(format!("scenario_{sid}.matches"))), |w| {
            write_matches(w, &data.matches)
        })?;
        write_to(Some(&dir.join(format!("scenario_{sid}.gt"))), |w| {
            write_homography(w, &s.gt)
        })?;
    }
    Ok(())
}

fn run_trace(cfg: &TraceConfig, run: &Run) -> Result<(), Failure> {
    let trace = run_iteration_trace(cfg, run.execution())?;
    write_to(run.output.as_deref(), |w| write_iteration_trace(w, &trace))
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Failure> {
    let seed = a.run.seed;
    let job = match &a.paper_table {
        Some(t) => {
            let table: PaperTable = t.parse()?;
            preset(table, a.run.trials.unwrap_or(table.default_trials()), seed)
        }
        None => {
            let methods = a
                .grid
                .methods
                .iter()
                .map(|m| Ok(a.tuning.config(m.parse()?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let scenario =
                reference_scenario(a.grid.n_inliers, a.grid.outlier_ratio, a.tuning.sigma, seed);
            Preset::Grid(Experiment {
                scenarios: vec![scenario],
                methods,
                trials: a.run.trials.unwrap_or(100),
                master_seed: seed,
                random_gt: None,
            })
        }
    };
    match job {
        Preset::Grid(exp) => {
            exp.validate()?;
            if let Some(dir) = &a.emit_matches {
                emit(dir, &exp)?;
            }
            let reports = run_experiment(&exp, a.run.execution())?;
            write_to(a.run.output.as_deref(), |w| {
                write_report(w, &reports, a.timing)
            })
        }
        Preset::Trace(cfg) => {
            if let Some(dir) = &a.emit_matches {
                let exp = Experiment {
                    scenarios: vec![cfg.scenario.clone()],
                    methods: vec![],
                    trials: cfg.trials,
                    master_seed: cfg.master_seed,
                    random_gt: None,
                };
                emit(dir, &exp)?;
            }
            run_trace(&cfg, &a.run)
        }
    }
}

fn cmd_trace(a: &TraceArgs) -> Result<(), Failure> {
    let cfg = TraceConfig {
        scenario: reference_scenario(a.n_inliers, a.outlier_ratio, a.sigma, a.run.seed),
        iterations: a.iterations,
        trials: a
            .run
            .trials
            .unwrap_or(PaperTable::PerIteration.default_trials()),
        master_seed: a.run.seed,
        p: a.p,
    };
    run_trace(&cfg, &a.run)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let res = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Parse(m) | Failure::Estimation(m) | Failure::Usage(m) | Failure::Io(m)) =
                &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
