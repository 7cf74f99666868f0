//! `amic`: adaptive multi-scale correlation discovery over time-series
//! pairs. Subcommands analyze real pairs, generate synthetic benchmarks,
//! compare whole-series metrics, rank reported windows, and benchmark the
//! incremental window engine.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use amic_core::bench::{run_bench, scan_brute, scan_incremental};
use amic_core::ingest::{
    align_pair, clean, infer_grid_step, load_series, rank_transform, resample, Aggregator,
    SeriesPair,
};
use amic_core::ksg::ksg_mi;
use amic_core::parallel::recursive_parallel_search;
use amic_core::search::{
    layered_search, rank_windows, CoverageInner, GranularityLadder, NormKind, SearchConfig,
    SearchResult, ThresholdStrategy, WindowResult, DEFAULT_MIN_WINDOW,
};
use amic_core::synth::{compose, dcor, gen_relation, pearson, GroundTruthSpan, RelationKind};

#[derive(Parser)]
#[command(
    name = "amic",
    version,
    about = "Adaptive multi-scale correlation discovery over time-series pairs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find correlated windows between two series and report them.
    Analyze(AnalyzeArgs),
    /// Generate synthetic relation data with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Print whole-series MI, Pearson, and distance correlation.
    Compare(CompareArgs),
    /// Rank previously reported windows by MI.
    Rank(RankArgs),
    /// Time the incremental window engine against per-window recomputation.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggArg {
    Mean,
    Sum,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Absolute,
    TwoStep,
    Coverage,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    /// Normalize MI by the maximum entropy ln(n).
    Max,
    /// Normalize MI by the window's own entropy.
    Entropy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Jsonl,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Incremental,
    Brute,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// CSV file (timestamp,value) for the first series.
    #[arg(long)]
    x: PathBuf,
    /// CSV file (timestamp,value) for the second series.
    #[arg(long)]
    y: PathBuf,
    /// Resample both series to this bucket width (in timestamp units).
    #[arg(long)]
    resolution: Option<i64>,
    /// Aggregator used when resampling.
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    agg: AggArg,
    /// Neighbor count of the MI estimator.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Explicit comma-separated window sizes, coarsest first.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["g_max", "g_min"])]
    ladder: Option<Vec<usize>>,
    /// Coarsest window size of the default halving ladder (default N/4).
    #[arg(long)]
    g_max: Option<usize>,
    /// Finest window size of the default halving ladder.
    #[arg(long)]
    g_min: Option<usize>,
    /// Slide step as a fraction of the window size.
    #[arg(long, default_value_t = 0.125)]
    slide_frac: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::TwoStep)]
    threshold_mode: ModeArg,
    /// MI bar in nats (absolute mode).
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Normalized window-entropy bar (two-step mode, step 1).
    #[arg(long, default_value_t = 0.2)]
    sigma_h: f64,
    /// Normalized MI bar (two-step mode, step 2).
    #[arg(long, default_value_t = 0.2)]
    sigma_i: f64,
    /// Denominator of the normalized MI in two-step mode.
    #[arg(long, value_enum, default_value_t = NormArg::Entropy)]
    norm: NormArg,
    /// Data-coverage target in [0,1] (coverage mode).
    #[arg(long)]
    coverage: Option<f64>,
    /// Map-task count for the partitioned search.
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    /// Single relation to generate (see `--help` for names).
    #[arg(long, value_parser = RelationKind::from_str, conflicts_with = "compose", required_unless_present = "compose")]
    relation: Option<RelationKind>,
    /// Comma-separated relations composed with noise gaps in between.
    #[arg(long, value_delimiter = ',', value_parser = RelationKind::from_str)]
    compose: Option<Vec<RelationKind>>,
    /// Samples per relation.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Noise-gap length between composed relations.
    #[arg(long, default_value_t = 1000)]
    gap: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = amic_core::synth::DEFAULT_NOISE)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV for the first series.
    #[arg(long)]
    out_x: PathBuf,
    /// Output CSV for the second series.
    #[arg(long)]
    out_y: PathBuf,
    /// Ground-truth span sidecar (default: <out-x>.truth.json).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    resolution: Option<i64>,
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    agg: AggArg,
    #[arg(long, default_value_t = 6)]
    k: usize,
}

#[derive(Args)]
struct RankArgs {
    /// JSON-Lines window report produced by `analyze`.
    #[arg(long = "in")]
    input: PathBuf,
    /// How many windows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated series sizes (each at least 1000).
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 4000, 16000, 50000])]
    sizes: Vec<usize>,
    /// Run only one mode (default: both).
    #[arg(long, value_enum)]
    mode: Option<BenchMode>,
    /// Window size of the scan.
    #[arg(long, default_value_t = 512)]
    g: usize,
    /// Slide step of the scan.
    #[arg(long, default_value_t = 8)]
    slide: usize,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Usage errors exit 2 (like flag-parse failures); runtime errors exit 1.
enum CliError {
    Usage(String),
    Run(String),
}

impl From<amic_core::AmicError> for CliError {
    fn from(e: amic_core::AmicError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Rank(a) => cmd_rank(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Shared load → clean → resample → align front of analyze/compare.
fn load_pair(
    x: &Path,
    y: &Path,
    resolution: Option<i64>,
    agg: AggArg,
) -> Result<SeriesPair, CliError> {
    let agg = match agg {
        AggArg::Mean => Aggregator::Mean,
        AggArg::Sum => Aggregator::Sum,
    };
    let mut sides = Vec::with_capacity(2);
    for path in [x, y] {
        let raw = load_series(path)?;
        let step = infer_grid_step(&raw)?;
        let mut series = clean(&raw, step)?;
        if let Some(resolution) = resolution {
            series = resample(&series, resolution, agg)?;
        }
        sides.push(series);
    }
    let second = sides.pop().expect("two series loaded");
    let first = sides.pop().expect("two series loaded");
    Ok(align_pair(&first, &second)?)
}

fn build_config(a: &AnalyzeArgs, n: usize) -> Result<SearchConfig, CliError> {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    if !(a.slide_frac > 0.0 && a.slide_frac <= 1.0) {
        return Err(usage("--slide-frac must lie in (0,1]"));
    }
    if a.sigma < 0.0 {
        return Err(usage("--sigma must be non-negative"));
    }
    for (value, flag) in [(a.sigma_h, "--sigma-h"), (a.sigma_i, "--sigma-i")] {
        if !(0.0..=1.0).contains(&value) {
            return Err(usage(format!("{flag} must lie in [0,1]")));
        }
    }
    if a.partitions == 0 {
        return Err(usage("--partitions must be at least 1"));
    }
    if a.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let min_window = DEFAULT_MIN_WINDOW.max(a.k + 2);
    let ladder = match &a.ladder {
        Some(sizes) => GranularityLadder::new(sizes.clone())
            .map_err(|e| usage(format!("--ladder: {e}")))?,
        None => {
            let g_min = a.g_min.unwrap_or(min_window);
            let g_max = a.g_max.unwrap_or_else(|| (n / 4).max(g_min));
            GranularityLadder::halving(g_max, g_min)
                .map_err(|e| usage(format!("--g-max/--g-min: {e}")))?
        }
    };
    let norm = match a.norm {
        NormArg::Max => NormKind::MaxEntropy,
        NormArg::Entropy => NormKind::WindowEntropy,
    };
    let strategy = match a.threshold_mode {
        ModeArg::Absolute => ThresholdStrategy::Absolute { sigma: a.sigma },
        ModeArg::TwoStep => {
            ThresholdStrategy::TwoStep { sigma_h: a.sigma_h, sigma_i: a.sigma_i, norm }
        }
        ModeArg::Coverage => {
            let target = a
                .coverage
                .ok_or_else(|| usage("--coverage is required with --threshold-mode coverage"))?;
            if !(0.0..=1.0).contains(&target) {
                return Err(usage("--coverage must lie in [0,1]"));
            }
            ThresholdStrategy::CoverageTarget { target, inner: CoverageInner::Absolute }
        }
    };
    let config = SearchConfig {
        k: a.k,
        ladder,
        slide_frac: a.slide_frac,
        strategy,
        min_window,
        partitions: a.partitions,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn write_windows(
    windows: &[WindowResult],
    out: Option<&Path>,
    format: FormatArg,
) -> Result<(), CliError> {
    let mut body = String::new();
    match format {
        FormatArg::Jsonl => {
            for w in windows {
                let line = serde_json::to_string(w)
                    .map_err(|e| CliError::Run(format!("serialize window: {e}")))?;
                body.push_str(&line);
                body.push('\n');
            }
        }
        FormatArg::Table => {
            body.push_str(&window_table(windows));
        }
    }
    match out {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
            let mut writer = BufWriter::new(file);
            writer.write_all(body.as_bytes())?;
            writer.flush()?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn window_table(windows: &[WindowResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<12} {:>12} {:>10} {:>8} {:>10} {:>10}",
        "from", "to", "mi", "h_norm", "sign", "mu", "confidence"
    );
    for w in windows {
        let _ = writeln!(
            out,
            "{:<12} {:<12} {:>12.6} {:>10.4} {:>8} {:>10.4} {:>10.4}",
            w.start_ts, w.end_ts, w.mi, w.h_norm, w.sign.to_string(), w.mu, w.confidence
        );
    }
    out
}

fn cmd_analyze(a: AnalyzeArgs) -> CliResult {
    let pair = load_pair(&a.x, &a.y, a.resolution, a.agg)?;
    let ranked = rank_transform(pair)?;
    let config = build_config(&a, ranked.len())?;
    let result: SearchResult = match config.strategy {
        // Coverage targets are tuned on the sequential path.
        ThresholdStrategy::CoverageTarget { .. } => layered_search(&ranked, &config)?,
        _ => recursive_parallel_search(&ranked, &config, a.workers)?,
    };
    write_windows(&result.windows, a.out.as_deref(), a.format)
}

fn write_series_csv(path: &Path, timestamps: &[i64], values: &[f64]) -> Result<(), CliError> {
    let mut body = String::with_capacity(values.len() * 24);
    for (t, v) in timestamps.iter().zip(values) {
        let _ = writeln!(body, "{t},{v}");
    }
    fs::write(path, body).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn cmd_synth(a: SynthArgs) -> CliResult {
    if a.noise < 0.0 {
        return Err(usage("--noise must be non-negative"));
    }
    let (pair, spans): (SeriesPair, Vec<GroundTruthSpan>) = if let Some(kinds) = &a.compose {
        compose(kinds, a.n, a.gap, a.noise, a.seed)?
    } else {
        let kind = a.relation.expect("clap enforces one of --relation/--compose");
        let pair = gen_relation(kind, a.n, a.noise, a.seed)?;
        let span = GroundTruthSpan { kind, s_idx: 0, e_idx: pair.len() };
        (pair, vec![span])
    };
    write_series_csv(&a.out_x, &pair.timestamps, &pair.x)?;
    write_series_csv(&a.out_y, &pair.timestamps, &pair.y)?;
    let truth_path = a.truth.unwrap_or_else(|| {
        let mut p = a.out_x.as_os_str().to_owned();
        p.push(".truth.json");
        PathBuf::from(p)
    });
    let body = serde_json::to_string_pretty(&spans)
        .map_err(|e| CliError::Run(format!("serialize ground truth: {e}")))?;
    fs::write(&truth_path, body)
        .map_err(|e| CliError::Run(format!("{}: {e}", truth_path.display())))?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CliResult {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let pair = load_pair(&a.x, &a.y, a.resolution, a.agg)?;
    let pcc = pearson(&pair.x, &pair.y)?;
    let dc = dcor(&pair.x, &pair.y)?;
    let ranked = rank_transform(pair)?;
    let mi = ksg_mi(&ranked.u, &ranked.v, a.k)?;
    println!("mi_raw,mi,pcc,dcor");
    println!("{},{},{},{}", mi.raw, mi.clamped, pcc, dc);
    Ok(())
}

fn cmd_rank(a: RankArgs) -> CliResult {
    let body = fs::read_to_string(&a.input)
        .map_err(|e| CliError::Run(format!("{}: {e}", a.input.display())))?;
    let mut windows = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let w: WindowResult = serde_json::from_str(line)
            .map_err(|e| CliError::Run(format!("{}: line {}: {e}", a.input.display(), i + 1)))?;
        windows.push(w);
    }
    let ranked = rank_windows(windows);
    let top = &ranked[..a.top.min(ranked.len())];
    if !top.is_empty() {
        print!("{}", window_table(top));
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    if a.sizes.is_empty() {
        return Err(usage("--sizes must name at least one size"));
    }
    if let Some(&small) = a.sizes.iter().find(|&&n| n < 1000) {
        return Err(usage(format!("--sizes entries must be at least 1000, got {small}")));
    }
    if a.g == 0 || a.slide == 0 || a.k == 0 {
        return Err(usage("--g, --slide, and --k must be positive"));
    }
    if let Some(&n) = a.sizes.iter().find(|&&n| n < a.g) {
        return Err(usage(format!("--g {} exceeds the smallest size {n}", a.g)));
    }
    println!("mode,n,ms");
    match a.mode {
        None => {
            for p in run_bench(&a.sizes, a.g, a.slide, a.k, a.seed)? {
                println!("incremental,{},{:.3}", p.n, p.incremental_ms);
                println!("brute,{},{:.3}", p.n, p.brute_ms);
            }
        }
        Some(mode) => {
            for (i, &n) in a.sizes.iter().enumerate() {
                let pair = rank_transform(gen_relation(
                    RelationKind::Independent,
                    n,
                    amic_core::synth::DEFAULT_NOISE,
                    a.seed.wrapping_add(i as u64),
                )?)?;
                let (label, (ms, _)) = match mode {
                    BenchMode::Incremental => {
                        ("incremental", scan_incremental(&pair, a.g, a.slide, a.k)?)
                    }
                    BenchMode::Brute => ("brute", scan_brute(&pair, a.g, a.slide, a.k)?),
                };
                println!("{label},{n},{ms:.3}");
            }
        }
    }
    Ok(())
}
