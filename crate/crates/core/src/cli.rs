//! The `timecf` command-line interface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::dataset::{parse_events, preprocess, split_leave_latest, Dataset, LogFormat, TrainSet};
use crate::decay::{DecaySpec, Family};
use crate::evaluation::{grid_sweep, EvalReport, Evaluator, ParamGrid, DEFAULT_GRID_POINTS};
use crate::recommender::{score_items, top_n};
use crate::similarity::SimilarityModel;
use crate::synth::{generate_synthetic, SynthConfig};
use crate::temporal::{
    collect_ssnr_ages, fit_piecewise_trend, geometric_points, log_bin_average, Bin, BinnedCurve, BreakpointGrid,
    TrendFit, DEFAULT_AGE_MIN, DEFAULT_BIN_RATIO,
};

pub const THREADS_ENV: &str = "TIMECF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "timecf", version, about = "Time-aware item-based collaborative filtering")]
pub struct Cli {
    /// Worker threads; 0 uses all available cores.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,

    /// Print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess a log and print dataset statistics as JSON.
    Ingest(IngestArgs),
    /// Log-binned SSNR-vs-age curve (CSV) and optional trend fit (JSON).
    AnalyzeSsnr(AnalyzeArgs),
    /// Fit the three-phase trend to a curve CSV.
    FitTrend(FitArgs),
    /// Top-N recommendations for one user at one time, as JSON.
    Recommend(RecommendArgs),
    /// Leave-the-latest-out hit-rates for one decay function, as JSON.
    Evaluate(EvaluateArgs),
    /// Grid sweep of one decay family: CSV table plus best-parameter JSON.
    Sweep(SweepArgs),
    /// Write a seeded synthetic event log.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Event log path.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,

    /// Field delimiter of the log (`\t` for tab).
    #[arg(long, default_value = "\\t")]
    pub delimiter: String,

    /// Column order of the log.
    #[arg(long, default_value = "user,item,timestamp")]
    pub columns: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Curve CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also fit the trend and write it here as JSON.
    #[arg(long)]
    pub trend_out: Option<PathBuf>,
    /// Ratio between consecutive bin edges.
    #[arg(long, default_value_t = DEFAULT_BIN_RATIO)]
    pub bin_ratio: f64,
    /// Lower edge of the first bin, seconds.
    #[arg(long, default_value_t = DEFAULT_AGE_MIN)]
    pub age_min: f64,
    #[command(flatten)]
    pub grid: TrendGridArgs,
    /// Binary similarity cache; built and written when missing.
    #[arg(long)]
    pub sim_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrendGridArgs {
    /// Short breakpoint grid `lo:hi:n`.
    #[arg(long, default_value = "100:1e5:20")]
    pub ts_grid: String,
    /// Long breakpoint grid `lo:hi:n`.
    #[arg(long, default_value = "5e5:5e7:20")]
    pub tl_grid: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Curve CSV as written by `analyze-ssnr`.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub grid: TrendGridArgs,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// External user identifier.
    #[arg(long)]
    pub user: String,
    /// Query time, seconds since epoch.
    #[arg(long)]
    pub at: i64,
    #[arg(long, default_value = "constant")]
    pub decay: String,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "constant")]
    pub decay: String,
    /// Search depths.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
    pub n: Vec<usize>,
    /// Also report hits / |U| without the 1/N factor.
    #[arg(long)]
    pub normalize_hitrate: bool,
    /// Include wall time in the report (not reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sim_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Decay family to sweep.
    #[arg(long)]
    pub family: String,
    /// Axis override `key=lo:hi:n` or `key=value`; repeatable.
    #[arg(long)]
    pub grid: Vec<String>,
    /// Default number of geometric points per parameter range.
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub points: usize,
    /// Depth whose hit-rate selects the best point.
    #[arg(long, default_value_t = 10)]
    pub objective: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
    pub n: Vec<usize>,
    #[arg(long)]
    pub normalize_hitrate: bool,
    /// Table CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Best-parameter JSON path.
    #[arg(long, default_value = "best.json")]
    pub best: PathBuf,
    #[arg(long)]
    pub sim_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub users: usize,
    #[arg(long, default_value_t = 1000)]
    pub items: usize,
    #[arg(long, default_value_t = 50_000)]
    pub events: usize,
    /// Mean days between long-term topic switches; 0 disables drift.
    #[arg(long, default_value_t = 30.0)]
    pub drift_days: f64,
    /// Probability that an event comes from the session's item cluster.
    #[arg(long, default_value_t = 0.7)]
    pub burst_focus: f64,
    #[arg(long, default_value_t = 0.8)]
    pub topic_focus: f64,
    /// No drift and no bursts.
    #[arg(long)]
    pub stationary: bool,
}

/// Parses `argv`, runs the subcommand and returns the process exit status:
/// 0 on success, 1 on pipeline failure, 2 on usage errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let json_errors = argv.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return 0;
            }
            report_error(json_errors, "usage", &err.to_string());
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(err) => {
            report_error(cli.json_errors, "pipeline", &format!("{err:#}"));
            1
        }
    }
}

fn report_error(json: bool, kind: &str, message: &str) {
    if json {
        let v = json!({ "error": { "kind": kind, "message": message.trim_end() } });
        eprintln!("{v}");
    } else {
        eprintln!("error: {}", message.trim_end().trim_start_matches("error: "));
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build().context("building thread pool")?;
    pool.install(|| match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::AnalyzeSsnr(a) => analyze_ssnr(a),
        Command::FitTrend(a) => fit_trend(a),
        Command::Recommend(a) => recommend(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
    })
}

/// Rounds to 12 significant digits so serialized values are stable.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null)
}

/// Writes `bytes` to `path` via a temporary file in the same directory, or to
/// stdout when `path` is `None`.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn parse_delimiter(text: &str) -> Result<char> {
    match text {
        "\\t" | "tab" => Ok('\t'),
        _ => {
            let mut chars = text.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => bail!("delimiter must be a single character, got {text:?}"),
            }
        }
    }
}

fn load_dataset(input: &InputArgs) -> Result<Dataset> {
    let format = LogFormat::new(parse_delimiter(&input.delimiter)?, &input.columns)?;
    let file = File::open(&input.input).with_context(|| format!("opening {}", input.input.display()))?;
    let parsed = parse_events(BufReader::new(file), &format)?;
    if parsed.skipped > 0 {
        eprintln!("warning: skipped {} malformed line(s) in {}", parsed.skipped, input.input.display());
    }
    Ok(preprocess(&parsed.log))
}

fn load_or_build_model(train: &TrainSet, cache: Option<&Path>) -> Result<SimilarityModel> {
    let Some(path) = cache else {
        return Ok(SimilarityModel::build(train));
    };
    let hash = train.content_hash();
    if path.exists() {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return SimilarityModel::read_cache(BufReader::new(file), hash)
            .with_context(|| format!("refusing similarity cache {}", path.display()));
    }
    let model = SimilarityModel::build(train);
    let mut buf = Vec::new();
    model.write_cache(&mut buf, hash)?;
    write_atomic(path, &buf)?;
    Ok(model)
}

fn prepare_evaluator(input: &InputArgs, cache: Option<&Path>) -> Result<Evaluator> {
    let dataset = load_dataset(input)?;
    let (train, probes) = split_leave_latest(&dataset);
    let model = load_or_build_model(&train, cache)?;
    Ok(Evaluator::from_parts(train, probes, model)?)
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let summary = load_dataset(&a.input)?.summary();
    let v = json!({
        "users": summary.users,
        "items": summary.items,
        "ratings": summary.ratings,
        "sparsity": num(summary.sparsity),
        "excluded_users": summary.excluded_users,
    });
    emit(a.out.as_deref(), &json_bytes(&v))
}

fn parse_grid_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        bail!("expected lo:hi:n, got {text:?}");
    };
    let (lo, hi, n): (f64, f64, usize) = (
        lo.parse().with_context(|| format!("bad grid bound {lo:?}"))?,
        hi.parse().with_context(|| format!("bad grid bound {hi:?}"))?,
        n.parse().with_context(|| format!("bad grid size {n:?}"))?,
    );
    if !(lo > 0.0 && hi >= lo && n >= 1) {
        bail!("grid {text:?} needs 0 < lo <= hi and n >= 1");
    }
    Ok(geometric_points(lo, hi, n))
}

fn breakpoint_grid(a: &TrendGridArgs) -> Result<BreakpointGrid> {
    Ok(BreakpointGrid { short: parse_grid_range(&a.ts_grid)?, long: parse_grid_range(&a.tl_grid)? })
}

pub fn curve_to_csv(curve: &BinnedCurve) -> String {
    let mut s = String::from("age_lo,age_hi,mean_ssnr,count\n");
    for b in &curve.bins {
        let _ = writeln!(s, "{},{},{},{}", round_sig(b.age_lo), round_sig(b.age_hi), round_sig(b.mean_ssnr), b.count);
    }
    s
}

pub fn curve_from_csv(text: &str) -> Result<BinnedCurve> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty curve file"))?;
    if header.trim() != "age_lo,age_hi,mean_ssnr,count" {
        bail!("unexpected curve header {header:?}");
    }
    let mut bins = Vec::new();
    for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| s.parse::<f64>().with_context(|| format!("line {}: bad number {s:?}", lineno + 2));
        let [lo, hi, mean, count] = f.as_slice() else {
            bail!("line {}: expected 4 fields", lineno + 2);
        };
        bins.push(Bin {
            age_lo: parse(lo)?,
            age_hi: parse(hi)?,
            mean_ssnr: parse(mean)?,
            count: count.parse().with_context(|| format!("line {}: bad count {count:?}", lineno + 2))?,
        });
    }
    Ok(BinnedCurve { bins })
}

fn trend_json(fit: &TrendFit) -> Result<Value> {
    Ok(json!({
        "t_short": num(fit.t_short),
        "t_long": num(fit.t_long),
        "k_short": num(fit.k_short),
        "k_long": num(fit.k_long),
        "plateau": num(fit.plateau),
        "residual": num(fit.residual),
        "decay": fit.to_decay()?.to_string(),
    }))
}

fn analyze_ssnr(a: &AnalyzeArgs) -> Result<()> {
    let dataset = load_dataset(&a.input)?;
    let (train, probes) = split_leave_latest(&dataset);
    let model = load_or_build_model(&train, a.sim_cache.as_deref())?;
    let collected = collect_ssnr_ages(&train, &probes, &model)?;
    if collected.excluded() > 0 {
        eprintln!(
            "note: excluded {} degenerate-infinite and {} isolated SSNR sample(s)",
            collected.degenerate_infinite, collected.isolated
        );
    }
    let curve = log_bin_average(&collected.samples, a.bin_ratio, a.age_min)?;
    emit(a.out.as_deref(), curve_to_csv(&curve).as_bytes())?;
    if let Some(path) = &a.trend_out {
        let fit = fit_piecewise_trend(&curve, &breakpoint_grid(&a.grid)?)?;
        write_atomic(path, &json_bytes(&trend_json(&fit)?))?;
    }
    Ok(())
}

fn fit_trend(a: &FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.curve).with_context(|| format!("reading {}", a.curve.display()))?;
    let curve = curve_from_csv(&text)?;
    let fit = fit_piecewise_trend(&curve, &breakpoint_grid(&a.grid)?)?;
    emit(a.out.as_deref(), &json_bytes(&trend_json(&fit)?))
}

fn recommend(a: &RecommendArgs) -> Result<()> {
    let decay: DecaySpec = a.decay.parse()?;
    if a.n == 0 {
        bail!("--n must be >= 1");
    }
    let dataset = load_dataset(&a.input)?;
    let user = dataset.users.get(&a.user).ok_or_else(|| anyhow!("unknown user {:?}", a.user))?;
    let train = dataset.to_train_set();
    let model = SimilarityModel::build(&train);
    let scores = score_items(&train, &model, user, a.at, &decay)?;
    let list: Vec<Value> = top_n(&scores, a.n)
        .into_iter()
        .map(|r| json!({ "item": dataset.items.name(r.item).unwrap_or_default(), "score": num(r.score) }))
        .collect();
    emit(a.out.as_deref(), &json_bytes(&Value::Array(list)))
}

fn depth_json(report: &EvalReport, normalized: bool) -> Vec<Value> {
    report
        .depths
        .iter()
        .map(|d| {
            let mut m = Map::new();
            m.insert("n".into(), json!(d.n));
            m.insert("hits".into(), json!(d.hits));
            m.insert("hit_rate".into(), num(d.hit_rate));
            if normalized {
                m.insert("normalized_hit_rate".into(), num(d.normalized_hit_rate));
            }
            Value::Object(m)
        })
        .collect()
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let decay: DecaySpec = a.decay.parse()?;
    let evaluator = prepare_evaluator(&a.input, a.sim_cache.as_deref())?;
    let report = evaluator.evaluate_spec(&decay, &a.n)?;
    let mut v = json!({
        "decay": report.decay,
        "evaluated_users": report.evaluated_users,
        "results": depth_json(&report, a.normalize_hitrate),
    });
    if a.timing {
        v["wall_time_secs"] = json!(report.wall_time.as_secs_f64());
    }
    emit(a.out.as_deref(), &json_bytes(&v))
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let family: Family = a.family.parse()?;
    let mut grid = ParamGrid::default_for(family, a.points);
    for o in &a.grid {
        grid.apply_override(o)?;
    }
    let evaluator = prepare_evaluator(&a.input, a.sim_cache.as_deref())?;
    let result = grid_sweep(&evaluator, &grid, a.objective, &a.n)?;
    let depths: Vec<usize> = result.rows[0].report.depths.iter().map(|d| d.n).collect();

    let mut csv = String::new();
    let mut header: Vec<String> = family.keys().iter().map(|k| k.to_string()).collect();
    header.extend(depths.iter().map(|n| format!("H@{n}")));
    if a.normalize_hitrate {
        header.extend(depths.iter().map(|n| format!("HN@{n}")));
    }
    let _ = writeln!(csv, "{}", header.join(","));
    for row in &result.rows {
        let mut cells: Vec<String> = row.spec.params().iter().map(|&p| round_sig(p).to_string()).collect();
        cells.extend(row.report.depths.iter().map(|d| round_sig(d.hit_rate).to_string()));
        if a.normalize_hitrate {
            cells.extend(row.report.depths.iter().map(|d| round_sig(d.normalized_hit_rate).to_string()));
        }
        let _ = writeln!(csv, "{}", cells.join(","));
    }

    let best = result.best_row();
    let params: Map<String, Value> =
        family.keys().iter().zip(best.spec.params()).map(|(k, v)| (k.to_string(), num(v))).collect();
    let best_json = json!({
        "family": family.name(),
        "decay": best.spec.to_string(),
        "params": params,
        "objective": format!("H@{}", result.objective),
        "evaluated_users": best.report.evaluated_users,
        "grid_points": result.rows.len(),
        "results": depth_json(&best.report, a.normalize_hitrate),
    });
    emit(a.out.as_deref(), csv.as_bytes())?;
    write_atomic(&a.best, &json_bytes(&best_json))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig {
        users: a.users,
        items: a.items,
        events: a.events,
        drift_rate: if a.drift_days > 0.0 { 1.0 / (a.drift_days * 86_400.0) } else { 0.0 },
        burst_focus: a.burst_focus,
        topic_focus: a.topic_focus,
        seed: a.seed,
        ..SynthConfig::default()
    };
    if a.drift_days < 0.0 {
        bail!("--drift-days must be >= 0");
    }
    if a.stationary {
        cfg.drift_rate = 0.0;
        cfg.burst_focus = 0.0;
    }
    let log = generate_synthetic(&cfg)?;
    emit(a.out.as_deref(), log.to_delimited(&LogFormat::default()).as_bytes())
}
