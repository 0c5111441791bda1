//! `lotf`: generate synthetic data, build and train cutoff tables, and
//! evaluate diversified search from the command line.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use lotusfilter::bench::{doubling_ratios, evaluate, scaling_point, EvalConfig, Method, ScalingRow};
use lotusfilter::trainer::{train_on, TraceRow};
use lotusfilter::{
    build_cutoff_table, build_index, estimate_eps_max, CutoffTable, ExactIndex, QuerySet,
    SyntheticMixture, TrainConfig, TrainingSet, VectorDataset,
};
use serde::Serialize;

use manifest::{sha256_file, sibling, write_json, Manifest};

#[derive(Parser)]
#[command(name = "lotf", version, about = "Diversified nearest-neighbor search by post-filtering")]
struct Cli {
    /// Worker threads for table building and training (query loops are
    /// always single-threaded).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded Gaussian-mixture base set, a query set and a manifest.
    Gen(GenArgs),
    /// Build a cutoff table at a given or trained eps.
    Build(BuildArgs),
    /// Learn eps by bracketing on the first M base vectors.
    Train(TrainArgs),
    /// Compare diversification methods on a query batch.
    Eval(EvalArgs),
    /// Sweep S and report filter time and cost.
    Bench(BenchArgs),
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and non-negative"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and positive"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 100, value_parser = count)]
    clusters: usize,
    #[arg(long, default_value_t = 100, value_parser = count)]
    per_cluster: usize,
    #[arg(long, default_value_t = 16, value_parser = count)]
    dim: usize,
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    spread: f64,
    #[arg(long, default_value_t = 1000, value_parser = count)]
    n_queries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the base vectors.
    #[arg(long)]
    base: PathBuf,
    /// Output path for the query vectors.
    #[arg(long)]
    queries: PathBuf,
    /// Defaults to `<base>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// How eps is learned when training is requested.
#[derive(Args, Serialize, Clone)]
struct TrainingOpts {
    /// Training queries are the first M base vectors.
    #[arg(long, default_value_t = 1000, value_parser = count)]
    train_queries: usize,
    /// Upper end of the search interval; estimated from the data if absent.
    #[arg(long, value_parser = positive)]
    eps_max: Option<f64>,
    /// Vectors sampled when estimating eps_max.
    #[arg(long, default_value_t = 1000)]
    eps_max_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, value_parser = unit_interval)]
    lambda: f64,
    #[arg(long, value_parser = count)]
    s: usize,
    #[arg(long, value_parser = count)]
    k: usize,
    #[command(flatten)]
    training: TrainingOpts,
    /// CSV of every grid evaluation: round,eps,mean_f,skipped.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BuildArgs {
    #[arg(long)]
    base: PathBuf,
    /// Output table file.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_parser = non_negative, required_unless_present = "train", conflicts_with = "train")]
    eps: Option<f64>,
    /// Learn eps first; needs --lambda, --s and --k.
    #[arg(long, requires_all = ["lambda", "s", "k"])]
    train: bool,
    #[arg(long, value_parser = unit_interval)]
    lambda: Option<f64>,
    #[arg(long, value_parser = count)]
    s: Option<usize>,
    #[arg(long, value_parser = count)]
    k: Option<usize>,
    #[command(flatten)]
    training: TrainingOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Cutoff table for the lotus method.
    #[arg(long, conflicts_with = "eps")]
    table: Option<PathBuf>,
    /// Build the table in memory at this eps instead of loading one.
    #[arg(long, value_parser = non_negative)]
    eps: Option<f64>,
    #[arg(long, value_parser = unit_interval)]
    lambda: f64,
    #[arg(long, value_parser = count)]
    s: usize,
    #[arg(long, value_parser = count)]
    k: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    safeguard: bool,
    #[arg(long, default_value_t = 3, value_parser = count)]
    trials: usize,
    /// Seeds the clustering baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "none,clustering,gmm,lotus")]
    methods: Vec<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, conflicts_with_all = ["eps", "train"])]
    table: Option<PathBuf>,
    #[arg(long, value_parser = non_negative, conflicts_with = "train")]
    eps: Option<f64>,
    /// Train a separate eps for every S.
    #[arg(long)]
    train: bool,
    #[command(flatten)]
    training: TrainingOpts,
    #[arg(long, value_parser = unit_interval)]
    lambda: f64,
    #[arg(long, value_parser = count)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400, 800])]
    s_list: Vec<usize>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    safeguard: bool,
    #[arg(long, default_value_t = 3, value_parser = count)]
    trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Build(a) => build(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Bench(a) => bench(&a),
    }
}

#[derive(Serialize)]
struct GenReport<'a> {
    manifest: Manifest,
    params: &'a GenArgs,
    n_vectors: usize,
    base_sha256: String,
    queries_sha256: String,
}

fn gen(a: &GenArgs) -> Result<()> {
    let mix = SyntheticMixture::new(a.clusters, a.dim, a.spread, a.seed)?;
    let base = mix.base(a.per_cluster)?;
    let queries = mix.queries(a.n_queries)?;
    base.save_binary(&a.base)
        .with_context(|| format!("writing {}", a.base.display()))?;
    queries
        .as_dataset()
        .save_binary(&a.queries)
        .with_context(|| format!("writing {}", a.queries.display()))?;
    let report = GenReport {
        manifest: Manifest::new("gen"),
        params: a,
        n_vectors: base.n_vectors(),
        base_sha256: sha256_file(&a.base)?,
        queries_sha256: sha256_file(&a.queries)?,
    };
    let path = a
        .manifest
        .clone()
        .unwrap_or_else(|| sibling(&a.base, ".manifest.json"));
    write_json(&path, &report)?;
    println!(
        "wrote {} ({} x {}), {} ({} queries), {}",
        a.base.display(),
        base.n_vectors(),
        base.dim(),
        a.queries.display(),
        queries.n_queries(),
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Trained {
    eps_star: f64,
    f_star: f64,
    eps_max: f64,
    train_queries: usize,
    train_ms: f64,
    config: TrainConfig,
    #[serde(skip)]
    trace: Vec<TraceRow>,
}

fn resolve_eps_max(data: &VectorDataset, opts: &TrainingOpts) -> Result<f64> {
    match opts.eps_max {
        Some(v) => Ok(v),
        None => Ok(estimate_eps_max(data, opts.eps_max_samples, opts.seed)?),
    }
}

fn train_eps(
    data: &VectorDataset,
    index: &ExactIndex<'_>,
    opts: &TrainingOpts,
    lambda: f64,
    s: usize,
    k: usize,
) -> Result<Trained> {
    let start = Instant::now();
    let eps_max = resolve_eps_max(data, opts)?;
    let cfg = TrainConfig::new(eps_max, lambda, s, k)?;
    let queries = QuerySet::head_of(data, opts.train_queries)?;
    let set = TrainingSet::new(&queries, index, data, s)?;
    let result = train_on(&set, &cfg)?;
    Ok(Trained {
        eps_star: result.eps_star,
        f_star: result.f_star,
        eps_max,
        train_queries: queries.n_queries(),
        train_ms: start.elapsed().as_secs_f64() * 1e3,
        config: cfg,
        trace: result.trace,
    })
}

fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut csv = String::from("round,eps,mean_f,skipped\n");
    for r in trace {
        csv += &format!("{},{},{},{}\n", r.round, r.eps, r.mean_f, r.skipped);
    }
    std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct TrainReport<'a> {
    manifest: Manifest,
    args: &'a TrainArgs,
    result: Trained,
    trace_rows: usize,
}

fn train(a: &TrainArgs) -> Result<()> {
    let mut manifest = Manifest::new("train");
    let data = manifest.load_vectors(&a.base)?;
    let index = build_index(&data)?;
    let result = train_eps(&data, &index, &a.training, a.lambda, a.s, a.k)?;
    println!(
        "eps*={} f*={} eps_max={} train_queries={} train_ms={:.1}",
        result.eps_star, result.f_star, result.eps_max, result.train_queries, result.train_ms
    );
    if let Some(path) = &a.trace {
        write_trace(path, &result.trace)?;
    }
    if let Some(path) = &a.out {
        let trace_rows = result.trace.len();
        write_json(
            path,
            &TrainReport {
                manifest,
                args: a,
                result,
                trace_rows,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BuildReport<'a> {
    manifest: Manifest,
    args: &'a BuildArgs,
    n_vectors: usize,
    eps: f64,
    avg_list_length: f64,
    memory_bits: u64,
    build_ms: f64,
    training: Option<Trained>,
    table_sha256: String,
}

fn build(a: &BuildArgs) -> Result<()> {
    let mut manifest = Manifest::new("build");
    let data = manifest.load_vectors(&a.base)?;
    let index = build_index(&data)?;
    let training = match (a.train, a.lambda, a.s, a.k) {
        (true, Some(lambda), Some(s), Some(k)) => {
            Some(train_eps(&data, &index, &a.training, lambda, s, k)?)
        }
        (true, ..) => bail!("--train needs --lambda, --s and --k"),
        _ => None,
    };
    let eps = match (&training, a.eps) {
        (Some(t), _) => t.eps_star,
        (None, Some(eps)) => eps,
        (None, None) => bail!("give --eps or --train"),
    };
    let start = Instant::now();
    let table = build_cutoff_table(&index, eps)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    table.serialize(&a.table)?;
    println!(
        "N={} eps={} L={:.4} memory_bits={} build_ms={:.3}{}",
        table.n_vectors(),
        eps,
        table.avg_list_length(),
        table.memory_bits(),
        build_ms,
        training
            .as_ref()
            .map(|t| format!(" train_ms={:.1}", t.train_ms))
            .unwrap_or_default()
    );
    if let Some(path) = &a.out {
        write_json(
            path,
            &BuildReport {
                manifest,
                args: a,
                n_vectors: table.n_vectors(),
                eps,
                avg_list_length: table.avg_list_length(),
                memory_bits: table.memory_bits(),
                build_ms,
                training,
                table_sha256: sha256_file(&a.table)?,
            },
        )?;
    }
    Ok(())
}

fn load_queries(manifest: &mut Manifest, path: &Path, dim: usize) -> Result<QuerySet> {
    let queries = QuerySet::new(manifest.load_vectors(path)?);
    queries.ensure_dim(dim)?;
    Ok(queries)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    manifest: Manifest,
    args: &'a EvalArgs,
    report: lotusfilter::bench::EvalReport,
}

fn eval(a: &EvalArgs) -> Result<()> {
    let mut manifest = Manifest::new("eval");
    let data = manifest.load_vectors(&a.base)?;
    let queries = load_queries(&mut manifest, &a.queries, data.dim())?;
    let index = build_index(&data)?;
    let table = match (&a.table, a.eps) {
        (Some(path), _) => Some(manifest.load_table(path)?),
        (None, Some(eps)) => Some(build_cutoff_table(&index, eps)?),
        (None, None) => None,
    };
    if let Some(t) = &table {
        if t.n_vectors() != data.n_vectors() {
            bail!(
                "table covers {} vectors but the base set has {}",
                t.n_vectors(),
                data.n_vectors()
            );
        }
    }
    if a.methods.contains(&Method::Lotus) && table.is_none() {
        bail!("the lotus method needs --table or --eps");
    }
    let cfg = EvalConfig {
        lambda: a.lambda,
        s_candidates: a.s,
        k_results: a.k,
        safeguard: a.safeguard,
        trials: a.trials,
        seed: a.seed,
        methods: a.methods.clone(),
    };
    let report = evaluate(&data, &index, table.as_ref(), &queries, &cfg)?;
    print!("{}", report.to_text());
    if let Some(path) = &a.out {
        write_json(
            path,
            &EvalOutput {
                manifest,
                args: a,
                report,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    manifest: Manifest,
    args: &'a BenchArgs,
    rows: Vec<ScalingRow>,
    /// `(S, median filter time at 2S / at S)`.
    doubling_ratios: Vec<(usize, f64)>,
    max_doubling_ratio: Option<f64>,
    /// Whether mean f never rises by more than one standard error as S grows.
    f_non_increasing: bool,
}

fn bench(a: &BenchArgs) -> Result<()> {
    let mut manifest = Manifest::new("bench");
    let data = manifest.load_vectors(&a.base)?;
    let queries = load_queries(&mut manifest, &a.queries, data.dim())?;
    let index = build_index(&data)?;
    let fixed: Option<CutoffTable> = match (&a.table, a.eps) {
        (Some(path), _) => Some(manifest.load_table(path)?),
        (None, Some(eps)) => Some(build_cutoff_table(&index, eps)?),
        (None, None) if a.train => None,
        (None, None) => bail!("give --table, --eps or --train"),
    };
    let mut s_list: Vec<usize> = a.s_list.iter().copied().filter(|&s| s >= a.k).collect();
    s_list.sort_unstable();
    s_list.dedup();
    if s_list.is_empty() {
        bail!("no S in --s-list is at least K={}", a.k);
    }

    let mut rows = Vec::with_capacity(s_list.len());
    println!(
        "{:>6} {:>6} {:>10} {:>8} {:>12} {:>12} {:>10} {:>10} {:>7}",
        "S", "K", "eps", "L", "filter ms", "search ms", "f", "f s.e.", "trunc"
    );
    for s in s_list {
        let trained;
        let table = match &fixed {
            Some(t) => t,
            None => {
                let eps = train_eps(&data, &index, &a.training, a.lambda, s, a.k)?.eps_star;
                trained = build_cutoff_table(&index, eps)?;
                &trained
            }
        };
        let row = scaling_point(
            &data, &index, table, &queries, s, a.k, a.lambda, a.safeguard, a.trials,
        )?;
        println!(
            "{:>6} {:>6} {:>10.5} {:>8.3} {:>12.6} {:>12.6} {:>10.5} {:>10.5} {:>7.3}",
            row.s_candidates,
            row.k_results,
            row.eps,
            row.avg_list_length,
            row.filter.median_ms,
            row.search.median_ms,
            row.mean_f,
            row.f_std_err,
            row.truncation_rate
        );
        rows.push(row);
    }
    let ratios = doubling_ratios(&rows);
    let max_ratio = ratios.iter().map(|r| r.1).reduce(f64::max);
    let f_non_increasing = rows.windows(2).all(|w| {
        let se = (w[0].f_std_err.powi(2) + w[1].f_std_err.powi(2)).sqrt();
        w[1].mean_f <= w[0].mean_f + se
    });
    for (s, r) in &ratios {
        println!("filter time S={s} -> {}: x{r:.2}", 2 * s);
    }
    println!("f non-increasing in S (within one s.e.): {f_non_increasing}");
    if let Some(path) = &a.out {
        write_json(
            path,
            &BenchOutput {
                manifest,
                args: a,
                rows,
                doubling_ratios: ratios,
                max_doubling_ratio: max_ratio,
                f_non_increasing,
            },
        )?;
    }
    Ok(())
}
