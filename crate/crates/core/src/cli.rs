//! Command-line surface: argument definitions and the four commands
//! (`analyze`, `overlap`, `search`, `bench-overlap`).
//!
//! Commands are ordinary library functions returning a [`RunReport`]; the
//! binary is a thin shell around [`run`]. Exit codes: 0 success, 2 parse
//! error, 3 invalid mapping, 4 chain mismatch, 5 resource cap exceeded.

use crate::arch::{parse_arch, ArchSpec};
use crate::bench::{run_scaling, DEFAULT_ARCH_DOC, DEFAULT_MIN_MS, DEFAULT_SIZES};
use crate::dataspace::generate_dataspaces;
use crate::error::{Error, Result};
use crate::mapping::{validate_mapping, MapSpaceConstraints, Mapping};
use crate::overlap::{oracle_ready_times_from_tables, overlapped_schedule, ready_times};
use crate::perf::evaluate;
use crate::report::{
    digest_file, BenchPoint, PairAnalysis, ReadySummary, RunReport, TransformSummary,
};
use crate::search::{search_network, MetricKind, NetworkPlan, Strategy};
use crate::transform::transform;
use crate::workload::{parse_network, NetworkModel};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Environment variable that overrides `--workers` when set.
pub const WORKERS_ENV: &str = "OVERLAPIM_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "overlapim",
    version,
    about = "Mapping search and cross-layer overlap analysis for in-DRAM DNN acceleration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate fixed mappings on workload layers (sequential metrics).
    Analyze(AnalyzeArgs),
    /// Analyze producer/consumer overlap for one adjacent layer pair.
    Overlap(OverlapArgs),
    /// Search per-layer mappings across the whole network.
    Search(SearchArgs),
    /// Time analytic vs. exhaustive ready-time analysis on a size grid.
    BenchOverlap(BenchArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Memory hierarchy description (JSON).
    #[arg(long)]
    pub arch: PathBuf,
    /// Network description (JSON).
    #[arg(long)]
    pub workload: PathBuf,
    /// Mapping encoding; repeatable, applied to consecutive layers
    /// starting at --layer.
    #[arg(long = "mapping", required = true)]
    pub mappings: Vec<String>,
    /// Index of the first layer the mappings apply to.
    #[arg(long, default_value_t = 0)]
    pub layer: usize,
    /// Default per-layer channel allocation when the workload omits it.
    #[arg(long, default_value_t = 1)]
    pub channels: u64,
    /// Write each layer's data-space table as CSV into this directory.
    #[arg(long)]
    pub dump_dataspaces: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = all cores); OVERLAPIM_WORKERS overrides.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    pub arch: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    /// Index of the producer layer; the consumer is the next layer.
    #[arg(long, default_value_t = 0)]
    pub pair: usize,
    /// Producer layer mapping encoding.
    #[arg(long)]
    pub producer_mapping: String,
    /// Consumer layer mapping encoding.
    #[arg(long)]
    pub consumer_mapping: String,
    /// Use the exhaustive pairwise-intersection analysis for the table.
    #[arg(long)]
    pub oracle: bool,
    /// Run both analyses and record an equality verdict plus both times.
    #[arg(long)]
    pub verify: bool,
    /// Write the ready-time table as CSV to this path.
    #[arg(long)]
    pub dump_ready: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub channels: u64,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub arch: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    /// forward | backward | middle:max_output | middle:max_overall
    #[arg(long, default_value = "forward")]
    pub strategy: String,
    /// original | overlap | transform
    #[arg(long, default_value = "transform")]
    pub metric: String,
    /// Candidate mappings sampled per layer.
    #[arg(long, default_value_t = 500)]
    pub budget: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub channels: u64,
    /// Write the per-layer metric table (normalized to the best
    /// sequential latency) as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Memory hierarchy description; a built-in default is used if omitted.
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Comma-separated channel counts (entries per side) to measure.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    pub sizes: Vec<u64>,
    /// Minimum measured duration per route, in milliseconds.
    #[arg(long, default_value_t = DEFAULT_MIN_MS)]
    pub min_ms: f64,
    /// Write the JSON report here (the CSV always goes to stdout).
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Effective worker count: the environment variable wins over the flag.
pub fn resolve_workers(flag: usize) -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::parse(format!("{WORKERS_ENV}='{v}' is not a worker count"))
        }),
        Err(_) => Ok(flag),
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::parse(format!("cannot build worker pool: {e}")))?;
    pool.install(f)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn load_inputs(arch: &Path, workload: &Path, channels: u64) -> Result<(ArchSpec, NetworkModel)> {
    let spec = parse_arch(&fs::read_to_string(arch)?)?;
    let net = parse_network(&fs::read_to_string(workload)?, channels)?;
    Ok((spec, net))
}

/// Evaluate fixed mappings on consecutive layers; sequential metrics only.
pub fn cmd_analyze(args: &AnalyzeArgs, workers: usize) -> Result<RunReport> {
    let total = Instant::now();
    let (spec, net) = load_inputs(&args.arch, &args.workload, args.channels)?;
    let mut report = RunReport::new("analyze", workers);
    report.inputs = vec![digest_file(&args.arch)?, digest_file(&args.workload)?];

    let t_eval = Instant::now();
    let mut layers = Vec::new();
    for (j, enc) in args.mappings.iter().enumerate() {
        let li = args.layer + j;
        if li >= net.len() {
            return Err(Error::parse(format!(
                "mapping #{j} targets layer {li}, but the workload has {} layers",
                net.len()
            )));
        }
        let layer = &net.layers[li];
        let m = Mapping::parse(enc, &spec)?;
        validate_mapping(&m, layer, &spec).into_result()?;
        let table = generate_dataspaces(&m, layer, &spec)?;
        if let Some(dir) = &args.dump_dataspaces {
            fs::create_dir_all(dir)?;
            let f = fs::File::create(dir.join(format!("dataspaces_layer{li}.csv")))?;
            table.write_csv(BufWriter::new(f))?;
        }
        layers.push(evaluate(&m, layer, &spec, &table, net.channels[li])?);
    }
    report.layers = Some(layers);
    report.timings_ms.insert("evaluate".into(), ms_since(t_eval));
    report.timings_ms.insert("total".into(), ms_since(total));
    Ok(report)
}

/// Overlap analysis of one adjacent pair: ready times (analytic and, on
/// request, exhaustive with a verdict), the overlapped schedule, and the
/// schedule transformation.
pub fn cmd_overlap(args: &OverlapArgs, workers: usize) -> Result<RunReport> {
    let total = Instant::now();
    let (spec, net) = load_inputs(&args.arch, &args.workload, args.channels)?;
    if args.pair + 1 >= net.len() {
        return Err(Error::parse(format!(
            "pair index {} needs layers {} and {}, but the workload has {} layers",
            args.pair,
            args.pair,
            args.pair + 1,
            net.len()
        )));
    }
    let (pl, cl) = (&net.layers[args.pair], &net.layers[args.pair + 1]);
    let pm = Mapping::parse(&args.producer_mapping, &spec)?;
    validate_mapping(&pm, pl, &spec).into_result()?;
    let cm = Mapping::parse(&args.consumer_mapping, &spec)?;
    validate_mapping(&cm, cl, &spec).into_result()?;

    let mut report = RunReport::new("overlap", workers);
    report.inputs = vec![digest_file(&args.arch)?, digest_file(&args.workload)?];

    let ptab = generate_dataspaces(&pm, pl, &spec)?;
    let ctab = generate_dataspaces(&cm, cl, &spec)?;
    let pr = evaluate(&pm, pl, &spec, &ptab, net.channels[args.pair])?;
    let cr = evaluate(&cm, cl, &spec, &ctab, net.channels[args.pair + 1])?;

    let t_analytic = Instant::now();
    let analytic = ready_times(pl, &pm, cl, &cm, &spec)?;
    report
        .timings_ms
        .insert("ready_analytic".into(), ms_since(t_analytic));

    let mut verify = None;
    let mut table = analytic;
    if args.oracle || args.verify {
        let t_oracle = Instant::now();
        let oracle = oracle_ready_times_from_tables(&ptab, &ctab, pl, cl)?;
        report
            .timings_ms
            .insert("ready_oracle".into(), ms_since(t_oracle));
        if args.verify {
            verify = Some(if oracle.ready == table.ready {
                "EQUAL".to_string()
            } else {
                let diff = oracle
                    .ready
                    .iter()
                    .zip(table.ready.iter())
                    .filter(|(a, b)| a != b)
                    .count();
                format!("MISMATCH at {diff} of {} entries", oracle.ready.len())
            });
        }
        if args.oracle {
            table = oracle;
        }
    }

    if let Some(path) = &args.dump_ready {
        let f = fs::File::create(path)?;
        table.write_csv(BufWriter::new(f))?;
    }

    let sched = overlapped_schedule(&pr, &cr, &table);
    let ts = transform(&ctab, &table, &spec, &pr, &cr);
    report.pair = Some(PairAnalysis {
        producer_mapping: pm.encode(&spec),
        consumer_mapping: cm.encode(&spec),
        producer_report: pr,
        consumer_report: cr,
        ready: ReadySummary::from_table(&table),
        schedule: sched,
        transform: TransformSummary::from_schedule(&ts, table.steps),
        verify,
    });
    report.timings_ms.insert("total".into(), ms_since(total));
    Ok(report)
}

/// Per-layer metric table, normalized to each layer's best sequential
/// latency (columns fixed; `1.0` in the original column by construction).
pub fn plan_layer_csv(plan: &NetworkPlan) -> String {
    let mut out = String::from(
        "layer_index,layer,mapping,original_ns,original_overlap_ns,overlap_ns,\
         transform_ns,overlap_vs_original,transform_vs_original\n",
    );
    for r in &plan.records {
        let base = r.original_ns;
        out.push_str(&format!(
            "{},{},\"{}\",{},{},{},{},{},{}\n",
            r.layer_index,
            r.layer,
            r.mapping,
            r.original_ns,
            r.original_overlap_ns,
            r.overlap_ns,
            r.transform_ns,
            r.overlap_ns / base,
            r.transform_ns / base
        ));
    }
    out
}

/// Whole-network mapping search under one strategy and metric.
pub fn cmd_search(args: &SearchArgs, workers: usize) -> Result<RunReport> {
    let total = Instant::now();
    let (spec, net) = load_inputs(&args.arch, &args.workload, args.channels)?;
    let strategy = Strategy::from_str(&args.strategy)?;
    let metric = MetricKind::from_str(&args.metric)?;
    let cons = MapSpaceConstraints::new(args.budget, args.seed);

    let mut report = RunReport::new("search", workers);
    report.inputs = vec![digest_file(&args.arch)?, digest_file(&args.workload)?];

    let t_search = Instant::now();
    let plan = search_network(&net, &spec, &cons, strategy, metric)?;
    report.timings_ms.insert("search".into(), ms_since(t_search));

    if let Some(path) = &args.csv {
        fs::write(path, plan_layer_csv(&plan))?;
    }
    report.plan = Some(plan);
    report.timings_ms.insert("total".into(), ms_since(total));
    Ok(report)
}

/// CSV rows of the scaling study, one per measured grid point.
pub fn bench_csv(points: &[BenchPoint]) -> String {
    let mut out = String::from("producer_spaces,consumer_spaces,analytic_ms,oracle_ms,speedup\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.entries_per_side, p.entries_per_side, p.analytic_ms, p.oracle_ms, p.speedup
        ));
    }
    out
}

/// One-line trend verdict over the measured grid.
pub fn bench_trend(points: &[BenchPoint]) -> String {
    if points.len() < 2 {
        return "speedup trend: single point, no trend".to_string();
    }
    let increasing = points.windows(2).all(|w| w[1].speedup > w[0].speedup);
    let nondecreasing = points.windows(2).all(|w| w[1].speedup >= w[0].speedup);
    let last = points.last().unwrap();
    format!(
        "speedup trend: {} across {} points; {:.1}x at the largest ({} x {})",
        if increasing {
            "strictly increasing"
        } else if nondecreasing {
            "nondecreasing"
        } else {
            "NOT monotone"
        },
        points.len(),
        last.speedup,
        last.entries_per_side,
        last.entries_per_side
    )
}

/// Measure the analytic and exhaustive ready-time routes across the grid.
pub fn cmd_bench_overlap(args: &BenchArgs, workers: usize) -> Result<(RunReport, Vec<u64>)> {
    let total = Instant::now();
    let spec = match &args.arch {
        Some(p) => parse_arch(&fs::read_to_string(p)?)?,
        None => parse_arch(DEFAULT_ARCH_DOC)?,
    };
    let mut report = RunReport::new("bench-overlap", workers);
    if let Some(p) = &args.arch {
        report.inputs = vec![digest_file(p)?];
    }
    let (points, skipped) = run_scaling(&args.sizes, &spec, args.min_ms)?;
    report.bench = Some(points);
    report.timings_ms.insert("total".into(), ms_since(total));
    Ok((report, skipped))
}

fn emit(report: &RunReport, output: Option<&Path>) -> Result<()> {
    let text = report.to_json_pretty()?;
    match output {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Dispatch a parsed command line; the binary maps errors to exit codes.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => {
            let workers = resolve_workers(a.workers)?;
            let report = with_pool(workers, || cmd_analyze(&a, workers))?;
            emit(&report, a.output.as_deref())
        }
        Command::Overlap(a) => {
            let workers = resolve_workers(a.workers)?;
            let report = with_pool(workers, || cmd_overlap(&a, workers))?;
            emit(&report, a.output.as_deref())
        }
        Command::Search(a) => {
            let workers = resolve_workers(a.workers)?;
            let report = with_pool(workers, || cmd_search(&a, workers))?;
            emit(&report, a.output.as_deref())
        }
        Command::BenchOverlap(a) => {
            let workers = resolve_workers(a.workers)?;
            let (report, skipped) = with_pool(workers, || cmd_bench_overlap(&a, workers))?;
            for n in &skipped {
                eprintln!("notice: size {n} skipped (pairwise oracle work exceeds the cap)");
            }
            let points = report.bench.as_deref().unwrap_or(&[]);
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bench_csv(points).as_bytes())?;
            eprintln!("{}", bench_trend(points));
            if let Some(path) = &a.output {
                fs::write(path, report.to_json_pretty()? + "\n")?;
            }
            Ok(())
        }
    }
}
