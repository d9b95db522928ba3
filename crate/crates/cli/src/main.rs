//! Command-line front end: run the pipeline, benchmark modes, score
//! predictions, inspect sources and traces, and generate fixtures.
//!
//! Exit codes: 0 success; 2 configuration or usage error; 3 run completed
//! with at least one window skipped; 4 total failure (unreadable source or
//! trace, aborted run).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stap_core::config::{
    ExecutionModel, PipelineMode, RawBackends, RawConfig, RawFusion, RawPreprocess, RawSampling,
    RawSpatial, SourceSpec, SpatialBackendSpec, TemporalBackendSpec,
};
use stap_core::eval::EvalInput;
use stap_core::ingest::{FrameSource, PackedVideoReader, SamplingPolicy, TailPolicy};
use stap_core::pipeline::{open_source, Pipeline, RunReport};
use stap_core::preprocess::PreprocessVariant;
use stap_core::spatial::{FrameSelection, TraceSpatialBackend};
use stap_core::temporal::TraceTemporalBackend;
use stap_core::{ClassProfile, ConfigError, GroundTruthSet, PipelineError};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "stap",
    version,
    about = "Spatio-temporal video anomaly detection pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a video source and write a report
    Run(RunArgs),
    /// Measure per-window latency with synthetic backends
    Bench(BenchArgs),
    /// Score a report's predictions against ground truth
    Eval(EvalArgs),
    /// Describe a packed video, frame directory, or trace file
    Inspect(InspectArgs),
    /// Write the deterministic fixture set (videos, traces, truth)
    GenFixtures(GenFixturesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// parallel | serial | temporal-only | spatial-only
    #[arg(long)]
    mode: Option<PipelineMode>,
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Packed video path, frame directory, or synthetic:... spec
    #[arg(long)]
    source: String,
    /// Report output directory
    #[arg(long, default_value = "stap-out")]
    out: PathBuf,
    /// identity | mask-keep | mask-black | skeleton-bg | skeleton-black
    #[arg(long)]
    preprocess: Option<PreprocessVariant>,
    #[arg(long)]
    frame_interval: Option<u32>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    window_stride: Option<usize>,
    /// drop | pad-last
    #[arg(long)]
    tail_policy: Option<TailPolicy>,
    /// Frames analyzed per window by the spatial stage
    #[arg(long)]
    spatial_frames: Option<usize>,
    /// evenly-spaced | first | all
    #[arg(long)]
    frame_selection: Option<FrameSelection>,
    /// trace:FILE or synthetic:latency=MS,rule=...
    #[arg(long)]
    spatial_backend: Option<String>,
    /// trace:FILE or synthetic:latency=MS,rule=...
    #[arg(long)]
    temporal_backend: Option<String>,
    #[arg(long)]
    confidence_threshold: Option<f64>,
    #[arg(long)]
    anomaly_threshold: Option<f64>,
    #[arg(long)]
    max_inflight: Option<usize>,
    /// threaded | single-thread
    #[arg(long)]
    execution: Option<ExecutionModel>,
    /// Dump enriched windows (serial mode) as packed videos here
    #[arg(long)]
    debug_dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated modes to benchmark
    #[arg(long, default_value = "parallel,serial")]
    modes: String,
    /// Synthetic spatial backend latency per frame, ms
    #[arg(long, default_value_t = 50.0)]
    spatial_latency: f64,
    /// Synthetic temporal backend latency per window, ms
    #[arg(long, default_value_t = 100.0)]
    temporal_latency: f64,
    #[arg(long)]
    source: String,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Optional TOML config for sampling/spatial settings
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    frame_interval: Option<u32>,
    #[arg(long)]
    spatial_frames: Option<usize>,
    /// Backend overrides; must remain synthetic for wall-clock to mean anything
    #[arg(long)]
    spatial_backend: Option<String>,
    #[arg(long)]
    temporal_backend: Option<String>,
    /// Write per-mode reports here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run report JSON (or any {"predictions": [...]} document)
    #[arg(long)]
    predictions: PathBuf,
    /// Ground truth CSV: video_id,window_index,label
    #[arg(long)]
    truth: PathBuf,
    /// 3 | 4
    #[arg(long, default_value_t = 4)]
    profile: u8,
    /// Write report.txt / report.csv / report.json here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// Packed video, frame directory, or JSONL trace
    path: PathBuf,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    frame_interval: Option<u32>,
    #[arg(long)]
    window_stride: Option<usize>,
}

#[derive(Args)]
struct GenFixturesArgs {
    #[arg(long, default_value = "fixtures")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("STAP_LOG")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::GenFixtures(args) => cmd_gen_fixtures(args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn config_err(message: impl ToString) -> CliError {
    CliError {
        code: EXIT_CONFIG,
        message: message.to_string(),
    }
}

fn failure(message: impl ToString) -> CliError {
    CliError {
        code: EXIT_FAILURE,
        message: message.to_string(),
    }
}

fn pipeline_err(e: PipelineError) -> CliError {
    match e {
        PipelineError::Config(inner) => config_err(inner),
        other => failure(other),
    }
}

fn load_file_config(path: Option<&PathBuf>) -> Result<RawConfig, CliError> {
    match path {
        None => Ok(RawConfig::default()),
        Some(p) => RawConfig::load(p).map_err(config_err),
    }
}

fn parse_backend_flags(
    spatial: Option<&str>,
    temporal: Option<&str>,
) -> Result<RawBackends, CliError> {
    let spatial = spatial
        .map(|s| s.parse::<SpatialBackendSpec>())
        .transpose()
        .map_err(config_err)?;
    let temporal = temporal
        .map(|s| s.parse::<TemporalBackendSpec>())
        .transpose()
        .map_err(config_err)?;
    Ok(RawBackends { spatial, temporal })
}

fn run_flags_to_raw(args: &RunArgs) -> Result<RawConfig, CliError> {
    Ok(RawConfig {
        mode: args.mode,
        max_inflight_windows: args.max_inflight,
        anomaly_threshold: args.anomaly_threshold,
        execution: args.execution,
        debug_dump_dir: args.debug_dump.clone(),
        sampling: RawSampling {
            frame_interval: args.frame_interval,
            window_size: args.window_size,
            window_stride: args.window_stride,
            tail_policy: args.tail_policy,
        },
        spatial: RawSpatial {
            confidence_threshold: args.confidence_threshold,
            frames_per_window: args.spatial_frames,
            frame_selection: args.frame_selection,
        },
        preprocess: RawPreprocess {
            variant: args.preprocess,
            ..RawPreprocess::default()
        },
        fusion: RawFusion::default(),
        backends: parse_backend_flags(
            args.spatial_backend.as_deref(),
            args.temporal_backend.as_deref(),
        )?,
    })
}

fn open_source_spec(spec: &str) -> Result<Box<dyn FrameSource>, CliError> {
    let parsed: SourceSpec = spec.parse().map_err(config_err)?;
    open_source(&parsed).map_err(failure)
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let raw = load_file_config(args.config.as_ref())?.merged_with(&run_flags_to_raw(&args)?);
    let cfg = raw.resolve::<f64>().map_err(config_err)?;
    let pipeline = Pipeline::from_config(cfg).map_err(pipeline_err)?;
    let source = open_source_spec(&args.source)?;
    let report = pipeline.run(source).map_err(pipeline_err)?;
    report
        .write_files(&args.out)
        .map_err(|e| failure(format!("writing report to {}: {e}", args.out.display())))?;
    println!("{}", report.summary());
    println!("report: {}", args.out.join("report.json").display());
    if report.gaps.is_empty() {
        Ok(0)
    } else {
        eprintln!("{} window(s) skipped on backend errors", report.gaps.len());
        Ok(EXIT_PARTIAL)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<u8, CliError> {
    let modes: Vec<PipelineMode> = args
        .modes
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<PipelineMode>())
        .collect::<Result<_, ConfigError>>()
        .map_err(config_err)?;
    if modes.is_empty() {
        return Err(config_err("no modes given"));
    }

    if args.spatial_latency < 0.0 || args.temporal_latency < 0.0 {
        return Err(config_err("latencies must be >= 0"));
    }
    let mut base = load_file_config(args.config.as_ref())?;
    base.sampling.window_size = args.window_size.or(base.sampling.window_size);
    base.sampling.frame_interval = args.frame_interval.or(base.sampling.frame_interval);
    base.spatial.frames_per_window = args.spatial_frames.or(base.spatial.frames_per_window);
    let overrides = parse_backend_flags(
        args.spatial_backend.as_deref(),
        args.temporal_backend.as_deref(),
    )?;
    if overrides.spatial.is_some() {
        base.backends.spatial = overrides.spatial;
    }
    if overrides.temporal.is_some() {
        base.backends.temporal = overrides.temporal;
    }
    // Latency flags take effect unless an explicit synthetic spec was given.
    if base.backends.spatial.is_none() {
        base.backends.spatial = Some(SpatialBackendSpec::Synthetic {
            latency_ms: args.spatial_latency,
            rule: stap_core::spatial::SpatialRule::None,
        });
    }
    if base.backends.temporal.is_none() {
        base.backends.temporal = Some(TemporalBackendSpec::Synthetic {
            latency_ms: args.temporal_latency,
            rule: stap_core::temporal::TemporalRule::Normal,
            profile: ClassProfile::FourClass,
        });
    }
    // Wall-clock over a replayed trace would be meaningless.
    if matches!(base.backends.spatial, Some(SpatialBackendSpec::Trace(_)))
        || matches!(base.backends.temporal, Some(TemporalBackendSpec::Trace(_)))
    {
        return Err(config_err("bench requires synthetic backends, not traces"));
    }

    println!(
        "{:<14} {:>16} {:>20} {:>20} {:>18}",
        "Mode", "Video duration", "Average detections", "Median detections", "Processing time"
    );
    let mut mode_means: Vec<(PipelineMode, f64, Option<f64>)> = Vec::new();
    for mode in &modes {
        let mut raw = base.clone();
        raw.mode = Some(*mode);
        let cfg = raw.resolve::<f64>().map_err(config_err)?;
        let pipeline = Pipeline::from_config(cfg).map_err(pipeline_err)?;
        let modeled = pipeline.modeled_window_latency_ms();
        let mut latencies: Vec<f64> = Vec::new();
        let mut totals: Vec<f64> = Vec::new();
        let mut duration = None;
        let mut last_report: Option<RunReport<f64>> = None;
        for _ in 0..args.repeat.max(1) {
            let source = open_source_spec(&args.source)?;
            let report = pipeline.run(source).map_err(pipeline_err)?;
            latencies.extend(report.predictions.iter().map(|p| p.latency.total_ms));
            totals.push(report.stats.total_processing_ms);
            duration = report.stats.source_duration_ms;
            last_report = Some(report);
        }
        let stats = stap_core::pipeline::RunStats::from_latencies(
            &latencies,
            totals.iter().sum::<f64>() / totals.len() as f64,
            duration,
        );
        println!(
            "{:<14} {:>16} {:>19.1}ms {:>19.1}ms {:>17.2}s",
            mode.to_string(),
            duration
                .map(|d| format!("{:.1}s", d / 1000.0))
                .unwrap_or_else(|| "-".to_string()),
            stats.mean_latency_ms,
            stats.median_latency_ms,
            stats.total_processing_ms / 1000.0,
        );
        if let Some(m) = modeled {
            println!("{:<14} modeled per-window latency: {m:.1}ms", "");
        }
        mode_means.push((*mode, stats.mean_latency_ms, modeled));
        if let (Some(dir), Some(report)) = (args.out.as_ref(), last_report) {
            let mode_dir = dir.join(mode.to_string());
            report
                .write_files(&mode_dir)
                .map_err(|e| failure(format!("writing {}: {e}", mode_dir.display())))?;
        }
    }
    if let (Some(p), Some(s)) = (
        mode_means
            .iter()
            .find(|(m, _, _)| *m == PipelineMode::Parallel),
        mode_means
            .iter()
            .find(|(m, _, _)| *m == PipelineMode::Serial),
    ) {
        if s.1 > 0.0 {
            print!("parallel/serial mean latency ratio: {:.3}", p.1 / s.1);
            if let (Some(mp), Some(ms)) = (p.2, s.2) {
                if ms > 0.0 {
                    print!(" (modeled {:.3})", mp / ms);
                }
            }
            println!();
        }
    }
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8, CliError> {
    let profile = ClassProfile::try_from(args.profile).map_err(config_err)?;
    let input = EvalInput::load(&args.predictions).map_err(config_err)?;
    let truth = GroundTruthSet::from_csv(&args.truth).map_err(config_err)?;
    let records: Vec<(u64, stap_core::AnomalyClass)> = input
        .predictions
        .iter()
        .map(|p| (p.window_index, p.label))
        .collect();
    let report = stap_core::eval::score_records::<f64>(
        &records,
        &truth,
        input.source_id.as_deref(),
        profile,
    )
    .map_err(config_err)?
    .with_excluded(input.gaps.len() as u64);

    print!("{}", report.render_text());
    if report.excluded_windows > 0 {
        println!("({} skipped window(s) excluded)", report.excluded_windows);
    }
    if let Some(dir) = args.out.as_ref() {
        std::fs::create_dir_all(dir)
            .map_err(|e| failure(format!("creating {}: {e}", dir.display())))?;
        std::fs::write(dir.join("report.txt"), report.render_text())
            .and_then(|_| std::fs::write(dir.join("report.csv"), report.render_csv()))
            .and_then(|_| std::fs::write(dir.join("report.json"), report.to_json()))
            .map_err(|e| failure(format!("writing {}: {e}", dir.display())))?;
        println!("report: {}", dir.join("report.txt").display());
    }
    Ok(0)
}

fn effective_policy(args: &InspectArgs) -> SamplingPolicy {
    let mut policy = SamplingPolicy::default();
    if let Some(n) = args.frame_interval {
        policy.frame_interval = n;
    }
    if let Some(n) = args.window_size {
        policy.window_size = n;
        policy.window_stride = n;
    }
    if let Some(n) = args.window_stride {
        policy.window_stride = n;
    }
    policy
}

fn cmd_inspect(args: InspectArgs) -> Result<u8, CliError> {
    let path = &args.path;
    if !path.exists() {
        return Err(config_err(format!("{} does not exist", path.display())));
    }
    let policy = effective_policy(&args);
    let windows_for = |frames: u64| {
        let sampled = frames.div_ceil(policy.frame_interval as u64);
        if sampled >= policy.window_size as u64 {
            (sampled - policy.window_size as u64) / policy.window_stride as u64 + 1
        } else {
            0
        }
    };

    if path.is_dir() {
        let source = stap_core::ingest::DirectorySource::open(path).map_err(config_err)?;
        let meta = source.metadata();
        println!("frame directory: {}", path.display());
        print_source_meta(&meta, windows_for(meta.frame_count.unwrap_or(0)), &policy);
        return Ok(0);
    }

    // Packed video?
    if let Ok(reader) = PackedVideoReader::open(path) {
        let meta = reader.metadata();
        println!("packed raw video: {}", path.display());
        print_source_meta(&meta, windows_for(meta.frame_count.unwrap_or(0)), &policy);
        return Ok(0);
    }

    // Spatial trace?
    if let Ok(trace) = TraceSpatialBackend::<f64>::load(path) {
        println!("spatial detection trace: {}", path.display());
        println!("  frames with entries: {}", trace.len());
        println!("  carries pose keypoints: {}", trace.has_pose_entries());
        for (class, count) in trace.class_histogram() {
            println!("  {}: {count}", class.wire_name());
        }
        return Ok(0);
    }

    // Temporal trace?
    if let Ok(trace) = TraceTemporalBackend::<f64>::load(path) {
        println!("temporal score trace: {}", path.display());
        println!("  windows with entries: {}", trace.len());
        let profile = match trace.profile() {
            ClassProfile::ThreeClass => "3-class",
            ClassProfile::FourClass => "4-class",
        };
        println!("  class profile: {profile}");
        return Ok(0);
    }

    Err(config_err(format!(
        "{} is not a packed video, frame directory, or trace file",
        path.display()
    )))
}

fn print_source_meta(
    meta: &stap_core::ingest::SourceMetadata,
    windows: u64,
    policy: &SamplingPolicy,
) {
    println!("  dimensions: {}x{}", meta.width, meta.height);
    if let Some(fps) = meta.fps {
        println!("  fps: {fps:.3}");
    }
    if let Some(count) = meta.frame_count {
        println!("  frames: {count}");
    }
    if let Some(d) = meta.duration_ms() {
        println!("  duration: {:.2}s", d / 1000.0);
    }
    println!(
        "  windows at interval={} size={} stride={}: {windows}",
        policy.frame_interval, policy.window_size, policy.window_stride
    );
}

fn cmd_gen_fixtures(args: GenFixturesArgs) -> Result<u8, CliError> {
    let set = stap_core::fixtures::generate(&args.out, args.seed).map_err(|e| match e {
        PipelineError::ReportIo(io) => config_err(format!(
            "cannot write fixtures to {}: {io}",
            args.out.display()
        )),
        PipelineError::Ingest(stap_core::IngestError::Io { context, source }) => {
            config_err(format!("cannot write fixtures ({context}): {source}"))
        }
        other => failure(other),
    })?;
    println!("fixtures written to {}", set.root.display());
    println!("manifest: {}", set.manifest.display());
    Ok(0)
}
