//! The orchestrator: assembles ingest, spatial, preprocess, temporal and
//! fusion into the parallel or serial pipeline, with timing instrumentation,
//! bounded in-flight windows and order-preserving emission.
//!
//! Execution model: the ingest thread samples, resizes and windows the
//! source, acquiring an in-flight slot before assembling each window (so a
//! slow backend stalls ingestion). Each admitted window runs as its own job;
//! in parallel mode the job runs the two analysis branches concurrently and
//! joins them with the fusion rule. The main thread emits predictions in
//! window order. Single-thread execution runs the same jobs inline and
//! produces identical outputs.

pub mod engine;
pub mod report;

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::config::{
    PipelineConfig, PipelineMode, SourceSpec, SpatialBackendSpec, TemporalBackendSpec,
    ExecutionModel,
};
use crate::error::{IngestError, PipelineError};
use crate::fusion::fuse;
use crate::ingest::{
    make_windows, resize_to_model, resize_window_to_model, sample, DirectorySource, FrameSource,
    PackedVideoReader, SourceFrames, SourceMetadata, SyntheticSource,
};
use crate::model::{
    AnomalyClass, AnomalyPrediction, PredictionSource, ScoreMap, SequenceWindow, SpatialResult,
    StageLatency, TemporalResult,
};
use crate::preprocess::{dump_window_packed, enrich_window, EnrichDiagnostics};
use crate::scalar::Scalar;
use crate::spatial::{
    analyze_window, selected_positions, SpatialBackend, SyntheticSpatialBackend,
    TraceSpatialBackend,
};
use crate::temporal::{
    classify_window, SyntheticTemporalBackend, TemporalBackend, TemporalVerdict,
    TraceTemporalBackend,
};

pub use engine::InflightGate;
pub use report::{ComparisonReport, GapRecord, ModeledLatency, RunReport, RunStats};

/// Open a frame source from its spec (packed file, frame directory, or
/// synthetic generator).
pub fn open_source(spec: &SourceSpec) -> Result<Box<dyn FrameSource>, PipelineError> {
    match spec {
        SourceSpec::Path(path) => {
            if path.is_dir() {
                Ok(Box::new(DirectorySource::open(path)?))
            } else {
                Ok(Box::new(PackedVideoReader::open(path)?))
            }
        }
        SourceSpec::Synthetic {
            pattern,
            frames,
            width,
            height,
            fps,
        } => Ok(Box::new(SyntheticSource::new(
            *width,
            *height,
            *fps,
            Some(*frames),
            *pattern,
        ))),
    }
}

/// Instantiate a spatial backend from its spec.
pub fn build_spatial_backend<S: Scalar>(
    spec: &SpatialBackendSpec,
) -> Result<Arc<dyn SpatialBackend<S>>, PipelineError> {
    match spec {
        SpatialBackendSpec::Trace(path) => Ok(Arc::new(TraceSpatialBackend::load(path)?)),
        SpatialBackendSpec::Synthetic { latency_ms, rule } => {
            Ok(Arc::new(SyntheticSpatialBackend::new(*latency_ms, *rule)))
        }
    }
}

/// Instantiate a temporal backend from its spec.
pub fn build_temporal_backend<S: Scalar>(
    spec: &TemporalBackendSpec,
) -> Result<Arc<dyn TemporalBackend<S>>, PipelineError> {
    match spec {
        TemporalBackendSpec::Trace(path) => Ok(Arc::new(TraceTemporalBackend::load(path)?)),
        TemporalBackendSpec::Synthetic {
            latency_ms,
            rule,
            profile,
        } => Ok(Arc::new(SyntheticTemporalBackend::new(
            *latency_ms,
            *rule,
            *profile,
        ))),
    }
}

type JobOutput<S> = (AnomalyPrediction<S>, EnrichDiagnostics);
type JobResult<S> = Result<JobOutput<S>, GapRecord>;
type JobFn<S> = Arc<dyn Fn(Arc<SequenceWindow>) -> JobResult<S> + Send + Sync>;

enum Ticket<S: Scalar> {
    Window {
        window_index: u64,
        ready: Instant,
        handle: thread::JoinHandle<JobResult<S>>,
    },
    StreamError(IngestError),
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

fn gap(window_index: u64, stage: &str, message: impl ToString) -> GapRecord {
    GapRecord {
        window_index,
        stage: stage.to_string(),
        message: message.to_string(),
    }
}

/// A configured, ready-to-run pipeline.
pub struct Pipeline<S: Scalar> {
    cfg: PipelineConfig<S>,
    spatial: Option<Arc<dyn SpatialBackend<S>>>,
    temporal: Option<Arc<dyn TemporalBackend<S>>>,
}

impl<S: Scalar> Pipeline<S> {
    /// Build backends from the config's specs.
    pub fn from_config(cfg: PipelineConfig<S>) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let spatial = match (&cfg.spatial_backend, cfg.uses_spatial()) {
            (Some(spec), true) => Some(build_spatial_backend(spec)?),
            _ => None,
        };
        let temporal = match (&cfg.temporal_backend, cfg.uses_temporal()) {
            (Some(spec), true) => Some(build_temporal_backend(spec)?),
            _ => None,
        };
        Ok(Self {
            cfg,
            spatial,
            temporal,
        })
    }

    /// Use caller-provided backends (tests, embedding). The config's backend
    /// specs are only used for the effective-config echo.
    pub fn with_backends(
        cfg: PipelineConfig<S>,
        spatial: Option<Arc<dyn SpatialBackend<S>>>,
        temporal: Option<Arc<dyn TemporalBackend<S>>>,
    ) -> Result<Self, PipelineError> {
        if cfg.uses_spatial() && spatial.is_none() {
            return Err(crate::error::ConfigError::Invalid(format!(
                "mode {} requires a spatial backend",
                cfg.mode
            ))
            .into());
        }
        if cfg.uses_temporal() && temporal.is_none() {
            return Err(crate::error::ConfigError::Invalid(format!(
                "mode {} requires a temporal backend",
                cfg.mode
            ))
            .into());
        }
        Ok(Self {
            cfg,
            spatial,
            temporal,
        })
    }

    pub fn config(&self) -> &PipelineConfig<S> {
        &self.cfg
    }

    /// Per-window latency predicted by the backends' declared costs:
    /// max(k*Ls, Lt) in parallel, n*Ls + Lt in series. None when a backend
    /// does not declare a latency (trace or real backends).
    pub fn modeled_window_latency_ms(&self) -> Option<f64> {
        let spatial_calls = selected_positions(
            self.cfg.sampling.window_size,
            self.cfg.spatial.frame_selection,
            self.cfg.spatial.frames_per_window,
        )
        .len() as f64;
        let ls = self
            .spatial
            .as_ref()
            .map(|b| b.declared_latency_ms())
            .unwrap_or(Some(0.0));
        let lt = self
            .temporal
            .as_ref()
            .map(|b| b.declared_latency_ms())
            .unwrap_or(Some(0.0));
        let (ls, lt) = (ls?, lt?);
        Some(match self.cfg.mode {
            PipelineMode::Parallel => (spatial_calls * ls).max(lt),
            PipelineMode::Serial => spatial_calls * ls + lt,
            PipelineMode::TemporalOnly => lt,
            PipelineMode::SpatialOnly => spatial_calls * ls,
        })
    }

    /// Run over a finished source, producing the full report.
    pub fn run(&self, source: Box<dyn FrameSource>) -> Result<RunReport<S>, PipelineError> {
        let meta = source.metadata();
        let source_id = source.source_id();
        let fps_milli = meta
            .fps
            .map(|f| (f * 1000.0).round().max(1.0) as u32)
            .unwrap_or(30_000);
        let run_start = Instant::now();
        let branch_concurrency = self.cfg.execution == ExecutionModel::Threaded;
        let job = self.make_job(branch_concurrency, fps_milli);
        let gate = Arc::new(InflightGate::new(self.cfg.max_inflight_windows));
        match self.cfg.execution {
            ExecutionModel::Threaded => {
                self.run_threaded(source, meta, source_id, job, gate, run_start)
            }
            ExecutionModel::SingleThread => {
                self.run_single(source, meta, source_id, job, gate, run_start)
            }
        }
    }

    fn window_stream(
        &self,
        source: Box<dyn FrameSource>,
    ) -> impl Iterator<Item = Result<SequenceWindow, IngestError>> {
        let policy = self.cfg.sampling;
        let resize_first = self.cfg.mode != PipelineMode::Serial;
        let frames = SourceFrames::new(source);
        let sampled = sample(frames, &policy);
        let prepared = sampled.map(move |item| {
            item.and_then(|f| {
                if resize_first {
                    resize_to_model(&f)
                } else {
                    Ok(f)
                }
            })
        });
        make_windows(prepared, &policy)
    }

    fn run_threaded(
        &self,
        source: Box<dyn FrameSource>,
        meta: SourceMetadata,
        source_id: String,
        job: JobFn<S>,
        gate: Arc<InflightGate>,
        run_start: Instant,
    ) -> Result<RunReport<S>, PipelineError> {
        let (tx, rx) = mpsc::channel::<Ticket<S>>();
        let ingest_gate = gate.clone();
        let policy = self.cfg.sampling;
        let resize_first = self.cfg.mode != PipelineMode::Serial;
        let ingest = thread::spawn(move || {
            let frames = SourceFrames::new(source);
            let sampled = sample(frames, &policy);
            let prepared = sampled.map(move |item| {
                item.and_then(|f| if resize_first { resize_to_model(&f) } else { Ok(f) })
            });
            let mut windows = make_windows(prepared, &policy);
            loop {
                // Hold an in-flight slot while assembling, so a slow backend
                // stalls ingestion itself, not just dispatch.
                if !ingest_gate.acquire() {
                    break;
                }
                match windows.next() {
                    Some(Ok(window)) => {
                        let ready = Instant::now();
                        let window_index = window.window_index();
                        let window = Arc::new(window);
                        let job = job.clone();
                        let handle = thread::spawn(move || job(window));
                        let ticket = Ticket::Window {
                            window_index,
                            ready,
                            handle,
                        };
                        if tx.send(ticket).is_err() {
                            ingest_gate.release();
                            break;
                        }
                    }
                    Some(Err(e)) => {
                        ingest_gate.release();
                        let _ = tx.send(Ticket::StreamError(e));
                        break;
                    }
                    None => {
                        ingest_gate.release();
                        break;
                    }
                }
            }
        });

        let mut collector = Collector::new(run_start);
        let mut stream_error = None;
        for ticket in rx {
            match ticket {
                Ticket::Window {
                    window_index,
                    ready,
                    handle,
                } => {
                    let outcome = handle
                        .join()
                        .unwrap_or_else(|_| Err(gap(window_index, "job", "worker panicked")));
                    collector.emit(ready, outcome);
                    gate.release();
                }
                Ticket::StreamError(e) => {
                    gate.poison();
                    stream_error = Some(e);
                    break;
                }
            }
        }
        let _ = ingest.join();
        if let Some(e) = stream_error {
            return Err(e.into());
        }
        Ok(collector.finish(self, meta, source_id, gate.peak()))
    }

    fn run_single(
        &self,
        source: Box<dyn FrameSource>,
        meta: SourceMetadata,
        source_id: String,
        job: JobFn<S>,
        gate: Arc<InflightGate>,
        run_start: Instant,
    ) -> Result<RunReport<S>, PipelineError> {
        let mut collector = Collector::new(run_start);
        for item in self.window_stream(source) {
            let window = item?;
            gate.acquire();
            let ready = Instant::now();
            let outcome = job(Arc::new(window));
            collector.emit(ready, outcome);
            gate.release();
        }
        Ok(collector.finish(self, meta, source_id, gate.peak()))
    }

    fn make_job(&self, branch_concurrency: bool, fps_milli: u32) -> JobFn<S> {
        let threshold = self.cfg.anomaly_threshold;
        match self.cfg.mode {
            PipelineMode::Parallel => {
                let spatial = self.spatial.clone().expect("validated");
                let temporal = self.temporal.clone().expect("validated");
                let spatial_cfg = self.cfg.spatial;
                let policy = self.cfg.fusion.clone();
                Arc::new(move |window: Arc<SequenceWindow>| {
                    let index = window.window_index();
                    let (spatial_outcome, spatial_ms, temporal_outcome, temporal_ms) =
                        if branch_concurrency {
                            let w = window.clone();
                            let backend = spatial.clone();
                            let cfg = spatial_cfg;
                            let branch = thread::spawn(move || {
                                let t0 = Instant::now();
                                let r = analyze_window(&w, backend.as_ref(), &cfg);
                                (r, ms(t0))
                            });
                            let t0 = Instant::now();
                            let verdict = classify_window(&window, temporal.as_ref(), threshold);
                            let temporal_ms = ms(t0);
                            let (spatial_outcome, spatial_ms) = branch
                                .join()
                                .unwrap_or_else(|_| {
                                    (
                                        Err(crate::error::BackendError::Spatial {
                                            frame_index: window.source_span().0,
                                            reason: "spatial branch panicked".to_string(),
                                        }),
                                        0.0,
                                    )
                                });
                            (spatial_outcome, spatial_ms, verdict, temporal_ms)
                        } else {
                            let t0 = Instant::now();
                            let spatial_outcome =
                                analyze_window(&window, spatial.as_ref(), &spatial_cfg);
                            let spatial_ms = ms(t0);
                            let t1 = Instant::now();
                            let verdict = classify_window(&window, temporal.as_ref(), threshold);
                            (spatial_outcome, spatial_ms, verdict, ms(t1))
                        };
                    // Fail-together join: either branch's error voids the window.
                    let spatial_result =
                        spatial_outcome.map_err(|e| gap(index, "spatial", e))?;
                    let verdict = temporal_outcome.map_err(|e| gap(index, "temporal", e))?;
                    let latency = StageLatency {
                        spatial_ms: Some(spatial_ms),
                        preprocess_ms: None,
                        temporal_ms: Some(temporal_ms),
                        total_ms: 0.0,
                    };
                    let prediction = fuse(&verdict, &spatial_result, &policy, latency);
                    Ok((prediction, EnrichDiagnostics::default()))
                })
            }
            PipelineMode::Serial => {
                let spatial = self.spatial.clone().expect("validated");
                let temporal = self.temporal.clone().expect("validated");
                let spatial_cfg = self.cfg.spatial;
                let variant = self.cfg.preprocess_variant;
                let style = self.cfg.skeleton_style;
                let dump_dir = self.cfg.debug_dump_dir.clone();
                Arc::new(move |window: Arc<SequenceWindow>| {
                    let index = window.window_index();
                    let t0 = Instant::now();
                    let spatial_result = analyze_window(&window, spatial.as_ref(), &spatial_cfg)
                        .map_err(|e| gap(index, "spatial", e))?;
                    let spatial_ms = ms(t0);

                    let t1 = Instant::now();
                    let (enriched, diagnostics) =
                        enrich_window(&window, &spatial_result, variant, &style);
                    if let Some(dir) = dump_dir.as_deref() {
                        if let Err(e) = dump_window_packed(dir, &enriched, fps_milli) {
                            log::warn!("debug dump failed for window {index}: {e}");
                        }
                    }
                    let resized = resize_window_to_model(&enriched)
                        .map_err(|e| gap(index, "preprocess", e))?;
                    let preprocess_ms = ms(t1);

                    let t2 = Instant::now();
                    let verdict = classify_window(&resized, temporal.as_ref(), threshold)
                        .map_err(|e| gap(index, "temporal", e))?;
                    let temporal_ms = ms(t2);

                    let latency = StageLatency {
                        spatial_ms: Some(spatial_ms),
                        preprocess_ms: Some(preprocess_ms),
                        temporal_ms: Some(temporal_ms),
                        total_ms: 0.0,
                    };
                    // Serial mode: the temporal verdict over enriched frames
                    // is final; there is no spatial override.
                    let prediction = AnomalyPrediction::new(
                        index,
                        verdict.result.argmax_class,
                        PredictionSource::TemporalOnSerial,
                        verdict.result.scores.clone(),
                        latency,
                    )
                    .expect("TemporalOnSerial accepts any label");
                    Ok((prediction, diagnostics))
                })
            }
            PipelineMode::TemporalOnly => {
                let temporal = self.temporal.clone().expect("validated");
                let policy = self.cfg.fusion.clone();
                Arc::new(move |window: Arc<SequenceWindow>| {
                    let index = window.window_index();
                    let t0 = Instant::now();
                    let verdict = classify_window(&window, temporal.as_ref(), threshold)
                        .map_err(|e| gap(index, "temporal", e))?;
                    let temporal_ms = ms(t0);
                    let latency = StageLatency {
                        spatial_ms: None,
                        preprocess_ms: None,
                        temporal_ms: Some(temporal_ms),
                        total_ms: 0.0,
                    };
                    // Deactivated spatial stage: fuse against an empty result.
                    let empty = SpatialResult::empty(index, window.source_span());
                    let prediction = fuse(&verdict, &empty, &policy, latency);
                    Ok((prediction, EnrichDiagnostics::default()))
                })
            }
            PipelineMode::SpatialOnly => {
                let spatial = self.spatial.clone().expect("validated");
                let spatial_cfg = self.cfg.spatial;
                let policy = self.cfg.fusion.clone();
                Arc::new(move |window: Arc<SequenceWindow>| {
                    let index = window.window_index();
                    let t0 = Instant::now();
                    let spatial_result = analyze_window(&window, spatial.as_ref(), &spatial_cfg)
                        .map_err(|e| gap(index, "spatial", e))?;
                    let spatial_ms = ms(t0);
                    let latency = StageLatency {
                        spatial_ms: Some(spatial_ms),
                        preprocess_ms: None,
                        temporal_ms: None,
                        total_ms: 0.0,
                    };
                    // Deactivated temporal stage: a constant-Normal verdict
                    // leaves every decision to the key-object rule.
                    let verdict = TemporalVerdict {
                        result: TemporalResult::new(ScoreMap::point_mass(AnomalyClass::Normal)),
                        anomaly: false,
                    };
                    let prediction = fuse(&verdict, &spatial_result, &policy, latency);
                    Ok((prediction, EnrichDiagnostics::default()))
                })
            }
        }
    }
}

struct Collector<S: Scalar> {
    run_start: Instant,
    predictions: Vec<AnomalyPrediction<S>>,
    window_starts_ms: Vec<f64>,
    latencies: Vec<f64>,
    gaps: Vec<GapRecord>,
    windows_formed: u64,
    diagnostics: EnrichDiagnostics,
}

impl<S: Scalar> Collector<S> {
    fn new(run_start: Instant) -> Self {
        Self {
            run_start,
            predictions: Vec::new(),
            window_starts_ms: Vec::new(),
            latencies: Vec::new(),
            gaps: Vec::new(),
            windows_formed: 0,
            diagnostics: EnrichDiagnostics::default(),
        }
    }

    fn emit(&mut self, ready: Instant, outcome: JobResult<S>) {
        self.windows_formed += 1;
        match outcome {
            Ok((mut prediction, diagnostics)) => {
                let total_ms = ms(ready);
                prediction.latency.total_ms = total_ms;
                self.window_starts_ms
                    .push(ready.duration_since(self.run_start).as_secs_f64() * 1000.0);
                self.latencies.push(total_ms);
                self.diagnostics.merge(&diagnostics);
                debug_assert!(self
                    .predictions
                    .last()
                    .map(|p| p.window_index < prediction.window_index)
                    .unwrap_or(true));
                self.predictions.push(prediction);
            }
            Err(gap) => self.gaps.push(gap),
        }
    }

    fn finish(
        self,
        pipeline: &Pipeline<S>,
        meta: SourceMetadata,
        source_id: String,
        peak_inflight: usize,
    ) -> RunReport<S> {
        let stats = RunStats::from_latencies(
            &self.latencies,
            ms(self.run_start),
            meta.duration_ms(),
        );
        RunReport {
            source_id,
            mode: pipeline.cfg.mode,
            effective_config: pipeline.cfg.to_toml(),
            predictions: self.predictions,
            window_starts_ms: self.window_starts_ms,
            gaps: self.gaps,
            windows_formed: self.windows_formed,
            peak_inflight_windows: peak_inflight,
            diagnostics: self.diagnostics,
            stats,
        }
    }
}

/// Run two differently configured pipelines over the same source and
/// compare their latency and labels. The source factory is called once per
/// run, so finished files can simply be reopened.
pub fn compare_modes<S: Scalar, F>(
    first: &Pipeline<S>,
    second: &Pipeline<S>,
    mut make_source: F,
) -> Result<ComparisonReport<S>, PipelineError>
where
    F: FnMut() -> Result<Box<dyn FrameSource>, PipelineError>,
{
    let first_report = first.run(make_source()?)?;
    let second_report = second.run(make_source()?)?;
    let modeled = match (
        first.modeled_window_latency_ms(),
        second.modeled_window_latency_ms(),
    ) {
        (Some(first_ms), Some(second_ms)) if second_ms > 0.0 => Some(ModeledLatency {
            first_ms,
            second_ms,
            ratio: first_ms / second_ms,
        }),
        _ => None,
    };
    Ok(ComparisonReport::new(first_report, second_report, modeled))
}
