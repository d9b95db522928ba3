//! Engine for modular real-time video anomaly detection.
//!
//! A spatial object/pose analysis stage and a temporal sequence
//! classification stage compose either in parallel (decision fusion) or in
//! series (frame enrichment), over pluggable deterministic backends, with an
//! evaluation and latency benchmark harness.

pub mod config;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod fusion;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod spatial;
pub mod temporal;

pub use config::{
    ExecutionModel, PipelineConfig, PipelineMode, RawConfig, SourceSpec, SpatialBackendSpec,
    TemporalBackendSpec,
};
pub use error::{
    BackendError, ConfigError, EvalError, IngestError, ModelError, PipelineError,
    TraceFormatError,
};
pub use eval::{score, score_pairs, EvalReport, GroundTruthSet};
pub use fusion::{fuse, FusionPolicy};
pub use ingest::{
    make_windows, resize_to_model, sample, FrameSource, SamplingPolicy, TailPolicy,
};
pub use model::{
    associated_anomaly, AnomalyClass, AnomalyPrediction, BoundingBox, ClassProfile, Detection,
    Frame, KeyObjectClass, Keypoint, PredictionSource, ScoreMap, SequenceWindow, SpatialResult,
    StageLatency, TemporalResult, DEFAULT_WINDOW_SIZE, MODEL_FRAME_EDGE,
};
pub use pipeline::{compare_modes, open_source, Pipeline, RunReport};
pub use preprocess::PreprocessVariant;
pub use scalar::Scalar;
pub use spatial::{iou, SpatialBackend, SpatialConfig};
pub use temporal::{classify_window, TemporalBackend};

/// Single-precision aliases for the continuous-valued core types.
pub type BoundingBox32 = BoundingBox<f32>;
pub type Keypoint32 = Keypoint<f32>;
pub type Detection32 = Detection<f32>;
pub type ScoreMap32 = ScoreMap<f32>;
pub type TemporalResult32 = TemporalResult<f32>;
pub type SpatialResult32 = SpatialResult<f32>;
pub type AnomalyPrediction32 = AnomalyPrediction<f32>;

/// Double-precision aliases; the shipped pipeline binaries run at f64.
pub type BoundingBox64 = BoundingBox<f64>;
pub type Keypoint64 = Keypoint<f64>;
pub type Detection64 = Detection<f64>;
pub type ScoreMap64 = ScoreMap<f64>;
pub type TemporalResult64 = TemporalResult<f64>;
pub type SpatialResult64 = SpatialResult<f64>;
pub type AnomalyPrediction64 = AnomalyPrediction<f64>;
