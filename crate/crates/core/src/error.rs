//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Violation of a core type invariant at construction time.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid bounding box: x_min {x_min} > x_max {x_max} or y_min {y_min} > y_max {y_max}")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("keypoint joint id {0} outside COCO-17 range 0..=16")]
    JointIdOutOfRange(u8),
    #[error("duplicate joint id {0} in one keypoint set")]
    DuplicateJointId(u8),
    #[error("keypoints attached to non-person detection {0}")]
    KeypointsOnNonPerson(String),
    #[error("frame {index}: pixel buffer length {actual} != width*height*3 = {expected}")]
    InvalidFrame {
        index: u64,
        expected: usize,
        actual: usize,
    },
    #[error("window {window_index}: {reason}")]
    InvalidWindow { window_index: u64, reason: String },
    #[error("scores sum to {sum}, expected 1 within {tolerance}")]
    ScoresNotNormalized { sum: f64, tolerance: f64 },
    #[error("score map is empty or sums to zero")]
    DegenerateScores,
    #[error("unknown class label {0:?}")]
    UnknownClass(String),
}

/// Frame acquisition and decoding failures.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error at {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad packed video header in {path}: {reason}")]
    BadHeader { path: String, reason: String },
    #[error("decode failure at source position {position}: {reason}")]
    Decode { position: u64, reason: String },
    #[error("frame has zero dimension ({width}x{height})")]
    ZeroDimension { width: u32, height: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Inference-backend failures, tagged with where they happened.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("spatial backend failed on frame {frame_index}: {reason}")]
    Spatial { frame_index: u64, reason: String },
    #[error("temporal backend failed on window {window_index}: {reason}")]
    Temporal { window_index: u64, reason: String },
    #[error("no trace entry for window {window_index}")]
    MissingTraceEntry { window_index: u64 },
}

/// Malformed trace file contents. Load-time, fail fast.
#[derive(Debug, Error)]
#[error("trace format error in {path} line {line}: {reason}")]
pub struct TraceFormatError {
    pub path: String,
    pub line: usize,
    pub reason: String,
}

/// Evaluation failures.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no truth label for windows {0:?}")]
    MissingLabel(Vec<u64>),
    #[error("label {label} not in the {profile}-class profile (rows: {rows:?})")]
    ProfileViolation {
        label: String,
        profile: usize,
        rows: Vec<u64>,
    },
    #[error("empty prediction list")]
    EmptyPredictions,
    #[error("malformed ground truth at {path} line {line}: {reason}")]
    BadGroundTruth {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("cannot read predictions {path}: {reason}")]
    BadPredictions { path: String, reason: String },
}

/// Configuration parse and validation failures.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("bad backend spec {spec:?}: {reason}")]
    BadBackendSpec { spec: String, reason: String },
    #[error("bad source spec {spec:?}: {reason}")]
    BadSourceSpec { spec: String, reason: String },
}

/// Top-level pipeline failure.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Trace(#[from] TraceFormatError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("report io: {0}")]
    ReportIo(#[from] std::io::Error),
}
