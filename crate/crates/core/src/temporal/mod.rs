//! Window-level sequence classification behind a pluggable backend,
//! producing normalized class scores.

pub mod synthetic;
pub mod trace;

use crate::error::BackendError;
use crate::model::{AnomalyClass, ClassProfile, SequenceWindow, TemporalResult};
use crate::scalar::Scalar;

pub use synthetic::{SyntheticTemporalBackend, TemporalRule};
pub use trace::{write_temporal_trace, TraceTemporalBackend};

/// A sequence classifier over model-space windows. Implementations must
/// tolerate concurrent `classify` calls and emit normalized scores.
pub trait TemporalBackend<S: Scalar>: Send + Sync {
    fn classify(&self, window: &SequenceWindow) -> Result<TemporalResult<S>, BackendError>;

    fn class_profile(&self) -> ClassProfile {
        ClassProfile::FourClass
    }

    /// Declared per-call latency for synthetic backends; None otherwise.
    fn declared_latency_ms(&self) -> Option<f64> {
        None
    }
}

/// A temporal result together with its anomaly flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalVerdict<S: Scalar> {
    pub result: TemporalResult<S>,
    pub anomaly: bool,
}

/// Classify one window and derive the anomaly flag.
///
/// With the default threshold of zero the flag is a pure argmax test
/// (argmax != Normal); a positive threshold additionally requires the top
/// anomaly-class score to reach it, so raising the threshold can only turn
/// the flag off.
pub fn classify_window<S: Scalar>(
    window: &SequenceWindow,
    backend: &dyn TemporalBackend<S>,
    anomaly_threshold: S,
) -> Result<TemporalVerdict<S>, BackendError> {
    if !window.is_model_space() {
        return Err(BackendError::Temporal {
            window_index: window.window_index(),
            reason: "window is not in model space (112x112)".to_string(),
        });
    }
    let result = backend.classify(window)?;
    let anomaly = result.argmax_class != AnomalyClass::Normal
        && result.scores.max_anomaly_score() >= anomaly_threshold;
    Ok(TemporalVerdict { result, anomaly })
}
