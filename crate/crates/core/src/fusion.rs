//! Combining the temporal and spatial window verdicts (parallel mode).
//!
//! The decision procedure:
//! 1. If the temporal stage flags an anomaly, its argmax class is the
//!    prediction.
//! 2. Otherwise, if key objects were detected, predict the highest-priority
//!    admitted associated anomaly; a firearm only admits Gunshot when its
//!    IoU with a person is strictly greater than zero.
//! 3. Otherwise Normal.

use serde::{Deserialize, Serialize};

use crate::model::{
    AnomalyClass, AnomalyPrediction, PredictionSource, SpatialResult, StageLatency,
};
use crate::scalar::Scalar;
use crate::spatial::{key_object_summary, person_gun_gate};
use crate::temporal::TemporalVerdict;

/// Spatial-override policy knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionPolicy {
    /// Override order when several key objects co-occur. Ranked by
    /// immediacy of threat by default.
    pub key_object_priority: Vec<AnomalyClass>,
    /// Require the person/firearm overlap gate before admitting Gunshot.
    pub gate_required_for_gunshot: bool,
    /// Whether a person detection alone may override to Fight. The literal
    /// rule keeps it on; switching it off avoids flooding busy scenes.
    pub person_triggers_fight: bool,
}

impl Default for FusionPolicy {
    fn default() -> Self {
        Self {
            key_object_priority: vec![
                AnomalyClass::Gunshot,
                AnomalyClass::Fire,
                AnomalyClass::Fight,
            ],
            gate_required_for_gunshot: true,
            person_triggers_fight: true,
        }
    }
}

impl FusionPolicy {
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = Vec::new();
        for &class in &self.key_object_priority {
            if class == AnomalyClass::Normal {
                return Err("key_object_priority must not contain normal".to_string());
            }
            if seen.contains(&class) {
                return Err(format!("duplicate {class} in key_object_priority"));
            }
            seen.push(class);
        }
        Ok(())
    }
}

/// Fuse one window's temporal verdict with its spatial result.
///
/// The two results must refer to the same window; the spatial result
/// carries the window index for the prediction.
pub fn fuse<S: Scalar>(
    temporal: &TemporalVerdict<S>,
    spatial: &SpatialResult<S>,
    policy: &FusionPolicy,
    latency: StageLatency,
) -> AnomalyPrediction<S> {
    let window_index = spatial.window_index();
    let scores = temporal.result.scores.clone();

    if temporal.anomaly {
        return AnomalyPrediction::new(
            window_index,
            temporal.result.argmax_class,
            PredictionSource::Temporal,
            scores,
            latency,
        )
        .expect("temporal flag implies a non-Normal argmax");
    }

    let detected = key_object_summary(spatial);
    if !detected.is_empty() {
        let gate = person_gun_gate(spatial);
        let mut candidates: Vec<AnomalyClass> = detected
            .iter()
            .map(|k| k.associated_anomaly())
            .collect();
        candidates.retain(|&c| match c {
            AnomalyClass::Gunshot => gate || !policy.gate_required_for_gunshot,
            AnomalyClass::Fight => policy.person_triggers_fight,
            _ => true,
        });
        let winner = policy
            .key_object_priority
            .iter()
            .copied()
            .find(|c| candidates.contains(c));
        if let Some(label) = winner {
            return AnomalyPrediction::new(
                window_index,
                label,
                PredictionSource::SpatialOverride,
                scores,
                latency,
            )
            .expect("priority list never contains Normal");
        }
    }

    AnomalyPrediction::new(
        window_index,
        AnomalyClass::Normal,
        PredictionSource::Temporal,
        scores,
        latency,
    )
    .expect("Normal with Temporal source is always valid")
}
