//! Synthetic temporal backend: a declared sleep plus a pure content
//! heuristic over the window's pixels.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::model::{AnomalyClass, ClassProfile, ScoreMap, SequenceWindow, TemporalResult};
use crate::scalar::Scalar;
use crate::temporal::TemporalBackend;

/// Content heuristic applied after the latency sleep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalRule {
    /// Always scores Normal.
    Normal,
    /// Mean inter-frame absolute pixel difference at or above the cutoff
    /// scores Fight-leaning, otherwise Normal-leaning.
    Motion { cutoff: f64 },
}

/// Mean absolute per-byte difference between consecutive frames, averaged
/// over all frame pairs. Zero for a single-frame window.
pub fn mean_interframe_abs_diff(window: &SequenceWindow) -> f64 {
    let frames = window.frames();
    if frames.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0f64;
    for pair in frames.windows(2) {
        let (a, b) = (pair[0].pixels(), pair[1].pixels());
        let sum: u64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| (x as i16 - y as i16).unsigned_abs() as u64)
            .sum();
        total += sum as f64 / a.len() as f64;
    }
    total / (frames.len() - 1) as f64
}

pub struct SyntheticTemporalBackend {
    latency_ms: f64,
    rule: TemporalRule,
    profile: ClassProfile,
}

impl SyntheticTemporalBackend {
    pub fn new(latency_ms: f64, rule: TemporalRule, profile: ClassProfile) -> Self {
        Self {
            latency_ms,
            rule,
            profile,
        }
    }
}

fn leaning_scores<S: Scalar>(profile: ClassProfile, leader: AnomalyClass) -> ScoreMap<S> {
    let weights: Vec<(AnomalyClass, S)> = profile
        .classes()
        .iter()
        .map(|&c| {
            let w = if c == leader { 0.7 } else { 0.1 };
            (c, S::from_f64_lossy(w))
        })
        .collect();
    ScoreMap::from_weights(&weights).expect("positive weights normalize")
}

impl<S: Scalar> TemporalBackend<S> for SyntheticTemporalBackend {
    fn classify(&self, window: &SequenceWindow) -> Result<TemporalResult<S>, BackendError> {
        if self.latency_ms > 0.0 {
            thread::sleep(Duration::from_secs_f64(self.latency_ms / 1000.0));
        }
        let leader = match self.rule {
            TemporalRule::Normal => AnomalyClass::Normal,
            TemporalRule::Motion { cutoff } => {
                if mean_interframe_abs_diff(window) >= cutoff {
                    AnomalyClass::Fight
                } else {
                    AnomalyClass::Normal
                }
            }
        };
        Ok(TemporalResult::new(leaning_scores(self.profile, leader)))
    }

    fn class_profile(&self) -> ClassProfile {
        self.profile
    }

    fn declared_latency_ms(&self) -> Option<f64> {
        Some(self.latency_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Frame, MODEL_FRAME_EDGE};
    use std::time::Instant;

    fn window_from(values: &[u8]) -> SequenceWindow {
        let frames = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let len = (MODEL_FRAME_EDGE * MODEL_FRAME_EDGE * 3) as usize;
                Frame::new(
                    i as u64,
                    i as f64,
                    MODEL_FRAME_EDGE,
                    MODEL_FRAME_EDGE,
                    vec![v; len],
                )
                .unwrap()
            })
            .collect();
        SequenceWindow::new(0, frames).unwrap()
    }

    #[test]
    fn identical_frames_have_zero_motion_and_score_normal() {
        let w = window_from(&[128; 5]);
        assert_eq!(mean_interframe_abs_diff(&w), 0.0);
        let backend =
            SyntheticTemporalBackend::new(0.0, TemporalRule::Motion { cutoff: 10.0 }, ClassProfile::FourClass);
        let r: TemporalResult<f64> = backend.classify(&w).unwrap();
        assert_eq!(r.argmax_class, AnomalyClass::Normal);
    }

    #[test]
    fn alternating_black_white_measures_255_and_scores_fight() {
        let w = window_from(&[0, 255, 0, 255, 0]);
        assert_eq!(mean_interframe_abs_diff(&w), 255.0);
        let backend =
            SyntheticTemporalBackend::new(0.0, TemporalRule::Motion { cutoff: 10.0 }, ClassProfile::FourClass);
        let r: TemporalResult<f64> = backend.classify(&w).unwrap();
        assert_eq!(r.argmax_class, AnomalyClass::Fight);
        assert!((r.scores.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_class_profile_never_scores_fire() {
        let backend = SyntheticTemporalBackend::new(
            0.0,
            TemporalRule::Motion { cutoff: 10.0 },
            ClassProfile::ThreeClass,
        );
        let r: TemporalResult<f64> = backend.classify(&window_from(&[0, 255, 0])).unwrap();
        assert!(!r.scores.contains(AnomalyClass::Fire));
        assert_eq!(
            TemporalBackend::<f64>::class_profile(&backend),
            ClassProfile::ThreeClass
        );
    }

    #[test]
    fn declared_latency_is_respected() {
        let backend =
            SyntheticTemporalBackend::new(100.0, TemporalRule::Normal, ClassProfile::FourClass);
        let w = window_from(&[0, 0, 0]);
        let start = Instant::now();
        let _: TemporalResult<f64> = backend.classify(&w).unwrap();
        assert!(start.elapsed() >= Duration::from_millis(100));
        assert_eq!(
            TemporalBackend::<f64>::declared_latency_ms(&backend),
            Some(100.0)
        );
    }
}
