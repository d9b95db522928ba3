//! Per-frame key-object and pose detection behind a pluggable backend, plus
//! the geometric utilities and per-window aggregation the fusion rule needs.

pub mod synthetic;
pub mod trace;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::model::{BoundingBox, Detection, Frame, KeyObjectClass, SequenceWindow, SpatialResult};
use crate::scalar::Scalar;

pub use synthetic::{SpatialRule, SyntheticSpatialBackend};
pub use trace::{write_spatial_trace, TraceSpatialBackend};

/// A per-frame object/pose detector. The swap point for newer detector
/// generations: implementations must tolerate concurrent `detect` calls from
/// multiple in-flight windows.
pub trait SpatialBackend<S: Scalar>: Send + Sync {
    fn detect(&self, frame: &Frame) -> Result<Vec<Detection<S>>, BackendError>;

    /// Whether detections may carry pose keypoints.
    fn has_pose(&self) -> bool {
        false
    }

    /// Declared per-call latency for synthetic backends; None for real or
    /// trace backends.
    fn declared_latency_ms(&self) -> Option<f64> {
        None
    }
}

/// Which frames of a window the spatial stage analyzes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameSelection {
    EvenlySpaced,
    First,
    All,
}

impl std::str::FromStr for FrameSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evenly-spaced" => Ok(FrameSelection::EvenlySpaced),
            "first" => Ok(FrameSelection::First),
            "all" => Ok(FrameSelection::All),
            other => Err(format!("unknown frame selection {other:?}")),
        }
    }
}

/// Spatial-stage parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpatialConfig<S: Scalar> {
    pub confidence_threshold: S,
    pub frames_per_window: usize,
    pub frame_selection: FrameSelection,
}

impl<S: Scalar> Default for SpatialConfig<S> {
    fn default() -> Self {
        Self {
            confidence_threshold: S::from_f64_lossy(0.25),
            frames_per_window: 3,
            frame_selection: FrameSelection::EvenlySpaced,
        }
    }
}

impl<S: Scalar> SpatialConfig<S> {
    /// Analyze every frame — the faithful serial-mode default.
    pub fn all_frames(confidence_threshold: S) -> Self {
        Self {
            confidence_threshold,
            frames_per_window: usize::MAX,
            frame_selection: FrameSelection::All,
        }
    }

    pub fn validate(&self, window_size: usize) -> Result<(), String> {
        let t = self.confidence_threshold;
        if t < S::zero() || t > S::one() {
            return Err(format!("confidence_threshold {t} outside [0, 1]"));
        }
        if self.frames_per_window < 1 {
            return Err("frames_per_window must be >= 1".to_string());
        }
        if self.frame_selection != FrameSelection::All && self.frames_per_window > window_size {
            return Err(format!(
                "frames_per_window {} > window_size {window_size}",
                self.frames_per_window
            ));
        }
        Ok(())
    }
}

/// Intersection over union of two boxes: area(a∩b) / area(a∪b), zero when
/// the union has zero area. Always in [0, 1].
pub fn iou<S: Scalar>(a: &BoundingBox<S>, b: &BoundingBox<S>) -> S {
    let intersection = a.intersection_area(b);
    let union = a.area() + b.area() - intersection;
    if union <= S::zero() {
        S::zero()
    } else {
        intersection / union
    }
}

/// Positions (within the window) selected for analysis.
pub fn selected_positions(
    window_len: usize,
    selection: FrameSelection,
    frames_per_window: usize,
) -> Vec<usize> {
    match selection {
        FrameSelection::All => (0..window_len).collect(),
        FrameSelection::First => vec![0],
        FrameSelection::EvenlySpaced => {
            let count = frames_per_window.clamp(1, window_len);
            let step = window_len.div_ceil(count);
            (0..window_len)
                .step_by(step.max(1))
                .take(count)
                .collect()
        }
    }
}

/// Run the backend on the configured subset of a window's frames,
/// discarding detections below the confidence threshold.
///
/// All-or-nothing: a backend failure on any selected frame fails the whole
/// window, carrying the frame index.
pub fn analyze_window<S: Scalar>(
    window: &SequenceWindow,
    backend: &dyn SpatialBackend<S>,
    cfg: &SpatialConfig<S>,
) -> Result<SpatialResult<S>, BackendError> {
    let positions = selected_positions(window.len(), cfg.frame_selection, cfg.frames_per_window);
    let mut per_frame: BTreeMap<u64, Vec<Detection<S>>> = BTreeMap::new();
    for pos in positions {
        let frame = &window.frames()[pos];
        let detections = backend.detect(frame)?;
        let kept: Vec<Detection<S>> = detections
            .into_iter()
            .filter(|d| d.confidence >= cfg.confidence_threshold)
            .collect();
        // PadLast tails repeat the final frame index; keep one entry per index.
        per_frame.insert(frame.index(), kept);
    }
    SpatialResult::new(window.window_index(), window.source_span(), per_frame)
        .map_err(|e| BackendError::Spatial {
            frame_index: window.source_span().0,
            reason: e.to_string(),
        })
}

/// True iff some analyzed frame holds a firearm and a person whose boxes
/// overlap with IoU strictly greater than zero. Evaluated over the maximum
/// pairwise IoU when several of either are present; edge-touching boxes
/// (zero-area intersection) do not arm the gate.
pub fn person_gun_gate<S: Scalar>(result: &SpatialResult<S>) -> bool {
    for detections in result.per_frame().values() {
        let persons = detections
            .iter()
            .filter(|d| d.object_class == KeyObjectClass::Person);
        for person in persons {
            let firearms = detections
                .iter()
                .filter(|d| d.object_class == KeyObjectClass::Firearm);
            for firearm in firearms {
                if iou(&person.box_, &firearm.box_) > S::zero() {
                    return true;
                }
            }
        }
    }
    false
}

/// Union of detected key-object classes over all analyzed frames.
pub fn key_object_summary<S: Scalar>(result: &SpatialResult<S>) -> BTreeSet<KeyObjectClass> {
    result
        .iter_detections()
        .map(|(_, d)| d.object_class)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Frame;

    fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox<f64> {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn det(class: KeyObjectClass, conf: f64, b: BoundingBox<f64>) -> Detection<f64> {
        Detection::new(class, conf, b).unwrap()
    }

    fn window(size: u64) -> SequenceWindow {
        let frames = (0..size).map(|i| Frame::black(i, i as f64, 4, 4)).collect();
        SequenceWindow::new(0, frames).unwrap()
    }

    struct FixedBackend {
        detections: Vec<Detection<f64>>,
    }

    impl SpatialBackend<f64> for FixedBackend {
        fn detect(&self, _frame: &Frame) -> Result<Vec<Detection<f64>>, BackendError> {
            Ok(self.detections.clone())
        }
    }

    struct FailAt {
        index: u64,
    }

    impl SpatialBackend<f64> for FailAt {
        fn detect(&self, frame: &Frame) -> Result<Vec<Detection<f64>>, BackendError> {
            if frame.index() == self.index {
                Err(BackendError::Spatial {
                    frame_index: frame.index(),
                    reason: "injected".to_string(),
                })
            } else {
                Ok(vec![])
            }
        }
    }

    #[test]
    fn iou_of_identical_boxes_is_one() {
        let a = bbox(2.0, 3.0, 10.0, 8.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_of_disjoint_boxes_is_zero() {
        let a = bbox(0.0, 0.0, 1.0, 1.0);
        let b = bbox(5.0, 5.0, 6.0, 6.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_hand_computed_case() {
        let a = bbox(0.0, 0.0, 10.0, 10.0);
        let b = bbox(5.0, 5.0, 15.0, 15.0);
        assert!((iou(&a, &b) - 25.0 / 175.0).abs() < 1e-9);
    }

    #[test]
    fn iou_of_degenerate_boxes_is_zero() {
        let a = bbox(1.0, 1.0, 1.0, 5.0);
        assert_eq!(iou(&a, &a), 0.0);
    }

    #[test]
    fn evenly_spaced_picks_every_fifth_of_fifteen() {
        assert_eq!(
            selected_positions(15, FrameSelection::EvenlySpaced, 3),
            vec![0, 5, 10]
        );
        assert_eq!(
            selected_positions(15, FrameSelection::EvenlySpaced, 4),
            vec![0, 4, 8, 12]
        );
        assert_eq!(selected_positions(15, FrameSelection::First, 3), vec![0]);
        assert_eq!(selected_positions(3, FrameSelection::All, 1).len(), 3);
        // Requesting more frames than exist degrades to all of them.
        assert_eq!(
            selected_positions(2, FrameSelection::EvenlySpaced, 5),
            vec![0, 1]
        );
    }

    #[test]
    fn analyze_window_selects_and_filters() {
        let w = window(15);
        let backend = FixedBackend {
            detections: vec![
                det(KeyObjectClass::Person, 0.9, bbox(0.0, 0.0, 2.0, 2.0)),
                det(KeyObjectClass::Flame, 0.1, bbox(1.0, 1.0, 3.0, 3.0)),
            ],
        };
        let cfg = SpatialConfig {
            confidence_threshold: 0.25,
            frames_per_window: 3,
            frame_selection: FrameSelection::EvenlySpaced,
        };
        let result = analyze_window(&w, &backend, &cfg).unwrap();
        let analyzed: Vec<u64> = result.per_frame().keys().copied().collect();
        assert_eq!(analyzed, vec![0, 5, 10]);
        // The 0.1-confidence flame is below threshold and absent everywhere.
        for (_, d) in result.iter_detections() {
            assert_eq!(d.object_class, KeyObjectClass::Person);
        }
        assert_eq!(result.total_detections(), 3);
    }

    #[test]
    fn analyze_window_all_frames() {
        let w = window(15);
        let backend = FixedBackend { detections: vec![] };
        let cfg = SpatialConfig::all_frames(0.25);
        let result = analyze_window(&w, &backend, &cfg).unwrap();
        assert_eq!(result.per_frame().len(), 15);
    }

    #[test]
    fn analyze_window_is_all_or_nothing_on_backend_error() {
        let w = window(15);
        let cfg = SpatialConfig::all_frames(0.25);
        let err = analyze_window(&w, &FailAt { index: 7 }, &cfg).unwrap_err();
        match err {
            BackendError::Spatial { frame_index, .. } => assert_eq!(frame_index, 7),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn raising_threshold_never_adds_detections() {
        let w = window(5);
        let backend = FixedBackend {
            detections: vec![
                det(KeyObjectClass::Person, 0.3, bbox(0.0, 0.0, 2.0, 2.0)),
                det(KeyObjectClass::Flame, 0.6, bbox(1.0, 1.0, 3.0, 3.0)),
                det(KeyObjectClass::Smoke, 0.9, bbox(1.0, 1.0, 3.0, 3.0)),
            ],
        };
        let mut previous = usize::MAX;
        for t in [0.0, 0.2, 0.4, 0.8, 1.0] {
            let cfg = SpatialConfig {
                confidence_threshold: t,
                frames_per_window: 5,
                frame_selection: FrameSelection::All,
            };
            let count = analyze_window(&w, &backend, &cfg)
                .unwrap()
                .total_detections();
            assert!(count <= previous);
            previous = count;
        }
    }

    #[test]
    fn gate_requires_same_frame_overlap() {
        let person = det(KeyObjectClass::Person, 0.9, bbox(0.0, 0.0, 10.0, 10.0));
        let gun_overlap = det(KeyObjectClass::Firearm, 0.9, bbox(8.0, 8.0, 12.0, 12.0));
        let gun_touching = det(KeyObjectClass::Firearm, 0.9, bbox(10.0, 0.0, 14.0, 10.0));

        let mk = |per_frame: BTreeMap<u64, Vec<Detection<f64>>>| {
            SpatialResult::new(0, (0, 14), per_frame).unwrap()
        };

        let mut overlapping = BTreeMap::new();
        overlapping.insert(0u64, vec![person.clone(), gun_overlap.clone()]);
        assert!(person_gun_gate(&mk(overlapping)));

        // Firearm present but no person anywhere.
        let mut no_person = BTreeMap::new();
        no_person.insert(0u64, vec![gun_overlap.clone()]);
        assert!(!person_gun_gate(&mk(no_person)));

        // Edge-touching boxes intersect with exactly zero area: gate stays shut.
        let mut touching = BTreeMap::new();
        touching.insert(0u64, vec![person.clone(), gun_touching]);
        assert!(!person_gun_gate(&mk(touching)));

        // Person and firearm in different frames never pair.
        let mut split = BTreeMap::new();
        split.insert(0u64, vec![person]);
        split.insert(5u64, vec![gun_overlap]);
        assert!(!person_gun_gate(&mk(split)));
    }

    #[test]
    fn key_object_summary_unions_and_dedups() {
        let mk = |per_frame: BTreeMap<u64, Vec<Detection<f64>>>| {
            SpatialResult::new(0, (0, 14), per_frame).unwrap()
        };
        assert!(key_object_summary(&mk(BTreeMap::new())).is_empty());

        let mut per_frame = BTreeMap::new();
        per_frame.insert(
            0u64,
            vec![det(KeyObjectClass::Flame, 0.5, bbox(0.0, 0.0, 1.0, 1.0))],
        );
        per_frame.insert(
            5u64,
            vec![det(KeyObjectClass::Smoke, 0.5, bbox(0.0, 0.0, 1.0, 1.0))],
        );
        let summary = key_object_summary(&mk(per_frame));
        assert_eq!(
            summary.into_iter().collect::<Vec<_>>(),
            vec![KeyObjectClass::Flame, KeyObjectClass::Smoke]
        );

        let person = det(KeyObjectClass::Person, 0.9, bbox(0.0, 0.0, 1.0, 1.0));
        let mut repeated = BTreeMap::new();
        for i in [0u64, 5, 10] {
            repeated.insert(i, vec![person.clone()]);
        }
        let summary = key_object_summary(&mk(repeated));
        assert_eq!(summary.len(), 1);
        assert!(summary.contains(&KeyObjectClass::Person));
    }

    #[test]
    fn gate_true_implies_both_classes_in_summary() {
        let person = det(KeyObjectClass::Person, 0.9, bbox(0.0, 0.0, 10.0, 10.0));
        let gun = det(KeyObjectClass::Firearm, 0.9, bbox(5.0, 5.0, 12.0, 12.0));
        let mut per_frame = BTreeMap::new();
        per_frame.insert(3u64, vec![person, gun]);
        let r = SpatialResult::new(0, (0, 14), per_frame).unwrap();
        if person_gun_gate(&r) {
            let summary = key_object_summary(&r);
            assert!(summary.contains(&KeyObjectClass::Firearm));
            assert!(summary.contains(&KeyObjectClass::Person));
        } else {
            panic!("gate should be armed");
        }
    }
}
