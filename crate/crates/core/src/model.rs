//! Domain types shared by every pipeline stage: the class taxonomy, box and
//! keypoint geometry, frames, windows, and per-window results.
//!
//! Everything here is immutable after construction and safe to share between
//! concurrent stages. Continuous-valued types are generic over [`Scalar`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scalar::Scalar;

/// Edge length of the temporal model's input frames, in pixels.
pub const MODEL_FRAME_EDGE: u32 = 112;

/// Default number of frames per sequence window.
pub const DEFAULT_WINDOW_SIZE: usize = 15;

/// Tolerance for score-map normalization checks.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-6;

/// The anomaly taxonomy. `Normal` is the unique non-anomaly value.
///
/// Declaration order doubles as the argmax tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyClass {
    Fight,
    Gunshot,
    Fire,
    Normal,
}

impl AnomalyClass {
    pub const ALL: [AnomalyClass; 4] = [
        AnomalyClass::Fight,
        AnomalyClass::Gunshot,
        AnomalyClass::Fire,
        AnomalyClass::Normal,
    ];

    pub fn is_anomaly(self) -> bool {
        self != AnomalyClass::Normal
    }

    pub fn name(self) -> &'static str {
        match self {
            AnomalyClass::Fight => "Fight",
            AnomalyClass::Gunshot => "Gunshot",
            AnomalyClass::Fire => "Fire",
            AnomalyClass::Normal => "Normal",
        }
    }

    /// Lowercase wire name used in traces, CSV and JSON.
    pub fn wire_name(self) -> &'static str {
        match self {
            AnomalyClass::Fight => "fight",
            AnomalyClass::Gunshot => "gunshot",
            AnomalyClass::Fire => "fire",
            AnomalyClass::Normal => "normal",
        }
    }
}

impl fmt::Display for AnomalyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnomalyClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fight" => Ok(AnomalyClass::Fight),
            "gunshot" => Ok(AnomalyClass::Gunshot),
            "fire" => Ok(AnomalyClass::Fire),
            "normal" => Ok(AnomalyClass::Normal),
            other => Err(ModelError::UnknownClass(other.to_string())),
        }
    }
}

/// Active class set: the full four classes, or the three-class run that
/// drops `Fire`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassProfile {
    ThreeClass,
    FourClass,
}

impl ClassProfile {
    pub fn classes(self) -> &'static [AnomalyClass] {
        match self {
            ClassProfile::ThreeClass => &[
                AnomalyClass::Fight,
                AnomalyClass::Gunshot,
                AnomalyClass::Normal,
            ],
            ClassProfile::FourClass => &AnomalyClass::ALL,
        }
    }

    pub fn len(self) -> usize {
        self.classes().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, class: AnomalyClass) -> bool {
        self.classes().contains(&class)
    }
}

impl TryFrom<u8> for ClassProfile {
    type Error = ModelError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            3 => Ok(ClassProfile::ThreeClass),
            4 => Ok(ClassProfile::FourClass),
            other => Err(ModelError::UnknownClass(format!("{other}-class profile"))),
        }
    }
}

/// Detectable key objects whose presence makes a specific anomaly plausible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyObjectClass {
    Person,
    Firearm,
    Flame,
    Smoke,
}

impl KeyObjectClass {
    pub const ALL: [KeyObjectClass; 4] = [
        KeyObjectClass::Person,
        KeyObjectClass::Firearm,
        KeyObjectClass::Flame,
        KeyObjectClass::Smoke,
    ];

    /// The anomaly made plausible by this object. Total mapping:
    /// Person→Fight, Firearm→Gunshot, Flame→Fire, Smoke→Fire.
    pub fn associated_anomaly(self) -> AnomalyClass {
        match self {
            KeyObjectClass::Person => AnomalyClass::Fight,
            KeyObjectClass::Firearm => AnomalyClass::Gunshot,
            KeyObjectClass::Flame | KeyObjectClass::Smoke => AnomalyClass::Fire,
        }
    }

    pub fn wire_name(self) -> &'static str {
        match self {
            KeyObjectClass::Person => "person",
            KeyObjectClass::Firearm => "firearm",
            KeyObjectClass::Flame => "flame",
            KeyObjectClass::Smoke => "smoke",
        }
    }
}

impl FromStr for KeyObjectClass {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "person" => Ok(KeyObjectClass::Person),
            "firearm" => Ok(KeyObjectClass::Firearm),
            "flame" => Ok(KeyObjectClass::Flame),
            "smoke" => Ok(KeyObjectClass::Smoke),
            other => Err(ModelError::UnknownClass(other.to_string())),
        }
    }
}

/// The anomaly associated with a detected key object.
pub fn associated_anomaly(k: KeyObjectClass) -> AnomalyClass {
    k.associated_anomaly()
}

/// Axis-aligned box in image coordinates (origin top-left), corners ordered
/// so `x_min <= x_max` and `y_min <= y_max`.
///
/// Serializes as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<S: Scalar> {
    x_min: S,
    y_min: S,
    x_max: S,
    y_max: S,
}

impl<S: Scalar> BoundingBox<S> {
    pub fn new(x_min: S, y_min: S, x_max: S, y_max: S) -> Result<Self, ModelError> {
        if x_min > x_max || y_min > y_max || !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(ModelError::InvalidBox {
                x_min: x_min.to_f64_lossy(),
                y_min: y_min.to_f64_lossy(),
                x_max: x_max.to_f64_lossy(),
                y_max: y_max.to_f64_lossy(),
            });
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> S {
        self.x_min
    }

    pub fn y_min(&self) -> S {
        self.y_min
    }

    pub fn x_max(&self) -> S {
        self.x_max
    }

    pub fn y_max(&self) -> S {
        self.y_max
    }

    pub fn width(&self) -> S {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> S {
        self.y_max - self.y_min
    }

    /// Zero iff the box is degenerate (zero width or height).
    pub fn area(&self) -> S {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() == S::zero()
    }

    /// Area of overlap with `other`; zero when they do not intersect.
    pub fn intersection_area(&self, other: &Self) -> S {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= S::zero() || h <= S::zero() {
            S::zero()
        } else {
            w * h
        }
    }

    pub fn as_array(&self) -> [S; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl<S: Scalar> Serialize for BoundingBox<S> {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        self.as_array().serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for BoundingBox<S> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x0, y0, x1, y1] = <[S; 4]>::deserialize(deserializer)?;
        BoundingBox::new(x0, y0, x1, y1).map_err(serde::de::Error::custom)
    }
}

/// COCO-17 joint names, indexed by `joint_id`.
pub const COCO_KEYPOINT_NAMES: [&str; 17] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// Standard 19-edge limb list over the COCO-17 joints.
pub const COCO_SKELETON_EDGES: [(u8, u8); 19] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (2, 4),
    (5, 6),
    (5, 7),
    (5, 11),
    (6, 8),
    (6, 12),
    (7, 9),
    (8, 10),
    (11, 12),
    (11, 13),
    (12, 14),
    (13, 15),
    (14, 16),
];

/// One pose joint in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Keypoint<S: Scalar> {
    pub joint_id: u8,
    pub x: S,
    pub y: S,
    pub confidence: S,
}

impl<S: Scalar> Keypoint<S> {
    pub fn new(joint_id: u8, x: S, y: S, confidence: S) -> Result<Self, ModelError> {
        if joint_id > 16 {
            return Err(ModelError::JointIdOutOfRange(joint_id));
        }
        check_confidence(confidence)?;
        Ok(Self {
            joint_id,
            x,
            y,
            confidence,
        })
    }
}

fn check_confidence<S: Scalar>(confidence: S) -> Result<(), ModelError> {
    if confidence < S::zero() || confidence > S::one() || !confidence.is_finite() {
        return Err(ModelError::ConfidenceOutOfRange(confidence.to_f64_lossy()));
    }
    Ok(())
}

/// One spatial finding on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Detection<S: Scalar> {
    pub object_class: KeyObjectClass,
    pub confidence: S,
    #[serde(rename = "box")]
    pub box_: BoundingBox<S>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub keypoints: Option<Vec<Keypoint<S>>>,
}

impl<S: Scalar> Detection<S> {
    pub fn new(
        object_class: KeyObjectClass,
        confidence: S,
        box_: BoundingBox<S>,
    ) -> Result<Self, ModelError> {
        check_confidence(confidence)?;
        Ok(Self {
            object_class,
            confidence,
            box_,
            keypoints: None,
        })
    }

    /// Attach a pose. Only persons carry keypoints, and joint ids must be
    /// unique within the set.
    pub fn with_keypoints(mut self, keypoints: Vec<Keypoint<S>>) -> Result<Self, ModelError> {
        if self.object_class != KeyObjectClass::Person {
            return Err(ModelError::KeypointsOnNonPerson(
                self.object_class.wire_name().to_string(),
            ));
        }
        let mut seen = [false; 17];
        for kp in &keypoints {
            if seen[kp.joint_id as usize] {
                return Err(ModelError::DuplicateJointId(kp.joint_id));
            }
            seen[kp.joint_id as usize] = true;
        }
        self.keypoints = Some(keypoints);
        Ok(self)
    }
}

/// One decoded RGB8 video image plus its position in the source stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    index: u64,
    timestamp_ms: f64,
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(
        index: u64,
        timestamp_ms: f64,
        width: u32,
        height: u32,
        pixels: Vec<u8>,
    ) -> Result<Self, ModelError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(ModelError::InvalidFrame {
                index,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            index,
            timestamp_ms,
            width,
            height,
            pixels,
        })
    }

    /// All-black frame of the given dimensions.
    pub fn black(index: u64, timestamp_ms: f64, width: u32, height: u32) -> Self {
        Self {
            index,
            timestamp_ms,
            width,
            height,
            pixels: vec![0u8; width as usize * height as usize * 3],
        }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn timestamp_ms(&self) -> f64 {
        self.timestamp_ms
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// RGB triple at (x, y). Panics out of bounds.
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Rebuild with the same position metadata but new content.
    pub fn with_pixels(&self, width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ModelError> {
        Self::new(self.index, self.timestamp_ms, width, height, pixels)
    }
}

/// An ordered run of frames forming one temporal prediction unit.
///
/// Frame indices are the original source indices and strictly increase,
/// except that a window closed under the PadLast tail policy may end in a
/// constant run of repeats of its final real frame. In the serial path a
/// window may hold original-resolution frames while it is being enriched;
/// [`SequenceWindow::is_model_space`] reports whether every frame has been
/// resized to the temporal model's input size.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    frames: Vec<Frame>,
    window_index: u64,
    source_span: (u64, u64),
}

impl SequenceWindow {
    pub fn new(window_index: u64, frames: Vec<Frame>) -> Result<Self, ModelError> {
        if frames.is_empty() {
            return Err(ModelError::InvalidWindow {
                window_index,
                reason: "empty window".to_string(),
            });
        }
        let mut padding = false;
        for pair in frames.windows(2) {
            let (a, b) = (pair[0].index(), pair[1].index());
            if b == a && b == frames[frames.len() - 1].index() {
                padding = true;
                continue;
            }
            if b <= a || padding {
                return Err(ModelError::InvalidWindow {
                    window_index,
                    reason: format!(
                        "frame indices not strictly increasing: {a} then {b}"
                    ),
                });
            }
        }
        let span = (frames[0].index(), frames[frames.len() - 1].index());
        Ok(Self {
            frames,
            window_index,
            source_span: span,
        })
    }

    /// Rebuild after a per-frame transform, keeping index and span. The
    /// replacement frames must describe the same source positions.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self, ModelError> {
        let rebuilt = Self::new(self.window_index, frames)?;
        if rebuilt.source_span != self.source_span {
            return Err(ModelError::InvalidWindow {
                window_index: self.window_index,
                reason: "replacement frames change the source span".to_string(),
            });
        }
        Ok(rebuilt)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn window_index(&self) -> u64 {
        self.window_index
    }

    /// (first, last) original source indices covered by this window.
    pub fn source_span(&self) -> (u64, u64) {
        self.source_span
    }

    pub fn contains_source_index(&self, index: u64) -> bool {
        index >= self.source_span.0 && index <= self.source_span.1
    }

    /// True when every frame is at the temporal model's input size.
    pub fn is_model_space(&self) -> bool {
        self.frames
            .iter()
            .all(|f| f.width() == MODEL_FRAME_EDGE && f.height() == MODEL_FRAME_EDGE)
    }
}

/// Normalized per-class scores, keyed in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "")]
pub struct ScoreMap<S: Scalar> {
    scores: BTreeMap<AnomalyClass, S>,
}

impl<S: Scalar> ScoreMap<S> {
    /// Validate that the scores are in range and sum to 1 within
    /// [`SCORE_SUM_TOLERANCE`].
    pub fn new(scores: BTreeMap<AnomalyClass, S>) -> Result<Self, ModelError> {
        let mut sum = S::zero();
        for &v in scores.values() {
            check_confidence(v)?;
            sum = sum + v;
        }
        let tolerance = S::from_f64_lossy(SCORE_SUM_TOLERANCE);
        if (sum - S::one()).abs() > tolerance {
            return Err(ModelError::ScoresNotNormalized {
                sum: sum.to_f64_lossy(),
                tolerance: SCORE_SUM_TOLERANCE,
            });
        }
        Ok(Self { scores })
    }

    /// Divide through by the sum. Errors when the sum is zero or negative.
    pub fn normalize(scores: BTreeMap<AnomalyClass, S>) -> Result<Self, ModelError> {
        let sum = scores.values().fold(S::zero(), |acc, &v| acc + v);
        if sum <= S::zero() || !sum.is_finite() {
            return Err(ModelError::DegenerateScores);
        }
        let scores = scores.into_iter().map(|(k, v)| (k, v / sum)).collect();
        Self::new(scores)
    }

    /// Builds from (class, weight) pairs, normalizing.
    pub fn from_weights(pairs: &[(AnomalyClass, S)]) -> Result<Self, ModelError> {
        Self::normalize(pairs.iter().copied().collect())
    }

    /// Point mass on one class.
    pub fn point_mass(class: AnomalyClass) -> Self {
        let mut scores = BTreeMap::new();
        scores.insert(class, S::one());
        Self { scores }
    }

    pub fn get(&self, class: AnomalyClass) -> S {
        self.scores.get(&class).copied().unwrap_or_else(S::zero)
    }

    pub fn contains(&self, class: AnomalyClass) -> bool {
        self.scores.contains_key(&class)
    }

    pub fn sum(&self) -> S {
        self.scores.values().fold(S::zero(), |acc, &v| acc + v)
    }

    /// Maximal-score class; ties break to the first in enumeration order
    /// (Fight, Gunshot, Fire, Normal).
    pub fn argmax(&self) -> AnomalyClass {
        let mut best = AnomalyClass::Normal;
        let mut best_score = S::neg_infinity();
        for (&class, &score) in &self.scores {
            if score > best_score {
                best = class;
                best_score = score;
            }
        }
        best
    }

    /// Highest score among anomaly (non-Normal) classes; zero if none present.
    pub fn max_anomaly_score(&self) -> S {
        self.scores
            .iter()
            .filter(|(c, _)| c.is_anomaly())
            .map(|(_, &v)| v)
            .fold(S::zero(), |a, b| a.max(b))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AnomalyClass, S)> + '_ {
        self.scores.iter().map(|(&k, &v)| (k, v))
    }

    pub fn classes(&self) -> impl Iterator<Item = AnomalyClass> + '_ {
        self.scores.keys().copied()
    }
}

/// Temporal-stage output for one window: normalized class scores plus their
/// argmax.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct TemporalResult<S: Scalar> {
    pub scores: ScoreMap<S>,
    pub argmax_class: AnomalyClass,
}

impl<S: Scalar> TemporalResult<S> {
    pub fn new(scores: ScoreMap<S>) -> Self {
        let argmax_class = scores.argmax();
        Self {
            scores,
            argmax_class,
        }
    }
}

/// Spatial-stage output for one window: detections keyed by original frame
/// index, covering only the frames the stage analyzed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SpatialResult<S: Scalar> {
    window_index: u64,
    source_span: (u64, u64),
    per_frame: BTreeMap<u64, Vec<Detection<S>>>,
}

impl<S: Scalar> SpatialResult<S> {
    pub fn new(
        window_index: u64,
        source_span: (u64, u64),
        per_frame: BTreeMap<u64, Vec<Detection<S>>>,
    ) -> Result<Self, ModelError> {
        for &frame_index in per_frame.keys() {
            if frame_index < source_span.0 || frame_index > source_span.1 {
                return Err(ModelError::InvalidWindow {
                    window_index,
                    reason: format!(
                        "frame index {frame_index} outside source span {source_span:?}"
                    ),
                });
            }
        }
        Ok(Self {
            window_index,
            source_span,
            per_frame,
        })
    }

    /// Result covering nothing (deactivated spatial stage).
    pub fn empty(window_index: u64, source_span: (u64, u64)) -> Self {
        Self {
            window_index,
            source_span,
            per_frame: BTreeMap::new(),
        }
    }

    pub fn window_index(&self) -> u64 {
        self.window_index
    }

    pub fn source_span(&self) -> (u64, u64) {
        self.source_span
    }

    pub fn per_frame(&self) -> &BTreeMap<u64, Vec<Detection<S>>> {
        &self.per_frame
    }

    pub fn detections_for(&self, frame_index: u64) -> &[Detection<S>] {
        self.per_frame
            .get(&frame_index)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All (frame_index, detection) pairs in frame order.
    pub fn iter_detections(&self) -> impl Iterator<Item = (u64, &Detection<S>)> {
        self.per_frame
            .iter()
            .flat_map(|(&idx, dets)| dets.iter().map(move |d| (idx, d)))
    }

    pub fn total_detections(&self) -> usize {
        self.per_frame.values().map(Vec::len).sum()
    }
}

/// Where a prediction's label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionSource {
    /// The temporal verdict, possibly confirming Normal.
    Temporal,
    /// The spatial key-object rule overrode a non-anomalous temporal verdict.
    SpatialOverride,
    /// Serial mode: the temporal verdict over enriched frames is final.
    TemporalOnSerial,
}

impl fmt::Display for PredictionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PredictionSource::Temporal => "temporal",
            PredictionSource::SpatialOverride => "spatial-override",
            PredictionSource::TemporalOnSerial => "temporal-on-serial",
        };
        f.write_str(s)
    }
}

/// Per-stage and end-to-end wall-clock timings for one window, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageLatency {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spatial_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preprocess_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub temporal_ms: Option<f64>,
    pub total_ms: f64,
}

impl StageLatency {
    /// Wall-clock fields zeroed, for canonical (determinism-comparable) output.
    pub fn zeroed() -> Self {
        Self::default()
    }
}

/// Final per-window verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct AnomalyPrediction<S: Scalar> {
    pub window_index: u64,
    pub label: AnomalyClass,
    pub source: PredictionSource,
    pub scores: ScoreMap<S>,
    pub latency: StageLatency,
}

impl<S: Scalar> AnomalyPrediction<S> {
    pub fn new(
        window_index: u64,
        label: AnomalyClass,
        source: PredictionSource,
        scores: ScoreMap<S>,
        latency: StageLatency,
    ) -> Result<Self, ModelError> {
        if source == PredictionSource::SpatialOverride && label == AnomalyClass::Normal {
            return Err(ModelError::InvalidWindow {
                window_index,
                reason: "spatial override cannot emit Normal".to_string(),
            });
        }
        Ok(Self {
            window_index,
            label,
            source,
            scores,
            latency,
        })
    }
}
