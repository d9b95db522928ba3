//! Trace-replay spatial backend: recorded detections keyed by frame index.
//!
//! File format is JSON Lines, one object per line:
//! `{"frame": int, "detections": [{"class": "person|firearm|flame|smoke",
//! "conf": float, "box": [x0,y0,x1,y1], "keypoints": [[id,x,y,conf],...]}]}`.
//! The keypoints field is optional. Frames without a line mean no
//! detections. Malformed records fail the load, not the run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, TraceFormatError};
use crate::model::{BoundingBox, Detection, Frame, KeyObjectClass, Keypoint};
use crate::scalar::Scalar;
use crate::spatial::SpatialBackend;

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "")]
struct TraceLine<S: Scalar> {
    frame: u64,
    detections: Vec<TraceDetection<S>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "")]
struct TraceDetection<S: Scalar> {
    class: String,
    conf: S,
    #[serde(rename = "box")]
    box_: [S; 4],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    keypoints: Option<Vec<(u8, S, S, S)>>,
}

fn parse_detection<S: Scalar>(raw: TraceDetection<S>) -> Result<Detection<S>, String> {
    let class: KeyObjectClass = raw.class.parse().map_err(|e| format!("{e}"))?;
    let [x0, y0, x1, y1] = raw.box_;
    let box_ = BoundingBox::new(x0, y0, x1, y1).map_err(|e| format!("{e}"))?;
    let detection = Detection::new(class, raw.conf, box_).map_err(|e| format!("{e}"))?;
    match raw.keypoints {
        None => Ok(detection),
        Some(kps) => {
            let keypoints = kps
                .into_iter()
                .map(|(id, x, y, conf)| Keypoint::new(id, x, y, conf))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("{e}"))?;
            detection.with_keypoints(keypoints).map_err(|e| format!("{e}"))
        }
    }
}

/// Replays recorded detections. Read-only after load, so concurrent
/// `detect` calls are free.
pub struct TraceSpatialBackend<S: Scalar> {
    by_frame: BTreeMap<u64, Vec<Detection<S>>>,
    has_pose: bool,
}

impl<S: Scalar> TraceSpatialBackend<S> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceFormatError> {
        let path = path.as_ref();
        let err = |line: usize, reason: String| TraceFormatError {
            path: path.display().to_string(),
            line,
            reason,
        };
        let file = File::open(path).map_err(|e| err(0, e.to_string()))?;
        let reader = BufReader::new(file);
        let mut by_frame = BTreeMap::new();
        let mut has_pose = false;
        for (line_no, line) in reader.lines().enumerate() {
            let line_no = line_no + 1;
            let line = line.map_err(|e| err(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine<S> =
                serde_json::from_str(&line).map_err(|e| err(line_no, e.to_string()))?;
            let mut detections = Vec::with_capacity(parsed.detections.len());
            for raw in parsed.detections {
                let det = parse_detection(raw).map_err(|reason| err(line_no, reason))?;
                has_pose |= det.keypoints.is_some();
                detections.push(det);
            }
            if by_frame.insert(parsed.frame, detections).is_some() {
                return Err(err(line_no, format!("duplicate frame {}", parsed.frame)));
            }
        }
        Ok(Self { by_frame, has_pose })
    }

    pub fn len(&self) -> usize {
        self.by_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_frame.is_empty()
    }

    /// Whether any recorded detection carries pose keypoints.
    pub fn has_pose_entries(&self) -> bool {
        self.has_pose
    }

    /// Per-class detection counts, for `inspect`.
    pub fn class_histogram(&self) -> BTreeMap<KeyObjectClass, usize> {
        let mut hist = BTreeMap::new();
        for det in self.by_frame.values().flatten() {
            *hist.entry(det.object_class).or_insert(0) += 1;
        }
        hist
    }
}

impl<S: Scalar> SpatialBackend<S> for TraceSpatialBackend<S> {
    fn detect(&self, frame: &Frame) -> Result<Vec<Detection<S>>, BackendError> {
        Ok(self
            .by_frame
            .get(&frame.index())
            .cloned()
            .unwrap_or_default())
    }

    fn has_pose(&self) -> bool {
        self.has_pose
    }
}

/// Write a spatial trace file from (frame_index, detections) entries.
pub fn write_spatial_trace<S: Scalar>(
    path: impl AsRef<Path>,
    entries: &BTreeMap<u64, Vec<Detection<S>>>,
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for (&frame, detections) in entries {
        let line = TraceLine {
            frame,
            detections: detections
                .iter()
                .map(|d| TraceDetection {
                    class: d.object_class.wire_name().to_string(),
                    conf: d.confidence,
                    box_: d.box_.as_array(),
                    keypoints: d.keypoints.as_ref().map(|kps| {
                        kps.iter()
                            .map(|k| (k.joint_id, k.x, k.y, k.confidence))
                            .collect()
                    }),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
