//! Trace-replay temporal backend: recorded per-window score vectors.
//!
//! File format is JSON Lines, one object per line:
//! `{"window": int, "scores": {"fight": f, "gunshot": f, "fire": f,
//! "normal": f}}`. Score keys may omit classes (three-class runs omit
//! "fire"). Scores not summing to 1 within 1e-6 are renormalized on load
//! with a warning.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BackendError, TraceFormatError};
use crate::model::{AnomalyClass, ClassProfile, ScoreMap, SequenceWindow, TemporalResult};
use crate::scalar::Scalar;
use crate::temporal::TemporalBackend;

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "")]
struct TraceLine<S: Scalar> {
    window: u64,
    scores: BTreeMap<String, S>,
}

/// Replays recorded score vectors keyed by window index. A window with no
/// recorded entry is a backend error, unlike the spatial trace where a
/// missing frame just means no detections.
pub struct TraceTemporalBackend<S: Scalar> {
    by_window: BTreeMap<u64, ScoreMap<S>>,
    profile: ClassProfile,
}

impl<S: Scalar> TraceTemporalBackend<S> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceFormatError> {
        let path = path.as_ref();
        let err = |line: usize, reason: String| TraceFormatError {
            path: path.display().to_string(),
            line,
            reason,
        };
        let file = File::open(path).map_err(|e| err(0, e.to_string()))?;
        let reader = BufReader::new(file);
        let mut by_window = BTreeMap::new();
        let mut saw_fire = false;
        for (line_no, line) in reader.lines().enumerate() {
            let line_no = line_no + 1;
            let line = line.map_err(|e| err(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine<S> =
                serde_json::from_str(&line).map_err(|e| err(line_no, e.to_string()))?;
            let mut scores: BTreeMap<AnomalyClass, S> = BTreeMap::new();
            for (name, value) in parsed.scores {
                let class: AnomalyClass = name
                    .parse()
                    .map_err(|e| err(line_no, format!("{e}")))?;
                saw_fire |= class == AnomalyClass::Fire;
                scores.insert(class, value);
            }
            let map = match ScoreMap::new(scores.clone()) {
                Ok(map) => map,
                Err(_) => {
                    log::warn!(
                        "temporal trace {} line {line_no}: scores do not sum to 1, renormalizing",
                        path.display()
                    );
                    ScoreMap::normalize(scores).map_err(|e| err(line_no, e.to_string()))?
                }
            };
            if by_window.insert(parsed.window, map).is_some() {
                return Err(err(line_no, format!("duplicate window {}", parsed.window)));
            }
        }
        let profile = if saw_fire {
            ClassProfile::FourClass
        } else {
            ClassProfile::ThreeClass
        };
        Ok(Self { by_window, profile })
    }

    pub fn len(&self) -> usize {
        self.by_window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_window.is_empty()
    }

    pub fn scores_for(&self, window_index: u64) -> Option<&ScoreMap<S>> {
        self.by_window.get(&window_index)
    }

    pub fn profile(&self) -> ClassProfile {
        self.profile
    }
}

impl<S: Scalar> TemporalBackend<S> for TraceTemporalBackend<S> {
    fn classify(&self, window: &SequenceWindow) -> Result<TemporalResult<S>, BackendError> {
        let scores = self
            .by_window
            .get(&window.window_index())
            .ok_or(BackendError::MissingTraceEntry {
                window_index: window.window_index(),
            })?;
        Ok(TemporalResult::new(scores.clone()))
    }

    fn class_profile(&self) -> ClassProfile {
        self.profile
    }
}

/// Write a temporal trace file from (window_index, scores) entries.
pub fn write_temporal_trace<S: Scalar>(
    path: impl AsRef<Path>,
    entries: &BTreeMap<u64, ScoreMap<S>>,
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for (&window, scores) in entries {
        let line = TraceLine {
            window,
            scores: scores
                .iter()
                .map(|(c, v)| (c.wire_name().to_string(), v))
                .collect(),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
