//! Synthetic spatial backend: a declared sleep plus a pure content rule,
//! for benchmark and demo runs without any model weights.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::model::{BoundingBox, Detection, Frame, KeyObjectClass};
use crate::scalar::Scalar;
use crate::spatial::SpatialBackend;

/// Content rule applied after the latency sleep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialRule {
    /// Never detects anything.
    None,
    /// Emits one Flame detection tightly boxing the red-dominant pixels,
    /// when they cover at least 1% of the frame.
    RedFlame,
}

/// Fraction of red-dominant pixels required before RedFlame fires.
const RED_FLAME_MIN_FRACTION: f64 = 0.01;

pub struct SyntheticSpatialBackend {
    latency_ms: f64,
    rule: SpatialRule,
}

impl SyntheticSpatialBackend {
    pub fn new(latency_ms: f64, rule: SpatialRule) -> Self {
        Self { latency_ms, rule }
    }
}

fn red_dominant(px: [u8; 3]) -> bool {
    let [r, g, b] = px;
    r >= 100 && r as u16 >= 2 * g.max(b) as u16
}

fn detect_red_flame<S: Scalar>(frame: &Frame) -> Option<Detection<S>> {
    let (w, h) = (frame.width(), frame.height());
    let mut count = 0usize;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for y in 0..h {
        for x in 0..w {
            if red_dominant(frame.pixel(x, y)) {
                count += 1;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    let total = (w as usize) * (h as usize);
    if total == 0 || (count as f64) < RED_FLAME_MIN_FRACTION * total as f64 {
        return None;
    }
    let box_ = BoundingBox::new(
        S::from_f64_lossy(min_x as f64),
        S::from_f64_lossy(min_y as f64),
        S::from_f64_lossy((max_x + 1) as f64),
        S::from_f64_lossy((max_y + 1) as f64),
    )
    .expect("min <= max by construction");
    Some(
        Detection::new(KeyObjectClass::Flame, S::from_f64_lossy(0.9), box_)
            .expect("0.9 is a valid confidence"),
    )
}

impl<S: Scalar> SpatialBackend<S> for SyntheticSpatialBackend {
    fn detect(&self, frame: &Frame) -> Result<Vec<Detection<S>>, BackendError> {
        if self.latency_ms > 0.0 {
            thread::sleep(Duration::from_secs_f64(self.latency_ms / 1000.0));
        }
        let detections = match self.rule {
            SpatialRule::None => vec![],
            SpatialRule::RedFlame => detect_red_flame(frame).into_iter().collect(),
        };
        Ok(detections)
    }

    fn declared_latency_ms(&self) -> Option<f64> {
        Some(self.latency_ms)
    }
}
