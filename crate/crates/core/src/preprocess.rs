//! Serial-mode frame enrichment: background masking with configurable
//! fallback, and skeleton rendering with or without background.
//!
//! Masking runs on original-resolution frames (detection boxes are in
//! source space), so in the serial path enrichment happens before the
//! model-space resize. All functions here are pure over immutable frames.
//!
//! Pixel membership convention: a pixel samples at its center
//! (x + 0.5, y + 0.5), matching the resizer's center alignment. The pixel is
//! inside a box when `x_min <= x + 0.5 < x_max && y_min <= y + 0.5 < y_max`,
//! and on a limb when its center lies within half the line thickness of the
//! segment, so a 2px-thick axis-aligned limb covers exactly two pixel rows.

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::ingest::PackedVideoWriter;
use crate::model::{
    Detection, Frame, SequenceWindow, SpatialResult, COCO_SKELETON_EDGES,
};
use crate::scalar::Scalar;

/// The serial-mode enrichment applied per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PreprocessVariant {
    /// No enrichment: serial mode's temporal input equals the raw window.
    #[serde(rename = "identity")]
    Identity,
    /// Keep pixels inside detection boxes; keep the original frame when
    /// nothing was detected.
    #[serde(rename = "mask-keep")]
    MaskKeepOriginal,
    /// Keep pixels inside detection boxes; substitute an entirely black
    /// frame when nothing was detected.
    #[serde(rename = "mask-black")]
    MaskBlackFallback,
    /// Draw detected skeletons over the original frame.
    #[serde(rename = "skeleton-bg")]
    SkeletonOnBackground,
    /// Draw detected skeletons on a black canvas.
    #[serde(rename = "skeleton-black")]
    SkeletonOnBlack,
}

impl PreprocessVariant {
    pub const ALL: [PreprocessVariant; 5] = [
        PreprocessVariant::Identity,
        PreprocessVariant::MaskKeepOriginal,
        PreprocessVariant::MaskBlackFallback,
        PreprocessVariant::SkeletonOnBackground,
        PreprocessVariant::SkeletonOnBlack,
    ];
}

impl std::str::FromStr for PreprocessVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(PreprocessVariant::Identity),
            "mask-keep" => Ok(PreprocessVariant::MaskKeepOriginal),
            "mask-black" => Ok(PreprocessVariant::MaskBlackFallback),
            "skeleton-bg" => Ok(PreprocessVariant::SkeletonOnBackground),
            "skeleton-black" => Ok(PreprocessVariant::SkeletonOnBlack),
            other => Err(format!("unknown preprocess variant {other:?}")),
        }
    }
}

/// What to substitute when a frame has no detections at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskFallback {
    KeepOriginal,
    BlackFrame,
}

/// Skeleton drawing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonStyle {
    pub line_thickness_px: f64,
    pub min_joint_conf: f64,
    pub color: [u8; 3],
}

impl Default for SkeletonStyle {
    fn default() -> Self {
        Self {
            line_thickness_px: 2.0,
            min_joint_conf: 0.3,
            color: [255, 255, 255],
        }
    }
}

/// Per-window enrichment tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichDiagnostics {
    /// Person detections skipped by skeleton rendering for lack of keypoints.
    pub persons_without_keypoints: u64,
    /// Frames that reused the nearest preceding analyzed frame's detections.
    pub frames_with_held_detections: u64,
}

impl EnrichDiagnostics {
    pub fn merge(&mut self, other: &EnrichDiagnostics) {
        self.persons_without_keypoints += other.persons_without_keypoints;
        self.frames_with_held_detections += other.frames_with_held_detections;
    }
}

/// Integer pixel range [start, end) whose centers fall in the continuous
/// span [lo, hi), clipped to [0, limit).
fn pixel_range(lo: f64, hi: f64, limit: u32) -> (u32, u32) {
    let start = (lo - 0.5).ceil().max(0.0) as i64;
    let end = ((hi - 0.5).ceil().min(limit as f64) as i64).max(0);
    if end <= start {
        (0, 0)
    } else {
        (start as u32, end as u32)
    }
}

/// Zero out everything outside the union of detection boxes.
///
/// Boxes reaching outside the frame are clipped, never an error. With no
/// detections the fallback decides between the original frame and an
/// all-black one.
pub fn apply_mask<S: Scalar>(
    frame: &Frame,
    detections: &[Detection<S>],
    fallback: MaskFallback,
) -> Frame {
    if detections.is_empty() {
        return match fallback {
            MaskFallback::KeepOriginal => frame.clone(),
            MaskFallback::BlackFrame => {
                Frame::black(frame.index(), frame.timestamp_ms(), frame.width(), frame.height())
            }
        };
    }
    let (w, h) = (frame.width(), frame.height());
    let src = frame.pixels();
    let mut out = vec![0u8; src.len()];
    for det in detections {
        let b = &det.box_;
        let (x0, x1) = pixel_range(b.x_min().to_f64_lossy(), b.x_max().to_f64_lossy(), w);
        let (y0, y1) = pixel_range(b.y_min().to_f64_lossy(), b.y_max().to_f64_lossy(), h);
        for y in y0..y1 {
            let row = y as usize * w as usize * 3;
            let (from, to) = (row + x0 as usize * 3, row + x1 as usize * 3);
            out[from..to].copy_from_slice(&src[from..to]);
        }
    }
    frame
        .with_pixels(w, h, out)
        .expect("mask preserves buffer dimensions")
}

/// Where skeletons are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkeletonCanvas {
    OnBackground,
    OnBlack,
}

fn dist2_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    let (ex, ey) = (px - cx, py - cy);
    ex * ex + ey * ey
}

fn draw_segment(
    pixels: &mut [u8],
    width: u32,
    height: u32,
    a: (f64, f64),
    b: (f64, f64),
    half_thickness: f64,
    color: [u8; 3],
) {
    let pad = half_thickness + 1.0;
    let x_lo = (a.0.min(b.0) - pad).floor().max(0.0) as u32;
    let x_hi = ((a.0.max(b.0) + pad).ceil() as i64).clamp(0, width as i64 - 1) as u32;
    let y_lo = (a.1.min(b.1) - pad).floor().max(0.0) as u32;
    let y_hi = ((a.1.max(b.1) + pad).ceil() as i64).clamp(0, height as i64 - 1) as u32;
    let r2 = half_thickness * half_thickness;
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            if dist2_to_segment(cx, cy, a.0, a.1, b.0, b.1) <= r2 {
                let i = (y as usize * width as usize + x as usize) * 3;
                pixels[i..i + 3].copy_from_slice(&color);
            }
        }
    }
}

/// Draw limb segments for each person with keypoints, over the frame or a
/// black canvas. A limb is drawn only when both endpoint joints meet the
/// confidence floor. Drawing order is person order then fixed edge order.
///
/// Persons without keypoints are skipped; the count is returned for the
/// per-window diagnostics tally.
pub fn render_skeleton<S: Scalar>(
    frame: &Frame,
    persons: &[Detection<S>],
    canvas: SkeletonCanvas,
    style: &SkeletonStyle,
) -> (Frame, u64) {
    let (w, h) = (frame.width(), frame.height());
    let mut pixels = match canvas {
        SkeletonCanvas::OnBackground => frame.pixels().to_vec(),
        SkeletonCanvas::OnBlack => vec![0u8; frame.pixels().len()],
    };
    let mut skipped = 0u64;
    let half = style.line_thickness_px / 2.0;
    for person in persons {
        let Some(keypoints) = person.keypoints.as_ref() else {
            skipped += 1;
            continue;
        };
        let mut by_joint: [Option<(f64, f64, f64)>; 17] = [None; 17];
        for kp in keypoints {
            by_joint[kp.joint_id as usize] = Some((
                kp.x.to_f64_lossy(),
                kp.y.to_f64_lossy(),
                kp.confidence.to_f64_lossy(),
            ));
        }
        for &(ja, jb) in COCO_SKELETON_EDGES.iter() {
            let (Some(a), Some(b)) = (by_joint[ja as usize], by_joint[jb as usize]) else {
                continue;
            };
            if a.2 < style.min_joint_conf || b.2 < style.min_joint_conf {
                continue;
            }
            draw_segment(&mut pixels, w, h, (a.0, a.1), (b.0, b.1), half, style.color);
        }
    }
    let out = frame
        .with_pixels(w, h, pixels)
        .expect("canvas preserves buffer dimensions");
    (out, skipped)
}

/// Apply a preprocessing variant to every frame of a window.
///
/// Frames the spatial stage did not analyze reuse the nearest preceding
/// analyzed frame's detections (zero-order hold). Identity returns the
/// window unchanged. The output window preserves index and span.
pub fn enrich_window<S: Scalar>(
    window: &SequenceWindow,
    result: &SpatialResult<S>,
    variant: PreprocessVariant,
    style: &SkeletonStyle,
) -> (SequenceWindow, EnrichDiagnostics) {
    let mut diagnostics = EnrichDiagnostics::default();
    if variant == PreprocessVariant::Identity {
        return (window.clone(), diagnostics);
    }
    let empty: Vec<Detection<S>> = Vec::new();
    let mut held: Option<&Vec<Detection<S>>> = None;
    let mut frames = Vec::with_capacity(window.len());
    for frame in window.frames() {
        let detections = match result.per_frame().get(&frame.index()) {
            Some(own) => {
                held = Some(own);
                own
            }
            None => {
                if held.is_some() {
                    diagnostics.frames_with_held_detections += 1;
                }
                held.unwrap_or(&empty)
            }
        };
        let enriched = match variant {
            PreprocessVariant::Identity => unreachable!("handled above"),
            PreprocessVariant::MaskKeepOriginal => {
                apply_mask(frame, detections, MaskFallback::KeepOriginal)
            }
            PreprocessVariant::MaskBlackFallback => {
                apply_mask(frame, detections, MaskFallback::BlackFrame)
            }
            PreprocessVariant::SkeletonOnBackground | PreprocessVariant::SkeletonOnBlack => {
                let canvas = if variant == PreprocessVariant::SkeletonOnBackground {
                    SkeletonCanvas::OnBackground
                } else {
                    SkeletonCanvas::OnBlack
                };
                let persons: Vec<Detection<S>> = detections
                    .iter()
                    .filter(|d| d.object_class == crate::model::KeyObjectClass::Person)
                    .cloned()
                    .collect();
                let (out, skipped) = render_skeleton(frame, &persons, canvas, style);
                diagnostics.persons_without_keypoints += skipped;
                out
            }
        };
        frames.push(enriched);
    }
    let enriched = window
        .with_frames(frames)
        .expect("enrichment preserves frame indices");
    (enriched, diagnostics)
}

/// Dump an enriched window as a packed raw video for visual inspection.
pub fn dump_window_packed(
    dir: &std::path::Path,
    window: &SequenceWindow,
    fps_milli: u32,
) -> Result<std::path::PathBuf, IngestError> {
    std::fs::create_dir_all(dir).map_err(|e| IngestError::Io {
        context: dir.display().to_string(),
        source: e,
    })?;
    let path = dir.join(format!("window_{:05}.stap", window.window_index()));
    let first = &window.frames()[0];
    let mut writer = PackedVideoWriter::create(&path, first.width(), first.height(), fps_milli)?;
    for frame in window.frames() {
        writer.write_frame(frame)?;
    }
    writer.finish()?;
    Ok(path)
}
