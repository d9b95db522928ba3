//! Turning a video source into sampled, resized frames and fixed-length
//! windows.
//!
//! The sampler and windower are pull-based iterator stages, so a slow
//! consumer naturally stalls the producer; the orchestrator adds bounded
//! queues between threads on top of this.

pub mod source;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::model::{Frame, SequenceWindow, DEFAULT_WINDOW_SIZE, MODEL_FRAME_EDGE};

pub use source::{
    generate_frame, write_frame_directory, DirectorySource, FrameSource, PackedVideoReader,
    PackedVideoWriter, SourceFrames, SourceMetadata, SyntheticPattern, SyntheticSource,
    PACKED_MAGIC,
};

/// What to do with an incomplete final window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Emit nothing for a partial final group.
    Drop,
    /// Right-pad the partial group by repeating its final frame.
    PadLast,
}

impl std::str::FromStr for TailPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(TailPolicy::Drop),
            "pad-last" => Ok(TailPolicy::PadLast),
            other => Err(format!("unknown tail policy {other:?}")),
        }
    }
}

/// Frame sampling and window assembly parameters.
///
/// `frame_interval` keeps every Nth source frame; `window_stride` is in
/// sampled-frame units and may be smaller than `window_size` (overlap) or
/// larger (gaps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    pub frame_interval: u32,
    pub window_size: usize,
    pub window_stride: usize,
    pub tail_policy: TailPolicy,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self {
            frame_interval: 1,
            window_size: DEFAULT_WINDOW_SIZE,
            window_stride: DEFAULT_WINDOW_SIZE,
            tail_policy: TailPolicy::Drop,
        }
    }
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.frame_interval < 1 {
            return Err("frame_interval must be >= 1".to_string());
        }
        if self.window_size < 1 {
            return Err("window_size must be >= 1".to_string());
        }
        if self.window_stride < 1 {
            return Err("window_stride must be >= 1".to_string());
        }
        Ok(())
    }
}

/// Keep exactly the frames whose source index is divisible by the interval,
/// preserving order and passing stream errors through.
pub fn sample<I>(
    frames: I,
    policy: &SamplingPolicy,
) -> impl Iterator<Item = Result<Frame, IngestError>>
where
    I: Iterator<Item = Result<Frame, IngestError>>,
{
    let interval = policy.frame_interval as u64;
    frames.filter(move |item| match item {
        Ok(frame) => frame.index() % interval == 0,
        Err(_) => true,
    })
}

/// Streaming window assembler over an already-sampled frame stream.
///
/// Window `k` covers sampled positions `[k*stride, k*stride + size)`.
pub struct Windower<I> {
    inner: Option<I>,
    size: usize,
    stride: usize,
    tail_policy: TailPolicy,
    /// (sampled position, frame) pairs not yet consumed by every window.
    buf: VecDeque<(u64, Frame)>,
    next_window: u64,
    sampled_count: u64,
}

/// Assemble fixed-length windows from a sampled frame stream.
pub fn make_windows<I>(frames: I, policy: &SamplingPolicy) -> Windower<I>
where
    I: Iterator<Item = Result<Frame, IngestError>>,
{
    Windower {
        inner: Some(frames),
        size: policy.window_size,
        stride: policy.window_stride,
        tail_policy: policy.tail_policy,
        buf: VecDeque::new(),
        next_window: 0,
        sampled_count: 0,
    }
}

impl<I> Windower<I>
where
    I: Iterator<Item = Result<Frame, IngestError>>,
{
    fn drop_consumed(&mut self) {
        let start = self.next_window * self.stride as u64;
        while matches!(self.buf.front(), Some((pos, _)) if *pos < start) {
            self.buf.pop_front();
        }
    }

    fn try_emit_full(&mut self) -> Option<SequenceWindow> {
        self.drop_consumed();
        if self.buf.len() < self.size {
            return None;
        }
        let frames: Vec<Frame> = self.buf.iter().take(self.size).map(|(_, f)| f.clone()).collect();
        let window = SequenceWindow::new(self.next_window, frames)
            .expect("sampled frames have strictly increasing indices");
        self.next_window += 1;
        Some(window)
    }

    fn try_emit_padded(&mut self) -> Option<SequenceWindow> {
        self.drop_consumed();
        let start = self.next_window * self.stride as u64;
        if start >= self.sampled_count || self.buf.is_empty() {
            return None;
        }
        let mut frames: Vec<Frame> = self.buf.iter().map(|(_, f)| f.clone()).collect();
        let last = frames.last().cloned().expect("nonempty buffer");
        while frames.len() < self.size {
            frames.push(last.clone());
        }
        let window = SequenceWindow::new(self.next_window, frames)
            .expect("pad tail repeats only the final frame");
        self.next_window += 1;
        Some(window)
    }
}

impl<I> Iterator for Windower<I>
where
    I: Iterator<Item = Result<Frame, IngestError>>,
{
    type Item = Result<SequenceWindow, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(window) = self.try_emit_full() {
                return Some(Ok(window));
            }
            let Some(inner) = self.inner.as_mut() else {
                // Input exhausted: handle the tail.
                return match self.tail_policy {
                    TailPolicy::Drop => None,
                    TailPolicy::PadLast => self.try_emit_padded().map(Ok),
                };
            };
            match inner.next() {
                Some(Ok(frame)) => {
                    let pos = self.sampled_count;
                    self.sampled_count += 1;
                    self.buf.push_back((pos, frame));
                }
                Some(Err(e)) => return Some(Err(e)),
                None => {
                    self.inner = None;
                }
            }
        }
    }
}

/// Deterministic bilinear resample to an arbitrary RGB8 size.
///
/// Center-aligned sampling (`src = (dst + 0.5) * scale - 0.5`) with edge
/// clamp, f64 weights, round-half-away per channel. Equal input and output
/// dimensions return the input byte-identically.
pub fn resize_bilinear(frame: &Frame, out_w: u32, out_h: u32) -> Result<Frame, IngestError> {
    let (w, h) = (frame.width(), frame.height());
    if w == 0 || h == 0 || out_w == 0 || out_h == 0 {
        return Err(IngestError::ZeroDimension {
            width: w,
            height: h,
        });
    }
    if (w, h) == (out_w, out_h) {
        return Ok(frame.clone());
    }
    let scale_x = w as f64 / out_w as f64;
    let scale_y = h as f64 / out_h as f64;
    let src = frame.pixels();
    let stride = w as usize * 3;
    let mut out = vec![0u8; out_w as usize * out_h as usize * 3];
    for oy in 0..out_h {
        let sy = ((oy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h as usize - 1);
        let wy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = ((ox as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w as usize - 1);
            let wx = sx - x0 as f64;
            let o = (oy as usize * out_w as usize + ox as usize) * 3;
            for c in 0..3 {
                let p00 = src[y0 * stride + x0 * 3 + c] as f64;
                let p10 = src[y0 * stride + x1 * 3 + c] as f64;
                let p01 = src[y1 * stride + x0 * 3 + c] as f64;
                let p11 = src[y1 * stride + x1 * 3 + c] as f64;
                let v = p00 * (1.0 - wx) * (1.0 - wy)
                    + p10 * wx * (1.0 - wy)
                    + p01 * (1.0 - wx) * wy
                    + p11 * wx * wy;
                out[o + c] = v.round() as u8;
            }
        }
    }
    frame
        .with_pixels(out_w, out_h, out)
        .map_err(IngestError::Model)
}

/// Resize a frame to the temporal model's input size.
pub fn resize_to_model(frame: &Frame) -> Result<Frame, IngestError> {
    resize_bilinear(frame, MODEL_FRAME_EDGE, MODEL_FRAME_EDGE)
}

/// Resize every frame of a window to model space, preserving index and span.
pub fn resize_window_to_model(window: &SequenceWindow) -> Result<SequenceWindow, IngestError> {
    let frames = window
        .frames()
        .iter()
        .map(resize_to_model)
        .collect::<Result<Vec<_>, _>>()?;
    window.with_frames(frames).map_err(IngestError::Model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MODEL_FRAME_EDGE;

    fn frames(n: u64) -> Vec<Result<Frame, IngestError>> {
        (0..n).map(|i| Ok(Frame::black(i, i as f64, 2, 2))).collect()
    }

    fn policy(interval: u32, size: usize, stride: usize, tail: TailPolicy) -> SamplingPolicy {
        SamplingPolicy {
            frame_interval: interval,
            window_size: size,
            window_stride: stride,
            tail_policy: tail,
        }
    }

    #[test]
    fn interval_one_is_identity_sampling() {
        let p = policy(1, 15, 15, TailPolicy::Drop);
        let out: Vec<_> = sample(frames(30).into_iter(), &p).collect();
        assert_eq!(out.len(), 30);
    }

    #[test]
    fn interval_three_keeps_indices_divisible_by_three() {
        let p = policy(3, 15, 15, TailPolicy::Drop);
        let out: Vec<u64> = sample(frames(30).into_iter(), &p)
            .map(|f| f.unwrap().index())
            .collect();
        let expected: Vec<u64> = (0..30).filter(|i| i % 3 == 0).collect();
        assert_eq!(out, expected);
        assert_eq!(out.len(), 10);
        assert_eq!(out.last(), Some(&27));
    }

    #[test]
    fn two_frames_interval_five_keeps_only_frame_zero() {
        let p = policy(5, 15, 15, TailPolicy::Drop);
        let out: Vec<u64> = sample(frames(2).into_iter(), &p)
            .map(|f| f.unwrap().index())
            .collect();
        assert_eq!(out, vec![0]);
    }

    #[test]
    fn exact_tiling_thirty_frames_two_windows() {
        let p = policy(1, 15, 15, TailPolicy::Drop);
        let windows: Vec<_> = make_windows(frames(30).into_iter(), &p)
            .map(|w| w.unwrap())
            .collect();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].source_span(), (0, 14));
        assert_eq!(windows[1].source_span(), (15, 29));
        assert_eq!(windows[1].window_index(), 1);
    }

    #[test]
    fn sixteen_frames_drop_yields_one_window() {
        let p = policy(1, 15, 15, TailPolicy::Drop);
        let windows: Vec<_> = make_windows(frames(16).into_iter(), &p).collect();
        assert_eq!(windows.len(), 1);
    }

    #[test]
    fn overlapping_stride_five() {
        let p = policy(1, 15, 5, TailPolicy::Drop);
        let windows: Vec<_> = make_windows(frames(20).into_iter(), &p)
            .map(|w| w.unwrap())
            .collect();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[0].source_span(), (0, 14));
        assert_eq!(windows[1].source_span(), (5, 19));
    }

    #[test]
    fn pad_last_repeats_final_frame() {
        let p = policy(1, 15, 15, TailPolicy::PadLast);
        let windows: Vec<_> = make_windows(frames(16).into_iter(), &p)
            .map(|w| w.unwrap())
            .collect();
        assert_eq!(windows.len(), 2);
        let tail = &windows[1];
        assert_eq!(tail.len(), 15);
        assert_eq!(tail.source_span(), (15, 15));
        assert!(tail.frames().iter().all(|f| f.index() == 15));
    }

    #[test]
    fn stride_larger_than_size_leaves_gaps() {
        let p = policy(1, 2, 5, TailPolicy::Drop);
        let windows: Vec<_> = make_windows(frames(12).into_iter(), &p)
            .map(|w| w.unwrap())
            .collect();
        // Groups at 0, 5, 10: the last needs positions 10, 11 which exist.
        assert_eq!(windows.len(), 3);
        assert_eq!(windows[0].source_span(), (0, 1));
        assert_eq!(windows[1].source_span(), (5, 6));
        assert_eq!(windows[2].source_span(), (10, 11));
    }

    #[test]
    fn stream_errors_pass_through() {
        let mut items = frames(20);
        items[7] = Err(IngestError::Decode {
            position: 7,
            reason: "bad".to_string(),
        });
        let p = policy(1, 5, 5, TailPolicy::Drop);
        let results: Vec<_> = make_windows(items.into_iter(), &p).collect();
        // One full window before the error, then the error item.
        assert!(results[0].is_ok());
        assert!(results[1].is_err());
    }

    #[test]
    fn streaming_and_batch_windowing_agree() {
        // The windower is pull-based, and feeding one frame at a time through
        // a chained iterator must match feeding them all at once.
        let p = policy(1, 4, 3, TailPolicy::Drop);
        let batch: Vec<_> = make_windows(frames(11).into_iter(), &p)
            .map(|w| w.unwrap())
            .collect();
        let one_by_one = frames(11).into_iter().flat_map(std::iter::once);
        let streamed: Vec<_> = make_windows(one_by_one, &p).map(|w| w.unwrap()).collect();
        assert_eq!(batch, streamed);
    }

    #[test]
    fn window_spans_only_reference_sampled_indices() {
        let p = policy(3, 4, 2, TailPolicy::Drop);
        let sampled: Vec<u64> = sample(frames(40).into_iter(), &p)
            .map(|f| f.unwrap().index())
            .collect();
        let windows: Vec<_> = make_windows(
            sample(frames(40).into_iter(), &p),
            &p,
        )
        .map(|w| w.unwrap())
        .collect();
        assert!(!windows.is_empty());
        for w in &windows {
            for f in w.frames() {
                assert!(sampled.contains(&f.index()));
            }
        }
    }

    #[test]
    fn resize_identity_is_byte_identical() {
        let f = generate_frame(
            SyntheticPattern::Noise { seed: 1 },
            0,
            MODEL_FRAME_EDGE,
            MODEL_FRAME_EDGE,
            30.0,
        );
        let out = resize_to_model(&f).unwrap();
        assert_eq!(out.pixels(), f.pixels());
    }

    #[test]
    fn resize_constant_stays_constant() {
        let f = generate_frame(
            SyntheticPattern::Constant {
                r: 17,
                g: 200,
                b: 3,
            },
            0,
            224,
            224,
            30.0,
        );
        let out = resize_to_model(&f).unwrap();
        assert_eq!(out.width(), MODEL_FRAME_EDGE);
        assert!(out
            .pixels()
            .chunks_exact(3)
            .all(|px| px == [17, 200, 3]));
    }

    #[test]
    fn resize_rejects_zero_dimension() {
        let f = Frame::new(0, 0.0, 0, 4, vec![]).unwrap();
        assert!(matches!(
            resize_to_model(&f),
            Err(IngestError::ZeroDimension { .. })
        ));
    }

    // Reference resampler: same convention, written as a straight per-pixel
    // transcription independent of the production loop.
    fn reference_bilinear(frame: &Frame, out_w: u32, out_h: u32) -> Vec<u8> {
        let (w, h) = (frame.width() as usize, frame.height() as usize);
        let mut out = Vec::with_capacity(out_w as usize * out_h as usize * 3);
        for oy in 0..out_h as usize {
            for ox in 0..out_w as usize {
                for c in 0..3 {
                    let fy = ((oy as f64 + 0.5) * (h as f64 / out_h as f64) - 0.5)
                        .clamp(0.0, h as f64 - 1.0);
                    let fx = ((ox as f64 + 0.5) * (w as f64 / out_w as f64) - 0.5)
                        .clamp(0.0, w as f64 - 1.0);
                    let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
                    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
                    let (dy, dx) = (fy - y0 as f64, fx - x0 as f64);
                    let at = |yy: usize, xx: usize| frame.pixels()[(yy * w + xx) * 3 + c] as f64;
                    let v = at(y0, x0) * (1.0 - dx) * (1.0 - dy)
                        + at(y0, x1) * dx * (1.0 - dy)
                        + at(y1, x0) * (1.0 - dx) * dy
                        + at(y1, x1) * dx * dy;
                    out.push(v.round() as u8);
                }
            }
        }
        out
    }

    #[test]
    fn checkerboard_downsample_matches_reference_resampler() {
        let f = generate_frame(SyntheticPattern::Checkerboard { cell: 1 }, 0, 224, 224, 30.0);
        let out = resize_to_model(&f).unwrap();
        let expected = reference_bilinear(&f, MODEL_FRAME_EDGE, MODEL_FRAME_EDGE);
        assert_eq!(out.pixels(), &expected[..]);
    }

    #[test]
    fn noise_resize_matches_reference_resampler() {
        for seed in 0..4 {
            let f = generate_frame(SyntheticPattern::Noise { seed }, 0, 97, 63, 30.0);
            let out = resize_to_model(&f).unwrap();
            let expected = reference_bilinear(&f, MODEL_FRAME_EDGE, MODEL_FRAME_EDGE);
            assert_eq!(out.pixels(), &expected[..]);
        }
    }
}
