//! Frame sources: packed raw video files, raw-frame directories, and
//! synthetic generators.
//!
//! Packed raw video layout (all integers little-endian):
//! magic `"STAP1"`, width u32, height u32, frame_count u64, fps_milli u32,
//! then `frame_count` frames as consecutive RGB8 buffers of
//! `width * height * 3` bytes. `fps_milli` is frames-per-second x 1000.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::IngestError;
use crate::model::Frame;

pub const PACKED_MAGIC: &[u8; 5] = b"STAP1";
pub const PACKED_HEADER_LEN: u64 = 5 + 4 + 4 + 8 + 4;

/// Stream-level facts a source knows up front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMetadata {
    pub width: u32,
    pub height: u32,
    pub fps: Option<f64>,
    /// None for continuous (never-ending) sources.
    pub frame_count: Option<u64>,
}

impl SourceMetadata {
    pub fn duration_ms(&self) -> Option<f64> {
        match (self.fps, self.frame_count) {
            (Some(fps), Some(count)) if fps > 0.0 => Some(count as f64 * 1000.0 / fps),
            _ => None,
        }
    }
}

/// A stream of frames in strictly increasing index order. Finished sources
/// signal end-of-stream by returning `None` exactly once; continuous sources
/// never do.
pub trait FrameSource: Send {
    fn metadata(&self) -> SourceMetadata;
    fn next_frame(&mut self) -> Option<Result<Frame, IngestError>>;

    /// Short identifier for reports (file stem or generator name).
    fn source_id(&self) -> String {
        "source".to_string()
    }
}

/// Iterator adapter over a boxed source.
pub struct SourceFrames {
    source: Box<dyn FrameSource>,
}

impl SourceFrames {
    pub fn new(source: Box<dyn FrameSource>) -> Self {
        Self { source }
    }
}

impl Iterator for SourceFrames {
    type Item = Result<Frame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.source.next_frame()
    }
}

fn io_err(context: &str, source: std::io::Error) -> IngestError {
    IngestError::Io {
        context: context.to_string(),
        source,
    }
}

fn timestamp_ms(index: u64, fps_milli: u32) -> f64 {
    (index as f64 * 1_000_000.0 / fps_milli as f64).round()
}

/// Reader for the packed raw video format.
pub struct PackedVideoReader {
    reader: BufReader<File>,
    path: PathBuf,
    width: u32,
    height: u32,
    frame_count: u64,
    fps_milli: u32,
    next_index: u64,
}

impl PackedVideoReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| io_err(&path.display().to_string(), e))?;
        let mut reader = BufReader::new(file);

        let bad = |reason: &str| IngestError::BadHeader {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let mut magic = [0u8; 5];
        reader
            .read_exact(&mut magic)
            .map_err(|_| bad("truncated magic"))?;
        if &magic != PACKED_MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        reader
            .read_exact(&mut u32buf)
            .map_err(|_| bad("truncated width"))?;
        let width = u32::from_le_bytes(u32buf);
        reader
            .read_exact(&mut u32buf)
            .map_err(|_| bad("truncated height"))?;
        let height = u32::from_le_bytes(u32buf);
        reader
            .read_exact(&mut u64buf)
            .map_err(|_| bad("truncated frame count"))?;
        let frame_count = u64::from_le_bytes(u64buf);
        reader
            .read_exact(&mut u32buf)
            .map_err(|_| bad("truncated fps"))?;
        let fps_milli = u32::from_le_bytes(u32buf);
        if width == 0 || height == 0 {
            return Err(bad("zero dimension"));
        }
        if fps_milli == 0 {
            return Err(bad("fps_milli must be >= 1"));
        }
        Ok(Self {
            reader,
            path,
            width,
            height,
            frame_count,
            fps_milli,
            next_index: 0,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps_milli as f64 / 1000.0
    }
}

impl FrameSource for PackedVideoReader {
    fn metadata(&self) -> SourceMetadata {
        SourceMetadata {
            width: self.width,
            height: self.height,
            fps: Some(self.fps()),
            frame_count: Some(self.frame_count),
        }
    }

    fn next_frame(&mut self) -> Option<Result<Frame, IngestError>> {
        if self.next_index >= self.frame_count {
            return None;
        }
        let index = self.next_index;
        self.next_index += 1;
        let len = self.width as usize * self.height as usize * 3;
        let mut pixels = vec![0u8; len];
        if let Err(e) = self.reader.read_exact(&mut pixels) {
            return Some(Err(IngestError::Decode {
                position: index,
                reason: format!("truncated frame in {}: {e}", self.path.display()),
            }));
        }
        let ts = timestamp_ms(index, self.fps_milli);
        Some(
            Frame::new(index, ts, self.width, self.height, pixels)
                .map_err(IngestError::Model),
        )
    }

    fn source_id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "packed".to_string())
    }
}

/// Streaming writer for the packed raw video format. The frame count is
/// patched into the header on [`PackedVideoWriter::finish`].
pub struct PackedVideoWriter {
    writer: BufWriter<File>,
    width: u32,
    height: u32,
    written: u64,
}

impl PackedVideoWriter {
    pub fn create(
        path: impl AsRef<Path>,
        width: u32,
        height: u32,
        fps_milli: u32,
    ) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| io_err(&path.display().to_string(), e))?;
        let mut writer = BufWriter::new(file);
        writer.write_all(PACKED_MAGIC).map_err(|e| io_err("header", e))?;
        writer
            .write_all(&width.to_le_bytes())
            .map_err(|e| io_err("header", e))?;
        writer
            .write_all(&height.to_le_bytes())
            .map_err(|e| io_err("header", e))?;
        writer
            .write_all(&0u64.to_le_bytes())
            .map_err(|e| io_err("header", e))?;
        writer
            .write_all(&fps_milli.to_le_bytes())
            .map_err(|e| io_err("header", e))?;
        Ok(Self {
            writer,
            width,
            height,
            written: 0,
        })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<(), IngestError> {
        assert_eq!(
            (frame.width(), frame.height()),
            (self.width, self.height),
            "frame dimensions must match the stream header"
        );
        self.writer
            .write_all(frame.pixels())
            .map_err(|e| io_err("frame body", e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64, IngestError> {
        self.writer.flush().map_err(|e| io_err("flush", e))?;
        let mut file = self.writer.into_inner().map_err(|e| io_err("flush", e.into_error()))?;
        file.seek(SeekFrom::Start(5 + 4 + 4))
            .map_err(|e| io_err("seek", e))?;
        file.write_all(&self.written.to_le_bytes())
            .map_err(|e| io_err("patch count", e))?;
        file.flush().map_err(|e| io_err("flush", e))?;
        Ok(self.written)
    }
}

/// Directory of raw frames: `frame_%08d.rgb` files plus a `meta` text file
/// with `width = N`, `height = N`, `fps = F` lines.
pub struct DirectorySource {
    dir: PathBuf,
    width: u32,
    height: u32,
    fps: f64,
    indices: Vec<u64>,
    cursor: usize,
}

impl DirectorySource {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, IngestError> {
        let dir = dir.as_ref().to_path_buf();
        let meta_path = dir.join("meta");
        let meta = fs::read_to_string(&meta_path)
            .map_err(|e| io_err(&meta_path.display().to_string(), e))?;
        let mut width = None;
        let mut height = None;
        let mut fps = None;
        for line in meta.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "width" => width = value.parse::<u32>().ok(),
                "height" => height = value.parse::<u32>().ok(),
                "fps" => fps = value.parse::<f64>().ok(),
                _ => {}
            }
        }
        let bad = |reason: &str| IngestError::BadHeader {
            path: meta_path.display().to_string(),
            reason: reason.to_string(),
        };
        let width = width.ok_or_else(|| bad("missing width"))?;
        let height = height.ok_or_else(|| bad("missing height"))?;
        let fps = fps.ok_or_else(|| bad("missing fps"))?;
        if width == 0 || height == 0 || fps <= 0.0 {
            return Err(bad("non-positive dimension or fps"));
        }

        let mut indices = Vec::new();
        let entries = fs::read_dir(&dir).map_err(|e| io_err(&dir.display().to_string(), e))?;
        for entry in entries {
            let entry = entry.map_err(|e| io_err(&dir.display().to_string(), e))?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(idx) = name
                .strip_prefix("frame_")
                .and_then(|rest| rest.strip_suffix(".rgb"))
                .and_then(|digits| digits.parse::<u64>().ok())
            {
                indices.push(idx);
            }
        }
        indices.sort_unstable();
        Ok(Self {
            dir,
            width,
            height,
            fps,
            indices,
            cursor: 0,
        })
    }

    pub fn frame_path(dir: &Path, index: u64) -> PathBuf {
        dir.join(format!("frame_{index:08}.rgb"))
    }
}

impl FrameSource for DirectorySource {
    fn metadata(&self) -> SourceMetadata {
        SourceMetadata {
            width: self.width,
            height: self.height,
            fps: Some(self.fps),
            frame_count: Some(self.indices.len() as u64),
        }
    }

    fn next_frame(&mut self) -> Option<Result<Frame, IngestError>> {
        let index = *self.indices.get(self.cursor)?;
        self.cursor += 1;
        let path = Self::frame_path(&self.dir, index);
        let pixels = match fs::read(&path) {
            Ok(p) => p,
            Err(e) => {
                return Some(Err(IngestError::Decode {
                    position: index,
                    reason: format!("{}: {e}", path.display()),
                }))
            }
        };
        let expected = self.width as usize * self.height as usize * 3;
        if pixels.len() != expected {
            return Some(Err(IngestError::Decode {
                position: index,
                reason: format!(
                    "{}: {} bytes, expected {expected}",
                    path.display(),
                    pixels.len()
                ),
            }));
        }
        let ts = index as f64 * 1000.0 / self.fps;
        Some(Frame::new(index, ts, self.width, self.height, pixels).map_err(IngestError::Model))
    }

    fn source_id(&self) -> String {
        self.dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dir".to_string())
    }
}

/// Write a frame directory (meta + frame files). Test and fixture helper.
pub fn write_frame_directory(
    dir: impl AsRef<Path>,
    fps: f64,
    frames: &[Frame],
) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(&dir.display().to_string(), e))?;
    let (w, h) = frames
        .first()
        .map(|f| (f.width(), f.height()))
        .unwrap_or((0, 0));
    let meta = format!("width = {w}\nheight = {h}\nfps = {fps}\n");
    fs::write(dir.join("meta"), meta).map_err(|e| io_err("meta", e))?;
    for frame in frames {
        let path = DirectorySource::frame_path(dir, frame.index());
        fs::write(&path, frame.pixels()).map_err(|e| io_err(&path.display().to_string(), e))?;
    }
    Ok(())
}

/// Procedural test patterns for synthetic sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticPattern {
    /// Every pixel the same color in every frame.
    Constant { r: u8, g: u8, b: u8 },
    /// Static black/white checkerboard with square cells.
    Checkerboard { cell: u32 },
    /// Pure red top-left quadrant over a dark gray background.
    RedQuadrant,
    /// Frames alternate all-black / all-white by parity.
    Alternating,
    /// Deterministic per-frame noise.
    Noise { seed: u64 },
}

/// Render one frame of a pattern.
pub fn generate_frame(
    pattern: SyntheticPattern,
    index: u64,
    width: u32,
    height: u32,
    fps: f64,
) -> Frame {
    let len = width as usize * height as usize * 3;
    let mut pixels = vec![0u8; len];
    match pattern {
        SyntheticPattern::Constant { r, g, b } => {
            for px in pixels.chunks_exact_mut(3) {
                px.copy_from_slice(&[r, g, b]);
            }
        }
        SyntheticPattern::Checkerboard { cell } => {
            let cell = cell.max(1);
            for y in 0..height {
                for x in 0..width {
                    let on = ((x / cell) + (y / cell)) % 2 == 0;
                    let v = if on { 255 } else { 0 };
                    let i = (y as usize * width as usize + x as usize) * 3;
                    pixels[i..i + 3].copy_from_slice(&[v, v, v]);
                }
            }
        }
        SyntheticPattern::RedQuadrant => {
            for y in 0..height {
                for x in 0..width {
                    let i = (y as usize * width as usize + x as usize) * 3;
                    if x < width / 2 && y < height / 2 {
                        pixels[i..i + 3].copy_from_slice(&[220, 0, 0]);
                    } else {
                        pixels[i..i + 3].copy_from_slice(&[40, 40, 40]);
                    }
                }
            }
        }
        SyntheticPattern::Alternating => {
            let v = if index.is_multiple_of(2) { 0 } else { 255 };
            pixels.fill(v);
        }
        SyntheticPattern::Noise { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            rng.fill(pixels.as_mut_slice());
        }
    }
    let ts = if fps > 0.0 {
        index as f64 * 1000.0 / fps
    } else {
        index as f64
    };
    Frame::new(index, ts, width, height, pixels).expect("generated buffer has the right length")
}

/// Generator-backed source. `frame_count: None` models a continuous stream.
pub struct SyntheticSource {
    width: u32,
    height: u32,
    fps: f64,
    frame_count: Option<u64>,
    pattern: SyntheticPattern,
    next_index: u64,
}

impl SyntheticSource {
    pub fn new(
        width: u32,
        height: u32,
        fps: f64,
        frame_count: Option<u64>,
        pattern: SyntheticPattern,
    ) -> Self {
        Self {
            width,
            height,
            fps,
            frame_count,
            pattern,
            next_index: 0,
        }
    }
}

impl FrameSource for SyntheticSource {
    fn metadata(&self) -> SourceMetadata {
        SourceMetadata {
            width: self.width,
            height: self.height,
            fps: Some(self.fps),
            frame_count: self.frame_count,
        }
    }

    fn next_frame(&mut self) -> Option<Result<Frame, IngestError>> {
        if let Some(count) = self.frame_count {
            if self.next_index >= count {
                return None;
            }
        }
        let index = self.next_index;
        self.next_index += 1;
        Some(Ok(generate_frame(
            self.pattern,
            index,
            self.width,
            self.height,
            self.fps,
        )))
    }

    fn source_id(&self) -> String {
        "synthetic".to_string()
    }
}
