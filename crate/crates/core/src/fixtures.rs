//! Deterministic fixture generation: packed raw videos, matching spatial
//! and temporal traces, and ground truth covering every cell of the fusion
//! decision table. Regeneration with the same seed is byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::PipelineError;
use crate::eval::GroundTruthSet;
use crate::ingest::{
    generate_frame, PackedVideoWriter, SyntheticPattern,
};
use crate::model::{
    AnomalyClass, BoundingBox, Detection, Frame, KeyObjectClass, ScoreMap,
};
use crate::spatial::{write_spatial_trace, SpatialBackend, SpatialRule, SyntheticSpatialBackend};
use crate::temporal::synthetic::mean_interframe_abs_diff;

/// Number of cells in the fusion decision table: temporal flag x 16
/// key-object subsets x overlap gate.
pub const FUSION_CELLS: u64 = 64;

/// Window size the fixture traces are recorded for.
pub const FIXTURE_WINDOW: usize = 15;

const FIXTURE_FPS_MILLI: u32 = 30_000;

/// One abstract fusion input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionCell {
    pub temporal_flag: bool,
    pub person: bool,
    pub firearm: bool,
    pub flame: bool,
    pub smoke: bool,
    pub gate: bool,
}

impl FusionCell {
    pub fn from_id(id: u64) -> Self {
        Self {
            person: id & 1 != 0,
            firearm: id & 2 != 0,
            flame: id & 4 != 0,
            smoke: id & 8 != 0,
            gate: id & 16 != 0,
            temporal_flag: id & 32 != 0,
        }
    }

    /// The gate can only be armed when both a person and a firearm exist.
    pub fn effective_gate(&self) -> bool {
        self.gate && self.person && self.firearm
    }

    /// Independent restatement of the two-rule decision procedure with the
    /// default policy (gate required, person triggers fight, priority
    /// Gunshot > Fire > Fight). Kept free of any call into the fusion
    /// implementation so fixture truth stays a valid oracle.
    pub fn expected_label(&self) -> AnomalyClass {
        if self.temporal_flag {
            return AnomalyClass::Fight;
        }
        if self.firearm && self.effective_gate() {
            return AnomalyClass::Gunshot;
        }
        if self.flame || self.smoke {
            return AnomalyClass::Fire;
        }
        if self.person {
            return AnomalyClass::Fight;
        }
        AnomalyClass::Normal
    }

    /// Detections realizing this cell's subset and gate geometry.
    pub fn detections(&self) -> Vec<Detection<f64>> {
        let mut dets = Vec::new();
        let det = |class: KeyObjectClass, b: [f64; 4]| {
            let corners = BoundingBox::new(b[0], b[1], b[2], b[3]).expect("fixture boxes are ordered");
            Detection::new(class, 0.9, corners).expect("fixture confidence is in range")
        };
        if self.person {
            dets.push(det(KeyObjectClass::Person, [10.0, 8.0, 20.0, 30.0]));
        }
        if self.firearm {
            let b = if self.effective_gate() {
                // Overlaps the person box.
                [15.0, 12.0, 24.0, 20.0]
            } else {
                // Far from everything.
                [40.0, 2.0, 48.0, 8.0]
            };
            dets.push(det(KeyObjectClass::Firearm, b));
        }
        if self.flame {
            dets.push(det(KeyObjectClass::Flame, [4.0, 40.0, 12.0, 48.0]));
        }
        if self.smoke {
            dets.push(det(KeyObjectClass::Smoke, [40.0, 40.0, 50.0, 52.0]));
        }
        dets
    }

    /// Temporal trace scores for this cell.
    pub fn temporal_scores(&self) -> ScoreMap<f64> {
        if self.temporal_flag {
            ScoreMap::from_weights(&[
                (AnomalyClass::Fight, 0.7),
                (AnomalyClass::Gunshot, 0.1),
                (AnomalyClass::Fire, 0.1),
                (AnomalyClass::Normal, 0.1),
            ])
            .expect("weights normalize")
        } else {
            ScoreMap::point_mass(AnomalyClass::Normal)
        }
    }
}

/// Everything `generate` wrote.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub root: PathBuf,
    pub seed: u64,
    /// 30-frame constant-gray clip.
    pub constant_video: PathBuf,
    /// 30-frame checkerboard clip at 224x224 (exercises the resize).
    pub checkerboard_video: PathBuf,
    /// 30-frame clip with a red top-left quadrant.
    pub red_quadrant_video: PathBuf,
    /// 30-frame alternating black/white clip (maximal motion).
    pub alternating_video: PathBuf,
    /// 30-frame seeded-noise clip.
    pub noise_video: PathBuf,
    /// 960-frame clip backing the 64 fusion-table windows.
    pub fusion_cells_video: PathBuf,
    pub spatial_red_quadrant_trace: PathBuf,
    pub spatial_empty_trace: PathBuf,
    pub spatial_fusion_cells_trace: PathBuf,
    pub temporal_constant_trace: PathBuf,
    pub temporal_alternating_trace: PathBuf,
    pub temporal_fusion_cells_trace: PathBuf,
    pub fusion_cells_truth: PathBuf,
    pub manifest: PathBuf,
}

fn write_video(
    path: &Path,
    pattern: SyntheticPattern,
    frames: u64,
    width: u32,
    height: u32,
) -> Result<(), PipelineError> {
    let mut writer = PackedVideoWriter::create(path, width, height, FIXTURE_FPS_MILLI)?;
    for i in 0..frames {
        let frame = generate_frame(pattern, i, width, height, 30.0);
        writer.write_frame(&frame)?;
    }
    writer.finish()?;
    Ok(())
}

/// Generate the full fixture set under `root`.
pub fn generate(root: impl AsRef<Path>, seed: u64) -> Result<FixtureSet, PipelineError> {
    let root = root.as_ref().to_path_buf();
    let videos = root.join("videos");
    let traces = root.join("traces");
    let truth = root.join("truth");
    for dir in [&videos, &traces, &truth] {
        std::fs::create_dir_all(dir)?;
    }

    let constant_video = videos.join("constant.stap");
    write_video(
        &constant_video,
        SyntheticPattern::Constant { r: 96, g: 96, b: 96 },
        30,
        64,
        64,
    )?;

    let checkerboard_video = videos.join("checkerboard.stap");
    write_video(
        &checkerboard_video,
        SyntheticPattern::Checkerboard { cell: 16 },
        30,
        224,
        224,
    )?;

    let red_quadrant_video = videos.join("red_quadrant.stap");
    write_video(&red_quadrant_video, SyntheticPattern::RedQuadrant, 30, 64, 64)?;

    let alternating_video = videos.join("alternating.stap");
    write_video(&alternating_video, SyntheticPattern::Alternating, 30, 64, 64)?;

    let noise_video = videos.join("noise.stap");
    write_video(&noise_video, SyntheticPattern::Noise { seed }, 30, 64, 64)?;

    let fusion_cells_video = videos.join("fusion_cells.stap");
    write_video(
        &fusion_cells_video,
        SyntheticPattern::Constant { r: 64, g: 64, b: 64 },
        FUSION_CELLS * FIXTURE_WINDOW as u64,
        32,
        32,
    )?;

    // Spatial trace for the red-quadrant clip: the synthetic rule applied
    // offline to every frame, recorded in source space.
    let spatial_red_quadrant_trace = traces.join("spatial_red_quadrant.jsonl");
    {
        let backend = SyntheticSpatialBackend::new(0.0, SpatialRule::RedFlame);
        let mut entries: BTreeMap<u64, Vec<Detection<f64>>> = BTreeMap::new();
        for i in 0..30 {
            let frame = generate_frame(SyntheticPattern::RedQuadrant, i, 64, 64, 30.0);
            let dets = backend
                .detect(&frame)
                .expect("synthetic backend is infallible");
            if !dets.is_empty() {
                entries.insert(i, dets);
            }
        }
        write_spatial_trace(&spatial_red_quadrant_trace, &entries)?;
    }

    // An empty spatial trace: no detections for any frame.
    let spatial_empty_trace = traces.join("spatial_empty.jsonl");
    write_spatial_trace::<f64>(&spatial_empty_trace, &BTreeMap::new())?;

    // Temporal trace for the constant clip (two default windows).
    let temporal_constant_trace = traces.join("temporal_constant.jsonl");
    {
        let mut entries: BTreeMap<u64, ScoreMap<f64>> = BTreeMap::new();
        entries.insert(0, ScoreMap::point_mass(AnomalyClass::Normal));
        entries.insert(
            1,
            ScoreMap::from_weights(&[
                (AnomalyClass::Fight, 0.7),
                (AnomalyClass::Gunshot, 0.1),
                (AnomalyClass::Fire, 0.1),
                (AnomalyClass::Normal, 0.1),
            ])
            .expect("weights normalize"),
        );
        crate::temporal::write_temporal_trace(&temporal_constant_trace, &entries)?;
    }

    // Temporal trace for the alternating clip: the motion rule applied
    // offline to the two default windows.
    let temporal_alternating_trace = traces.join("temporal_alternating.jsonl");
    {
        let mut entries: BTreeMap<u64, ScoreMap<f64>> = BTreeMap::new();
        for w in 0..2u64 {
            let frames: Vec<Frame> = (0..FIXTURE_WINDOW as u64)
                .map(|i| {
                    generate_frame(
                        SyntheticPattern::Alternating,
                        w * FIXTURE_WINDOW as u64 + i,
                        64,
                        64,
                        30.0,
                    )
                })
                .collect();
            let window = crate::model::SequenceWindow::new(w, frames).expect("valid window");
            let moving = mean_interframe_abs_diff(&window) >= 10.0;
            let scores = if moving {
                ScoreMap::from_weights(&[
                    (AnomalyClass::Fight, 0.7),
                    (AnomalyClass::Gunshot, 0.1),
                    (AnomalyClass::Fire, 0.1),
                    (AnomalyClass::Normal, 0.1),
                ])
                .expect("weights normalize")
            } else {
                ScoreMap::point_mass(AnomalyClass::Normal)
            };
            entries.insert(w, scores);
        }
        crate::temporal::write_temporal_trace(&temporal_alternating_trace, &entries)?;
    }

    // The 64-cell fusion table: spatial detections on each window's first
    // frame, temporal scores per window, and expected labels as truth.
    let spatial_fusion_cells_trace = traces.join("spatial_fusion_cells.jsonl");
    let temporal_fusion_cells_trace = traces.join("temporal_fusion_cells.jsonl");
    let fusion_cells_truth = truth.join("fusion_cells.csv");
    {
        let mut spatial_entries: BTreeMap<u64, Vec<Detection<f64>>> = BTreeMap::new();
        let mut temporal_entries: BTreeMap<u64, ScoreMap<f64>> = BTreeMap::new();
        let mut truth_set = GroundTruthSet::new();
        for id in 0..FUSION_CELLS {
            let cell = FusionCell::from_id(id);
            let first_frame = id * FIXTURE_WINDOW as u64;
            let dets = cell.detections();
            if !dets.is_empty() {
                spatial_entries.insert(first_frame, dets);
            }
            temporal_entries.insert(id, cell.temporal_scores());
            truth_set.insert("fusion_cells", id, cell.expected_label());
        }
        write_spatial_trace(&spatial_fusion_cells_trace, &spatial_entries)?;
        crate::temporal::write_temporal_trace(&temporal_fusion_cells_trace, &temporal_entries)?;
        truth_set.to_csv(&fusion_cells_truth)?;
    }

    let set = FixtureSet {
        root: root.clone(),
        seed,
        constant_video,
        checkerboard_video,
        red_quadrant_video,
        alternating_video,
        noise_video,
        fusion_cells_video,
        spatial_red_quadrant_trace,
        spatial_empty_trace,
        spatial_fusion_cells_trace,
        temporal_constant_trace,
        temporal_alternating_trace,
        temporal_fusion_cells_trace,
        fusion_cells_truth,
        manifest: root.join("manifest.txt"),
    };

    let mut manifest = format!("seed = {seed}\n");
    for path in set.files() {
        let rel = path.strip_prefix(&root).unwrap_or(&path);
        manifest.push_str(&format!("{}\n", rel.display()));
    }
    std::fs::write(&set.manifest, manifest)?;
    Ok(set)
}

impl FixtureSet {
    /// All generated files except the manifest itself.
    pub fn files(&self) -> Vec<PathBuf> {
        vec![
            self.constant_video.clone(),
            self.checkerboard_video.clone(),
            self.red_quadrant_video.clone(),
            self.alternating_video.clone(),
            self.noise_video.clone(),
            self.fusion_cells_video.clone(),
            self.spatial_red_quadrant_trace.clone(),
            self.spatial_empty_trace.clone(),
            self.spatial_fusion_cells_trace.clone(),
            self.temporal_constant_trace.clone(),
            self.temporal_alternating_trace.clone(),
            self.temporal_fusion_cells_trace.clone(),
            self.fusion_cells_truth.clone(),
        ]
    }
}
