//! Declarative run configuration: a TOML document (key = value with
//! sections) mirroring the pipeline's field names, merged with command-line
//! overrides, then resolved into a concrete [`PipelineConfig`].
//!
//! Every report embeds the fully resolved configuration (the "echo"); a run
//! started from its own echo reproduces itself on trace backends.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::fusion::FusionPolicy;
use crate::ingest::{SamplingPolicy, TailPolicy};
use crate::model::ClassProfile;
use crate::preprocess::{PreprocessVariant, SkeletonStyle};
use crate::scalar::Scalar;
use crate::spatial::{FrameSelection, SpatialConfig, SpatialRule};
use crate::temporal::TemporalRule;

/// How the two analysis stages are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    Parallel,
    Serial,
    TemporalOnly,
    SpatialOnly,
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PipelineMode::Parallel => "parallel",
            PipelineMode::Serial => "serial",
            PipelineMode::TemporalOnly => "temporal-only",
            PipelineMode::SpatialOnly => "spatial-only",
        };
        f.write_str(s)
    }
}

impl FromStr for PipelineMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(PipelineMode::Parallel),
            "serial" => Ok(PipelineMode::Serial),
            "temporal-only" => Ok(PipelineMode::TemporalOnly),
            "spatial-only" => Ok(PipelineMode::SpatialOnly),
            other => Err(ConfigError::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Whether window jobs run on worker threads or inline on one thread.
/// Single-thread execution produces identical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionModel {
    Threaded,
    SingleThread,
}

impl FromStr for ExecutionModel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "threaded" => Ok(ExecutionModel::Threaded),
            "single-thread" => Ok(ExecutionModel::SingleThread),
            other => Err(ConfigError::Invalid(format!("unknown execution {other:?}"))),
        }
    }
}

/// Spatial backend selection: `trace:PATH` or
/// `synthetic:latency=MS,rule=none|red-flame`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialBackendSpec {
    Trace(PathBuf),
    Synthetic { latency_ms: f64, rule: SpatialRule },
}

/// Temporal backend selection: `trace:PATH` or
/// `synthetic:latency=MS,rule=normal|motion[,cutoff=F][,profile=3|4]`.
#[derive(Debug, Clone, PartialEq)]
pub enum TemporalBackendSpec {
    Trace(PathBuf),
    Synthetic {
        latency_ms: f64,
        rule: TemporalRule,
        profile: ClassProfile,
    },
}

fn parse_kv_options(spec: &str, body: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for part in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| ConfigError::BadBackendSpec {
            spec: spec.to_string(),
            reason: format!("expected key=value, got {part:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl FromStr for SpatialBackendSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| ConfigError::BadBackendSpec {
            spec: s.to_string(),
            reason,
        };
        if let Some(path) = s.strip_prefix("trace:") {
            if path.is_empty() {
                return Err(bad("missing trace path".to_string()));
            }
            return Ok(SpatialBackendSpec::Trace(PathBuf::from(path)));
        }
        if let Some(body) = s.strip_prefix("synthetic:").or(if s == "synthetic" {
            Some("")
        } else {
            None
        }) {
            let mut latency_ms = 0.0f64;
            let mut rule = SpatialRule::None;
            for (k, v) in parse_kv_options(s, body)? {
                match k.as_str() {
                    "latency" => {
                        latency_ms = v.parse().map_err(|e| bad(format!("latency: {e}")))?
                    }
                    "rule" => {
                        rule = match v.as_str() {
                            "none" => SpatialRule::None,
                            "red-flame" => SpatialRule::RedFlame,
                            other => return Err(bad(format!("unknown spatial rule {other:?}"))),
                        }
                    }
                    other => return Err(bad(format!("unknown option {other:?}"))),
                }
            }
            if latency_ms < 0.0 {
                return Err(bad("latency must be >= 0".to_string()));
            }
            return Ok(SpatialBackendSpec::Synthetic { latency_ms, rule });
        }
        Err(bad("expected trace:PATH or synthetic:...".to_string()))
    }
}

impl fmt::Display for SpatialBackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialBackendSpec::Trace(path) => write!(f, "trace:{}", path.display()),
            SpatialBackendSpec::Synthetic { latency_ms, rule } => {
                let rule = match rule {
                    SpatialRule::None => "none",
                    SpatialRule::RedFlame => "red-flame",
                };
                write!(f, "synthetic:latency={latency_ms},rule={rule}")
            }
        }
    }
}

impl FromStr for TemporalBackendSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| ConfigError::BadBackendSpec {
            spec: s.to_string(),
            reason,
        };
        if let Some(path) = s.strip_prefix("trace:") {
            if path.is_empty() {
                return Err(bad("missing trace path".to_string()));
            }
            return Ok(TemporalBackendSpec::Trace(PathBuf::from(path)));
        }
        if let Some(body) = s.strip_prefix("synthetic:").or(if s == "synthetic" {
            Some("")
        } else {
            None
        }) {
            let mut latency_ms = 0.0f64;
            let mut rule_name = "normal".to_string();
            let mut cutoff = 10.0f64;
            let mut profile = ClassProfile::FourClass;
            for (k, v) in parse_kv_options(s, body)? {
                match k.as_str() {
                    "latency" => {
                        latency_ms = v.parse().map_err(|e| bad(format!("latency: {e}")))?
                    }
                    "rule" => rule_name = v,
                    "cutoff" => cutoff = v.parse().map_err(|e| bad(format!("cutoff: {e}")))?,
                    "profile" => {
                        let n: u8 = v.parse().map_err(|e| bad(format!("profile: {e}")))?;
                        profile = ClassProfile::try_from(n)
                            .map_err(|e| bad(format!("profile: {e}")))?;
                    }
                    other => return Err(bad(format!("unknown option {other:?}"))),
                }
            }
            let rule = match rule_name.as_str() {
                "normal" => TemporalRule::Normal,
                "motion" => TemporalRule::Motion { cutoff },
                other => return Err(bad(format!("unknown temporal rule {other:?}"))),
            };
            if latency_ms < 0.0 {
                return Err(bad("latency must be >= 0".to_string()));
            }
            return Ok(TemporalBackendSpec::Synthetic {
                latency_ms,
                rule,
                profile,
            });
        }
        Err(bad("expected trace:PATH or synthetic:...".to_string()))
    }
}

impl fmt::Display for TemporalBackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalBackendSpec::Trace(path) => write!(f, "trace:{}", path.display()),
            TemporalBackendSpec::Synthetic {
                latency_ms,
                rule,
                profile,
            } => {
                let profile = match profile {
                    ClassProfile::ThreeClass => 3,
                    ClassProfile::FourClass => 4,
                };
                match rule {
                    TemporalRule::Normal => {
                        write!(f, "synthetic:latency={latency_ms},rule=normal,profile={profile}")
                    }
                    TemporalRule::Motion { cutoff } => write!(
                        f,
                        "synthetic:latency={latency_ms},rule=motion,cutoff={cutoff},profile={profile}"
                    ),
                }
            }
        }
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(SpatialBackendSpec);
string_serde!(TemporalBackendSpec);

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct PipelineConfig<S: Scalar> {
    pub mode: PipelineMode,
    pub sampling: SamplingPolicy,
    pub spatial: SpatialConfig<S>,
    pub preprocess_variant: PreprocessVariant,
    pub skeleton_style: SkeletonStyle,
    pub fusion: FusionPolicy,
    pub spatial_backend: Option<SpatialBackendSpec>,
    pub temporal_backend: Option<TemporalBackendSpec>,
    pub max_inflight_windows: usize,
    pub anomaly_threshold: S,
    pub execution: ExecutionModel,
    pub debug_dump_dir: Option<PathBuf>,
}

impl<S: Scalar> PipelineConfig<S> {
    /// Whether this mode runs the spatial stage.
    pub fn uses_spatial(&self) -> bool {
        !matches!(self.mode, PipelineMode::TemporalOnly)
    }

    /// Whether this mode runs the temporal stage.
    pub fn uses_temporal(&self) -> bool {
        !matches!(self.mode, PipelineMode::SpatialOnly)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sampling.validate().map_err(ConfigError::Invalid)?;
        if self.uses_spatial() {
            self.spatial
                .validate(self.sampling.window_size)
                .map_err(ConfigError::Invalid)?;
            if self.spatial_backend.is_none() {
                return Err(ConfigError::Invalid(format!(
                    "mode {} requires a spatial backend",
                    self.mode
                )));
            }
        }
        if self.uses_temporal() && self.temporal_backend.is_none() {
            return Err(ConfigError::Invalid(format!(
                "mode {} requires a temporal backend",
                self.mode
            )));
        }
        self.fusion.validate().map_err(ConfigError::Invalid)?;
        if self.max_inflight_windows < 1 {
            return Err(ConfigError::Invalid(
                "max_inflight_windows must be >= 1".to_string(),
            ));
        }
        let t = self.anomaly_threshold;
        if t < S::zero() || t > S::one() {
            return Err(ConfigError::Invalid(format!(
                "anomaly_threshold {t} outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// The effective-config echo embedded into every report.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&RawConfig::from_resolved(self)).expect("config serializes")
    }
}

/// File/flag form of the configuration: everything optional, merged then
/// resolved with mode-aware defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub mode: Option<PipelineMode>,
    pub max_inflight_windows: Option<usize>,
    pub anomaly_threshold: Option<f64>,
    pub execution: Option<ExecutionModel>,
    pub debug_dump_dir: Option<PathBuf>,
    #[serde(default)]
    pub sampling: RawSampling,
    #[serde(default)]
    pub spatial: RawSpatial,
    #[serde(default)]
    pub preprocess: RawPreprocess,
    #[serde(default)]
    pub fusion: RawFusion,
    #[serde(default)]
    pub backends: RawBackends,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSampling {
    pub frame_interval: Option<u32>,
    pub window_size: Option<usize>,
    pub window_stride: Option<usize>,
    pub tail_policy: Option<TailPolicy>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSpatial {
    pub confidence_threshold: Option<f64>,
    pub frames_per_window: Option<usize>,
    pub frame_selection: Option<FrameSelection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawPreprocess {
    pub variant: Option<PreprocessVariant>,
    pub line_thickness_px: Option<f64>,
    pub min_joint_conf: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawFusion {
    pub key_object_priority: Option<Vec<crate::model::AnomalyClass>>,
    pub gate_required_for_gunshot: Option<bool>,
    pub person_triggers_fight: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawBackends {
    pub spatial: Option<SpatialBackendSpec>,
    pub temporal: Option<TemporalBackendSpec>,
}

impl RawConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Overlay `other` (command-line flags) over this config: set fields in
    /// `other` win.
    pub fn merged_with(mut self, other: &RawConfig) -> Self {
        macro_rules! take {
            ($($field:ident).+) => {
                if other.$($field).+.is_some() {
                    self.$($field).+ = other.$($field).+.clone();
                }
            };
        }
        take!(mode);
        take!(max_inflight_windows);
        take!(anomaly_threshold);
        take!(execution);
        take!(debug_dump_dir);
        take!(sampling.frame_interval);
        take!(sampling.window_size);
        take!(sampling.window_stride);
        take!(sampling.tail_policy);
        take!(spatial.confidence_threshold);
        take!(spatial.frames_per_window);
        take!(spatial.frame_selection);
        take!(preprocess.variant);
        take!(preprocess.line_thickness_px);
        take!(preprocess.min_joint_conf);
        take!(fusion.key_object_priority);
        take!(fusion.gate_required_for_gunshot);
        take!(fusion.person_triggers_fight);
        take!(backends.spatial);
        take!(backends.temporal);
        self
    }

    /// Apply defaults and produce a validated concrete configuration.
    ///
    /// Serial mode defaults the spatial stage to analyzing every frame;
    /// the other modes default to the reduced evenly-spaced subset.
    pub fn resolve<S: Scalar>(&self) -> Result<PipelineConfig<S>, ConfigError> {
        let mode = self.mode.unwrap_or(PipelineMode::Parallel);
        let sampling = SamplingPolicy {
            frame_interval: self.sampling.frame_interval.unwrap_or(1),
            window_size: self
                .sampling
                .window_size
                .unwrap_or(crate::model::DEFAULT_WINDOW_SIZE),
            window_stride: self
                .sampling
                .window_stride
                .or(self.sampling.window_size)
                .unwrap_or(crate::model::DEFAULT_WINDOW_SIZE),
            tail_policy: self.sampling.tail_policy.unwrap_or(TailPolicy::Drop),
        };
        let default_selection = if mode == PipelineMode::Serial {
            FrameSelection::All
        } else {
            FrameSelection::EvenlySpaced
        };
        let frame_selection = self.spatial.frame_selection.unwrap_or(default_selection);
        let spatial = SpatialConfig {
            confidence_threshold: S::from_f64_lossy(
                self.spatial.confidence_threshold.unwrap_or(0.25),
            ),
            frames_per_window: self.spatial.frames_per_window.unwrap_or_else(|| {
                if frame_selection == FrameSelection::All {
                    sampling.window_size
                } else {
                    3.min(sampling.window_size)
                }
            }),
            frame_selection,
        };
        let default_style = SkeletonStyle::default();
        let skeleton_style = SkeletonStyle {
            line_thickness_px: self
                .preprocess
                .line_thickness_px
                .unwrap_or(default_style.line_thickness_px),
            min_joint_conf: self
                .preprocess
                .min_joint_conf
                .unwrap_or(default_style.min_joint_conf),
            color: default_style.color,
        };
        let default_fusion = FusionPolicy::default();
        let fusion = FusionPolicy {
            key_object_priority: self
                .fusion
                .key_object_priority
                .clone()
                .unwrap_or(default_fusion.key_object_priority),
            gate_required_for_gunshot: self
                .fusion
                .gate_required_for_gunshot
                .unwrap_or(default_fusion.gate_required_for_gunshot),
            person_triggers_fight: self
                .fusion
                .person_triggers_fight
                .unwrap_or(default_fusion.person_triggers_fight),
        };
        let cfg = PipelineConfig {
            mode,
            sampling,
            spatial,
            preprocess_variant: self
                .preprocess
                .variant
                .unwrap_or(PreprocessVariant::Identity),
            skeleton_style,
            fusion,
            spatial_backend: self.backends.spatial.clone(),
            temporal_backend: self.backends.temporal.clone(),
            max_inflight_windows: self.max_inflight_windows.unwrap_or(2),
            anomaly_threshold: S::from_f64_lossy(self.anomaly_threshold.unwrap_or(0.0)),
            execution: self.execution.unwrap_or(ExecutionModel::Threaded),
            debug_dump_dir: self.debug_dump_dir.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_resolved<S: Scalar>(cfg: &PipelineConfig<S>) -> Self {
        Self {
            mode: Some(cfg.mode),
            max_inflight_windows: Some(cfg.max_inflight_windows),
            anomaly_threshold: Some(cfg.anomaly_threshold.to_f64_lossy()),
            execution: Some(cfg.execution),
            debug_dump_dir: cfg.debug_dump_dir.clone(),
            sampling: RawSampling {
                frame_interval: Some(cfg.sampling.frame_interval),
                window_size: Some(cfg.sampling.window_size),
                window_stride: Some(cfg.sampling.window_stride),
                tail_policy: Some(cfg.sampling.tail_policy),
            },
            spatial: RawSpatial {
                confidence_threshold: Some(cfg.spatial.confidence_threshold.to_f64_lossy()),
                frames_per_window: Some(cfg.spatial.frames_per_window),
                frame_selection: Some(cfg.spatial.frame_selection),
            },
            preprocess: RawPreprocess {
                variant: Some(cfg.preprocess_variant),
                line_thickness_px: Some(cfg.skeleton_style.line_thickness_px),
                min_joint_conf: Some(cfg.skeleton_style.min_joint_conf),
            },
            fusion: RawFusion {
                key_object_priority: Some(cfg.fusion.key_object_priority.clone()),
                gate_required_for_gunshot: Some(cfg.fusion.gate_required_for_gunshot),
                person_triggers_fight: Some(cfg.fusion.person_triggers_fight),
            },
            backends: RawBackends {
                spatial: cfg.spatial_backend.clone(),
                temporal: cfg.temporal_backend.clone(),
            },
        }
    }
}

/// Frame-source selection: a packed video path, a frame directory, or
/// `synthetic:pattern=...,frames=N[,width=W][,height=H][,fps=F]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Path(PathBuf),
    Synthetic {
        pattern: crate::ingest::SyntheticPattern,
        frames: u64,
        width: u32,
        height: u32,
        fps: f64,
    },
}

impl FromStr for SourceSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| ConfigError::BadSourceSpec {
            spec: s.to_string(),
            reason,
        };
        let Some(body) = s.strip_prefix("synthetic:") else {
            return Ok(SourceSpec::Path(PathBuf::from(s)));
        };
        let mut pattern = crate::ingest::SyntheticPattern::Constant { r: 64, g: 64, b: 64 };
        let mut frames = 300u64;
        let (mut width, mut height, mut fps) = (64u32, 64u32, 30.0f64);
        let mut seed = 0u64;
        let mut pattern_name = "constant".to_string();
        for part in body.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            match k.trim() {
                "pattern" => pattern_name = v.trim().to_string(),
                "frames" => frames = v.parse().map_err(|e| bad(format!("frames: {e}")))?,
                "width" => width = v.parse().map_err(|e| bad(format!("width: {e}")))?,
                "height" => height = v.parse().map_err(|e| bad(format!("height: {e}")))?,
                "fps" => fps = v.parse().map_err(|e| bad(format!("fps: {e}")))?,
                "seed" => seed = v.parse().map_err(|e| bad(format!("seed: {e}")))?,
                other => return Err(bad(format!("unknown option {other:?}"))),
            }
        }
        pattern = match pattern_name.as_str() {
            "constant" => pattern,
            "checkerboard" => crate::ingest::SyntheticPattern::Checkerboard { cell: 8 },
            "red-quadrant" => crate::ingest::SyntheticPattern::RedQuadrant,
            "alternating" => crate::ingest::SyntheticPattern::Alternating,
            "noise" => crate::ingest::SyntheticPattern::Noise { seed },
            other => return Err(bad(format!("unknown pattern {other:?}"))),
        };
        Ok(SourceSpec::Synthetic {
            pattern,
            frames,
            width,
            height,
            fps,
        })
    }
}
