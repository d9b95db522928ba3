//! Run reports: ordered predictions, per-window timings, gap accounting and
//! aggregate statistics, serialized as JSON plus a per-window CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineMode;
use crate::model::{AnomalyPrediction, StageLatency};
use crate::preprocess::EnrichDiagnostics;
use crate::scalar::Scalar;

/// A window that produced no prediction, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRecord {
    pub window_index: u64,
    pub stage: String,
    pub message: String,
}

/// Aggregate wall-clock statistics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    /// Mean per-window detection latency (window ready to prediction).
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
    /// Whole-run wall time.
    pub total_processing_ms: f64,
    /// Source length implied by its frame count and rate, when known.
    pub source_duration_ms: Option<f64>,
}

impl RunStats {
    pub fn from_latencies(latencies: &[f64], total_ms: f64, source_duration_ms: Option<f64>) -> Self {
        if latencies.is_empty() {
            return Self {
                mean_latency_ms: 0.0,
                median_latency_ms: 0.0,
                total_processing_ms: total_ms,
                source_duration_ms,
            };
        }
        let mut sorted = latencies.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Self {
            mean_latency_ms: sorted.iter().sum::<f64>() / n as f64,
            median_latency_ms: median,
            total_processing_ms: total_ms,
            source_duration_ms,
        }
    }
}

/// Everything one pipeline run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct RunReport<S: Scalar> {
    pub source_id: String,
    pub mode: PipelineMode,
    /// Fully resolved configuration, as a TOML document.
    pub effective_config: String,
    /// In window-index order.
    pub predictions: Vec<AnomalyPrediction<S>>,
    /// Window-ready times (ms from run start), aligned with `predictions`.
    pub window_starts_ms: Vec<f64>,
    pub gaps: Vec<GapRecord>,
    pub windows_formed: u64,
    /// Highest number of windows simultaneously in flight.
    pub peak_inflight_windows: usize,
    pub diagnostics: EnrichDiagnostics,
    pub stats: RunStats,
}

impl<S: Scalar> RunReport<S> {
    /// Copy with every wall-clock field zeroed, for determinism checks and
    /// byte-comparable output. Labels, scores, gaps and configuration are
    /// untouched.
    pub fn canonicalized(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.predictions {
            p.latency = StageLatency::zeroed();
        }
        for t in &mut out.window_starts_ms {
            *t = 0.0;
        }
        out.peak_inflight_windows = 0;
        out.stats = RunStats {
            mean_latency_ms: 0.0,
            median_latency_ms: 0.0,
            total_processing_ms: 0.0,
            source_duration_ms: self.stats.source_duration_ms,
        };
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn canonical_json(&self) -> String {
        self.canonicalized().to_json()
    }

    /// Per-window records for spreadsheet analysis.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_index,t_start_ms,label,source,latency_ms\n");
        for (p, &t_start) in self.predictions.iter().zip(&self.window_starts_ms) {
            let _ = writeln!(
                out,
                "{},{:.3},{},{},{:.3}",
                p.window_index,
                t_start,
                p.label.wire_name(),
                p.source,
                p.latency.total_ms
            );
        }
        out
    }

    pub fn write_files(&self, out_dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("report.json"), self.to_json())?;
        std::fs::write(out_dir.join("report.csv"), self.to_csv())?;
        std::fs::write(out_dir.join("effective_config.toml"), &self.effective_config)?;
        Ok(())
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let anomalies = self
            .predictions
            .iter()
            .filter(|p| p.label.is_anomaly())
            .count();
        format!(
            "{} mode={} windows={} predictions={} anomalies={} skipped={} mean_latency={:.1}ms total={:.1}ms",
            self.source_id,
            self.mode,
            self.windows_formed,
            self.predictions.len(),
            anomalies,
            self.gaps.len(),
            self.stats.mean_latency_ms,
            self.stats.total_processing_ms,
        )
    }
}

/// Modeled per-window latencies from the backends' declared costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeledLatency {
    pub first_ms: f64,
    pub second_ms: f64,
    pub ratio: f64,
}

/// Two runs over the same source, side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct ComparisonReport<S: Scalar> {
    pub first: RunReport<S>,
    pub second: RunReport<S>,
    /// first mean latency / second mean latency.
    pub latency_ratio: Option<f64>,
    /// Share of common window indices with equal labels, in percent.
    pub label_agreement_pct: Option<f64>,
    pub modeled: Option<ModeledLatency>,
}

impl<S: Scalar> ComparisonReport<S> {
    pub fn new(first: RunReport<S>, second: RunReport<S>, modeled: Option<ModeledLatency>) -> Self {
        let latency_ratio = if first.predictions.is_empty()
            || second.predictions.is_empty()
            || second.stats.mean_latency_ms == 0.0
        {
            None
        } else {
            Some(first.stats.mean_latency_ms / second.stats.mean_latency_ms)
        };
        let mut common = 0usize;
        let mut agree = 0usize;
        for p in &first.predictions {
            if let Some(q) = second
                .predictions
                .iter()
                .find(|q| q.window_index == p.window_index)
            {
                common += 1;
                agree += (q.label == p.label) as usize;
            }
        }
        let label_agreement_pct = if common == 0 {
            None
        } else {
            Some(agree as f64 / common as f64 * 100.0)
        };
        Self {
            first,
            second,
            latency_ratio,
            label_agreement_pct,
            modeled,
        }
    }

    /// Duration / mean detection / processing-time table, one row per mode.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>16} {:>20} {:>20} {:>18}",
            "Mode", "Video duration", "Average detections", "Median detections", "Processing time"
        );
        for report in [&self.first, &self.second] {
            let duration = report
                .stats
                .source_duration_ms
                .map(|d| format!("{:.1}s", d / 1000.0))
                .unwrap_or_else(|| "-".to_string());
            let _ = writeln!(
                out,
                "{:<14} {:>16} {:>19.1}ms {:>19.1}ms {:>17.2}s",
                report.mode.to_string(),
                duration,
                report.stats.mean_latency_ms,
                report.stats.median_latency_ms,
                report.stats.total_processing_ms / 1000.0,
            );
        }
        if let Some(ratio) = self.latency_ratio {
            let _ = writeln!(out, "mean latency ratio ({} / {}): {ratio:.3}", self.first.mode, self.second.mode);
        }
        if let Some(agreement) = self.label_agreement_pct {
            let _ = writeln!(out, "label agreement: {agreement:.1}%");
        }
        if let Some(m) = self.modeled {
            let _ = writeln!(
                out,
                "modeled per-window latency: {:.1}ms vs {:.1}ms (ratio {:.3})",
                m.first_ms, m.second_ms, m.ratio
            );
        }
        out
    }
}
