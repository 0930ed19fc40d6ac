//! Run reports: per-object accuracy against scene ground truth, plan and
//! collision verdicts for both costmaps, and per-stage timings.

use crate::scene::ObjectClass;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error reading report: {0}")]
    Io(#[from] std::io::Error),
    #[error("report is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported report schema version {found} (expected {REPORT_SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("no reports given")]
    Empty,
}

/// One registered object compared against its nearest same-class
/// ground-truth object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectEval {
    pub id: u32,
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub observations: u32,
    pub confidence: f64,
    /// Distance to the ground-truth footprint centroid, meters.
    pub position_error: Option<f64>,
    /// Absolute top-height error, meters.
    pub height_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanVerdict {
    pub found: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collided: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_collision_waypoint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offending_object: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean wall-clock milliseconds per frame for each pipeline stage.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub render: f64,
    pub detect_track: f64,
    pub cloud_plane: f64,
    pub map_update: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    pub scenario: String,
    pub seed: u64,
    pub frames: usize,
    pub objects: Vec<ObjectEval>,
    pub metric_plan: PlanVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic_plan: Option<PlanVerdict>,
    pub timings_ms_per_frame: StageTimings,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if report.schema != REPORT_SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion {
                found: report.schema,
            });
        }
        Ok(report)
    }
}

/// One aggregated row per report.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub scenario: String,
    pub objects: usize,
    pub mean_position_error: Option<f64>,
    pub max_position_error: Option<f64>,
    pub mean_height_error: Option<f64>,
    pub metric_collided: Option<bool>,
    pub semantic_collided: Option<bool>,
    pub detect_track_ms: f64,
    pub cloud_plane_ms: f64,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<Vec<EvalRow>, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(reports
        .iter()
        .map(|r| {
            let pos: Vec<f64> = r.objects.iter().filter_map(|o| o.position_error).collect();
            let hgt: Vec<f64> = r.objects.iter().filter_map(|o| o.height_error).collect();
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            EvalRow {
                scenario: r.scenario.clone(),
                objects: r.objects.len(),
                mean_position_error: mean(&pos),
                max_position_error: pos.iter().cloned().reduce(f64::max),
                mean_height_error: mean(&hgt),
                metric_collided: r.metric_plan.collided,
                semantic_collided: r.semantic_plan.as_ref().and_then(|p| p.collided),
                detect_track_ms: r.timings_ms_per_frame.detect_track,
                cloud_plane_ms: r.timings_ms_per_frame.cloud_plane,
            }
        })
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn fmt_verdict(v: Option<bool>) -> String {
    match v {
        Some(true) => "COLLIDED".into(),
        Some(false) => "clear".into(),
        None => "-".into(),
    }
}

/// Console table over the aggregated rows.
pub fn render_table(rows: &[EvalRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>9}\n",
        "scenario",
        "objs",
        "pos_err",
        "pos_max",
        "hgt_err",
        "metric",
        "semantic",
        "det_ms",
        "cloud_ms"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9.2} {:>9.2}\n",
            r.scenario,
            r.objects,
            fmt_opt(r.mean_position_error),
            fmt_opt(r.max_position_error),
            fmt_opt(r.mean_height_error),
            fmt_verdict(r.metric_collided),
            fmt_verdict(r.semantic_collided),
            r.detect_track_ms,
            r.cloud_plane_ms,
        ));
    }
    out
}

/// CSV export over the aggregated rows.
pub fn render_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from(
        "scenario,objects,mean_position_error,max_position_error,mean_height_error,metric_collided,semantic_collided,detect_track_ms,cloud_plane_ms\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.objects,
            fmt_opt(r.mean_position_error),
            fmt_opt(r.max_position_error),
            fmt_opt(r.mean_height_error),
            r.metric_collided.map(|b| b.to_string()).unwrap_or_default(),
            r.semantic_collided.map(|b| b.to_string()).unwrap_or_default(),
            r.detect_track_ms,
            r.cloud_plane_ms,
        ));
    }
    out
}
