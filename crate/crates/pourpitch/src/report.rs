//! Human- and machine-readable reports. Lengths are in centimeters, flow in
//! ml/s and times in seconds.

use std::fmt::Write as _;

use pourpitch_core::cosup::ScaleEstimate;
use pourpitch_core::physics::{PropertyEstimate, ShapeClassification};
use serde::{Deserialize, Serialize};

const CM: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub cut_fraction: f64,
    pub t_cut_s: f64,
    pub tau_s: Option<f64>,
    pub tau_uncorrected_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub model: String,
    pub residual_rms_cm: f64,
    pub inlier_fraction: f64,
    pub voiced_frames: usize,
    pub total_frames: usize,
    pub clamped_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub tracker: String,
    pub duration_s: f64,
    pub height_cm: f64,
    pub radius_cm: f64,
    pub flow_mean_ml_s: f64,
    pub time_to_fill: Vec<CutReport>,
    /// `(t_s, l_cm)`.
    pub air_column_cm: Vec<(f64, f64)>,
    /// `(t_s, q_ml_s)`.
    pub flow_ml_s: Vec<(f64, f64)>,
    pub diagnostics: DiagnosticsReport,
}

impl PropertyReport {
    pub fn new(estimate: &PropertyEstimate, tracker: &str) -> Self {
        let d = &estimate.diagnostics;
        Self {
            tracker: tracker.to_string(),
            duration_s: estimate.duration,
            height_cm: estimate.height * CM,
            radius_cm: estimate.radius * CM,
            flow_mean_ml_s: estimate.flow.mean_ml_per_s,
            time_to_fill: estimate
                .time_to_fill
                .iter()
                .map(|c| CutReport {
                    cut_fraction: c.fraction,
                    t_cut_s: c.t_cut,
                    tau_s: c.tau,
                    tau_uncorrected_s: c.tau_uncorrected,
                })
                .collect(),
            air_column_cm: estimate.air_column.samples.iter().map(|s| (s.t, s.l * CM)).collect(),
            flow_ml_s: estimate.flow.samples.iter().map(|s| (s.t, s.ml_per_s)).collect(),
            diagnostics: DiagnosticsReport {
                model: format!("{:?}", d.model).to_lowercase(),
                residual_rms_cm: d.residual_rms * CM,
                inlier_fraction: d.inlier_fraction,
                voiced_frames: d.voiced_frames,
                total_frames: d.total_frames,
                clamped_samples: d.clamped_samples,
            },
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "duration        {:.3} s", self.duration_s);
        let _ = writeln!(s, "height          {:.2} cm", self.height_cm);
        let _ = writeln!(s, "radius          {:.2} cm", self.radius_cm);
        let _ = writeln!(s, "mean flow       {:.2} ml/s", self.flow_mean_ml_s);
        for c in &self.time_to_fill {
            let tau = c.tau_s.map_or("n/a".to_string(), |t| format!("{t:.2} s"));
            let bare = c.tau_uncorrected_s.map_or("n/a".to_string(), |t| format!("{t:.2} s"));
            let _ = writeln!(
                s,
                "time to fill    {tau} at {:.0}% ({:.2} s), {bare} without end correction",
                100.0 * c.cut_fraction,
                c.t_cut_s
            );
        }
        let d = &self.diagnostics;
        let _ = writeln!(
            s,
            "fit             {} via {}, {:.1}% inliers, rms {:.3} cm, {}/{} voiced frames",
            d.model,
            self.tracker,
            100.0 * d.inlier_fraction,
            d.residual_rms_cm,
            d.voiced_frames,
            d.total_frames
        );
        if d.clamped_samples > 0 {
            let _ = writeln!(s, "warning         {} air-column samples clamped at zero", d.clamped_samples);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    /// `(family, normalized residual)` in the order cylindrical, semiconical,
    /// bottleneck.
    pub residuals: Vec<(String, f64)>,
    pub consensus_frames: usize,
}

impl ClassReport {
    pub fn new(c: &ShapeClassification) -> Self {
        Self {
            label: c.label.name().to_string(),
            residuals: c.residuals.iter().map(|r| (r.class.name().to_string(), r.residual)).collect(),
            consensus_frames: c.consensus_frames,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("label           {}\n", self.label);
        for (name, r) in &self.residuals {
            let _ = writeln!(s, "  {name:<13} {r:.6}");
        }
        let _ = writeln!(s, "consensus       {} frames", self.consensus_frames);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub alpha: f64,
    pub plausible_range: (f64, f64),
    pub plausible: bool,
    pub frames: usize,
    pub warning: Option<String>,
}

impl ScaleReport {
    pub fn new(s: &ScaleEstimate) -> Self {
        let plausible = s.is_plausible();
        Self {
            alpha: s.alpha,
            plausible_range: s.plausible_range,
            plausible,
            frames: s.per_frame_ratios.len(),
            warning: (!plausible).then(|| {
                format!(
                    "scale factor {:.3} lies outside the plausible range [{}, {}]",
                    s.alpha, s.plausible_range.0, s.plausible_range.1
                )
            }),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("alpha           {:.6}\nframes          {}\n", self.alpha, self.frames);
        if let Some(w) = &self.warning {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}
