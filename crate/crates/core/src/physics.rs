//! Forward resonance laws, fill dynamics and the inverse map from a
//! wavelength curve to container properties.
//!
//! The central relation is the quarter-wave resonance of the air column with
//! an open-end correction:
//!
//! ```text
//! f(t) = c / (4 (l(t) + β R))        λ(t) = c / f(t) = 4 (l(t) + β R)
//! ```
//!
//! With the boundary condition `l(T) = 0` this gives
//! `l(t) = (λ(t) − λ(T)) / 4`, `H = (λ(0) − λ(T)) / 4`, `R = λ(T) / (4β)` and
//! `Q(t) = −π R² λ'(t) / 4`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitch::fit::{fit_samples, least_squares, CurveParams, Effort, ModelKind, RansacConfig};
use crate::types::{
    interpolate, ContainerSpec, FillProfile, FillSample, PhysicsConstants, PitchTrack, RadialParams,
    Shape, WavelengthSample,
};

/// m³/s → ml/s.
pub const ML_PER_M3: f64 = 1e6;

/// A differentiable wavelength-vs-time curve, meters over seconds.
pub trait WavelengthCurve {
    fn wavelength(&self, t: f64) -> f64;
    fn slope(&self, t: f64) -> f64;
    fn domain(&self) -> (f64, f64);
}

impl WavelengthCurve for CurveParams {
    fn wavelength(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn slope(&self, t: f64) -> f64 {
        self.derivative(t)
    }

    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Piecewise-linear curve through time-sorted samples, e.g. raw per-frame
/// wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    samples: Vec<WavelengthSample>,
}

impl SampledCurve {
    pub fn new(mut samples: Vec<WavelengthSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if samples.iter().any(|s| !s.t.is_finite() || !s.lambda.is_finite()) {
            return Err(Error::Domain("samples must be finite"));
        }
        samples.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self { samples })
    }

    pub fn from_track(track: &PitchTrack) -> Result<Self> {
        Self::new(track.wavelength_samples())
    }

    pub fn samples(&self) -> &[WavelengthSample] {
        &self.samples
    }
}

impl WavelengthCurve for SampledCurve {
    fn wavelength(&self, t: f64) -> f64 {
        interpolate(&self.samples, t, |s| (s.t, s.lambda))
    }

    fn slope(&self, t: f64) -> f64 {
        let s = &self.samples;
        if s.len() < 2 {
            return 0.0;
        }
        let idx = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
        let (a, b) = (&s[idx - 1], &s[idx]);
        if b.t > a.t {
            (b.lambda - a.lambda) / (b.t - a.t)
        } else {
            0.0
        }
    }

    fn domain(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }
}

/// Quarter-wave fundamental of an air column of length `l` in a tube of
/// radius `radius`: `c / (4 (l + β R))`.
pub fn axial_frequency(l: f64, radius: f64, constants: &PhysicsConstants) -> Result<f64> {
    if !(l.is_finite() && l >= 0.0) {
        return Err(Error::Domain("air-column length must be non-negative"));
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::Domain("radius must be non-negative"));
    }
    let effective = l + constants.end_correction * radius;
    if effective <= 0.0 {
        return Err(Error::Domain("effective length must be positive"));
    }
    Ok(constants.speed_of_sound / (4.0 * effective))
}

/// Wall resonance loaded by the liquid: `f0 / sqrt(1 + ξ (1 − l/H)³)`.
pub fn radial_frequency(l: f64, height: f64, params: &RadialParams) -> Result<f64> {
    params.validate()?;
    if !(height > 0.0) {
        return Err(Error::Domain("height must be positive"));
    }
    if !(0.0..=height).contains(&l) {
        return Err(Error::Domain("air-column length must lie in [0, H]"));
    }
    let fill = 1.0 - l / height;
    Ok(params.f0 / (1.0 + params.xi * fill * fill * fill).sqrt())
}

/// Time to fill the whole container at constant volume flow `flow` (m³/s).
pub fn pour_duration(container: &ContainerSpec, flow: f64) -> Result<f64> {
    container.validate()?;
    if !(flow.is_finite() && flow > 0.0) {
        return Err(Error::Domain("flow rate must be positive"));
    }
    Ok(container.volume() / flow)
}

/// Air-column length over a pour at constant volume flow `flow` (m³/s),
/// sampled at `n_samples` evenly spaced times over `[0, T]`.
///
/// Cylinders (and bottle bodies) empty linearly. For frusta the liquid height
/// `h(t)` solves `V(h) = Q t`, found by bisection on the closed-form filled
/// volume.
pub fn fill_profile(container: &ContainerSpec, flow: f64, n_samples: usize) -> Result<FillProfile> {
    let duration = pour_duration(container, flow)?;
    let n = n_samples.max(2);
    let height = container.height;
    let area = PI * container.radius_base * container.radius_base;

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = duration * i as f64 / (n - 1) as f64;
        let l = if i == 0 {
            height
        } else if i == n - 1 {
            0.0
        } else {
            match container.shape {
                Shape::Frustum => height - height_for_volume(container, flow * t),
                _ => height - flow * t / area,
            }
        };
        samples.push(FillSample {
            t,
            l: l.clamp(0.0, height),
        });
    }
    FillProfile::new(duration, samples)
}

/// Liquid height holding `volume`, by bisection on the monotone `V(h)`.
fn height_for_volume(container: &ContainerSpec, volume: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, container.height);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if container.filled_volume(mid) < volume {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fundamental wavelength of the container with air column `l`.
///
/// Cylinders and frusta use the quarter-wave law with the end correction
/// taken at the radius of the liquid surface. Bottlenecks resonate as a
/// Helmholtz cavity of volume `π R² l` behind a neck of radius `a` and
/// effective length `L + 2βa`, which gives `λ = 2π (R/a) sqrt((L + 2βa) l)`,
/// i.e. `f ∝ 1/√l`.
pub fn wavelength_at_level(container: &ContainerSpec, l: f64, constants: &PhysicsConstants) -> f64 {
    let beta = constants.end_correction;
    match container.shape {
        Shape::Cylinder => 4.0 * (l + beta * container.radius_base),
        Shape::Frustum => {
            let surface = container.radius_at_height(container.height - l);
            4.0 * (l + beta * surface)
        }
        Shape::Bottleneck => {
            let neck = container.neck.unwrap_or(crate::types::Neck {
                length: 0.0,
                radius: container.radius_base,
            });
            let effective = neck.length + 2.0 * beta * neck.radius;
            2.0 * PI * (container.radius_base / neck.radius) * (effective * l.max(0.0)).sqrt()
        }
    }
}

/// `λ(t)` along a fill profile.
pub fn wavelength_profile(
    container: &ContainerSpec,
    fill: &FillProfile,
    constants: &PhysicsConstants,
) -> Vec<WavelengthSample> {
    fill.samples
        .iter()
        .map(|s| WavelengthSample::new(s.t, wavelength_at_level(container, s.l, constants)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LengthInversion {
    pub profile: FillProfile,
    /// Samples where `λ(t) < λ(T)` forced a negative length, clamped to 0.
    pub clamped: usize,
}

/// `l(t) = (λ(t) − λ(T)) / 4` on `n_samples` evenly spaced times in `[0, T]`.
pub fn invert_length(
    curve: &impl WavelengthCurve,
    duration: f64,
    n_samples: usize,
) -> Result<LengthInversion> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain("duration must be positive"));
    }
    let n = n_samples.max(2);
    let end = curve.wavelength(duration);
    let mut clamped = 0;
    let samples = (0..n)
        .map(|i| {
            let t = if i == n - 1 {
                duration
            } else {
                duration * i as f64 / (n - 1) as f64
            };
            let raw = if i == n - 1 {
                0.0
            } else {
                (curve.wavelength(t) - end) / 4.0
            };
            if raw < 0.0 {
                clamped += 1;
            }
            FillSample { t, l: raw.max(0.0) }
        })
        .collect();
    Ok(LengthInversion {
        profile: FillProfile { duration, samples },
        clamped,
    })
}

/// Air-column length at a single time, `(λ(t) − λ(T)) / 4`, unclamped.
pub fn air_column_at(curve: &impl WavelengthCurve, duration: f64, t: f64) -> f64 {
    (curve.wavelength(t) - curve.wavelength(duration)) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Dimensions {
    pub height: f64,
    pub radius: f64,
}

/// `H = (λ(0) − λ(T)) / 4`, `R = λ(T) / (4β)`.
pub fn invert_dimensions(
    curve: &impl WavelengthCurve,
    duration: f64,
    constants: &PhysicsConstants,
) -> Result<Dimensions> {
    let start = curve.wavelength(0.0);
    let end = curve.wavelength(duration);
    if !(start.is_finite() && end.is_finite()) {
        return Err(Error::NonPhysical("wavelength curve is not finite on [0, T]"));
    }
    if start <= end {
        return Err(Error::NonPhysical("wavelength does not decrease over the pour"));
    }
    if end <= 0.0 {
        return Err(Error::NonPhysical("final wavelength must be positive"));
    }
    Ok(Dimensions {
        height: (start - end) / 4.0,
        radius: end / (4.0 * constants.end_correction),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowSample {
    pub t: f64,
    pub ml_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowRate {
    pub samples: Vec<FlowSample>,
    pub mean_ml_per_s: f64,
}

/// `Q(t) = −π R² λ'(t) / 4`, reported in ml/s at the requested times.
pub fn invert_flow_rate(curve: &impl WavelengthCurve, radius: f64, times: &[f64]) -> Result<FlowRate> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain("radius must be positive"));
    }
    let samples: Vec<FlowSample> = times
        .iter()
        .map(|&t| FlowSample {
            t,
            ml_per_s: flow_from_slope(curve.slope(t), radius),
        })
        .collect();
    let mean_ml_per_s = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.ml_per_s).sum::<f64>() / samples.len() as f64
    };
    Ok(FlowRate {
        samples,
        mean_ml_per_s,
    })
}

/// ml/s from a wavelength slope (m/s) and radius (m).
pub fn flow_from_slope(slope: f64, radius: f64) -> f64 {
    let q = -0.25 * PI * radius * radius * slope * ML_PER_M3;
    // avoid reporting -0.0 for a flat curve
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SlopeMethod {
    /// RANSAC line over the whole partial curve.
    RansacSlope,
    /// Weighted least-squares line over the early window only.
    LocalRegression,
}

/// How the end correction enters the time-to-fill numerator when `R` is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EndCorrectionForm {
    /// `λ − 4βR`, which is `4 l`.
    Consistent,
    /// `λ − βR`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TimeToFillConfig {
    /// Early window `δ`, seconds; the reference time is `t' = δ/2`.
    pub early_window: f64,
    pub method: SlopeMethod,
    pub correction: EndCorrectionForm,
    pub ransac: RansacConfig,
    pub seed: u64,
}

impl Default for TimeToFillConfig {
    fn default() -> Self {
        Self {
            early_window: 0.5,
            method: SlopeMethod::RansacSlope,
            correction: EndCorrectionForm::Consistent,
            ransac: RansacConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TimeToFill {
    /// Remaining time at `t_cut`, seconds.
    pub tau: f64,
    pub t_ref: f64,
    pub tau_at_ref: f64,
    pub slope: f64,
}

/// Remaining pour time at `t_cut` from the wavelength observed on
/// `[0, t_cut]`, assuming constant flow.
///
/// At the reference time `t' = δ/2`,
/// `τ(t') = −(λ(t') − 4βR) / λ'` when a radius estimate is given, otherwise
/// the end correction is neglected: `τ(t') ≈ −λ(t') / λ'`. The result is
/// `τ(t_cut) = τ(t') − (t_cut − t')`.
pub fn time_to_fill(
    partial: &[WavelengthSample],
    t_cut: f64,
    config: &TimeToFillConfig,
    constants: &PhysicsConstants,
    radius: Option<f64>,
) -> Result<TimeToFill> {
    let delta = config.early_window;
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig("early window must be positive"));
    }
    if !(t_cut >= delta) {
        return Err(Error::InsufficientData {
            needed: 1,
            got: 0,
        });
    }
    let observed: Vec<WavelengthSample> = partial.iter().copied().filter(|s| s.t <= t_cut).collect();
    let t_ref = 0.5 * delta;

    let line = match config.method {
        SlopeMethod::RansacSlope => {
            fit_samples(&observed, ModelKind::Linear, &config.ransac, config.seed)
                .map_err(no_pour_if_short)?
                .params
        }
        SlopeMethod::LocalRegression => {
            let early: Vec<&WavelengthSample> = observed.iter().filter(|s| s.t <= delta).collect();
            if early.len() < 2 {
                return Err(Error::InsufficientData {
                    needed: 2,
                    got: early.len(),
                });
            }
            let ts: Vec<f64> = early.iter().map(|s| s.t).collect();
            let ys: Vec<f64> = early.iter().map(|s| s.lambda).collect();
            let ws: Vec<f64> = early.iter().map(|s| s.weight.max(1e-6)).collect();
            least_squares(&ts, &ys, &ws, ModelKind::Linear, Effort::Full)
                .ok_or(Error::Degenerate("early window spans no time"))?
        }
    };

    let slope = line.derivative(t_ref);
    if !(slope < 0.0) {
        return Err(Error::NoPour);
    }
    let lambda = line.eval(t_ref);
    let numerator = match radius {
        Some(r) => {
            let k = match config.correction {
                EndCorrectionForm::Consistent => 4.0,
                EndCorrectionForm::AsPrinted => 1.0,
            };
            lambda - k * constants.end_correction * r
        }
        None => lambda,
    };
    let tau_at_ref = -numerator / slope;
    Ok(TimeToFill {
        tau: tau_at_ref - (t_cut - t_ref),
        t_ref,
        tau_at_ref,
        slope,
    })
}

fn no_pour_if_short(e: Error) -> Error {
    match e {
        Error::InsufficientData { .. } | Error::Degenerate(_) => Error::NoPour,
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ShapeClass {
    Cylindrical,
    Semiconical,
    Bottleneck,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 3] = [
        ShapeClass::Cylindrical,
        ShapeClass::Semiconical,
        ShapeClass::Bottleneck,
    ];

    /// The wavelength family a pour into this shape follows.
    pub fn model(self) -> ModelKind {
        match self {
            ShapeClass::Cylindrical => ModelKind::Linear,
            ShapeClass::Semiconical => ModelKind::Frustum,
            ShapeClass::Bottleneck => ModelKind::Sqrt,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Cylindrical => "cylindrical",
            ShapeClass::Semiconical => "semiconical",
            ShapeClass::Bottleneck => "bottleneck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ClassifyConfig {
    pub ransac: RansacConfig,
    pub seed: u64,
    /// A curved family must beat the line's residual by this fraction.
    pub tie_margin: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            seed: 0,
            tie_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FamilyResidual {
    pub class: ShapeClass,
    pub params: CurveParams,
    /// Degrees-of-freedom corrected weighted RMS residual divided by the
    /// wavelength span of the consensus frames.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ShapeClassification {
    pub label: ShapeClass,
    pub residuals: Vec<FamilyResidual>,
    pub consensus_frames: usize,
}

/// Picks the wavelength family that best explains a track: linear
/// (cylinder), cube-root (frustum) or square-root (bottleneck).
///
/// Each family is fitted with RANSAC; the largest consensus set is then
/// shared by all three least-squares refits so their residuals are
/// comparable. Curved families win only when they beat the line by
/// `tie_margin`, and the frustum wins a tie with the bottleneck.
pub fn classify_shape(
    track: &PitchTrack,
    duration: f64,
    config: &ClassifyConfig,
) -> Result<ShapeClassification> {
    const MIN_VOICED: usize = 10;
    let samples: Vec<WavelengthSample> = track
        .wavelength_samples()
        .into_iter()
        .filter(|s| s.t <= duration)
        .collect();
    if samples.len() < MIN_VOICED {
        return Err(Error::InsufficientData {
            needed: MIN_VOICED,
            got: samples.len(),
        });
    }

    let mut consensus: Option<Vec<bool>> = None;
    let mut best_count = 0;
    for class in ShapeClass::ALL {
        let fit = fit_samples(&samples, class.model(), &config.ransac, config.seed)?;
        let count = fit.inlier_count();
        if count > best_count {
            best_count = count;
            consensus = Some(fit.inlier_mask);
        }
    }
    let mask = consensus.ok_or(Error::Degenerate("no consensus set"))?;
    let kept: Vec<&WavelengthSample> = samples.iter().zip(&mask).filter(|(_, &m)| m).map(|(s, _)| s).collect();
    let ts: Vec<f64> = kept.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.lambda).collect();
    let ws: Vec<f64> = kept.iter().map(|s| s.weight.max(1e-6)).collect();
    let span = ys.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y))
        - ys.iter().fold(f64::INFINITY, |m, &y| m.min(y));
    let wsum: f64 = ws.iter().sum();
    let n = kept.len();

    let mut residuals = Vec::with_capacity(3);
    for class in ShapeClass::ALL {
        let model = class.model();
        let params = least_squares(&ts, &ys, &ws, model, Effort::Full)
            .ok_or(Error::Degenerate("family fit failed"))?;
        let wsse: f64 = (0..n)
            .map(|i| {
                let r = ys[i] - params.eval(ts[i]);
                ws[i] * r * r
            })
            .sum();
        let dof = n.saturating_sub(model.n_params()).max(1) as f64;
        let rms = (wsse / wsum * n as f64 / dof).sqrt();
        let residual = if span > 0.0 { rms / span } else { rms };
        residuals.push(FamilyResidual {
            class,
            params,
            residual,
        });
    }

    let line = residuals[0].residual;
    let curved = if residuals[1].residual <= residuals[2].residual {
        residuals[1]
    } else {
        residuals[2]
    };
    let label = if curved.residual < (1.0 - config.tie_margin) * line {
        curved.class
    } else {
        ShapeClass::Cylindrical
    };
    Ok(ShapeClassification {
        label,
        residuals,
        consensus_frames: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CutEstimate {
    /// Cut position as a fraction of the recording.
    pub fraction: f64,
    pub t_cut: f64,
    /// Remaining time with the end correction from the estimated radius;
    /// `None` when no pour is visible before the cut.
    pub tau: Option<f64>,
    /// Remaining time neglecting the end correction.
    pub tau_uncorrected: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FitDiagnostics {
    pub model: ModelKind,
    pub residual_rms: f64,
    pub inlier_fraction: f64,
    pub voiced_frames: usize,
    pub total_frames: usize,
    /// Inverted air-column samples clamped at zero.
    pub clamped_samples: usize,
}

/// Everything recovered from one recording.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PropertyEstimate {
    pub duration: f64,
    pub height: f64,
    pub radius: f64,
    pub air_column: FillProfile,
    pub flow: FlowRate,
    pub time_to_fill: Vec<CutEstimate>,
    pub diagnostics: FitDiagnostics,
}
