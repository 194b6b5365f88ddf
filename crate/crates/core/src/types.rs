//! Shared domain types and unit conventions.
//!
//! Lengths are meters, times are seconds, frequencies are Hz and flow rates
//! are m³/s unless a name says otherwise (`*_cm`, `*_ml_s`).

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of sound in dry air at 20 °C.
pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;
/// Open-end correction factor for a pipe.
pub const DEFAULT_END_CORRECTION: f64 = 0.62;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PhysicsConstants {
    /// `c`, meters per second.
    pub speed_of_sound: f64,
    /// `β`, dimensionless.
    pub end_correction: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        Self {
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            end_correction: DEFAULT_END_CORRECTION,
        }
    }
}

impl PhysicsConstants {
    pub fn new(speed_of_sound: f64, end_correction: f64) -> Result<Self> {
        let constants = Self {
            speed_of_sound,
            end_correction,
        };
        constants.validate()?;
        Ok(constants)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::InvalidConfig("speed of sound must be positive"));
        }
        if !(self.end_correction.is_finite() && self.end_correction > 0.0) {
            return Err(Error::InvalidConfig("end correction must be positive"));
        }
        Ok(())
    }
}

/// `λ = c / f`.
pub fn wavelength_of_frequency(frequency: f64, constants: &PhysicsConstants) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::Domain("frequency must be positive"));
    }
    Ok(constants.speed_of_sound / frequency)
}

/// `f = c / λ`.
pub fn frequency_of_wavelength(wavelength: f64, constants: &PhysicsConstants) -> Result<f64> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::Domain("wavelength must be positive"));
    }
    Ok(constants.speed_of_sound / wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Shape {
    Cylinder,
    /// Conical frustum; radius varies linearly from base to rim.
    Frustum,
    /// Cylindrical body under a narrow neck, resonating as a Helmholtz cavity.
    Bottleneck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Neck {
    pub length: f64,
    pub radius: f64,
}

/// Parametric container geometry. `height` is the fillable height (the body,
/// for bottlenecks).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ContainerSpec {
    pub shape: Shape,
    pub height: f64,
    pub radius_base: f64,
    pub radius_top: f64,
    pub neck: Option<Neck>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ContainerSpec {
    pub fn cylinder(height: f64, radius: f64) -> Result<Self> {
        let spec = Self {
            shape: Shape::Cylinder,
            height,
            radius_base: radius,
            radius_top: radius,
            neck: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn frustum(height: f64, radius_base: f64, radius_top: f64) -> Result<Self> {
        let spec = Self {
            shape: Shape::Frustum,
            height,
            radius_base,
            radius_top,
            neck: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bottleneck(height: f64, radius_body: f64, neck: Neck) -> Result<Self> {
        let spec = Self {
            shape: Shape::Bottleneck,
            height,
            radius_base: radius_body,
            radius_top: radius_body,
            neck: Some(neck),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !positive(self.height) {
            return Err(Error::InvalidContainer("height must be positive"));
        }
        if !positive(self.radius_base) || !positive(self.radius_top) {
            return Err(Error::InvalidContainer("radii must be positive"));
        }
        match self.shape {
            Shape::Cylinder => {
                if self.radius_top != self.radius_base {
                    return Err(Error::InvalidContainer(
                        "cylinder top radius must equal base radius",
                    ));
                }
            }
            Shape::Frustum => {}
            Shape::Bottleneck => {
                let neck = self
                    .neck
                    .ok_or(Error::InvalidContainer("bottleneck requires neck parameters"))?;
                if !positive(neck.length) || !positive(neck.radius) {
                    return Err(Error::InvalidContainer("neck dimensions must be positive"));
                }
                if neck.radius >= self.radius_base {
                    return Err(Error::InvalidContainer("neck must be narrower than the body"));
                }
            }
        }
        if self.shape != Shape::Bottleneck && self.neck.is_some() {
            return Err(Error::InvalidContainer("only bottlenecks carry a neck"));
        }
        Ok(())
    }

    /// Inner radius at liquid height `h` above the base.
    pub fn radius_at_height(&self, h: f64) -> f64 {
        match self.shape {
            Shape::Frustum => {
                let frac = (h / self.height).clamp(0.0, 1.0);
                self.radius_base + (self.radius_top - self.radius_base) * frac
            }
            _ => self.radius_base,
        }
    }

    /// Liquid volume when filled to height `h`, m³.
    pub fn filled_volume(&self, h: f64) -> f64 {
        let h = h.clamp(0.0, self.height);
        match self.shape {
            Shape::Frustum => {
                let rb = self.radius_base;
                let rh = self.radius_at_height(h);
                core::f64::consts::PI * h * (rb * rb + rb * rh + rh * rh) / 3.0
            }
            _ => core::f64::consts::PI * self.radius_base * self.radius_base * h,
        }
    }

    pub fn volume(&self) -> f64 {
        self.filled_volume(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FillSample {
    pub t: f64,
    /// Air-column length, meters.
    pub l: f64,
}

/// Air-column length sampled over a pour of duration `duration`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FillProfile {
    pub duration: f64,
    pub samples: Vec<FillSample>,
}

impl FillProfile {
    /// Builds a profile, checking that samples are time-sorted and that the
    /// air column never grows.
    pub fn new(duration: f64, samples: Vec<FillSample>) -> Result<Self> {
        let profile = Self { duration, samples };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::Domain("duration must be non-negative"));
        }
        if self.samples.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if self
            .samples
            .iter()
            .any(|s| !s.t.is_finite() || !s.l.is_finite() || s.l < 0.0)
        {
            return Err(Error::Domain("fill samples must be finite and non-negative"));
        }
        for pair in self.samples.windows(2) {
            if pair[1].t < pair[0].t {
                return Err(Error::Domain("fill samples must be sorted by time"));
            }
            if pair[1].l > pair[0].l {
                return Err(Error::Domain("air column must be non-increasing"));
            }
        }
        Ok(())
    }

    /// Air-column length at `t` by linear interpolation, clamped at the ends.
    pub fn level_at(&self, t: f64) -> f64 {
        interpolate(&self.samples, t, |s| (s.t, s.l))
    }
}

/// Piecewise-linear interpolation over time-sorted items, clamped at the ends.
/// `key` maps an item to its `(time, value)`; an empty slice yields NaN.
pub fn interpolate<T>(items: &[T], t: f64, key: impl Fn(&T) -> (f64, f64)) -> f64 {
    let n = items.len();
    if n == 0 {
        return f64::NAN;
    }
    let (t0, v0) = key(&items[0]);
    if t <= t0 || n == 1 {
        return v0;
    }
    let (tn, vn) = key(&items[n - 1]);
    if t >= tn {
        return vn;
    }
    let idx = items.partition_point(|it| key(it).0 <= t);
    let (ta, va) = key(&items[idx - 1]);
    let (tb, vb) = key(&items[idx]);
    if tb <= ta {
        return vb;
    }
    va + (vb - va) * (t - ta) / (tb - ta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WavelengthSample {
    pub t: f64,
    /// Wavelength, meters.
    pub lambda: f64,
    /// Fit weight (frame confidence); 1 for exact curves.
    pub weight: f64,
}

impl WavelengthSample {
    pub fn new(t: f64, lambda: f64) -> Self {
        Self {
            t,
            lambda,
            weight: 1.0,
        }
    }
}

/// Mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("audio samples must be finite"));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// The first `seconds` of audio.
    pub fn truncated(&self, seconds: f64) -> Self {
        let n = ((seconds.max(0.0) * self.sample_rate as f64).round() as usize).min(self.len());
        Self {
            sample_rate: self.sample_rate,
            samples: self.samples[..n].to_vec(),
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// RMS of consecutive frames as `(center time, rms)` pairs.
    pub fn frame_rms(&self, frame_size: usize, hop: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if frame_size == 0 || hop == 0 {
            return out;
        }
        let sr = self.sample_rate as f64;
        let mut start = 0;
        while start + frame_size <= self.len() {
            let frame = &self.samples[start..start + frame_size];
            let rms = (frame.iter().map(|x| x * x).sum::<f64>() / frame_size as f64).sqrt();
            out.push(((start as f64 + frame_size as f64 / 2.0) / sr, rms));
            start += hop;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TrackSource {
    Argmax,
    Yin,
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PitchFrame {
    pub t: f64,
    pub frequency: Option<f64>,
    pub wavelength: Option<f64>,
    pub confidence: f64,
}

impl PitchFrame {
    pub fn voiced(t: f64, frequency: f64, confidence: f64, constants: &PhysicsConstants) -> Self {
        Self {
            t,
            frequency: Some(frequency),
            wavelength: wavelength_of_frequency(frequency, constants).ok(),
            confidence: confidence.clamp(0.0, 1.0),
        }
    }

    pub fn unvoiced(t: f64, confidence: f64) -> Self {
        Self {
            t,
            frequency: None,
            wavelength: None,
            confidence: confidence.clamp(0.0, 1.0),
        }
    }

    pub fn is_voiced(&self) -> bool {
        self.frequency.is_some() && self.wavelength.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PitchTrack {
    pub frames: Vec<PitchFrame>,
    pub source: TrackSource,
}

impl PitchTrack {
    pub fn new(frames: Vec<PitchFrame>, source: TrackSource) -> Self {
        Self { frames, source }
    }

    pub fn voiced(&self) -> impl Iterator<Item = &PitchFrame> {
        self.frames.iter().filter(|f| f.is_voiced())
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced().count()
    }

    /// Voiced frames as wavelength samples weighted by confidence.
    pub fn wavelength_samples(&self) -> Vec<WavelengthSample> {
        self.voiced()
            .map(|f| WavelengthSample {
                t: f.t,
                lambda: f.wavelength.unwrap_or(f64::NAN),
                weight: f.confidence,
            })
            .collect()
    }

    /// Frames with `t <= t_end`.
    pub fn until(&self, t_end: f64) -> Self {
        Self {
            frames: self.frames.iter().copied().filter(|f| f.t <= t_end).collect(),
            source: self.source,
        }
    }
}

/// Parameters of the liquid-loaded wall resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RadialParams {
    /// Empty-container wall frequency, Hz.
    pub f0: f64,
    /// Liquid/wall density coupling, dimensionless.
    pub xi: f64,
}

impl RadialParams {
    pub fn validate(&self) -> Result<()> {
        if !positive(self.f0) {
            return Err(Error::InvalidConfig("radial f0 must be positive"));
        }
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return Err(Error::InvalidConfig("radial xi must be non-negative"));
        }
        Ok(())
    }
}
