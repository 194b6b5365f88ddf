//! Deterministic additive synthesis of pouring sounds and the seeded sampler
//! for synthetic containers.
//!
//! A render is the axial fundamental plus odd harmonics, an optional radial
//! wall tone and a white noise bed. All oscillators integrate their
//! instantaneous frequency sample by sample, so pitch glides carry no phase
//! discontinuities.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{fill_profile, wavelength_at_level, wavelength_profile};
use crate::types::{
    interpolate, AudioBuffer, ContainerSpec, FillProfile, Neck, PhysicsConstants, RadialParams, Shape,
    WavelengthSample,
};

/// Peak level after normalization.
pub const PEAK_LEVEL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Envelope {
    Constant,
    /// Linear fade-in over `attack` seconds and fade-out over the last
    /// `decay` seconds.
    AttackDecay { attack: f64, decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RadialTone {
    pub params: RadialParams,
    /// Level relative to the axial fundamental, dB.
    pub level_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SynthConfig {
    pub sample_rate: u32,
    /// Number of odd partials: 1 renders the fundamental only.
    pub n_harmonics: usize,
    /// Amplitude ratio between consecutive odd partials.
    pub harmonic_rolloff: f64,
    pub radial: Option<RadialTone>,
    /// Tonal-to-noise power ratio; `None` renders without noise.
    pub noise_snr_db: Option<f64>,
    pub envelope: Envelope,
    /// Ground-truth and control-curve rate, Hz.
    pub truth_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            n_harmonics: 3,
            harmonic_rolloff: 0.5,
            radial: None,
            noise_snr_db: None,
            envelope: Envelope::Constant,
            truth_rate: 1000.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive"));
        }
        if self.n_harmonics == 0 {
            return Err(Error::InvalidConfig("at least one harmonic is required"));
        }
        if !(self.harmonic_rolloff >= 0.0 && self.harmonic_rolloff.is_finite()) {
            return Err(Error::InvalidConfig("harmonic rolloff must be non-negative"));
        }
        if !(self.truth_rate > 0.0) {
            return Err(Error::InvalidConfig("truth rate must be positive"));
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidConfig("SNR must be finite; use None for no noise"));
            }
        }
        if let Some(r) = &self.radial {
            r.params.validate()?;
        }
        if let Envelope::AttackDecay { attack, decay } = self.envelope {
            if !(attack >= 0.0 && decay >= 0.0) {
                return Err(Error::InvalidConfig("envelope times must be non-negative"));
            }
        }
        Ok(())
    }
}

/// The exact curves a render follows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GroundTruth {
    pub container: ContainerSpec,
    /// m³/s; zero for a held level.
    pub flow: f64,
    pub fill: FillProfile,
    pub wavelength: Vec<WavelengthSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Render {
    pub audio: AudioBuffer,
    pub truth: GroundTruth,
}

/// Renders a pour at constant volume flow `flow` (m³/s) that fills the
/// container exactly at the end of the audio.
pub fn synthesize_pour(
    container: &ContainerSpec,
    flow: f64,
    config: &SynthConfig,
    constants: &PhysicsConstants,
) -> Result<Render> {
    config.validate()?;
    let duration = container.volume() / flow;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain("pour duration must be positive and finite"));
    }
    let n = (duration * config.truth_rate).ceil() as usize + 1;
    let fill = fill_profile(container, flow, n)?;
    synthesize_profile(container, fill, flow, config, constants)
}

/// Renders the sound of an arbitrary air-column profile. The wavelength
/// control curve is evaluated at the profile's samples and interpolated
/// linearly between them.
pub fn synthesize_profile(
    container: &ContainerSpec,
    fill: FillProfile,
    flow: f64,
    config: &SynthConfig,
    constants: &PhysicsConstants,
) -> Result<Render> {
    config.validate()?;
    container.validate()?;
    fill.validate()?;
    constants.validate()?;
    if !(fill.duration > 0.0) {
        return Err(Error::Domain("render duration must be positive"));
    }
    let wavelength = wavelength_profile(container, &fill, constants);
    let sr = config.sample_rate as f64;
    let nyquist = 0.5 * sr;
    let n = (fill.duration * sr).round() as usize;
    if n == 0 {
        return Err(Error::Domain("render duration is shorter than one sample"));
    }

    let amps: Vec<f64> = (0..config.n_harmonics)
        .map(|i| config.harmonic_rolloff.powi(i as i32))
        .collect();
    let radial_gain = config
        .radial
        .map(|r| 10f64.powf(r.level_db / 20.0))
        .unwrap_or(0.0);

    let mut tonal = Vec::with_capacity(n);
    let mut phase = 0.0;
    let mut radial_phase = 0.0;
    for i in 0..n {
        let t = i as f64 / sr;
        let env = envelope_gain(config.envelope, t, fill.duration);
        let lambda = interpolate(&wavelength, t, |s| (s.t, s.lambda));
        let f = if lambda > 0.0 {
            constants.speed_of_sound / lambda
        } else {
            f64::INFINITY
        };

        let mut x = 0.0;
        if f < nyquist {
            for (j, &a) in amps.iter().enumerate() {
                let k = (2 * j + 1) as f64;
                let g = nyquist_taper(k * f, nyquist);
                if g == 0.0 {
                    break;
                }
                x += a * g * (k * phase).sin();
            }
            phase = (phase + TAU * f / sr) % TAU;
        }

        if let Some(r) = &config.radial {
            let l = fill.level_at(t).clamp(0.0, container.height);
            let fr = r.params.f0 / (1.0 + r.params.xi * (1.0 - l / container.height).powi(3)).sqrt();
            let g = nyquist_taper(fr, nyquist);
            if g > 0.0 {
                x += radial_gain * g * radial_phase.sin();
                radial_phase = (radial_phase + TAU * fr / sr) % TAU;
            }
        }
        tonal.push(env * x);
    }

    let mut samples = tonal;
    if let Some(snr) = config.noise_snr_db {
        let power = samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let noise_power = noise.iter().map(|x| x * x).sum::<f64>() / n as f64;
        if power > 0.0 && noise_power > 0.0 {
            let scale = (power / noise_power / 10f64.powf(snr / 10.0)).sqrt();
            for (s, v) in samples.iter_mut().zip(noise.iter_mut()) {
                *s += scale * *v;
            }
        }
    }

    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let g = PEAK_LEVEL / peak;
        samples.iter_mut().for_each(|x| *x *= g);
    }

    Ok(Render {
        audio: AudioBuffer::new(config.sample_rate, samples)?,
        truth: GroundTruth {
            container: *container,
            flow,
            fill,
            wavelength,
        },
    })
}

/// Unit gain below 80% of Nyquist, raised-cosine fade to zero at 95%.
fn nyquist_taper(f: f64, nyquist: f64) -> f64 {
    let (lo, hi) = (0.8 * nyquist, 0.95 * nyquist);
    if f <= lo {
        1.0
    } else if f >= hi {
        0.0
    } else {
        0.5 + 0.5 * (PI * (f - lo) / (hi - lo)).cos()
    }
}

fn envelope_gain(envelope: Envelope, t: f64, duration: f64) -> f64 {
    match envelope {
        Envelope::Constant => 1.0,
        Envelope::AttackDecay { attack, decay } => {
            let up = if attack > 0.0 { (t / attack).min(1.0) } else { 1.0 };
            let down = if decay > 0.0 {
                ((duration - t) / decay).clamp(0.0, 1.0)
            } else {
                1.0
            };
            up.min(down)
        }
    }
}

/// A constant air column held for `duration` seconds.
pub fn held_level(height: f64, level: f64, duration: f64) -> Result<FillProfile> {
    if !(0.0..=height).contains(&level) {
        return Err(Error::Domain("level must lie in [0, H]"));
    }
    FillProfile::new(
        duration,
        alloc::vec![
            crate::types::FillSample { t: 0.0, l: level },
            crate::types::FillSample {
                t: duration,
                l: level
            },
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SampleRanges {
    pub height: (f64, f64),
    pub radius: (f64, f64),
    pub duration: (f64, f64),
}

impl Default for SampleRanges {
    fn default() -> Self {
        Self {
            height: (0.05, 0.25),
            radius: (0.01, 0.05),
            duration: (5.0, 15.0),
        }
    }
}

impl SampleRanges {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.height, self.radius, self.duration] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidConfig("sample ranges must be positive and ordered"));
            }
        }
        Ok(())
    }
}

/// One sampled container with its pour.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Draw {
    pub index: usize,
    pub container: ContainerSpec,
    pub duration: f64,
    /// m³/s.
    pub flow: f64,
    /// Seed for this draw's noise.
    pub seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn finish_draw(rng: &mut ChaCha8Rng, index: usize, container: ContainerSpec, ranges: &SampleRanges) -> Draw {
    let duration = uniform(rng, ranges.duration);
    Draw {
        index,
        container,
        duration,
        flow: container.volume() / duration,
        seed: rng.next_u64(),
    }
}

/// `n` independent cylinders with `H`, `R` and pour duration drawn uniformly
/// from `ranges`.
pub fn sample_draws(n: usize, ranges: &SampleRanges, seed: u64) -> Result<Vec<Draw>> {
    if n == 0 {
        return Err(Error::InvalidConfig("at least one draw is required"));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|index| {
            let height = uniform(&mut rng, ranges.height);
            let radius = uniform(&mut rng, ranges.radius);
            let container = ContainerSpec::cylinder(height, radius)?;
            Ok(finish_draw(&mut rng, index, container, ranges))
        })
        .collect()
}

/// `n` containers of one shape family with randomized dimensions.
///
/// Frusta flare from a narrow base (`R_base` in `[1, 3]` cm, top 1.5 to 2.5
/// times wider). Bottles pair a wide body (`R` in `[3, 5]` cm, `H` in
/// `[8, 25]` cm) with a neck of radius `[0.8, 1.5]` cm and length
/// `[2, 5]` cm.
pub fn sample_shape_draws(n: usize, shape: Shape, ranges: &SampleRanges, seed: u64) -> Result<Vec<Draw>> {
    if n == 0 {
        return Err(Error::InvalidConfig("at least one draw is required"));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|index| {
            let container = match shape {
                Shape::Cylinder => {
                    let h = uniform(&mut rng, ranges.height);
                    let r = uniform(&mut rng, ranges.radius);
                    ContainerSpec::cylinder(h, r)?
                }
                Shape::Frustum => {
                    let h = uniform(&mut rng, ranges.height);
                    let rb = uniform(&mut rng, (0.01, 0.03));
                    let flare = uniform(&mut rng, (1.5, 2.5));
                    ContainerSpec::frustum(h, rb, rb * flare)?
                }
                Shape::Bottleneck => {
                    let h = uniform(&mut rng, (0.08, 0.25));
                    let r = uniform(&mut rng, (0.03, 0.05));
                    let neck = Neck {
                        radius: uniform(&mut rng, (0.008, 0.015)),
                        length: uniform(&mut rng, (0.02, 0.05)),
                    };
                    ContainerSpec::bottleneck(h, r, neck)?
                }
            };
            Ok(finish_draw(&mut rng, index, container, ranges))
        })
        .collect()
}

/// Renders a draw with `config`, overriding its seed with the draw's own.
pub fn render_draw(draw: &Draw, config: &SynthConfig, constants: &PhysicsConstants) -> Result<Render> {
    let cfg = SynthConfig {
        seed: draw.seed,
        ..*config
    };
    synthesize_pour(&draw.container, draw.flow, &cfg, constants)
}

/// Axial fundamental of the empty-column end of a pour, Hz.
pub fn final_frequency(container: &ContainerSpec, constants: &PhysicsConstants) -> f64 {
    constants.speed_of_sound / wavelength_at_level(container, 0.0, constants)
}
