//! Audio → pitch track → wavelength fit → container properties.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{
    invert_dimensions, invert_flow_rate, invert_length, time_to_fill, CutEstimate, FitDiagnostics,
    PropertyEstimate, TimeToFillConfig,
};
use crate::pitch::argmax::{track_argmax, ArgmaxConfig};
use crate::pitch::fit::{fit_wavelength, FittedCurve, ModelKind, RansacConfig};
use crate::pitch::spectrogram::{spectrogram, Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::pitch::yin::{track_yin, YinConfig};
use crate::types::{AudioBuffer, PhysicsConstants, PitchTrack};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Tracker {
    Argmax(ArgmaxConfig),
    Yin(YinConfig),
}

impl Tracker {
    pub fn name(&self) -> &'static str {
        match self {
            Tracker::Argmax(_) => "argmax",
            Tracker::Yin(_) => "yin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnalysisConfig {
    pub tracker: Tracker,
    pub window_size: usize,
    pub hop_size: usize,
    pub model: ModelKind,
    pub ransac: RansacConfig,
    pub seed: u64,
    pub time_to_fill: TimeToFillConfig,
    /// Cut points for time-to-fill, as fractions of the recording.
    pub cuts: Vec<f64>,
    /// Samples of the recovered air-column and flow curves.
    pub profile_samples: usize,
    /// Fewer voiced frames than this means no pour was heard.
    pub min_voiced: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tracker: Tracker::Argmax(ArgmaxConfig::default()),
            window_size: DEFAULT_WINDOW,
            hop_size: DEFAULT_HOP,
            model: ModelKind::Linear,
            ransac: RansacConfig::default(),
            seed: 0,
            time_to_fill: TimeToFillConfig::default(),
            cuts: vec![0.25, 0.5, 0.75],
            profile_samples: 101,
            min_voiced: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub track: PitchTrack,
    pub curve: FittedCurve,
    pub estimate: PropertyEstimate,
    /// Present when the argmax tracker ran.
    pub spectrogram: Option<Spectrogram>,
}

/// Runs the tracker alone.
pub fn track_pitch(
    audio: &AudioBuffer,
    config: &AnalysisConfig,
    constants: &PhysicsConstants,
) -> Result<(PitchTrack, Option<Spectrogram>)> {
    match &config.tracker {
        Tracker::Argmax(cfg) => {
            let spec = spectrogram(audio, config.window_size, config.hop_size)?;
            let track = track_argmax(&spec, cfg, constants)?;
            Ok((track, Some(spec)))
        }
        Tracker::Yin(cfg) => Ok((track_yin(audio, cfg, constants)?, None)),
    }
}

/// The full pipeline on one recording, taking the end of the audio as the
/// moment the container is full.
pub fn analyze_audio(audio: &AudioBuffer, config: &AnalysisConfig, constants: &PhysicsConstants) -> Result<Analysis> {
    constants.validate()?;
    if config.cuts.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::InvalidConfig("cut fractions must lie in [0, 1]"));
    }
    let (track, spectrogram) = track_pitch(audio, config, constants)?;
    analyze_track(track, spectrogram, audio.duration(), config, constants)
}

/// The pipeline from an existing track onward.
pub fn analyze_track(
    track: PitchTrack,
    spectrogram: Option<Spectrogram>,
    duration: f64,
    config: &AnalysisConfig,
    constants: &PhysicsConstants,
) -> Result<Analysis> {
    let voiced = track.voiced_count();
    if voiced < config.min_voiced.max(config.ransac.min_samples) {
        return Err(Error::NoPour);
    }
    let curve = fit_wavelength(&track, config.model, &config.ransac, config.seed).map_err(|e| match e {
        Error::InsufficientData { .. } | Error::Degenerate(_) => Error::NoPour,
        other => other,
    })?;
    let dims = invert_dimensions(&curve, duration, constants)?;
    let length = invert_length(&curve, duration, config.profile_samples)?;
    let times: Vec<f64> = length.profile.samples.iter().map(|s| s.t).collect();
    let flow = invert_flow_rate(&curve, dims.radius, &times)?;

    let ttf = TimeToFillConfig {
        seed: config.seed,
        ..config.time_to_fill
    };
    let time_to_fill = config
        .cuts
        .iter()
        .map(|&fraction| {
            let t_cut = fraction * duration;
            let partial = track.until(t_cut).wavelength_samples();
            let corrected = time_to_fill(&partial, t_cut, &ttf, constants, Some(dims.radius)).ok();
            let bare = time_to_fill(&partial, t_cut, &ttf, constants, None).ok();
            CutEstimate {
                fraction,
                t_cut,
                tau: corrected.map(|r| r.tau),
                tau_uncorrected: bare.map(|r| r.tau),
            }
        })
        .collect();

    let diagnostics = FitDiagnostics {
        model: config.model,
        residual_rms: curve.residual_rms,
        inlier_fraction: curve.inlier_fraction(),
        voiced_frames: voiced,
        total_frames: track.frames.len(),
        clamped_samples: length.clamped,
    };
    let estimate = PropertyEstimate {
        duration,
        height: dims.height,
        radius: dims.radius,
        air_column: length.profile,
        flow,
        time_to_fill,
        diagnostics,
    };
    Ok(Analysis {
        track,
        curve,
        estimate,
        spectrogram,
    })
}
