#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::spectrogram::Spectrogram;
use crate::error::{Error, Result};
use crate::types::{PhysicsConstants, PitchFrame, PitchTrack, TrackSource};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArgmaxConfig {
    /// Search band, Hz, inclusive at both ends.
    pub f_min: f64,
    pub f_max: f64,
    /// Median filter width over voiced frames; 1 disables smoothing.
    pub median_width: usize,
    /// Frames whose RMS is below this fraction of the file's 95th-percentile
    /// frame RMS are unvoiced.
    pub voicing_floor: f64,
    /// Refine the peak with log-parabolic interpolation across its neighbors.
    pub refine: bool,
    /// The in-band peak must reach this fraction of the frame's overall
    /// spectral maximum.
    pub min_peak_ratio: f64,
}

impl Default for ArgmaxConfig {
    fn default() -> Self {
        Self {
            f_min: 80.0,
            f_max: 6000.0,
            median_width: 5,
            voicing_floor: 0.01,
            refine: true,
            min_peak_ratio: 0.01,
        }
    }
}

/// Per-frame spectral argmax within a band, median-filtered over time.
///
/// A peak on the band edge only counts when it is also a local maximum of the
/// full spectrum, and any peak must reach `min_peak_ratio` of the strongest
/// bin; otherwise the frame's energy lies outside the band and the frame is
/// unvoiced.
pub fn track_argmax(
    spec: &Spectrogram,
    config: &ArgmaxConfig,
    constants: &PhysicsConstants,
) -> Result<PitchTrack> {
    let nyquist = spec.sample_rate as f64 / 2.0;
    if !(config.f_min >= 0.0 && config.f_max <= nyquist) {
        return Err(Error::InvalidConfig("band must lie within [0, Nyquist]"));
    }
    let bw = spec.bin_width();
    let k_lo = (config.f_min / bw).ceil() as usize;
    let k_hi = ((config.f_max / bw).floor() as usize).min(spec.n_bins() - 1);
    if config.f_max < config.f_min || k_lo > k_hi {
        return Err(Error::InvalidConfig("empty frequency band"));
    }

    let rms: Vec<f64> = (0..spec.n_frames()).map(|i| spec.frame_rms(i)).collect();
    let reference = percentile(&rms, 0.95);
    let floor = (config.voicing_floor * reference).max(1e-10);

    let mut frames: Vec<PitchFrame> = Vec::with_capacity(spec.n_frames());
    for i in 0..spec.n_frames() {
        let t = spec.frame_times[i];
        let m = spec.frame(i);
        let total: f64 = m.iter().sum();
        if rms[i] <= floor || total <= 0.0 {
            frames.push(PitchFrame::unvoiced(t, 0.0));
            continue;
        }
        let mut k = k_lo;
        for j in k_lo..=k_hi {
            if m[j] > m[k] {
                k = j;
            }
        }
        let left = if k > 0 { m[k - 1] } else { 0.0 };
        let right = if k + 1 < m.len() { m[k + 1] } else { 0.0 };
        let confidence = m[k] / total;
        let global = m.iter().fold(0.0f64, |a, &b| a.max(b));
        if m[k] < left || m[k] < right || m[k] <= 0.0 || m[k] < config.min_peak_ratio * global {
            frames.push(PitchFrame::unvoiced(t, confidence));
            continue;
        }
        let mut pos = k as f64;
        if config.refine && left > 0.0 && right > 0.0 {
            let (a, b, c) = (left.ln(), m[k].ln(), right.ln());
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                pos += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
            }
        }
        frames.push(PitchFrame::voiced(t, pos * bw, confidence, constants));
    }

    median_filter(&mut frames, config.median_width, constants);
    Ok(PitchTrack::new(frames, TrackSource::Argmax))
}

fn median_filter(frames: &mut [PitchFrame], width: usize, constants: &PhysicsConstants) {
    if width <= 1 {
        return;
    }
    let half = width / 2;
    let raw: Vec<Option<f64>> = frames.iter().map(|f| f.frequency).collect();
    let mut window: Vec<f64> = Vec::with_capacity(width);
    for i in 0..frames.len() {
        if raw[i].is_none() {
            continue;
        }
        window.clear();
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(frames.len() - 1);
        window.extend(raw[lo..=hi].iter().flatten());
        window.sort_by(|a, b| a.total_cmp(b));
        let med = window[window.len() / 2];
        let f = &mut frames[i];
        *f = PitchFrame::voiced(f.t, med, f.confidence, constants);
    }
}

/// Nearest-rank percentile, `q` in `[0, 1]`.
pub(crate) fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1);
    v[idx]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::spectrogram::spectrogram;
    use crate::types::AudioBuffer;
    use alloc::vec;
    use core::f64::consts::PI;

    fn tone(freq: f64, amp: f64) -> AudioBuffer {
        let samples = (0..16000)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / 16000.0).sin())
            .collect();
        AudioBuffer::new(16000, samples).unwrap()
    }

    #[test]
    fn silence_is_unvoiced() {
        let a = AudioBuffer::new(16000, vec![0.0; 16000]).unwrap();
        let s = spectrogram(&a, 1024, 256).unwrap();
        let t = track_argmax(&s, &ArgmaxConfig::default(), &PhysicsConstants::default()).unwrap();
        assert_eq!(t.voiced_count(), 0);
    }

    #[test]
    fn tone_on_band_edge_is_detected() {
        let s = spectrogram(&tone(6000.0, 0.5), 1024, 256).unwrap();
        let t = track_argmax(&s, &ArgmaxConfig::default(), &PhysicsConstants::default()).unwrap();
        assert_eq!(t.voiced_count(), t.frames.len());
        for f in t.voiced() {
            assert!((f.frequency.unwrap() - 6000.0).abs() <= s.bin_width());
        }
    }

    #[test]
    fn tone_above_band_is_unvoiced() {
        let s = spectrogram(&tone(7000.0, 0.5), 1024, 256).unwrap();
        let t = track_argmax(&s, &ArgmaxConfig::default(), &PhysicsConstants::default()).unwrap();
        assert_eq!(t.voiced_count(), 0);
    }

    #[test]
    fn empty_band_is_an_error() {
        let s = spectrogram(&tone(500.0, 0.5), 1024, 256).unwrap();
        let cfg = ArgmaxConfig {
            f_min: 1001.0,
            f_max: 1010.0,
            ..Default::default()
        };
        assert!(track_argmax(&s, &cfg, &PhysicsConstants::default()).is_err());
    }

    #[test]
    fn refinement_lands_within_a_fraction_of_a_bin() {
        let s = spectrogram(&tone(1003.7, 0.5), 1024, 256).unwrap();
        let t = track_argmax(&s, &ArgmaxConfig::default(), &PhysicsConstants::default()).unwrap();
        for f in t.voiced() {
            assert!((f.frequency.unwrap() - 1003.7).abs() < 0.1 * s.bin_width());
        }
    }

    #[test]
    fn amplitude_scaling_leaves_frequencies_unchanged() {
        let c = PhysicsConstants::default();
        let a = tone(777.0, 0.2);
        let mut b = a.clone();
        b.samples.iter_mut().for_each(|x| *x *= 2.0);
        let ta = track_argmax(&spectrogram(&a, 1024, 256).unwrap(), &ArgmaxConfig::default(), &c).unwrap();
        let tb = track_argmax(&spectrogram(&b, 1024, 256).unwrap(), &ArgmaxConfig::default(), &c).unwrap();
        for (x, y) in ta.frames.iter().zip(&tb.frames) {
            let (fx, fy) = (x.frequency.unwrap(), y.frequency.unwrap());
            assert!((fx - fy).abs() <= 1e-9 * fx);
        }
    }
}
