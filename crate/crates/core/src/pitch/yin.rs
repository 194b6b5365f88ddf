//! YIN fundamental-frequency estimator.
//!
//! Per frame of `frame_size` samples with integration window `W = frame_size/2`:
//!
//! 1. difference function `d(τ) = Σ_{j<W} (x_j − x_{j+τ})²`, computed from
//!    prefix energies and an FFT cross-correlation;
//! 2. cumulative-mean-normalized difference `d'(τ) = d(τ) τ / Σ_{k=1..τ} d(k)`;
//! 3. the first `τ` where `d'` dips below the threshold, followed down to the
//!    bottom of that dip;
//! 4. parabolic interpolation of `d'` around the chosen lag.
//!
//! Frames without a dip below the threshold are unvoiced.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::fft::Fft;
use crate::error::{Error, Result};
use crate::types::{AudioBuffer, PhysicsConstants, PitchFrame, PitchTrack, TrackSource};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct YinConfig {
    pub frame_size: usize,
    pub hop: usize,
    pub threshold: f64,
    /// Lowest pitch the frame must be able to resolve, Hz.
    pub f_min: f64,
}

impl Default for YinConfig {
    fn default() -> Self {
        Self {
            frame_size: 2048,
            hop: 256,
            threshold: 0.1,
            f_min: 80.0,
        }
    }
}

pub fn track_yin(
    audio: &AudioBuffer,
    config: &YinConfig,
    constants: &PhysicsConstants,
) -> Result<PitchTrack> {
    let sr = audio.sample_rate as f64;
    let frame = config.frame_size;
    let w = frame / 2;
    if config.hop == 0 || w < 4 {
        return Err(Error::InvalidConfig("YIN frame and hop must be positive"));
    }
    if !(config.f_min > 0.0) || sr / config.f_min > w as f64 {
        return Err(Error::InvalidConfig(
            "YIN frame must span two periods of the lowest pitch",
        ));
    }
    if !(config.threshold > 0.0) {
        return Err(Error::InvalidConfig("YIN threshold must be positive"));
    }
    let max_lag = ((sr / config.f_min).ceil() as usize + 2).min(w);

    let fft = Fft::new(frame.next_power_of_two())?;
    let n_fft = fft.len();
    let mut a = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut b = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut prefix = vec![0.0; frame + 1];
    let mut diff = vec![0.0; max_lag];
    let mut cmnd = vec![0.0; max_lag];

    let mut frames = Vec::new();
    let mut start = 0;
    while start + frame <= audio.len() {
        let x = &audio.samples[start..start + frame];
        let t = (start as f64 + w as f64 / 2.0) / sr;
        start += config.hop;

        for j in 0..frame {
            prefix[j + 1] = prefix[j] + x[j] * x[j];
        }
        if prefix[frame] <= 0.0 {
            frames.push(PitchFrame::unvoiced(t, 0.0));
            continue;
        }

        // r(τ) = Σ_{j<W} x_j x_{j+τ} via conj(A)·B; no wrap-around since j+τ < frame ≤ n_fft.
        for (k, (sa, sb)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            *sa = Complex64::new(if k < w { x[k] } else { 0.0 }, 0.0);
            *sb = Complex64::new(if k < frame { x[k] } else { 0.0 }, 0.0);
        }
        fft.forward(&mut a);
        fft.forward(&mut b);
        for (sa, sb) in a.iter_mut().zip(&b) {
            *sa = sa.conj() * sb;
        }
        fft.inverse(&mut a);

        let e0 = prefix[w];
        for tau in 0..max_lag {
            let e_tau = prefix[tau + w] - prefix[tau];
            diff[tau] = (e0 + e_tau - 2.0 * a[tau].re).max(0.0);
        }

        cmnd[0] = 1.0;
        let mut running = 0.0;
        for tau in 1..max_lag {
            running += diff[tau];
            cmnd[tau] = if running > 0.0 {
                diff[tau] * tau as f64 / running
            } else {
                1.0
            };
        }

        let mut chosen = None;
        let mut tau = 2;
        while tau < max_lag {
            if cmnd[tau] < config.threshold {
                while tau + 1 < max_lag && cmnd[tau + 1] < cmnd[tau] {
                    tau += 1;
                }
                chosen = Some(tau);
                break;
            }
            tau += 1;
        }

        match chosen {
            Some(tau) => {
                let mut lag = tau as f64;
                if tau + 1 < max_lag {
                    let (l, c, r) = (cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
                    let denom = l - 2.0 * c + r;
                    if denom > 0.0 {
                        lag += (0.5 * (l - r) / denom).clamp(-1.0, 1.0);
                    }
                }
                let confidence = 1.0 - cmnd[tau];
                frames.push(PitchFrame::voiced(t, sr / lag, confidence, constants));
            }
            None => {
                let best = cmnd[2..].iter().copied().fold(f64::INFINITY, f64::min);
                frames.push(PitchFrame::unvoiced(t, 1.0 - best.min(1.0)));
            }
        }
    }
    Ok(PitchTrack::new(frames, TrackSource::Yin))
}
