#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::fft::Fft;
use crate::error::{Error, Result};
use crate::types::AudioBuffer;

pub const DEFAULT_WINDOW: usize = 1024;
pub const DEFAULT_HOP: usize = 256;

/// Magnitude STFT. `magnitudes` is frames × bins, row-major; bins run from DC
/// to Nyquist inclusive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub frame_times: Vec<f64>,
    pub bin_freqs: Vec<f64>,
    pub window_size: usize,
    pub hop_size: usize,
    pub sample_rate: u32,
    /// Time-domain energy of each windowed frame, `Σ (w x)²`.
    pub frame_energy: Vec<f64>,
    /// `Σ w²` of the analysis window.
    pub window_power: f64,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn n_bins(&self) -> usize {
        self.bin_freqs.len()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let nb = self.n_bins();
        &self.magnitudes[i * nb..(i + 1) * nb]
    }

    pub fn bin_width(&self) -> f64 {
        self.sample_rate as f64 / self.window_size as f64
    }

    /// Spectral energy of frame `i`, summed over the full two-sided spectrum
    /// and divided by the window length. Equals `frame_energy[i]` by Parseval.
    pub fn spectral_energy(&self, i: usize) -> f64 {
        let m = self.frame(i);
        let last = m.len() - 1;
        let inner: f64 = m[1..last].iter().map(|x| x * x).sum();
        (m[0] * m[0] + m[last] * m[last] + 2.0 * inner) / self.window_size as f64
    }

    /// RMS of the windowed frame, normalized by the window's own RMS so a
    /// steady signal reads the same as its plain RMS.
    pub fn frame_rms(&self, i: usize) -> f64 {
        (self.frame_energy[i] / self.window_power).sqrt()
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed magnitude STFT. Frame `i` covers samples
/// `[i·hop, i·hop + window)` and is stamped with its center time.
pub fn spectrogram(audio: &AudioBuffer, window_size: usize, hop_size: usize) -> Result<Spectrogram> {
    if hop_size == 0 {
        return Err(Error::InvalidConfig("hop size must be positive"));
    }
    let fft = Fft::new(window_size)?;
    if audio.len() < window_size {
        return Err(Error::InsufficientData {
            needed: window_size,
            got: audio.len(),
        });
    }
    let sr = audio.sample_rate as f64;
    let window = hann(window_size);
    let n_bins = window_size / 2 + 1;
    let n_frames = (audio.len() - window_size) / hop_size + 1;

    let mut magnitudes = Vec::with_capacity(n_frames * n_bins);
    let mut frame_times = Vec::with_capacity(n_frames);
    let mut frame_energy = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_size];
    for f in 0..n_frames {
        let start = f * hop_size;
        let mut energy = 0.0;
        for (k, slot) in buf.iter_mut().enumerate() {
            let v = audio.samples[start + k] * window[k];
            energy += v * v;
            *slot = Complex64::new(v, 0.0);
        }
        fft.forward(&mut buf);
        magnitudes.extend(buf[..n_bins].iter().map(|c| c.norm()));
        frame_times.push((start as f64 + window_size as f64 / 2.0) / sr);
        frame_energy.push(energy);
    }
    let window_power = window.iter().map(|w| w * w).sum();
    let bin_freqs = (0..n_bins).map(|k| k as f64 * sr / window_size as f64).collect();

    Ok(Spectrogram {
        magnitudes,
        frame_times,
        bin_freqs,
        window_size,
        hop_size,
        sample_rate: audio.sample_rate,
        frame_energy,
        window_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, sr: u32, secs: f64, amp: f64) -> AudioBuffer {
        let n = (sr as f64 * secs) as usize;
        let samples = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin())
            .collect();
        AudioBuffer::new(sr, samples).unwrap()
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let s = spectrogram(&tone(1000.0, 16000, 1.0, 0.5), 1024, 256).unwrap();
        for i in 0..s.n_frames() {
            let m = s.frame(i);
            let k = (0..m.len()).max_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap();
            assert!((s.bin_freqs[k] - 1000.0).abs() <= s.bin_width());
        }
    }

    #[test]
    fn silence_gives_zero_magnitudes() {
        let a = AudioBuffer::new(16000, vec![0.0; 4096]).unwrap();
        let s = spectrogram(&a, 1024, 256).unwrap();
        assert!(s.magnitudes.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn parseval_per_frame() {
        let mut a = tone(437.0, 16000, 0.5, 0.3);
        for (i, x) in a.samples.iter_mut().enumerate() {
            *x += 0.1 * ((i * 7919) % 113) as f64 / 113.0 - 0.05;
        }
        let s = spectrogram(&a, 1024, 256).unwrap();
        for i in 0..s.n_frames() {
            let rel = (s.spectral_energy(i) - s.frame_energy[i]).abs() / s.frame_energy[i];
            assert!(rel < 1e-6, "frame {i}: {rel}");
        }
    }

    #[test]
    fn too_short_audio_is_an_error() {
        let a = AudioBuffer::new(16000, vec![0.0; 100]).unwrap();
        assert!(matches!(
            spectrogram(&a, 1024, 256),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn frame_times_are_centered() {
        let s = spectrogram(&tone(500.0, 16000, 0.25, 0.5), 1024, 256).unwrap();
        assert!((s.frame_times[0] - 512.0 / 16000.0).abs() < 1e-15);
        assert!((s.frame_times[1] - s.frame_times[0] - 256.0 / 16000.0).abs() < 1e-15);
    }
}
