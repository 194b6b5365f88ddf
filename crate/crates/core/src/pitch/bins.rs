//! Wavelength bin targets: a Gaussian bump over `K` bins spanning `[0, L]`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BinEncodingConfig {
    pub n_bins: usize,
    /// Upper end of the wavelength range, centimeters.
    pub range_cm: f64,
    /// Gaussian standard deviation, in bins.
    pub blur_sigma: f64,
}

impl Default for BinEncodingConfig {
    fn default() -> Self {
        Self {
            n_bins: 64,
            range_cm: 100.0,
            blur_sigma: 1.25,
        }
    }
}

impl BinEncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::InvalidConfig("need at least two bins"));
        }
        if !(self.range_cm > 0.0) || !(self.blur_sigma > 0.0) {
            return Err(Error::InvalidConfig("range and sigma must be positive"));
        }
        Ok(())
    }

    pub fn bin_width_cm(&self) -> f64 {
        self.range_cm / self.n_bins as f64
    }

    /// Bin containing `lambda_m`, clamped to the range.
    pub fn bin_of(&self, lambda_m: f64) -> usize {
        let idx = (lambda_m * 100.0 / self.bin_width_cm()).floor();
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.n_bins - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinEncoding {
    pub probabilities: Vec<f64>,
    pub center_bin: usize,
    /// Set when the wavelength fell outside `[0, L]` and was clamped.
    pub clamped: bool,
}

pub fn encode_bins(lambda_m: f64, config: &BinEncodingConfig) -> Result<BinEncoding> {
    config.validate()?;
    if !lambda_m.is_finite() {
        return Err(Error::Domain("wavelength must be finite"));
    }
    let lambda_cm = lambda_m * 100.0;
    let clamped = !(0.0..=config.range_cm).contains(&lambda_cm);
    let center = config.bin_of(lambda_m);
    let two_var = 2.0 * config.blur_sigma * config.blur_sigma;
    let mut probabilities: Vec<f64> = (0..config.n_bins)
        .map(|k| {
            let d = k as f64 - center as f64;
            (-d * d / two_var).exp()
        })
        .collect();
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    Ok(BinEncoding {
        probabilities,
        center_bin: center,
        clamped,
    })
}

/// Expectation over bin centers within `⌊3σ⌋` bins of the most probable bin,
/// meters. The local window keeps the estimate unbiased when the bump is
/// truncated by a range edge further away.
pub fn decode_bins(probabilities: &[f64], config: &BinEncodingConfig) -> Result<f64> {
    config.validate()?;
    if probabilities.len() != config.n_bins {
        return Err(Error::InvalidConfig("probability vector length must equal K"));
    }
    let peak = (0..probabilities.len())
        .max_by(|&a, &b| probabilities[a].total_cmp(&probabilities[b]))
        .unwrap_or(0);
    let radius = (3.0 * config.blur_sigma).floor() as usize;
    let lo = peak.saturating_sub(radius);
    let hi = (peak + radius).min(config.n_bins - 1);
    let w = config.bin_width_cm();
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &p) in probabilities.iter().enumerate().take(hi + 1).skip(lo) {
        num += p * (k as f64 + 0.5) * w;
        den += p;
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("probabilities sum to zero"));
    }
    Ok(num / den / 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_bin_width() {
        assert_eq!(BinEncodingConfig::default().bin_width_cm(), 1.5625);
    }

    #[test]
    fn fifty_cm_peaks_at_bin_32() {
        let e = encode_bins(0.5, &BinEncodingConfig::default()).unwrap();
        assert_eq!(e.center_bin, 32);
        let argmax = (0..64)
            .max_by(|&a, &b| e.probabilities[a].total_cmp(&e.probabilities[b]))
            .unwrap();
        assert_eq!(argmax, 32);
        assert!(!e.clamped);
    }

    #[test]
    fn out_of_range_is_clamped() {
        let cfg = BinEncodingConfig::default();
        let hi = encode_bins(1.5, &cfg).unwrap();
        assert!(hi.clamped);
        assert_eq!(hi.center_bin, 63);
        let lo = encode_bins(-0.1, &cfg).unwrap();
        assert!(lo.clamped);
        assert_eq!(lo.center_bin, 0);
    }

    proptest! {
        #[test]
        fn encoding_sums_to_one(lambda in -0.5f64..1.5) {
            let e = encode_bins(lambda, &BinEncodingConfig::default()).unwrap();
            let s: f64 = e.probabilities.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn decoding_recovers_within_half_a_bin(lambda_cm in 6.0f64..94.0) {
            // at least 3σ = 3.75 bins = 5.86 cm from either edge
            let cfg = BinEncodingConfig::default();
            let e = encode_bins(lambda_cm / 100.0, &cfg).unwrap();
            let back = decode_bins(&e.probabilities, &cfg).unwrap() * 100.0;
            prop_assert!((back - lambda_cm).abs() <= cfg.bin_width_cm() / 2.0 + 1e-9);
        }
    }
}
