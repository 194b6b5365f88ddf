//! Linking audio wavelengths to pixel measurements of the same pour.
//!
//! A camera sees the air column as `l_px(t)` pixels and the radius as `R_px`.
//! With a per-recording scale factor `α` (depth, focal length and pixel pitch
//! folded together) the audio and the video agree when
//!
//! ```text
//! α λ(t) / 4 = l_px(t) + β R_px
//! ```
//!
//! `α` is estimated as an RMS-weighted mean of per-frame ratios so that quiet,
//! unreliable frames near the end of a pour carry little weight.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::WavelengthCurve;
use crate::pitch::fit::{fit_samples, CurveParams, FittedCurve, ModelKind, RansacConfig};
use crate::types::{interpolate, PhysicsConstants, WavelengthSample};

/// Range of `α` expected for tabletop recordings.
pub const PLAUSIBLE_ALPHA: (f64, f64) = (30.0, 80.0);

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PixelFrame {
    pub t: f64,
    pub l_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PixelTrack {
    pub frames: Vec<PixelFrame>,
    pub radius_px: f64,
    pub image_height_px: f64,
}

impl PixelTrack {
    pub fn new(frames: Vec<PixelFrame>, radius_px: f64, image_height_px: f64) -> Result<Self> {
        let track = Self {
            frames,
            radius_px,
            image_height_px,
        };
        track.validate()?;
        Ok(track)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_px > 0.0 && self.radius_px.is_finite()) {
            return Err(Error::Domain("pixel radius must be positive"));
        }
        if !(self.image_height_px > 0.0 && self.image_height_px.is_finite()) {
            return Err(Error::Domain("image height must be positive"));
        }
        if self.frames.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::Domain("pixel frames must be time-sorted"));
        }
        if self
            .frames
            .iter()
            .any(|f| !f.t.is_finite() || !(0.0..=self.image_height_px).contains(&f.l_px))
        {
            return Err(Error::Domain("pixel lengths must lie within the image"));
        }
        Ok(())
    }

    /// Multiplies every pixel measurement by `k`, as a digital zoom would.
    pub fn zoomed(&self, k: f64) -> Self {
        Self {
            frames: self
                .frames
                .iter()
                .map(|f| PixelFrame {
                    t: f.t,
                    l_px: f.l_px * k,
                })
                .collect(),
            radius_px: self.radius_px * k,
            image_height_px: self.image_height_px * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScaleEstimate {
    pub alpha: f64,
    /// `(t, ratio)` for each overlapping pixel frame.
    pub per_frame_ratios: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub plausible_range: (f64, f64),
}

impl ScaleEstimate {
    pub fn is_plausible(&self) -> bool {
        (self.plausible_range.0..=self.plausible_range.1).contains(&self.alpha)
    }
}

fn overlap<'a>(
    curve: &impl WavelengthCurve,
    pixels: &'a PixelTrack,
    extra: Option<(f64, f64)>,
) -> Result<Vec<&'a PixelFrame>> {
    let (mut lo, mut hi) = curve.domain();
    if let Some((a, b)) = extra {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    let frames: Vec<&PixelFrame> = pixels.frames.iter().filter(|f| f.t >= lo && f.t <= hi).collect();
    if frames.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok(frames)
}

/// `α = Σ rms_t · ratio_t / Σ rms_t` with
/// `ratio_t = (l_px(t) + β R_px) / (λ(t)/4)` over the frames where both
/// tracks are defined. `rms` is a `(t, rms)` series interpolated at the pixel
/// frame times.
pub fn estimate_scale(
    curve: &impl WavelengthCurve,
    pixels: &PixelTrack,
    rms: &[(f64, f64)],
    constants: &PhysicsConstants,
) -> Result<ScaleEstimate> {
    pixels.validate()?;
    if rms.is_empty() {
        return Err(Error::NoOverlap);
    }
    if rms.iter().any(|&(t, r)| !t.is_finite() || !(r >= 0.0)) {
        return Err(Error::Domain("RMS weights must be non-negative"));
    }
    let span = (rms[0].0, rms[rms.len() - 1].0);
    let frames = overlap(curve, pixels, Some(span))?;

    let mut per_frame_ratios = Vec::with_capacity(frames.len());
    let mut weights = Vec::with_capacity(frames.len());
    let (mut num, mut den) = (0.0, 0.0);
    for f in frames {
        let lambda = curve.wavelength(f.t);
        if !(lambda > 0.0) {
            return Err(Error::Domain("wavelength must be positive on the overlap"));
        }
        let ratio = (f.l_px + constants.end_correction * pixels.radius_px) / (lambda / 4.0);
        let w = interpolate(rms, f.t, |&(t, r)| (t, r));
        num += w * ratio;
        den += w;
        per_frame_ratios.push((f.t, ratio));
        weights.push(w);
    }
    if !(den > 0.0) {
        return Err(Error::Degenerate("RMS weights are all zero on the overlap"));
    }
    Ok(ScaleEstimate {
        alpha: num / den,
        per_frame_ratios,
        weights,
        plausible_range: PLAUSIBLE_ALPHA,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CosupResidual {
    /// `(t, α λ/4 − (l_px + β R_px))` per overlapping frame.
    pub residuals: Vec<(f64, f64)>,
    pub mse: f64,
}

/// Per-frame disagreement between the scaled audio prediction and the pixel
/// track, with its unweighted mean square.
pub fn cosupervision_residual(
    curve: &impl WavelengthCurve,
    pixels: &PixelTrack,
    alpha: f64,
    constants: &PhysicsConstants,
) -> Result<CosupResidual> {
    pixels.validate()?;
    let frames = overlap(curve, pixels, None)?;
    let residuals: Vec<(f64, f64)> = frames
        .iter()
        .map(|f| {
            let predicted = alpha * curve.wavelength(f.t) / 4.0;
            (f.t, predicted - (f.l_px + constants.end_correction * pixels.radius_px))
        })
        .collect();
    let mse = residuals.iter().map(|(_, r)| r * r).sum::<f64>() / residuals.len() as f64;
    Ok(CosupResidual { residuals, mse })
}

/// Frame-to-frame intensity change, frames × image rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TemporalDifferenceMap {
    /// Row-major, `frame_times.len() × n_rows`.
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub frame_times: Vec<f64>,
}

impl TemporalDifferenceMap {
    pub fn new(values: Vec<f64>, n_rows: usize, frame_times: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || values.len() != n_rows * frame_times.len() {
            return Err(Error::Domain("map shape does not match its frame times"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("map entries must be finite and non-negative"));
        }
        if frame_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("frame times must be strictly increasing"));
        }
        Ok(Self {
            values,
            n_rows,
            frame_times,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_rows..(i + 1) * self.n_rows]
    }

    /// Separable Gaussian blur over frames and rows, truncated at 3σ and
    /// renormalized at the borders. A σ of zero leaves that axis untouched.
    pub fn smoothed(&self, sigma_frames: f64, sigma_rows: f64) -> Self {
        let (nf, nr) = (self.n_frames(), self.n_rows);
        let mut out = self.values.clone();
        if sigma_rows > 0.0 {
            let k = gaussian_kernel(sigma_rows);
            let mut line = vec![0.0; nr];
            for f in 0..nf {
                line.copy_from_slice(&out[f * nr..(f + 1) * nr]);
                convolve(&line, &k, |i, v| out[f * nr + i] = v);
            }
        }
        if sigma_frames > 0.0 {
            let k = gaussian_kernel(sigma_frames);
            let mut line = vec![0.0; nf];
            for r in 0..nr {
                for f in 0..nf {
                    line[f] = out[f * nr + r];
                }
                convolve(&line, &k, |i, v| out[i * nr + r] = v);
            }
        }
        Self {
            values: out,
            n_rows: nr,
            frame_times: self.frame_times.clone(),
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as isize;
    (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect()
}

fn convolve(line: &[f64], kernel: &[f64], mut put: impl FnMut(usize, f64)) {
    let half = (kernel.len() / 2) as isize;
    let n = line.len() as isize;
    for i in 0..n {
        let (mut acc, mut norm) = (0.0, 0.0);
        for (j, &k) in kernel.iter().enumerate() {
            let src = i + j as isize - half;
            if (0..n).contains(&src) {
                acc += k * line[src as usize];
                norm += k;
            }
        }
        put(i as usize, acc / norm);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PseudoLabelConfig {
    /// `(frames, rows)` Gaussian σ; `None` skips smoothing.
    pub smoothing: Option<(f64, f64)>,
    /// RANSAC over `(t, row)`; the inlier threshold is in pixels.
    pub ransac: RansacConfig,
}

impl Default for PseudoLabelConfig {
    fn default() -> Self {
        Self {
            smoothing: Some((2.0, 2.0)),
            ransac: RansacConfig {
                inlier_threshold: 3.0,
                ..RansacConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabels {
    pub track: PixelTrack,
    /// Quadratic `row(t) = c0 + c1 t + c2 t²` of the liquid surface.
    pub coefficients: [f64; 3],
    pub fit: FittedCurve,
    /// Sub-row argmax per frame, `None` where the map is empty.
    pub raw_rows: Vec<Option<f64>>,
}

/// Tracks the liquid surface as the brightest row of each frame inside
/// `[top, bottom]` and fits a quadratic through it with seeded RANSAC. The
/// air column is the fitted surface row minus `top`, clamped to the
/// container.
pub fn fit_pseudo_labels(
    tdm: &TemporalDifferenceMap,
    (top, bottom): (usize, usize),
    radius_px: f64,
    config: &PseudoLabelConfig,
    seed: u64,
) -> Result<PseudoLabels> {
    const MIN_FRAMES: usize = 10;
    if tdm.n_frames() < MIN_FRAMES {
        return Err(Error::InsufficientData {
            needed: MIN_FRAMES,
            got: tdm.n_frames(),
        });
    }
    if !(top < bottom && bottom < tdm.n_rows) {
        return Err(Error::Domain("container rows must satisfy top < bottom < height"));
    }
    let smoothed;
    let map = match config.smoothing {
        Some((sf, sr)) => {
            smoothed = tdm.smoothed(sf, sr);
            &smoothed
        }
        None => tdm,
    };

    let raw_rows: Vec<Option<f64>> = (0..map.n_frames())
        .map(|i| surface_row(&map.frame(i)[top..=bottom]).map(|r| r + top as f64))
        .collect();
    let samples: Vec<WavelengthSample> = raw_rows
        .iter()
        .zip(&map.frame_times)
        .filter_map(|(r, &t)| r.map(|row| WavelengthSample::new(t, row)))
        .collect();
    if samples.is_empty() {
        return Err(Error::Degenerate("temporal difference map is empty"));
    }
    let fit = fit_samples(&samples, ModelKind::Poly2, &config.ransac, seed)?;
    let coefficients = match fit.params {
        CurveParams::Poly2 { c0, c1, c2 } => [c0, c1, c2],
        _ => unreachable!("quadratic fit returns quadratic parameters"),
    };
    let span = (bottom - top) as f64;
    let frames = map
        .frame_times
        .iter()
        .map(|&t| PixelFrame {
            t,
            l_px: (fit.params.eval(t) - top as f64).clamp(0.0, span),
        })
        .collect();
    Ok(PseudoLabels {
        track: PixelTrack::new(frames, radius_px, tdm.n_rows as f64)?,
        coefficients,
        fit,
        raw_rows,
    })
}

/// Argmax with log-parabolic refinement, which is exact for a Gaussian ridge.
fn surface_row(column: &[f64]) -> Option<f64> {
    let (k, &peak) = column
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    if !(peak > 0.0) {
        return None;
    }
    let mut row = k as f64;
    if k > 0 && k + 1 < column.len() && column[k - 1] > 0.0 && column[k + 1] > 0.0 {
        let (a, b, c) = (column[k - 1].ln(), peak.ln(), column[k + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            row += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Some(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::SampledCurve;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BETA: f64 = 0.62;

    fn line() -> CurveParams {
        CurveParams::Linear {
            intercept: 0.8744,
            slope: -0.08,
        }
    }

    /// Pixels of a 3 cm cylinder whose audio follows `line()`.
    fn consistent_pair(alpha: f64) -> (PixelTrack, Vec<(f64, f64)>) {
        let radius_px = alpha * 0.03;
        let frames: Vec<PixelFrame> = (0..=100)
            .map(|i| {
                let t = i as f64 * 0.1;
                PixelFrame {
                    t,
                    l_px: (alpha * line().eval(t) / 4.0 - BETA * radius_px).max(0.0),
                }
            })
            .collect();
        let rms = frames.iter().map(|f| (f.t, 1.0)).collect();
        (PixelTrack::new(frames, radius_px, 1000.0).unwrap(), rms)
    }

    #[test]
    fn exact_pair_recovers_alpha() {
        let (px, rms) = consistent_pair(50.0);
        let s = estimate_scale(&line(), &px, &rms, &PhysicsConstants::default()).unwrap();
        assert!((s.alpha - 50.0).abs() < 1e-9);
        assert!(s.is_plausible());
    }

    #[test]
    fn quiet_corrupted_tail_barely_moves_alpha() {
        let (px, _) = consistent_pair(50.0);
        let n = px.frames.len();
        let cut = n * 4 / 5;
        let samples: Vec<WavelengthSample> = px
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let lambda = line().eval(f.t);
                WavelengthSample::new(f.t, if i >= cut { 3.0 * lambda } else { lambda })
            })
            .collect();
        let curve = SampledCurve::new(samples).unwrap();
        let rms: Vec<(f64, f64)> = px
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| (f.t, if i >= cut { 1e-4 } else { 1.0 }))
            .collect();
        let s = estimate_scale(&curve, &px, &rms, &PhysicsConstants::default()).unwrap();
        assert!((s.alpha - 50.0).abs() < 0.02 * 50.0, "{}", s.alpha);
    }

    #[test]
    fn implausible_alpha_is_flagged() {
        let (px, rms) = consistent_pair(150.0);
        let s = estimate_scale(&line(), &px, &rms, &PhysicsConstants::default()).unwrap();
        assert!((s.alpha - 150.0).abs() < 1e-9);
        assert!(!s.is_plausible());
    }

    #[test]
    fn all_zero_rms_is_an_error() {
        let (px, rms) = consistent_pair(50.0);
        let zero: Vec<_> = rms.iter().map(|&(t, _)| (t, 0.0)).collect();
        assert!(estimate_scale(&line(), &px, &zero, &PhysicsConstants::default()).is_err());
    }

    #[test]
    fn disjoint_ranges_are_an_error() {
        let (px, rms) = consistent_pair(50.0);
        let curve = SampledCurve::new(vec![
            WavelengthSample::new(20.0, 0.5),
            WavelengthSample::new(30.0, 0.4),
        ])
        .unwrap();
        let c = PhysicsConstants::default();
        assert_eq!(estimate_scale(&curve, &px, &rms, &c).unwrap_err(), Error::NoOverlap);
        assert_eq!(cosupervision_residual(&curve, &px, 50.0, &c).unwrap_err(), Error::NoOverlap);
    }

    #[test]
    fn residual_is_zero_on_consistent_pair_and_analytic_when_perturbed() {
        let (px, _) = consistent_pair(50.0);
        let c = PhysicsConstants::default();
        let r = cosupervision_residual(&line(), &px, 50.0, &c).unwrap();
        assert!(r.mse < 1e-20);
        let r = cosupervision_residual(&line(), &px, 55.0, &c).unwrap();
        let expected = px
            .frames
            .iter()
            .map(|f| (0.1 * 50.0 * line().eval(f.t) / 4.0).powi(2))
            .sum::<f64>()
            / px.frames.len() as f64;
        assert!((r.mse - expected).abs() < 1e-9 * expected);
    }

    fn ridge_map(coef: [f64; 3], n_frames: usize, n_rows: usize, width: f64) -> TemporalDifferenceMap {
        let times: Vec<f64> = (0..n_frames).map(|i| i as f64 / 30.0).collect();
        let mut values = Vec::with_capacity(n_frames * n_rows);
        for &t in &times {
            let center = coef[0] + coef[1] * t + coef[2] * t * t;
            values.extend((0..n_rows).map(|r| (-0.5 * ((r as f64 - center) / width).powi(2)).exp()));
        }
        TemporalDifferenceMap::new(values, n_rows, times).unwrap()
    }

    fn no_smoothing() -> PseudoLabelConfig {
        PseudoLabelConfig {
            smoothing: None,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_quadratic_ridge_is_recovered() {
        let coef = [40.0, 12.0, 1.5];
        let map = ridge_map(coef, 150, 200, 2.0);
        let p = fit_pseudo_labels(&map, (20, 190), 15.0, &no_smoothing(), 1).unwrap();
        for (got, want) in p.coefficients.iter().zip(coef) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        let t = map.frame_times[75];
        let l = p.track.frames[75].l_px;
        assert!((l - (coef[0] + coef[1] * t + coef[2] * t * t - 20.0)).abs() < 1e-6);
    }

    #[test]
    fn impulse_frames_are_rejected() {
        let coef = [40.0, 12.0, 1.5];
        let mut map = ridge_map(coef, 150, 200, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut corrupted = Vec::new();
        for f in 0..map.n_frames() {
            if rng.random::<f64>() < 0.1 {
                let row = rng.random_range(20..190);
                map.values[f * 200 + row] = 10.0;
                corrupted.push(f);
            }
        }
        let p = fit_pseudo_labels(&map, (20, 190), 15.0, &PseudoLabelConfig::default(), 2).unwrap();
        for f in 0..map.n_frames() {
            if corrupted.contains(&f) {
                continue;
            }
            let t = map.frame_times[f];
            let truth = coef[0] + coef[1] * t + coef[2] * t * t;
            assert!((p.fit.params.eval(t) - truth).abs() < 1.0);
        }
    }

    #[test]
    fn constant_ridge_has_flat_fit() {
        let map = ridge_map([80.0, 0.0, 0.0], 60, 200, 2.0);
        let p = fit_pseudo_labels(&map, (20, 190), 15.0, &PseudoLabelConfig::default(), 3).unwrap();
        assert!(p.coefficients[1].abs() < 1e-6);
        assert!(p.coefficients[2].abs() < 1e-6);
    }

    #[test]
    fn empty_map_is_degenerate() {
        let map = TemporalDifferenceMap::new(vec![0.0; 20 * 50], 50, (0..20).map(|i| i as f64).collect()).unwrap();
        assert!(fit_pseudo_labels(&map, (5, 45), 10.0, &PseudoLabelConfig::default(), 0).is_err());
    }

    #[test]
    fn pseudo_labels_are_seed_deterministic() {
        let map = ridge_map([40.0, 12.0, 1.5], 80, 200, 2.0);
        let cfg = PseudoLabelConfig::default();
        let a = fit_pseudo_labels(&map, (20, 190), 15.0, &cfg, 5).unwrap();
        let b = fit_pseudo_labels(&map, (20, 190), 15.0, &cfg, 5).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
    }
}
