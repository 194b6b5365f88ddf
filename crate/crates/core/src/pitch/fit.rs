//! Robust fitting of wavelength-vs-time curves.
//!
//! Four model families are supported:
//!
//! | model     | curve                               | arises from                    |
//! |-----------|-------------------------------------|--------------------------------|
//! | `Linear`  | `a + b t`                           | cylinder at constant flow      |
//! | `Poly2`   | `c0 + c1 t + c2 t²`                 | generic smooth curve           |
//! | `Frustum` | `s · cbrt(t − p) + d`               | conical frustum at constant flow |
//! | `Sqrt`    | `s · sqrt(p − t) + d`               | Helmholtz bottle, `f ∝ 1/√l`   |
//!
//! The two pole families are linear in `(s, d)` once the pole `p` is fixed, so
//! they are fitted by a one-dimensional search over `p` with a closed-form
//! inner solve.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{minimize_1d, weighted_least_squares};
use crate::physics::WavelengthCurve;
use crate::types::{PitchTrack, WavelengthSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Linear,
    Poly2,
    Frustum,
    Sqrt,
}

impl ModelKind {
    pub fn n_params(self) -> usize {
        match self {
            ModelKind::Linear => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum CurveParams {
    Linear { intercept: f64, slope: f64 },
    Poly2 { c0: f64, c1: f64, c2: f64 },
    /// `scale · cbrt(t − pole) + offset`
    CubeRoot { scale: f64, pole: f64, offset: f64 },
    /// `scale · sqrt(pole − t) + offset`
    SquareRoot { scale: f64, pole: f64, offset: f64 },
}

impl CurveParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            CurveParams::Linear { .. } => ModelKind::Linear,
            CurveParams::Poly2 { .. } => ModelKind::Poly2,
            CurveParams::CubeRoot { .. } => ModelKind::Frustum,
            CurveParams::SquareRoot { .. } => ModelKind::Sqrt,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            CurveParams::Linear { intercept, slope } => intercept + slope * t,
            CurveParams::Poly2 { c0, c1, c2 } => c0 + t * (c1 + t * c2),
            CurveParams::CubeRoot { scale, pole, offset } => scale * (t - pole).cbrt() + offset,
            CurveParams::SquareRoot { scale, pole, offset } => {
                scale * (pole - t).max(0.0).sqrt() + offset
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            CurveParams::Linear { slope, .. } => slope,
            CurveParams::Poly2 { c1, c2, .. } => c1 + 2.0 * c2 * t,
            CurveParams::CubeRoot { scale, pole, .. } => {
                let u = (t - pole).cbrt();
                scale / (3.0 * u * u)
            }
            CurveParams::SquareRoot { scale, pole, .. } => {
                -scale / (2.0 * (pole - t).max(f64::MIN_POSITIVE).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RansacConfig {
    pub iterations: usize,
    /// Residual bound for inliers, in the units of the fitted values.
    pub inlier_threshold: f64,
    /// Hypothesis sample size and the minimum number of points accepted.
    pub min_samples: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_threshold: 0.02,
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FittedCurve {
    pub model: ModelKind,
    pub params: CurveParams,
    /// One flag per input sample.
    pub inlier_mask: Vec<bool>,
    /// Unweighted RMS residual over inliers.
    pub residual_rms: f64,
    pub domain: (f64, f64),
}

impl FittedCurve {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }

    pub fn inlier_fraction(&self) -> f64 {
        if self.inlier_mask.is_empty() {
            return 0.0;
        }
        self.inlier_count() as f64 / self.inlier_mask.len() as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.params.eval(t)
    }
}

impl WavelengthCurve for FittedCurve {
    fn wavelength(&self, t: f64) -> f64 {
        self.params.eval(t)
    }

    fn slope(&self, t: f64) -> f64 {
        self.params.derivative(t)
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// Fits `λ(t)` to the voiced frames of a track with seeded RANSAC followed by
/// a confidence-weighted least-squares refit on the consensus set.
pub fn fit_wavelength(
    track: &PitchTrack,
    model: ModelKind,
    ransac: &RansacConfig,
    seed: u64,
) -> Result<FittedCurve> {
    let samples = track.wavelength_samples();
    let mut curve = fit_samples(&samples, model, ransac, seed)?;
    if let (Some(first), Some(last)) = (track.frames.first(), track.frames.last()) {
        curve.domain = (first.t.min(curve.domain.0), last.t.max(curve.domain.1));
    }
    Ok(curve)
}

/// RANSAC fit over arbitrary `(t, value, weight)` samples.
pub fn fit_samples(
    samples: &[WavelengthSample],
    model: ModelKind,
    ransac: &RansacConfig,
    seed: u64,
) -> Result<FittedCurve> {
    let min_samples = ransac.min_samples.max(model.n_params());
    if samples.len() < min_samples {
        return Err(Error::InsufficientData {
            needed: min_samples,
            got: samples.len(),
        });
    }
    if !(ransac.inlier_threshold > 0.0) {
        return Err(Error::InvalidConfig("inlier threshold must be positive"));
    }
    if samples.iter().any(|s| !s.t.is_finite() || !s.lambda.is_finite()) {
        return Err(Error::Domain("samples must be finite"));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.lambda).collect();
    let ws: Vec<f64> = samples.iter().map(|s| s.weight.max(1e-6)).collect();
    let domain = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    if !(domain.1 > domain.0) {
        return Err(Error::Degenerate("samples span no time"));
    }

    let n = samples.len();
    let thr = ransac.inlier_threshold;
    let mut best: Option<(usize, f64, CurveParams)> = None;

    if n == min_samples {
        let params = least_squares(&ts, &ys, &ws, model, Effort::Full)
            .ok_or(Error::Degenerate("model fit failed"))?;
        best = Some((n, 0.0, params));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = alloc::vec![1.0; min_samples];
        let mut st = alloc::vec![0.0; min_samples];
        let mut sy = alloc::vec![0.0; min_samples];
        for _ in 0..ransac.iterations.max(1) {
            let idx = index::sample(&mut rng, n, min_samples);
            for (k, i) in idx.iter().enumerate() {
                st[k] = ts[i];
                sy[k] = ys[i];
            }
            let Some(params) = least_squares(&st, &sy, &unit, model, Effort::Quick) else {
                continue;
            };
            let (count, sse) = score(&params, &ts, &ys, thr);
            let better = match best {
                None => true,
                Some((bc, bs, _)) => count > bc || (count == bc && sse < bs),
            };
            if better {
                best = Some((count, sse, params));
            }
        }
    }

    let (count, _, mut params) = best.ok_or(Error::Degenerate("no model hypothesis succeeded"))?;
    if count < model.n_params() {
        return Err(Error::Degenerate("no consensus set"));
    }

    let mut mask = inliers(&params, &ts, &ys, thr);
    for _ in 0..3 {
        let (it, iy, iw) = select(&mask, &ts, &ys, &ws);
        if it.len() < model.n_params() {
            break;
        }
        match least_squares(&it, &iy, &iw, model, Effort::Full) {
            Some(p) => params = p,
            None => break,
        }
        let next = inliers(&params, &ts, &ys, thr);
        if next == mask || next.iter().filter(|&&m| m).count() < model.n_params() {
            break;
        }
        mask = next;
    }

    let (sum, cnt) = ts
        .iter()
        .zip(&ys)
        .zip(&mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, c), ((&t, &y), _)| {
            let r = y - params.eval(t);
            (s + r * r, c + 1)
        });
    let residual_rms = if cnt > 0 { (sum / cnt as f64).sqrt() } else { f64::INFINITY };

    Ok(FittedCurve {
        model,
        params,
        inlier_mask: mask,
        residual_rms,
        domain,
    })
}

fn score(params: &CurveParams, ts: &[f64], ys: &[f64], thr: f64) -> (usize, f64) {
    let mut count = 0;
    let mut sse = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        let r = (y - params.eval(t)).abs();
        if r <= thr {
            count += 1;
            sse += r * r;
        }
    }
    (count, sse)
}

fn inliers(params: &CurveParams, ts: &[f64], ys: &[f64], thr: f64) -> Vec<bool> {
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| (y - params.eval(t)).abs() <= thr)
        .collect()
}

fn select(mask: &[bool], ts: &[f64], ys: &[f64], ws: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..mask.len() {
        if mask[i] {
            out.0.push(ts[i]);
            out.1.push(ys[i]);
            out.2.push(ws[i]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Effort {
    Quick,
    Full,
}

/// Plain weighted least-squares fit of one model family.
pub fn fit_least_squares(samples: &[WavelengthSample], model: ModelKind) -> Option<CurveParams> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.lambda).collect();
    let ws: Vec<f64> = samples.iter().map(|s| s.weight.max(0.0)).collect();
    least_squares(&ts, &ys, &ws, model, Effort::Full)
}

pub(crate) fn least_squares(
    ts: &[f64],
    ys: &[f64],
    ws: &[f64],
    model: ModelKind,
    effort: Effort,
) -> Option<CurveParams> {
    match model {
        ModelKind::Linear => {
            let design: Vec<f64> = ts.iter().flat_map(|&t| [1.0, t]).collect();
            let b = weighted_least_squares(&design, 2, ys, ws)?;
            Some(CurveParams::Linear {
                intercept: b[0],
                slope: b[1],
            })
        }
        ModelKind::Poly2 => {
            let design: Vec<f64> = ts.iter().flat_map(|&t| [1.0, t, t * t]).collect();
            let b = weighted_least_squares(&design, 3, ys, ws)?;
            Some(CurveParams::Poly2 {
                c0: b[0],
                c1: b[1],
                c2: b[2],
            })
        }
        ModelKind::Frustum | ModelKind::Sqrt => fit_pole_family(ts, ys, ws, model, effort),
    }
}

/// Closed-form weighted fit of `y ≈ s·g + d`; returns `(s, d, sse)`.
fn scale_offset(g: impl Fn(usize) -> f64, ys: &[f64], ws: &[f64]) -> Option<(f64, f64, f64)> {
    let (mut sw, mut sg, mut sy, mut sgg, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let n = ys.len();
    let mut gm = 0.0;
    let mut wsum = 0.0;
    for i in 0..n {
        gm += ws[i] * g(i);
        wsum += ws[i];
    }
    if wsum <= 0.0 {
        return None;
    }
    gm /= wsum;
    // centered basis keeps the 2×2 system well conditioned when g is nearly flat
    for i in 0..n {
        let gi = g(i) - gm;
        let w = ws[i];
        sw += w;
        sg += w * gi;
        sy += w * ys[i];
        sgg += w * gi * gi;
        sgy += w * gi * ys[i];
    }
    let det = sw * sgg - sg * sg;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let s = (sw * sgy - sg * sy) / det;
    let d0 = (sy - s * sg) / sw;
    let d = d0 - s * gm;
    let mut sse = 0.0;
    for i in 0..n {
        let r = ys[i] - s * g(i) - d;
        sse += ws[i] * r * r;
    }
    Some((s, d, sse))
}

fn fit_pole_family(
    ts: &[f64],
    ys: &[f64],
    ws: &[f64],
    model: ModelKind,
    effort: Effort,
) -> Option<CurveParams> {
    let (t_min, t_max) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let span = t_max - t_min;
    if !(span > 0.0) {
        return None;
    }
    // pole distance from the data edge is searched on a log scale
    let (lo, hi) = ((1e-4f64).ln(), (1e3f64).ln());
    let (grid, refine) = match effort {
        Effort::Quick => (16, 24),
        Effort::Full => (64, 80),
    };

    let fit_at = |pole: f64| -> Option<(f64, CurveParams)> {
        if model == ModelKind::Sqrt {
            let (scale, offset, sse) =
                scale_offset(|i| (pole - ts[i]).max(0.0).sqrt(), ys, ws)?;
            Some((sse, CurveParams::SquareRoot { scale, pole, offset }))
        } else {
            let (scale, offset, sse) = scale_offset(|i| (ts[i] - pole).cbrt(), ys, ws)?;
            Some((sse, CurveParams::CubeRoot { scale, pole, offset }))
        }
    };
    let sse_at = |pole: f64| fit_at(pole).map_or(f64::INFINITY, |(sse, _)| sse);

    let after = |u: f64| t_max + span * u.exp();
    let before = |u: f64| t_min - span * u.exp();
    let mut best = fit_at(after(minimize_1d(lo, hi, grid, refine, |u| sse_at(after(u)))));
    if model == ModelKind::Frustum {
        let other = fit_at(before(minimize_1d(lo, hi, grid, refine, |u| sse_at(before(u)))));
        best = match (best, other) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, b) => a.or(b),
        };
    }
    best.map(|(_, p)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn line_samples(n: usize) -> Vec<WavelengthSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.05;
                WavelengthSample::new(t, 0.8744 - 0.08 * t)
            })
            .collect()
    }

    #[test]
    fn exact_line_is_fit_exactly() {
        let s = line_samples(200);
        let fit = fit_samples(&s, ModelKind::Linear, &RansacConfig::default(), 1).unwrap();
        assert!(fit.residual_rms < 1e-9);
        assert_eq!(fit.inlier_count(), 200);
        assert!((fit.params.derivative(3.0) + 0.08).abs() < 1e-12);
    }

    #[test]
    fn gross_outliers_do_not_move_slope() {
        let mut s = line_samples(200);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let picks = index::sample(&mut rng, 200, 40);
        for i in picks.iter() {
            s[i].lambda *= 2.0;
        }
        let fit = fit_samples(&s, ModelKind::Linear, &RansacConfig::default(), 3).unwrap();
        let slope = fit.params.derivative(0.0);
        assert!((slope + 0.08).abs() <= 0.01 * 0.08, "slope {slope}");
        assert_eq!(fit.inlier_count(), 160);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let s = line_samples(5);
        let err = fit_samples(&s, ModelKind::Linear, &RansacConfig::default(), 0).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 10, got: 5 });
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<_> = line_samples(150)
            .into_iter()
            .map(|mut x| {
                x.lambda += rng.random_range(-0.03..0.03);
                x
            })
            .collect();
        let a = fit_samples(&s, ModelKind::Linear, &RansacConfig::default(), 42).unwrap();
        let b = fit_samples(&s, ModelKind::Linear, &RansacConfig::default(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pole_families_recover_generators() {
        let ts: Vec<f64> = (0..300).map(|i| i as f64 * 0.03).collect();
        let sq: Vec<_> = ts
            .iter()
            .map(|&t| WavelengthSample::new(t, 0.4 * (9.3 - t).sqrt() + 0.05))
            .collect();
        let p = fit_least_squares(&sq, ModelKind::Sqrt).unwrap();
        let CurveParams::SquareRoot { scale, pole, offset } = p else {
            panic!("wrong family")
        };
        assert!((scale - 0.4).abs() < 1e-6 && (pole - 9.3).abs() < 1e-5 && (offset - 0.05).abs() < 1e-5);

        let cb: Vec<_> = ts
            .iter()
            .map(|&t| WavelengthSample::new(t, -0.3 * (t + 1.7).cbrt() + 1.2))
            .collect();
        let p = fit_least_squares(&cb, ModelKind::Frustum).unwrap();
        let CurveParams::CubeRoot { scale, pole, offset } = p else {
            panic!("wrong family")
        };
        assert!((scale + 0.3).abs() < 1e-5 && (pole + 1.7).abs() < 1e-4 && (offset - 1.2).abs() < 1e-5);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let params = [
            CurveParams::Linear { intercept: 1.0, slope: -0.1 },
            CurveParams::Poly2 { c0: 1.0, c1: -0.1, c2: 0.003 },
            CurveParams::CubeRoot { scale: -0.3, pole: -1.0, offset: 1.0 },
            CurveParams::SquareRoot { scale: 0.4, pole: 12.0, offset: 0.0 },
        ];
        for p in params {
            for t in [0.5, 2.0, 7.5] {
                let h = 1e-6;
                let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
                assert!((fd - p.derivative(t)).abs() < 1e-7, "{p:?} at {t}");
            }
        }
    }
}
