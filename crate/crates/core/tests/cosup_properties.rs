use pourpitch_core::cosup::{
    cosupervision_residual, estimate_scale, fit_pseudo_labels, PixelFrame, PixelTrack, PseudoLabelConfig,
    TemporalDifferenceMap,
};
use pourpitch_core::physics::{fill_profile, wavelength_profile, SampledCurve};
use pourpitch_core::{ContainerSpec, PhysicsConstants};
use proptest::prelude::*;

fn pour(h: f64, r: f64) -> (SampledCurve, Vec<(f64, f64)>, impl Fn(f64) -> f64) {
    let c = PhysicsConstants::default();
    let cyl = ContainerSpec::cylinder(h, r).unwrap();
    let fill = fill_profile(&cyl, cyl.volume() / 10.0, 1001).unwrap();
    let curve = SampledCurve::new(wavelength_profile(&cyl, &fill, &c)).unwrap();
    let rms = (0..=100).map(|i| (i as f64 * 0.1, 1.0 + (i % 7) as f64)).collect();
    (curve, rms, move |t| fill.level_at(t))
}

fn pixels(alpha: f64, r: f64, level: &impl Fn(f64) -> f64) -> PixelTrack {
    let frames = (0..=250)
        .map(|i| {
            let t = i as f64 * 0.04;
            PixelFrame { t, l_px: alpha * level(t) }
        })
        .collect();
    PixelTrack::new(frames, alpha * r, 2000.0).unwrap()
}

proptest! {
    #[test]
    fn consistent_pairs_recover_alpha(alpha in 10.0f64..120.0, h in 0.05f64..0.25, r in 0.01f64..0.05) {
        let (curve, rms, level) = pour(h, r);
        let px = pixels(alpha, r, &level);
        let c = PhysicsConstants::default();
        let s = estimate_scale(&curve, &px, &rms, &c).unwrap();
        prop_assert!((s.alpha - alpha).abs() < 1e-6 * alpha);
        let res = cosupervision_residual(&curve, &px, s.alpha, &c).unwrap();
        prop_assert!(res.mse < 1e-12 * alpha * alpha);
    }

    #[test]
    fn alpha_ignores_uniform_rms_scaling(k in 1e-3f64..1e3, alpha in 20.0f64..90.0) {
        let (curve, rms, level) = pour(0.2, 0.03);
        let mut px = pixels(alpha, 0.03, &level);
        // break consistency so the weights matter
        for (i, f) in px.frames.iter_mut().enumerate() {
            f.l_px *= 1.0 + 0.05 * ((i % 5) as f64 - 2.0);
        }
        let c = PhysicsConstants::default();
        let base = estimate_scale(&curve, &px, &rms, &c).unwrap();
        let scaled: Vec<(f64, f64)> = rms.iter().map(|&(t, w)| (t, k * w)).collect();
        let other = estimate_scale(&curve, &px, &scaled, &c).unwrap();
        prop_assert!((base.alpha - other.alpha).abs() < 1e-9 * base.alpha);
    }

    #[test]
    fn alpha_is_linear_in_zoom(k in 0.25f64..4.0, alpha in 20.0f64..90.0) {
        let (curve, rms, level) = pour(0.18, 0.025);
        let px = pixels(alpha, 0.025, &level);
        let c = PhysicsConstants::default();
        let base = estimate_scale(&curve, &px, &rms, &c).unwrap();
        let zoomed = estimate_scale(&curve, &px.zoomed(k), &rms, &c).unwrap();
        prop_assert!((zoomed.alpha - k * base.alpha).abs() < 1e-9 * k * base.alpha);
    }
}

#[test]
fn pseudo_labels_follow_a_drifting_ridge_on_a_noisy_map() {
    let (n_frames, n_rows) = (120, 200);
    let coef = [40.0, 9.0, 0.2];
    let times: Vec<f64> = (0..n_frames).map(|i| i as f64 * 0.1).collect();
    let mut values = Vec::with_capacity(n_frames * n_rows);
    for (i, &t) in times.iter().enumerate() {
        let centre = coef[0] + coef[1] * t + coef[2] * t * t;
        for row in 0..n_rows {
            let d = row as f64 - centre;
            let clutter = 0.05 * (((i * 31 + row * 17) % 13) as f64 / 13.0);
            values.push((-d * d / 8.0).exp() + clutter);
        }
    }
    let tdm = TemporalDifferenceMap::new(values, n_rows, times).unwrap();
    let labels = fit_pseudo_labels(&tdm, (30, 190), 25.0, &PseudoLabelConfig::default(), 1).unwrap();
    for (got, want) in labels.coefficients.iter().zip(coef) {
        assert!((got - want).abs() < 0.05 * want.abs().max(1.0), "{:?}", labels.coefficients);
    }
    let mid = &labels.track.frames[60];
    let row = coef[0] + coef[1] * mid.t + coef[2] * mid.t * mid.t;
    assert!((mid.l_px - (row - 30.0)).abs() < 1.0, "{} vs {}", mid.l_px, row - 30.0);
}
