use pourpitch_core::physics::{
    fill_profile, invert_dimensions, invert_flow_rate, invert_length, time_to_fill, wavelength_profile,
    SampledCurve, TimeToFillConfig, WavelengthCurve,
};
use pourpitch_core::pitch::fit::{fit_least_squares, ModelKind};
use pourpitch_core::{ContainerSpec, PhysicsConstants, WavelengthSample};
use proptest::prelude::*;
use std::f64::consts::PI;

fn constants() -> PhysicsConstants {
    PhysicsConstants::default()
}

fn exact_curve(container: &ContainerSpec, duration: f64, n: usize) -> SampledCurve {
    let fill = fill_profile(container, container.volume() / duration, n).unwrap();
    SampledCurve::new(wavelength_profile(container, &fill, &constants())).unwrap()
}

/// Classical RK4 on dl/dt = −Q / (π r(H − l)²).
fn rk4_level(container: &ContainerSpec, q: f64, t_end: f64, steps: usize) -> f64 {
    let rate = |l: f64| {
        let r = container.radius_at_height(container.height - l);
        -q / (PI * r * r)
    };
    let h = t_end / steps as f64;
    let mut l = container.height;
    for _ in 0..steps {
        let k1 = rate(l);
        let k2 = rate(l + 0.5 * h * k1);
        let k3 = rate(l + 0.5 * h * k2);
        let k4 = rate(l + h * k3);
        l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    l
}

#[test]
fn frustum_fill_matches_ode_quadrature() {
    let fru = ContainerSpec::frustum(0.2, 0.02, 0.04).unwrap();
    let q = fru.volume() / 10.0;
    let fill = fill_profile(&fru, q, 2001).unwrap();
    assert!((fill.duration - 10.0).abs() < 1e-9);
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let t = 10.0 * i as f64 / 21.0;
        let oracle = rk4_level(&fru, q, t, 20_000);
        worst = worst.max((fill.level_at(t) - oracle).abs());
    }
    // piecewise-linear interpolation between 5 ms samples dominates this bound
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn frustum_samples_match_ode_quadrature_exactly_at_grid_points() {
    let fru = ContainerSpec::frustum(0.2, 0.02, 0.04).unwrap();
    let q = fru.volume() / 10.0;
    let fill = fill_profile(&fru, q, 21).unwrap();
    for s in &fill.samples[1..20] {
        let oracle = rk4_level(&fru, q, s.t, 20_000);
        assert!((s.l - oracle).abs() < 1e-9, "t={} {} vs {}", s.t, s.l, oracle);
    }
    assert_eq!(fill.samples[0].l, 0.2);
    assert_eq!(fill.samples[20].l, 0.0);
}

#[test]
fn flow_round_trip_on_exact_curve() {
    let q_true = 40e-6;
    let cyl = ContainerSpec::cylinder(0.15, 0.035).unwrap();
    let fill = fill_profile(&cyl, q_true, 201).unwrap();
    let samples = wavelength_profile(&cyl, &fill, &constants());
    let line = fit_least_squares(&samples, ModelKind::Linear).unwrap();
    let q = invert_flow_rate(&line, 0.035, &[0.0, fill.duration / 2.0, fill.duration]).unwrap();
    assert!((q.mean_ml_per_s - 40.0).abs() < 1e-6 * 40.0, "{}", q.mean_ml_per_s);
}

proptest! {
    #[test]
    fn cylinder_forward_inverse_identity(h in 0.05f64..0.25, r in 0.01f64..0.05, t in 5.0f64..15.0) {
        let cyl = ContainerSpec::cylinder(h, r).unwrap();
        let curve = exact_curve(&cyl, t, 101);
        let dims = invert_dimensions(&curve, t, &constants()).unwrap();
        prop_assert!((dims.height - h).abs() < 1e-9);
        prop_assert!((dims.radius - r).abs() < 1e-9);
    }

    #[test]
    fn cylinder_wavelength_is_affine(h in 0.05f64..0.25, r in 0.01f64..0.05, t in 5.0f64..15.0) {
        let cyl = ContainerSpec::cylinder(h, r).unwrap();
        let fill = fill_profile(&cyl, cyl.volume() / t, 257).unwrap();
        let lam = wavelength_profile(&cyl, &fill, &constants());
        let (a, b) = (lam[0], lam[lam.len() - 1]);
        for s in &lam {
            let secant = a.lambda + (b.lambda - a.lambda) * (s.t - a.t) / (b.t - a.t);
            prop_assert!((s.lambda - secant).abs() < 1e-9);
        }
    }

    #[test]
    fn inverted_length_ends_at_zero(lam0 in 0.1f64..2.0, slope in -0.5f64..0.5, t in 1.0f64..20.0) {
        let curve = pourpitch_core::pitch::fit::CurveParams::Linear { intercept: lam0, slope };
        let inv = invert_length(&curve, t, 57).unwrap();
        prop_assert_eq!(inv.profile.samples.last().unwrap().l, 0.0);
        prop_assert_eq!(inv.profile.samples.last().unwrap().t, t);
        prop_assert!(inv.profile.validate().is_ok());
    }

    #[test]
    fn exact_time_to_fill_on_linear_curves(h in 0.05f64..0.25, r in 0.01f64..0.05,
                                            t in 5.0f64..15.0, frac in 0.1f64..0.9) {
        let c = constants();
        let lam = |s: f64| 4.0 * (h * (1.0 - s / t) + c.end_correction * r);
        let t_cut = frac * t;
        let samples: Vec<WavelengthSample> = (0..=(t_cut * 100.0) as usize)
            .map(|i| WavelengthSample::new(i as f64 * 0.01, lam(i as f64 * 0.01)))
            .collect();
        prop_assume!(samples.len() >= 20 && t_cut >= 0.5);
        let out = time_to_fill(&samples, t_cut, &TimeToFillConfig::default(), &c, Some(r)).unwrap();
        prop_assert!((out.tau - (t - t_cut)).abs() < 1e-6, "{} vs {}", out.tau, t - t_cut);
    }

    #[test]
    fn frustum_profile_is_monotone(h in 0.05f64..0.25, rb in 0.01f64..0.03, flare in 1.0f64..3.0) {
        let fru = ContainerSpec::frustum(h, rb, rb * flare).unwrap();
        let fill = fill_profile(&fru, fru.volume() / 8.0, 200).unwrap();
        prop_assert!(fill.validate().is_ok());
        prop_assert_eq!(fill.samples[0].l, h);
        prop_assert_eq!(fill.samples[199].l, 0.0);
        let curve = SampledCurve::new(wavelength_profile(&fru, &fill, &constants())).unwrap();
        prop_assert!(curve.slope(4.0) < 0.0);
    }
}
