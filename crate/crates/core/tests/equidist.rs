use bergman_core::equidist::*;
use bergman_core::kernel::{certified_offdiagonal_bound, WeightConfig};
use bergman_core::modular::StripRegion;
use bergman_core::Point;

fn region() -> StripRegion {
    StripRegion::new(10.0, 0.05).unwrap()
}

#[test]
fn density_approaches_limit_in_bulk() {
    // density - 3/π = -(3/π)/k + normalization·(R_k - 2) exactly (k ≡ 0 mod 12). The
    // two pieces have opposite signs here, so |gap| itself dips near k = 480; the
    // kernel part must decay monotonically and the total must respect both pieces.
    let z = Point::new(0.13, 1.1).unwrap();
    let mut last = f64::INFINITY;
    for k in [240u32, 480, 960, 1920] {
        let cfg = WeightConfig::new(k, 1e-13).unwrap();
        let md = MeasureDensity::new(k).unwrap();
        let s = measure_density(z, &cfg).unwrap();
        assert!(s.imag.abs() <= s.error / md.normalization + 1e-12);
        let kernel_excess = (s.value / (2.0 * md.normalization) - 1.0).abs();
        assert!(kernel_excess < last, "k={k}");
        last = kernel_excess;
        let gap = (s.value - THREE_OVER_PI).abs();
        let kernel_part = md.normalization * certified_offdiagonal_bound(z, k).unwrap();
        assert!(gap < 1.5 * THREE_OVER_PI / k as f64 + kernel_part, "k={k} gap={gap}");
    }
}

#[test]
fn normalization_tends_to_half_the_limit() {
    for k in [1200u32, 12_000, 120_000] {
        let md = MeasureDensity::new(k).unwrap();
        assert!((md.normalization * 2.0 - THREE_OVER_PI).abs() < 1.2 * THREE_OVER_PI / k as f64);
        assert!((md.dim as f64 * 12.0 / k as f64 - 1.0).abs() < 1e-12);
    }
}

#[test]
fn density_vanishes_at_i_when_four_does_not_divide_k() {
    let cfg = WeightConfig::new(402, 1e-14).unwrap();
    let s = measure_density(Point::i(), &cfg).unwrap();
    assert!(s.value.abs() < 1e-10);
    let cfg = WeightConfig::new(1200, 1e-14).unwrap();
    let z = Point::new(0.13, 1.1).unwrap();
    let s = measure_density(z, &cfg).unwrap();
    let md = MeasureDensity::new(1200).unwrap();
    let slack = md.normalization * certified_offdiagonal_bound(z, 1200).unwrap();
    assert!((s.value - THREE_OVER_PI * 1199.0 / 1200.0).abs() <= slack);
    assert!(slack < 1e-5);
}

#[test]
fn vertical_gap_decreases() {
    let psi = TestFunction::smooth_bump(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
    let opts = IntegrationOptions::default();
    let mut last = f64::INFINITY;
    for k in [300u32, 600, 1200, 2400] {
        // A = 1/2 keeps [1,2] inside the admissible window at every k of the sweep
        let cfg = WeightConfig::new(k, 1e-12).unwrap().with_a(0.5);
        let r = integrate_vertical(0.13, &psi, &cfg, &region(), &opts).unwrap();
        assert!(r.gap.abs() < last + r.reported_error, "k={k}");
        last = r.gap.abs();
        if k >= 1200 {
            assert!(r.relative_gap.abs() < 0.01);
        }
    }
}

#[test]
fn vertical_alternation_at_i() {
    // a narrow window around the order-4 point: the ±2 stabilizer terms flip sign with k mod 4
    let psi = TestFunction::smooth_bump(0.8, 1.2, BaseMeasure::Multiplicative).unwrap();
    let opts = IntegrationOptions::default();
    let r400 = integrate_vertical(0.0, &psi, &WeightConfig::new(400, 1e-12).unwrap(), &region(), &opts).unwrap();
    let r402 = integrate_vertical(0.0, &psi, &WeightConfig::new(402, 1e-12).unwrap(), &region(), &opts).unwrap();
    assert!(r400.kernel_relative_gap() > 0.0);
    assert!(r402.kernel_relative_gap() < 0.0);
}

#[test]
fn horizontal_constant_and_indicator() {
    let cfg = WeightConfig::new(1200, 1e-12).unwrap();
    let opts = IntegrationOptions::default();
    let one = integrate_horizontal(1.3, &TestFunction::one_on_period(), &cfg, &region(), &opts).unwrap();
    assert!((one.reference - THREE_OVER_PI).abs() < 1e-14);
    assert!(one.relative_gap.abs() < 0.01);
    let half = TestFunction::indicator(0.0, 0.5, BaseMeasure::Lebesgue).unwrap();
    let r = integrate_horizontal(1.5, &half, &cfg, &region(), &opts).unwrap();
    assert!((r.reference - THREE_OVER_PI / 2.0).abs() < 1e-14);
    assert!(r.relative_gap.abs() < 0.015);
}

#[test]
fn region_bump_in_bulk() {
    let cfg = WeightConfig::new(1200, 1e-12).unwrap();
    let phi = RegionTestFunction::EuclideanBump { cx: 0.1, cy: 1.2, radius: 0.2 };
    let r = integrate_region(&phi, &cfg, &IntegrationOptions { rel_tol: 1e-8, ..Default::default() }).unwrap();
    assert!(r.relative_gap.abs() < 0.01, "{r:?}");
}

#[test]
fn quadrature_error_covers_node_tails_and_refinement() {
    let psi = TestFunction::smooth_bump(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
    let cfg = WeightConfig::new(1200, 1e-9).unwrap();
    let coarse = IntegrationOptions { rel_tol: 1e-7, ..Default::default() };
    let fine = IntegrationOptions { rel_tol: 1e-11, ..Default::default() };
    let a = integrate_vertical(0.13, &psi, &cfg, &region(), &coarse).unwrap();
    let b = integrate_vertical(0.13, &psi, &cfg, &region(), &fine).unwrap();
    assert!(a.node_error > 0.0 && a.reported_error >= a.node_error);
    assert!((a.integral - b.integral).abs() <= a.reported_error + b.reported_error);
}

#[test]
fn unsafe_flag_lifts_window() {
    let psi = TestFunction::smooth_bump(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
    let cfg = WeightConfig::new(300, 1e-12).unwrap();
    let strict = IntegrationOptions::default();
    assert!(integrate_vertical(0.13, &psi, &cfg, &region(), &strict).is_err());
    let loose = IntegrationOptions { unsafe_window: true, ..strict };
    let r = integrate_vertical(0.13, &psi, &cfg, &region(), &loose).unwrap();
    assert!(r.relative_gap.abs() < 0.01);
}

#[test]
fn region_bump_at_i_gap_decays() {
    // the stabilizer spike at i occupies area ~1/k, so its contribution fades
    let phi = RegionTestFunction::HyperbolicBump { center: Point::i(), radius: 0.3 };
    let opts = IntegrationOptions { rel_tol: 1e-7, ..Default::default() };
    let mut last = f64::INFINITY;
    for k in [400u32, 800, 1600] {
        let r = integrate_region(&phi, &WeightConfig::new(k, 1e-12).unwrap(), &opts).unwrap();
        let g = r.kernel_relative_gap().abs();
        assert!(g < last, "k={k}");
        last = g;
    }
    assert!(last < 0.05);
}
