use bergman_core::hyperbolic::*;
use bergman_core::kernel::*;
use bergman_core::modular::{elliptic_points_in_strip, CosetRep, StripRegion};
use num_complex::Complex64;
use proptest::prelude::*;

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (-0.5f64..0.5, 0.6f64..2.0).prop_map(|(x, y)| p(x, y))
}

fn matrix() -> impl Strategy<Value = GammaMatrix> {
    (0i64..20, -20i64..20, -10i64..10)
        .prop_filter_map("coprime", |(c, d, m)| {
            Some(GammaMatrix::translation(m) * CosetRep::new(c, d)?.matrix)
        })
}

/// Direct sum over every matrix with entries bounded by `n`, with no cosets,
/// no log-domain powers and no tail logic.
fn brute_force(z: Point, w: Point, k: i32, n: i64) -> Complex64 {
    let (zc, wb) = (z.to_complex(), w.to_complex().conj());
    let scale = Complex64::new(0.0, 2.0 * (z.y() * w.y()).sqrt());
    let mut terms = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                for d in -n..=n {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    let j = zc * c as f64 + d as f64;
                    let gz = (zc * a as f64 + b as f64) / j;
                    terms.push((scale / ((gz - wb) * j)).powi(k));
                }
            }
        }
    }
    terms.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    terms.into_iter().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn magnitude_law(g in matrix(), z in point(), w in point()) {
        let t = b_term(&g, z, w).magnitude();
        let u = pair_invariant(w, moebius_apply(&g, z));
        let expect = (1.0 + u).powf(-0.5);
        prop_assert!((t - expect).abs() <= 1e-12 * expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hermitian_symmetry(z in point(), dx in -0.2f64..0.2, dy in 0.8f64..1.25, k in (6u32..40).prop_map(|h| 2 * h)) {
        let w = p(z.x() + dx, z.y() * dy);
        let cfg = WeightConfig::new(k, 1e-13).unwrap();
        let a = bergman_r(z, w, &cfg).unwrap();
        let b = bergman_r(w, z, &cfg).unwrap();
        prop_assert!((a.value - b.value.conj()).norm() <= a.tail_bound + b.tail_bound + 1e-12 * (1.0 + a.value.norm()));
    }

    // below weight 12 a 1e-9 tail can exceed the coset budget (CutoffExceeded)
    #[test]
    fn cutoff_doubling(z in point(), dx in -0.1f64..0.1, k in (6u32..200).prop_map(|h| 2 * h)) {
        let w = p(z.x() + dx, z.y());
        let plan = plan_truncation(z, w, k, 1e-9).unwrap();
        let a = bergman_r_truncated(z, w, k, &plan, false).unwrap();
        let wider = Truncation { lattice_radius: 2.0 * plan.lattice_radius, ..plan };
        let b = bergman_r_truncated(z, w, k, &wider, false).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.tail_bound + 1e-13 * (1.0 + a.value.norm()));
        prop_assert!(b.tail_bound <= a.tail_bound);
    }
}

#[test]
fn weight12_automorphy() {
    let cfg = WeightConfig::new(12, 1e-14).unwrap();
    let z = p(0.13, 1.1);
    let w = p(-0.07, 1.3);
    let base = bergman_r(z, w, &cfg).unwrap();
    for g in [GammaMatrix::T, GammaMatrix::S, GammaMatrix::S * GammaMatrix::T] {
        let gz = moebius_apply(&g, z);
        let moved = bergman_r(gz, w, &cfg).unwrap();
        let j = automorphy_factor(&g, z);
        let phase = LogComplex::new(0.0, j.arg()).powi(12).to_complex();
        let expect = phase * base.value;
        assert!(
            (moved.value - expect).norm() < 1e-8 * expect.norm(),
            "{g:?}: {} vs {}",
            moved.value,
            expect
        );
    }
}

#[test]
fn unnormalized_automorphy() {
    let cfg = WeightConfig::new(12, 1e-14).unwrap();
    let z = p(0.21, 1.05);
    let big_w = p(0.1, 1.4).reflect();
    let base = bergman_b(z, big_w, &cfg).unwrap();
    for g in [GammaMatrix::T, GammaMatrix::S] {
        let moved = bergman_b(moebius_apply(&g, z), big_w, &cfg).unwrap();
        let expect = automorphy_factor(&g, z).powi(12) * base.value;
        assert!((moved.value - expect).norm() < 1e-8 * expect.norm());
    }
}

#[test]
fn agrees_with_brute_force_at_large_weight() {
    for (z, w, k) in [
        (p(0.13, 1.1), p(0.13, 1.1), 200),
        (p(0.02, 1.0), p(0.02, 1.0), 400),
        (p(0.1, 0.9), p(0.15, 0.95), 160),
        (p(0.45, 0.9), p(0.45, 0.9), 240),
    ] {
        let r = bergman_r(z, w, &WeightConfig::new(k, 1e-14).unwrap()).unwrap();
        let b = brute_force(z, w, k as i32, 10);
        assert!((r.value - b).norm() < 1e-12, "{z} {w} {k}: {} vs {}", r.value, b);
    }
}

#[test]
fn brute_force_converges_towards_kernel_at_weight_twelve() {
    let z = p(0.13, 1.1);
    let r = bergman_r(z, z, &WeightConfig::new(12, 1e-14).unwrap()).unwrap();
    let e8 = (brute_force(z, z, 12, 8) - r.value).norm();
    let e16 = (brute_force(z, z, 12, 16) - r.value).norm();
    assert!(e16 < e8 && e16 < 1e-7, "{e8} {e16}");
}

#[test]
fn signature_at_i() {
    for k in [100u32, 200, 400, 800] {
        let four = bergman_r(Point::i(), Point::i(), &WeightConfig::new(k, 1e-14).unwrap()).unwrap();
        let zero = bergman_r(Point::i(), Point::i(), &WeightConfig::new(k + 2, 1e-14).unwrap()).unwrap();
        let off = 4.0 * 1.25f64.powf(-(k as f64) / 2.0) * 10.0;
        assert!((four.value - 4.0).norm() < off.max(1e-12), "k={k}");
        assert!(zero.value.norm() < off.max(1e-12), "k={}", k + 2);
    }
}

#[test]
fn diagonal_is_real_and_nonnegative() {
    for (x, y) in [(0.0, 1.0), (0.5, 0.8660254037844386), (0.3, 0.97), (-0.2, 1.8)] {
        for k in [12u32, 24, 50, 102] {
            let r = bergman_r(p(x, y), p(x, y), &WeightConfig::new(k, 1e-13).unwrap()).unwrap();
            assert!(r.value.im.abs() <= r.tail_bound + 1e-12);
            assert!(r.value.re >= -r.tail_bound - 1e-12);
        }
    }
}

#[test]
fn elliptic_correction_near_i_matches_kernel() {
    let z = p(0.02, 1.0);
    let k = 400;
    let cfg = WeightConfig::new(k, 1e-14).unwrap();
    let e = elliptic_points_in_strip(10.0)
        .into_iter()
        .find(|e| (e.location.to_complex() - Complex64::i()).norm() < 1e-12)
        .unwrap();
    let full = bergman_r(z, z, &cfg).unwrap().value;
    let predicted = bergman_main_term(z, z, k) + elliptic_correction(z, &e, k);
    let region = StripRegion::new(10.0, 0.1).unwrap();
    let res = asymptotic_residual(z, &cfg, &region).unwrap();
    assert!(res.elliptic.is_some());
    assert!((full - predicted).norm() <= res.bound);
    assert!((full - predicted).norm() < 1e-9);
}

#[test]
fn high_cusp_regime() {
    // y = 3, k = 800: translations still dominate and the kernel sits near 2
    let z = p(0.1, 3.0);
    let cfg = WeightConfig::new(800, 1e-13).unwrap();
    let region = StripRegion::new(10.0, 0.05).unwrap();
    let r = asymptotic_residual(z, &cfg, &region).unwrap();
    assert!(r.residual <= 3.0 * (-800.0f64 / (17.0 * 9.0)).exp());
    assert!(r.residual <= r.bound);
    // at small weight the translation sum cancels and the kernel is tiny
    let small = bergman_r(z, z, &WeightConfig::new(12, 1e-14).unwrap()).unwrap();
    assert!(small.value.norm() < 3.0 * (-12.0f64 / (17.0 * 9.0)).exp());
    assert!(small.value.norm() < 1e-3);
}

#[test]
fn bulk_residual_below_certified_bound() {
    let z = p(0.13, 1.1);
    let mut last = f64::INFINITY;
    for k in [200u32, 400, 800, 1600] {
        let r = bergman_r(z, z, &WeightConfig::new(k, 1e-14).unwrap()).unwrap();
        let residual = (r.value - 2.0).norm();
        let cert = certified_offdiagonal_bound(z, k).unwrap();
        assert!(residual <= cert + r.tail_bound, "k={k}");
        assert!(residual < last);
        last = residual;
    }
    assert!(last < 1e-3);
}

#[test]
fn fast_mode_agrees() {
    let z = p(0.13, 1.1);
    let slow = bergman_r(z, z, &WeightConfig::new(60, 1e-13).unwrap()).unwrap();
    let fast = bergman_r(z, z, &WeightConfig::new(60, 1e-13).unwrap().with_fast(true)).unwrap();
    assert!((slow.value - fast.value).norm() < 1e-12);
}
