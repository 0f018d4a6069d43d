use bergman_core::hyperbolic::*;
use bergman_core::modular::{
    coset_reps, elliptic_points_in_strip, stabilizer, CosetRep,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-2.0f64..2.0, -1.0f64..1.0).prop_map(|(x, ly)| Point::new(x, 10f64.powf(ly)).unwrap())
}

// Entries stay moderate: the image of a point loses about ‖g‖² ulps, which is
// conditioning of the map rather than an error in it.
fn matrix() -> impl Strategy<Value = GammaMatrix> {
    (0i64..8, -8i64..8, -4i64..4, any::<bool>())
        .prop_filter_map("coprime", |(c, d, m, neg)| {
            let rep = CosetRep::new(c, d)?;
            let g = GammaMatrix::translation(m) * rep.matrix;
            Some(if neg { g.neg() } else { g })
        })
}

proptest! {
    #[test]
    fn invariant_is_gamma_invariant(g in matrix(), z in point(), w in point()) {
        let u = pair_invariant(z, w);
        let gu = pair_invariant(moebius_apply(&g, z), moebius_apply(&g, w));
        prop_assert!((gu - u).abs() < 1e-12 * (1.0 + u));
    }

    #[test]
    fn height_transforms_with_automorphy(g in matrix(), z in point()) {
        let j = automorphy_factor(&g, z);
        let gz = moebius_apply(&g, z);
        let expect = z.y() / j.norm_sqr();
        prop_assert!((gz.y() - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn distance_is_a_metric(a in point(), b in point(), c in point()) {
        let (ab, bc, ac) = (hyp_distance(a, b), hyp_distance(b, c), hyp_distance(a, c));
        prop_assert_eq!(ab, hyp_distance(b, a));
        prop_assert!(ab >= 0.0);
        prop_assert!(ac <= ab + bc + 1e-12 * (1.0 + ab + bc));
        prop_assert_eq!(hyp_distance(a, a), 0.0);
    }

    #[test]
    fn log_power_matches_repeated_squaring(r in 0.5f64..1.0, theta in -3.2f64..3.2, k in 1i64..10_000) {
        let t = Complex64::from_polar(r, theta);
        let fast = LogComplex::from_complex(t).powi(k);
        if fast.logmag > -280.0 * std::f64::consts::LN_10 {
            let mut acc = Complex64::new(1.0, 0.0);
            let mut base = t;
            let mut e = k;
            while e > 0 {
                if e & 1 == 1 {
                    acc *= base;
                }
                base *= base;
                e >>= 1;
            }
            let got = fast.to_complex();
            // repeated squaring itself drifts by ~log2(k) ulps per factor
            prop_assert!((got - acc).norm() <= 1e-10 * acc.norm());
        }
    }

    #[test]
    fn distance_roundtrip(u in 0.0f64..1e6) {
        let d = distance_from_invariant(u);
        prop_assert!((invariant_from_distance(d) - u).abs() <= 1e-10 * (1.0 + u));
    }
}

#[test]
fn generators_have_expected_orders() {
    assert_eq!(GammaMatrix::S.pow(2), GammaMatrix::IDENTITY.neg());
    assert_eq!(GammaMatrix::S.pow(4), GammaMatrix::IDENTITY);
    let st = GammaMatrix::S * GammaMatrix::T;
    assert_eq!(st.pow(3), GammaMatrix::IDENTITY.neg());
    assert!(st.is_elliptic());
    assert!(GammaMatrix::T.classify() == TraceClass::ParabolicOrIdentity);
}

#[test]
fn every_elliptic_point_is_a_fixed_point_of_its_generator() {
    for e in elliptic_points_in_strip(10.0) {
        let g = e.generator;
        let fp = fixed_point(&g).unwrap();
        assert!((fp.to_complex() - e.location.to_complex()).norm() < 1e-12);
        let stab = stabilizer(e.location, 12).unwrap();
        assert_eq!(stab.len() as u32, e.stabilizer_order);
    }
}

#[test]
fn coset_reps_are_distinct_and_unimodular() {
    let reps = coset_reps(12);
    let mut seen = std::collections::BTreeSet::new();
    for r in &reps {
        let m = r.matrix;
        assert_eq!(m.a() * m.d() - m.b() * m.c(), 1);
        assert!(seen.insert((m.c(), m.d())));
    }
    // c = 0 contributes one coset; each c ≥ 1 contributes φ(c) residues of d
    let phi: u64 = (1..=12u64)
        .map(|c| (0..c).filter(|&d| num_gcd(c, d) == 1).count() as u64)
        .sum();
    assert!(reps.len() as u64 >= 1 + phi);
}

fn num_gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}
