//! Sampled checks of the distance lemmas: the uniform lower bound on
//! displacement away from elliptic points, the fixed-point half-distance
//! property, and the strip bound for non-elliptic elements.

use rand::Rng;
use serde::Serialize;

use crate::hyperbolic::{hyp_distance, moebius_apply, pair_invariant, GammaMatrix, Point};
use crate::modular::{
    cosets_in_ball, elliptic_points_in_strip, elliptic_points_near_strip, in_bulk,
    min_displacement_excluding, EllipticPoint, StripRegion,
};

/// Upper height of the sampled band.
pub const SAMPLE_Y_MAX: f64 = 2.0;

/// Draws `z` with `|x| ≤ 1/2`, `log y` uniform on `(log(1/Y), log 2)`, rejecting
/// points within `δ` of any elliptic point near the strip.
pub fn sample_bulk<R: Rng>(rng: &mut R, region: &StripRegion, exclusion: &[EllipticPoint]) -> Point {
    let (lo, hi) = ((1.0 / region.y_param).ln(), SAMPLE_Y_MAX.ln());
    loop {
        let x = rng.gen_range(-0.5..=0.5);
        let y = rng.gen_range(lo..hi).exp();
        let Ok(z) = Point::new(x, y) else { continue };
        if in_bulk(z, region, exclusion) {
            return z;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementReport {
    pub y_param: f64,
    pub delta: f64,
    pub samples: usize,
    pub min_observed: f64,
    pub bound: f64,
    pub argmin_x: f64,
    pub argmin_y: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Minimal displacement over sampled bulk points against `δ/(4Y)`.
pub fn displacement_lemma<R: Rng>(rng: &mut R, region: &StripRegion, samples: usize) -> DisplacementReport {
    let exclusion = elliptic_points_near_strip(region.y_param, region.delta);
    let bound = region.delta / (4.0 * region.y_param);
    let points: Vec<Point> = (0..samples).map(|_| sample_bulk(rng, region, &exclusion)).collect();
    let mut report = DisplacementReport {
        y_param: region.y_param,
        delta: region.delta,
        samples,
        min_observed: f64::INFINITY,
        bound,
        argmin_x: f64::NAN,
        argmin_y: f64::NAN,
        violations: 0,
        passed: true,
    };
    let distances: Vec<f64> = {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|&z| min_displacement_excluding(z, 1, &[]).distance)
            .collect()
    };
    for (z, d) in points.iter().zip(distances) {
        if d <= bound {
            report.violations += 1;
        }
        if d < report.min_observed {
            report.min_observed = d;
            report.argmin_x = z.x();
            report.argmin_y = z.y();
        }
    }
    report.passed = report.violations == 0;
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfDistanceReport {
    pub triples: usize,
    /// Triples where `d(z, gz) > δ`, i.e. where the lemma has content.
    pub active: usize,
    pub violations: usize,
    pub passed: bool,
}

/// For elliptic `g` fixing `z₀`: `d(z, gz) > δ ⇒ d(z, z₀) > δ/2`.
pub fn half_distance_lemma<R: Rng>(rng: &mut R, y_param: f64, triples: usize) -> HalfDistanceReport {
    let points = elliptic_points_in_strip(y_param);
    let mut report = HalfDistanceReport { triples, active: 0, violations: 0, passed: true };
    if points.is_empty() {
        return report;
    }
    for _ in 0..triples {
        let e = &points[rng.gen_range(0..points.len())];
        let elements: Vec<GammaMatrix> = e
            .stabilizer_elements()
            .into_iter()
            .filter(|g| !g.is_central())
            .collect();
        let g = elements[rng.gen_range(0..elements.len())];
        // a point at hyperbolic distance r from z0 in a random direction
        let r: f64 = rng.gen_range(0.0..1.5);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = geodesic_point(e.location, r, theta);
        let delta: f64 = rng.gen_range(1e-3..2.0);
        if hyp_distance(z, moebius_apply(&g, z)) > delta {
            report.active += 1;
            if hyp_distance(z, e.location) <= delta / 2.0 {
                report.violations += 1;
            }
        }
    }
    report.passed = report.violations == 0;
    report
}

/// The point at distance `r` from `c` in direction `theta` (measured in the
/// disk model centred at `c`).
pub fn geodesic_point(c: Point, r: f64, theta: f64) -> Point {
    use num_complex::Complex64;
    let zeta = Complex64::from_polar((r / 2.0).tanh(), theta);
    let cz = c.to_complex();
    // disk → half-plane map sending 0 to c
    let w = (cz - cz.conj() * zeta) / (Complex64::new(1.0, 0.0) - zeta);
    Point::from_complex(w).expect("image lies in the upper half-plane")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripBoundReport {
    pub samples: usize,
    /// Smallest ratio `u(z, γz) / min(1/16, y²/4)` over non-elliptic `γ ≠ ±I`.
    pub min_ratio: f64,
    pub argmin_x: f64,
    pub argmin_y: f64,
    pub violations: usize,
    pub passed: bool,
}

/// `min u(z, γz)` over non-elliptic `γ ≠ ±I` whose invariant could be below `target`.
/// Cosets with `(n-1)²/(4n) ≥ target` cannot contribute, so the search is complete.
pub fn min_nonelliptic_invariant(z: Point, target: f64) -> f64 {
    let (x, y) = (z.x(), z.y());
    let n_max = 1.0 + 2.0 * target + 2.0 * (target + target * target).sqrt();
    let mut best = f64::INFINITY;
    for rep in cosets_in_ball(z, n_max.sqrt() * (1.0 + 1e-12)) {
        let g0 = rep.matrix;
        let p0 = moebius_apply(&g0, z);
        let (x0, y1) = (p0.x(), p0.y());
        let dy2 = (y1 - y) * (y1 - y);
        let scale = 4.0 * y * y1;
        let room = scale * target * (1.0 + 1e-9) - dy2;
        if room < 0.0 {
            continue;
        }
        let half = room.sqrt();
        for m in (x - x0 - half).floor() as i64..=(x - x0 + half).ceil() as i64 {
            let g = GammaMatrix::translation(m) * g0;
            if g.is_central() || g.is_elliptic() {
                continue;
            }
            best = best.min(pair_invariant(z, moebius_apply(&g, z)));
        }
    }
    best
}

/// Non-elliptic strip bound `u(z, γz) ≥ min(1/16, y²/4)` for `1/Y < y < 2`.
pub fn strip_bound_lemma<R: Rng>(rng: &mut R, y_param: f64, samples: usize) -> StripBoundReport {
    let (lo, hi) = ((1.0 / y_param).ln(), SAMPLE_Y_MAX.ln());
    let mut report = StripBoundReport {
        samples,
        min_ratio: f64::INFINITY,
        argmin_x: f64::NAN,
        argmin_y: f64::NAN,
        violations: 0,
        passed: true,
    };
    for _ in 0..samples {
        let z = Point::new(rng.gen_range(-0.5..=0.5), rng.gen_range(lo..hi).exp()).expect("valid");
        let target = (1.0f64 / 16.0).min(z.y() * z.y() / 4.0);
        // look slightly past the target so the ratio is meaningful when it passes
        let u = min_nonelliptic_invariant(z, 4.0 * target);
        let ratio = u / target;
        if ratio < 1.0 - 1e-12 {
            report.violations += 1;
        }
        if ratio < report.min_ratio {
            report.min_ratio = ratio;
            report.argmin_x = z.x();
            report.argmin_y = z.y();
        }
    }
    report.passed = report.violations == 0;
    report
}
