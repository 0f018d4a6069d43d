//! The normalized Bergman kernel
//!
//! ```text
//! R_k(z, w) = (yv)^{k/2} Σ_{γ ∈ SL(2,Z)} b_γ(z, -w̄)^k,   b_γ(z, w) = 2i / ((w + γz)(cz + d))
//! ```
//!
//! evaluated as a lattice sum over cosets `Γ_∞ γ₀` (bottom rows `(c, d)`) and
//! translations `T^m`, with a certified bound on the total magnitude of all
//! omitted terms.
//!
//! Each single term `t_γ = √(yv)·b_γ(z, -w̄)` satisfies `|t_γ|² = 1/(1 + u(w, γz))`.
//! Inside a coset `Im γz = y' = y/|cz+d|²` is fixed and, writing `s` for the
//! horizontal offset of `γz` from `w`,
//!
//! ```text
//! |t|^k = (α + s²/β)^{-p},   α = (y'+v)²/(4y'v),  β = 4y'v,  p = k/2.
//! ```
//!
//! Translation tails are bounded by an integral comparison in `s`; the tail over
//! cosets with `|cz+d| > R` is bounded by comparing the lattice `{cz+d}` with the
//! area integral over its fundamental cells.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperbolic::{
    automorphy_factor, invariant_from_distance, moebius_apply, GammaMatrix, LogComplex, Point,
};
use crate::modular::{
    cosets_in_ball, elliptic_points_in_strip, min_displacement, nearby_elliptic, CosetRep,
    EllipticPoint, StripRegion,
};
use crate::summation::sum_descending;

/// Hard cap on the number of cosets a single evaluation may visit.
pub const MAX_COSETS: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("weight k={0} must be even and at least 4")]
    InvalidWeight(u32),
    #[error("tolerance {0} must be positive and finite")]
    InvalidTolerance(f64),
    #[error("requested tail bound {requested:e} unreachable within {max_cosets} cosets (best {best_tail:e})")]
    CutoffExceeded {
        requested: f64,
        best_tail: f64,
        max_cosets: usize,
    },
}

/// Weight and accuracy settings for kernel evaluation and the experiments built on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub k: u32,
    /// Requested bound on the total magnitude of omitted terms.
    pub tol: f64,
    /// Large constant used only to choose `δ` in experiments.
    pub a: f64,
    /// Proximity constant: the asymptotics are used for `d(z,w) < c0·δ`.
    pub c0: f64,
    /// Unordered parallel reduction; faster, not bit-reproducible.
    pub fast: bool,
}

impl WeightConfig {
    pub const DEFAULT_A: f64 = 2.0;
    pub const DEFAULT_C0: f64 = 0.125;

    pub fn new(k: u32, tol: f64) -> Result<Self, KernelError> {
        if k < 4 || k % 2 != 0 {
            return Err(KernelError::InvalidWeight(k));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(KernelError::InvalidTolerance(tol));
        }
        Ok(WeightConfig {
            k,
            tol,
            a: Self::DEFAULT_A,
            c0: Self::DEFAULT_C0,
            fast: false,
        })
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_fast(mut self, fast: bool) -> Self {
        self.fast = fast;
        self
    }

    pub fn with_k(mut self, k: u32) -> Result<Self, KernelError> {
        WeightConfig::new(k, self.tol)?;
        self.k = k;
        Ok(self)
    }

    /// `δ = √(128A)·Y·√(log k / k)`.
    pub fn delta(&self, y_param: f64) -> f64 {
        let k = self.k as f64;
        (128.0 * self.a).sqrt() * y_param * (k.ln() / k).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub value: Complex64,
    /// Certified upper bound on `Σ |omitted term|`.
    pub tail_bound: f64,
    /// Number of terms evaluated (one per `±γ` pair).
    pub terms_used: usize,
    pub cosets_used: usize,
}

/// Explicit cutoff: cosets with `|cz+d| ≤ lattice_radius` are visited and, inside
/// each, translations are added until the omitted remainder is below `coset_budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub lattice_radius: f64,
    pub coset_budget: f64,
}

/// `√(yv)·b_γ(z, -w̄)` in log form.
pub fn b_term(g: &GammaMatrix, z: Point, w: Point) -> LogComplex {
    let gz = moebius_apply(g, z);
    let j = automorphy_factor(g, z);
    term_from_parts(z, w, gz, j)
}

#[inline]
fn term_from_parts(z: Point, w: Point, gz: Point, j: Complex64) -> LogComplex {
    // γz - w̄ = (γz.x - u) + i(γz.y + v)
    let dx = gz.x() - w.x();
    let sy = gz.y() + w.y();
    let logmag = 0.5 * (z.y() * w.y()).ln() + LN_2 - dx.hypot(sy).ln() - j.norm().ln();
    let phase = FRAC_PI_2 - sy.atan2(dx) - j.im.atan2(j.re);
    LogComplex::new(logmag, phase)
}

/// `∫_R (1+t²)^{-p} dt = √π Γ(p-1/2)/Γ(p)` for integer `p ≥ 1`.
fn cauchy_power_integral(p: u32) -> f64 {
    let mut c = PI;
    for q in 1..p {
        let q = q as f64;
        c *= (q - 0.5) / q;
    }
    c
}

#[derive(Debug, Clone, Copy)]
struct SumSetup {
    z: Point,
    w: Point,
    k: u32,
    p: f64,
    cp: f64,
}

impl SumSetup {
    fn new(z: Point, w: Point, k: u32) -> Self {
        SumSetup {
            z,
            w,
            k,
            p: (k / 2) as f64,
            cp: cauchy_power_integral(k / 2),
        }
    }

    /// Bound on `Σ_{c>0, |cz+d|>R} Σ_m |t|^k` (one of each `±γ`).
    ///
    /// Per coset, `Σ_m ≤ max + ∫ ≤ (4y'/v)^p (1 + (y'+v) c_p) =: H(|cz+d|²)`, decreasing in
    /// `|cz+d|`. Each lattice point `λ = cz+d` owns the cell `λ + [0,1)·1 + [0,1)·z` of area `y`
    /// and diameter at most `D = 1+|z|`, so the sum over `|λ| > R` is at most
    /// `(1/y)[4πRD·H(R²) + ∫_R^∞ H(s²) 2π(s+D) ds]`, halved for `c > 0`.
    fn lattice_tail(&self, radius: f64) -> f64 {
        let (y, v, p, cp) = (self.z.y(), self.w.y(), self.p, self.cp);
        let r = radius;
        let d = 1.0 + self.z.to_complex().norm();
        let log_scale = p * (4.0 * y / (v * r * r)).ln();
        let scale = log_scale.exp();
        let h_r = scale * (1.0 + (y / (r * r) + v) * cp);
        let integral = 2.0
            * PI
            * scale
            * ((1.0 + v * cp) * (r * r / (2.0 * p - 2.0) + d * r / (2.0 * p - 1.0))
                + y * cp * (1.0 / (2.0 * p) + d / ((2.0 * p + 1.0) * r)));
        0.5 * (4.0 * PI * r * d * h_r + integral) / y
    }
}

struct CosetContrib {
    terms: Vec<Complex64>,
    tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TermMap {
    /// `t^k`
    Power,
    /// `|t|^k`, excluding the identity.
    MagnitudeOffIdentity,
}

fn coset_contrib(setup: &SumSetup, rep: &CosetRep, budget: f64, map: TermMap) -> CosetContrib {
    let (z, w, p) = (setup.z, setup.w, setup.p);
    let g0 = rep.matrix;
    let p0 = moebius_apply(&g0, z);
    let j = automorphy_factor(&g0, z);
    let (x0, y1, v) = (p0.x(), p0.y(), w.y());
    let alpha = (y1 + v) * (y1 + v) / (4.0 * y1 * v);
    let beta = 4.0 * y1 * v;

    let ln_coset_bound = -p * alpha.ln() + (1.0 + (y1 + v) * setup.cp).ln();
    if ln_coset_bound <= budget.ln() && !(map == TermMap::Power && rep.is_identity()) {
        return CosetContrib {
            terms: Vec::new(),
            tail: ln_coset_bound.exp(),
        };
    }

    // one-sided tail for |s| > S: g(S)^{-p} [1 + β g(S) / (2S(p-1))], g(s) = α + s²/β
    let side = |s: f64| {
        let g = alpha + s * s / beta;
        (-p * g.ln() + (1.0 + beta * g / (2.0 * s * (p - 1.0))).ln()).exp()
    };
    let g_target = (budget / 8.0).ln() / -p;
    let mut s_cut = (beta * (g_target.exp() - alpha)).max(1.0).sqrt();
    while 2.0 * side(s_cut) > budget {
        s_cut *= 1.25;
    }
    let center = w.x() - x0;
    let m_lo = (center - s_cut).ceil() as i64;
    let m_hi = (center + s_cut).floor() as i64;

    let mut terms = Vec::with_capacity((m_hi - m_lo + 1).max(0) as usize);
    for m in m_lo..=m_hi {
        let gz = p0.translate(m as f64);
        let t = term_from_parts(z, w, gz, j);
        match map {
            TermMap::Power => terms.push(t.powi(setup.k as i64).to_complex()),
            TermMap::MagnitudeOffIdentity => {
                if !(rep.is_identity() && m == 0) {
                    terms.push(Complex64::new((setup.k as f64 * t.logmag).exp(), 0.0));
                }
            }
        }
    }
    CosetContrib {
        terms,
        tail: 2.0 * side(s_cut),
    }
}

/// Choose a truncation meeting `tol` for the full `SL(2,Z)` sum.
pub fn plan_truncation(z: Point, w: Point, k: u32, tol: f64) -> Result<Truncation, KernelError> {
    let setup = SumSetup::new(z, w, k);
    // half the budget for cosets beyond R, half for translation tails; the ±γ
    // doubling is accounted for by working with tol/2 at the PSL level
    let target = tol / 4.0;
    let mut radius = 1.0f64;
    loop {
        let tail = setup.lattice_tail(radius);
        let est = PI * radius * radius / (2.0 * z.y()) + radius / z.y() + 1.0;
        if est > MAX_COSETS as f64 {
            return Err(KernelError::CutoffExceeded {
                requested: tol,
                best_tail: 2.0 * tail,
                max_cosets: MAX_COSETS,
            });
        }
        if tail <= target {
            break;
        }
        radius *= 1.1;
    }
    let n = cosets_in_ball(z, radius).len();
    Ok(Truncation {
        lattice_radius: radius,
        coset_budget: target / n as f64,
    })
}

fn lattice_sum(
    z: Point,
    w: Point,
    k: u32,
    trunc: &Truncation,
    map: TermMap,
    fast: bool,
) -> KernelResult {
    let setup = SumSetup::new(z, w, k);
    let cosets = cosets_in_ball(z, trunc.lattice_radius);
    let cross_tail = setup.lattice_tail(trunc.lattice_radius);
    let budget = trunc.coset_budget;

    if fast {
        let (sum, tail, count) = cosets
            .par_iter()
            .map(|rep| {
                let c = coset_contrib(&setup, rep, budget, map);
                let s: Complex64 = c.terms.iter().sum();
                (s, c.tail, c.terms.len())
            })
            .reduce(
                || (Complex64::new(0.0, 0.0), 0.0, 0),
                |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
            );
        return KernelResult {
            value: 2.0 * sum,
            tail_bound: 2.0 * (tail + cross_tail),
            terms_used: count,
            cosets_used: cosets.len(),
        };
    }

    let contribs: Vec<CosetContrib> = if cosets.len() > 64 {
        cosets
            .par_iter()
            .map(|rep| coset_contrib(&setup, rep, budget, map))
            .collect()
    } else {
        cosets
            .iter()
            .map(|rep| coset_contrib(&setup, rep, budget, map))
            .collect()
    };
    let tail = crate::summation::sum_f64(contribs.iter().map(|c| c.tail));
    let mut terms: Vec<Complex64> = contribs.into_iter().flat_map(|c| c.terms).collect();
    let count = terms.len();
    let sum = sum_descending(&mut terms);
    KernelResult {
        value: 2.0 * sum,
        tail_bound: 2.0 * (tail + cross_tail),
        terms_used: count,
        cosets_used: cosets.len(),
    }
}

/// `R_k(z, w)` with an explicit truncation. Enlarging `lattice_radius` at fixed
/// `coset_budget` only adds terms, so the change is bounded by the old `tail_bound`.
pub fn bergman_r_truncated(
    z: Point,
    w: Point,
    k: u32,
    trunc: &Truncation,
    fast: bool,
) -> Result<KernelResult, KernelError> {
    if k < 4 || k % 2 != 0 {
        return Err(KernelError::InvalidWeight(k));
    }
    Ok(lattice_sum(z, w, k, trunc, TermMap::Power, fast))
}

/// `R_k(z, w)` with `tail_bound ≤ cfg.tol`.
pub fn bergman_r(z: Point, w: Point, cfg: &WeightConfig) -> Result<KernelResult, KernelError> {
    WeightConfig::new(cfg.k, cfg.tol)?;
    let trunc = plan_truncation(z, w, cfg.k, cfg.tol)?;
    bergman_r_truncated(z, w, cfg.k, &trunc, cfg.fast)
}

/// The unnormalized kernel `B_k(z, W) = Σ_γ b_γ(z, W)^k`, obtained from
/// `R_k(z, -W̄)` by removing the factor `(y·Im W)^{k/2}`.
pub fn bergman_b(z: Point, big_w: Point, cfg: &WeightConfig) -> Result<KernelResult, KernelError> {
    let r = bergman_r(z, big_w.reflect(), cfg)?;
    let scale = (-(cfg.k as f64) / 2.0 * (z.y() * big_w.y()).ln()).exp();
    Ok(KernelResult {
        value: r.value * scale,
        tail_bound: r.tail_bound * scale,
        ..r
    })
}

/// `Σ_{γ ≠ ±I} |t_γ(z,w)|^k` as `(value, tail_bound)`.
pub fn off_identity_magnitude_sum(
    z: Point,
    w: Point,
    k: u32,
    tol: f64,
) -> Result<(f64, f64), KernelError> {
    if k < 4 || k % 2 != 0 {
        return Err(KernelError::InvalidWeight(k));
    }
    let trunc = plan_truncation(z, w, k, tol)?;
    let r = lattice_sum(z, w, k, &trunc, TermMap::MagnitudeOffIdentity, false);
    Ok((r.value.re, r.tail_bound))
}

/// The main term `2·(2i√(yv)/(z - w̄))^k`.
pub fn bergman_main_term(z: Point, w: Point, k: u32) -> Complex64 {
    let zc = z.to_complex();
    let wbar = w.to_complex().conj();
    let base = Complex64::new(0.0, 2.0 * (z.y() * w.y()).sqrt()) / (zc - wbar);
    2.0 * LogComplex::from_complex(base).powi(k as i64).to_complex()
}

/// `Σ_{γ ∈ Stab(e) \ {±I}} t_γ(z, z)^k`.
pub fn elliptic_correction(z: Point, e: &EllipticPoint, k: u32) -> Complex64 {
    e.stabilizer_elements()
        .iter()
        .filter(|g| !g.is_central())
        .map(|g| b_term(g, z, z).powi(k as i64).to_complex())
        .sum()
}

/// Measured deviation of `R_k(z,z)` from its predicted main term, with the
/// predicted error size `e^{-δ²k/(128Y²)} + y e^{-k/(17y²)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticResidual {
    pub residual: f64,
    pub bound: f64,
    pub kernel: KernelResult,
    pub prediction: Complex64,
    /// Elliptic point whose stabilizer terms were added to the prediction.
    pub elliptic: Option<EllipticPoint>,
}

pub fn asymptotic_residual(
    z: Point,
    cfg: &WeightConfig,
    region: &StripRegion,
) -> Result<AsymptoticResidual, KernelError> {
    let kernel = bergman_r(z, z, cfg)?;
    let k = cfg.k as f64;
    let (y, y_param, delta) = (z.y(), region.y_param, region.delta);
    let mut prediction = bergman_main_term(z, z, cfg.k);
    let mut elliptic = None;
    if y <= 2.0 {
        let list = elliptic_points_in_strip(y_param);
        if let Some(e) = nearby_elliptic(z, delta, &list) {
            prediction += elliptic_correction(z, e, cfg.k);
            elliptic = Some(*e);
        }
    }
    let bound = (-delta * delta * k / (128.0 * y_param * y_param)).exp() + y * (-k / (17.0 * y * y)).exp();
    Ok(AsymptoticResidual {
        residual: (kernel.value - prediction).norm(),
        bound,
        kernel,
        prediction,
        elliptic,
    })
}

/// Certified bound on `|R_k(z,z) - 2|` from the minimal displacement:
/// for `γ ≠ ±I`, `(1+u)^{-k/2} ≤ (1+u_min)^{-(k-k₀)/2}·(1+u)^{-k₀/2}`, and
/// `Σ (1+u)^{-k₀/2}` is summed with its own certified tail at `k₀ = min(k, 12)`.
pub fn certified_offdiagonal_bound(z: Point, k: u32) -> Result<f64, KernelError> {
    let (_, d_min) = min_displacement(z, 1);
    let u_min = invariant_from_distance(d_min);
    let k0 = k.min(12);
    let (m, tail) = off_identity_magnitude_sum(z, z, k0, 1e-10)?;
    let decay = (-((k - k0) as f64) / 2.0 * u_min.ln_1p()).exp();
    Ok(decay * (m + tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(WeightConfig::new(3, 1e-12).is_err());
        assert!(WeightConfig::new(2, 1e-12).is_err());
        assert!(WeightConfig::new(12, 0.0).is_err());
        assert!(WeightConfig::new(12, 1e-12).is_ok());
    }

    #[test]
    fn b_term_examples() {
        let i = Point::i();
        let t = b_term(&GammaMatrix::IDENTITY, i, i);
        assert!(t.logmag.abs() < 1e-15 && t.phase.abs() < 1e-15);
        let t = b_term(&GammaMatrix::S, i, i);
        assert!(t.logmag.abs() < 1e-15 && (t.phase + FRAC_PI_2).abs() < 1e-15);
        let t = b_term(&GammaMatrix::T, i, i).to_complex();
        assert!((t - Complex64::new(0.8, 0.4)).norm() < 1e-15);
        assert!((t.norm() - 2.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn main_term_examples() {
        let z = p(0.3, 0.8);
        assert!((bergman_main_term(z, z, 400) - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        let m = bergman_main_term(Point::i(), p(0.0, 2.0), 12);
        assert!((m - Complex64::new(2.0 * (8.0f64 / 9.0).powi(6), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cauchy_integral_values() {
        assert!((cauchy_power_integral(1) - PI).abs() < 1e-15);
        assert!((cauchy_power_integral(2) - PI / 2.0).abs() < 1e-15);
        assert!((cauchy_power_integral(3) - 3.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn elliptic_correction_at_i() {
        let e = crate::modular::elliptic_points_in_strip(2.0)
            .into_iter()
            .find(|e| e.stabilizer_order == 4)
            .unwrap();
        let c = elliptic_correction(Point::i(), &e, 400);
        assert!((c - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        let c = elliptic_correction(Point::i(), &e, 402);
        assert!((c + Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cutoff_exceeded_for_unreachable_tolerance() {
        let cfg = WeightConfig::new(4, 1e-300).unwrap();
        match bergman_r(p(0.1, 1.2), p(0.1, 1.2), &cfg) {
            Err(KernelError::CutoffExceeded { best_tail, .. }) => assert!(best_tail > 0.0),
            other => panic!("expected CutoffExceeded, got {other:?}"),
        }
    }

    #[test]
    fn tail_bound_respects_tolerance() {
        for (z, k) in [(p(0.13, 1.1), 12u32), (p(0.4, 0.9), 24), (p(-0.2, 2.5), 100)] {
            for tol in [1e-6, 1e-10, 1e-14] {
                let cfg = WeightConfig::new(k, tol).unwrap();
                let r = bergman_r(z, z, &cfg).unwrap();
                assert!(r.tail_bound <= tol && r.tail_bound >= 0.0);
                assert!(r.value.re.is_finite());
            }
        }
    }
}
