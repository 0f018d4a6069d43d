//! Exact q-expansions of the one-dimensional cusp-form spaces (weights 12 and
//! 16), their Petersson norms, and the pre-trace check
//! `y^k |f(z)|²/⟨f,f⟩ = (k-1)/(8π)·R_k(z,z)`.
//!
//! Nothing here depends on the lattice sum except [`verify_pretrace`], which
//! evaluates it once for comparison.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::hyperbolic::Point;
use crate::kernel::{bergman_r, KernelError, WeightConfig};
use crate::quadrature::{integrate_2d, QuadOptions};

/// Evaluations below this height converge too slowly to be trusted.
pub const MIN_EVAL_HEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Im z = {0} is below the evaluation floor {MIN_EVAL_HEIGHT}")]
    BelowHeight(f64),
    #[error("q-expansion tail {tail:e} too large at Im z = {y}")]
    TailTooLarge { tail: f64, y: f64 },
    #[error("no one-dimensional cusp form oracle for weight {0}")]
    UnsupportedWeight(u32),
    #[error("height cut {0} must be at least 1")]
    InvalidHeight(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Truncated q-expansion `Σ_{n=1}^{N} a(n) q^n` of a weight-`w` cusp form with
/// integer coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    weight: u32,
    /// `coeffs[n]` is `a(n)`; `coeffs[0] = 0`.
    coeffs: Vec<BigInt>,
    float: Vec<f64>,
}

/// Coefficients of `Π_{n≥1}(1-q^n)` up to `q^n_max` from the pentagonal number theorem.
fn euler_product(n_max: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(0); n_max + 1];
    out[0] = BigInt::from(1);
    for m in 1i64.. {
        let sign = if m % 2 == 0 { 1 } else { -1 };
        let p1 = (m * (3 * m - 1) / 2) as usize;
        let p2 = (m * (3 * m + 1) / 2) as usize;
        if p1 > n_max {
            break;
        }
        out[p1] += sign;
        if p2 <= n_max {
            out[p2] += sign;
        }
    }
    out
}

fn mul_trunc(a: &[BigInt], b: &[BigInt], n_max: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(0); n_max + 1];
    for (i, ai) in a.iter().enumerate().take(n_max + 1) {
        if ai == &BigInt::from(0) {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n_max + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn sigma3(n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).map(|d| d * d * d).sum()
}

/// `Δ = q Π(1-q^n)^24` through `q^n_max`.
pub fn delta_coeffs(n_max: usize) -> QExpansion {
    assert!(n_max >= 1);
    let p = euler_product(n_max);
    let p2 = mul_trunc(&p, &p, n_max);
    let p4 = mul_trunc(&p2, &p2, n_max);
    let p8 = mul_trunc(&p4, &p4, n_max);
    let p16 = mul_trunc(&p8, &p8, n_max);
    let p24 = mul_trunc(&p16, &p8, n_max);
    let mut coeffs = vec![BigInt::from(0); n_max + 1];
    coeffs[1..].clone_from_slice(&p24[..n_max]);
    QExpansion::from_coeffs(12, coeffs)
}

/// `E_4 = 1 + 240 Σ σ_3(n) q^n` through `q^n_max`.
pub fn eisenstein_e4(n_max: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(1)];
    for n in 1..=n_max as u64 {
        out.push(BigInt::from(240u64 * sigma3(n)));
    }
    out
}

/// The normalized weight-16 cusp form `Δ·E_4`.
pub fn weight16_coeffs(n_max: usize) -> QExpansion {
    let d = delta_coeffs(n_max);
    let e4 = eisenstein_e4(n_max);
    QExpansion::from_coeffs(16, mul_trunc(&d.coeffs, &e4, n_max))
}

/// The normalized cusp form spanning `S_k` when that space is one-dimensional
/// and covered here.
pub fn cusp_form(k: u32, n_max: usize) -> Result<QExpansion, OracleError> {
    match k {
        12 => Ok(delta_coeffs(n_max)),
        16 => Ok(weight16_coeffs(n_max)),
        _ => Err(OracleError::UnsupportedWeight(k)),
    }
}

impl QExpansion {
    fn from_coeffs(weight: u32, coeffs: Vec<BigInt>) -> Self {
        let float = coeffs
            .iter()
            .map(|c| c.to_string().parse::<f64>().expect("integer literal"))
            .collect();
        QExpansion { weight, coeffs, float }
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff_f64(&self, n: usize) -> f64 {
        self.float[n]
    }

    fn tail_exponent(&self) -> f64 {
        (self.weight as f64 + 2.0) / 2.0
    }

    /// Crude coefficient bound `|a(n)| ≤ 2 n^{(w+2)/2}`, implied by
    /// `|a(n)| ≤ d(n) n^{(w-1)/2}` and `d(n) ≤ 2√n`.
    pub fn coeff_bound(&self, n: usize) -> f64 {
        2.0 * (n as f64).powf(self.tail_exponent())
    }

    /// Bound on `Σ_{n>N} |a(n)| r^n` at `r = e^{-2πy}`.
    pub fn tail_bound(&self, y: f64) -> f64 {
        let r = (-2.0 * PI * y).exp();
        let n = self.n_max() as f64;
        let ratio = ((n + 2.0) / (n + 1.0)).powf(self.tail_exponent()) * r;
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        2.0 * (n + 1.0).powf(self.tail_exponent()) * r.powf(n + 1.0) / (1.0 - ratio)
    }

    /// Horner evaluation in `q = e^{2πiz}` with a certified truncation check.
    pub fn eval(&self, z: Point) -> Result<Complex64, OracleError> {
        let y = z.y();
        if y < MIN_EVAL_HEIGHT {
            return Err(OracleError::BelowHeight(y));
        }
        let q = Complex64::from_polar((-2.0 * PI * y).exp(), 2.0 * PI * z.x());
        let tail = self.tail_bound(y);
        if tail > 1e-16 * q.norm() {
            return Err(OracleError::TailTooLarge { tail, y });
        }
        let mut s = Complex64::new(0.0, 0.0);
        for n in (1..=self.n_max()).rev() {
            s = s * q + self.float[n];
        }
        Ok(s * q)
    }
}

/// Upper incomplete gamma `Γ(s, x)` for a positive integer `s`.
fn upper_gamma_int(s: u32, x: f64) -> f64 {
    // (s-1)! e^{-x} Σ_{j<s} x^j/j!, accumulated from the top term down
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in (1..s).rev() {
        term *= j as f64 / x;
        sum += term;
    }
    // sum = Σ_j (s-1)!/(j! x^{s-1-j}); multiply by x^{s-1} e^{-x}
    sum * ((s - 1) as f64 * x.ln() - x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeterssonNorm {
    /// `∫_F y^w |f|² dxdy/y²`, with no volume normalization.
    pub value: f64,
    pub error_bound: f64,
    pub nodes: usize,
}

/// Quadrature over `F ∩ {y ≤ H}` plus the cusp part `Σ a(n)² Γ(w-1,4πnH)/(4πn)^{w-1}`.
pub fn petersson_norm(f: &QExpansion, tol: f64, height_cut: f64) -> Result<PeterssonNorm, OracleError> {
    if !(height_cut >= 1.0) {
        return Err(OracleError::InvalidHeight(height_cut));
    }
    let w = f.weight;
    // every point of the bottom region has y ≥ √3/2
    f.eval(Point::new(0.5, 3f64.sqrt() / 2.0).expect("valid point"))?;
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: tol,
        max_intervals: 2000,
        parallel: true,
    };
    let inner = QuadOptions { rel_tol: 0.1 * tol, ..opts };
    let bottom = integrate_2d(
        |x, y| {
            let z = Point::new(x, y).expect("positive height");
            let v = f.eval(z).expect("height checked");
            let tail = f.tail_bound(y);
            let yw = y.powi(w as i32 - 2);
            (yw * v.norm_sqr(), yw * (2.0 * v.norm() * tail + tail * tail))
        },
        -0.5,
        0.5,
        |x| (1.0 - x * x).max(0.0).sqrt(),
        |_| height_cut,
        &[0.0],
        &[],
        &opts,
        &inner,
    );

    let s = w - 1;
    let mut cusp = 0.0;
    for n in 1..=f.n_max() {
        let a = f.float[n];
        let x = 4.0 * PI * n as f64 * height_cut;
        cusp += a * a * upper_gamma_int(s, x) / x.powi(s as i32) * height_cut.powi(s as i32);
    }
    let mut cusp_tail = 0.0;
    for n in f.n_max() + 1..=f.n_max() + 400 {
        let a = f.coeff_bound(n);
        let x = 4.0 * PI * n as f64 * height_cut;
        cusp_tail += a * a * upper_gamma_int(s, x) / x.powi(s as i32) * height_cut.powi(s as i32);
    }
    let value = bottom.value + cusp;
    Ok(PeterssonNorm {
        value,
        error_bound: bottom.error + cusp_tail + 1e-15 * value,
        nodes: bottom.evaluations,
    })
}

/// `Δ(z)` from its first `n` coefficients.
pub fn eval_delta(z: Point, n: usize) -> Result<Complex64, OracleError> {
    delta_coeffs(n).eval(z)
}

/// `⟨Δ,Δ⟩` with relative quadrature tolerance `tol` and height cut 1.
pub fn petersson_norm_delta(tol: f64) -> PeterssonNorm {
    petersson_norm(&delta_coeffs(80), tol, 1.0).expect("80 terms suffice above the fundamental domain")
}

/// A normalized cusp form together with its Petersson norm.
#[derive(Debug, Clone)]
pub struct PretraceOracle {
    pub form: QExpansion,
    pub norm: PeterssonNorm,
}

impl PretraceOracle {
    pub fn new(k: u32, norm_tol: f64) -> Result<Self, OracleError> {
        let form = cusp_form(k, 80)?;
        let norm = petersson_norm(&form, norm_tol, 1.0)?;
        Ok(PretraceOracle { form, norm })
    }

    /// `y^k |f(z)|² / ⟨f,f⟩`
    pub fn form_side(&self, z: Point) -> Result<f64, OracleError> {
        let v = self.form.eval(z)?;
        Ok(z.y().powi(self.form.weight as i32) * v.norm_sqr() / self.norm.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PretraceReport {
    pub x: f64,
    pub y: f64,
    pub k: u32,
    pub form_side: f64,
    /// `(k-1)/(8π)·Re R_k(z,z)`
    pub kernel_side: f64,
    /// `|form_side - kernel_side| / |kernel_side|`
    pub residual: f64,
    /// Relative uncertainty from the kernel tail and the norm's error bound.
    pub error_budget: f64,
}

pub fn verify_pretrace(
    z: Point,
    cfg: &WeightConfig,
    oracle: &PretraceOracle,
) -> Result<PretraceReport, OracleError> {
    if oracle.form.weight != cfg.k {
        return Err(OracleError::UnsupportedWeight(cfg.k));
    }
    let form_side = oracle.form_side(z)?;
    let r = bergman_r(z, z, cfg)?;
    let scale = (cfg.k as f64 - 1.0) / (8.0 * PI);
    let kernel_side = scale * r.value.re;
    Ok(PretraceReport {
        x: z.x(),
        y: z.y(),
        k: cfg.k,
        form_side,
        kernel_side,
        residual: (form_side - kernel_side).abs() / kernel_side.abs(),
        error_budget: scale * r.tail_bound / kernel_side.abs() + oracle.norm.error_bound / oracle.norm.value,
    })
}
