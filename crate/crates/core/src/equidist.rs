//! Averaged mass densities `|B_k|^{-1} Σ_f y^k |f(z)|²` and their integrals along
//! vertical geodesics, horizontal segments and compact regions of the
//! fundamental domain, compared with the limit `3/π` times the base measure.
//!
//! The density is obtained from the kernel diagonal:
//! `|B_k|^{-1} Σ_f y^k|f(z)|² = (k-1)/(8π|B_k|)·R_k(z,z)`.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::hyperbolic::{hyp_distance, Point};
use crate::kernel::{bergman_r, KernelError, WeightConfig};
use crate::modular::{elliptic_points_near_strip, EllipticPoint, StripRegion};
use crate::quadrature::{integrate, integrate_2d, QuadOptions};

pub const THREE_OVER_PI: f64 = 3.0 / PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquidistError {
    #[error("weight {0} is odd")]
    OddWeight(u32),
    #[error("no cusp forms of weight {0}")]
    NoCuspForms(u32),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Dimension of the space of weight-`k` cusp forms on `SL(2,Z)`.
pub fn dim_cusp_forms(k: u32) -> Result<u32, EquidistError> {
    if k % 2 != 0 {
        return Err(EquidistError::OddWeight(k));
    }
    let q = k / 12;
    Ok(if k % 12 == 2 { q.saturating_sub(1) } else { q })
}

/// Normalization `(k-1)/(8π·dim S_k)` turning `R_k(z,z)` into the averaged density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureDensity {
    pub k: u32,
    pub dim: u32,
    pub normalization: f64,
}

impl MeasureDensity {
    pub fn new(k: u32) -> Result<Self, EquidistError> {
        let dim = dim_cusp_forms(k)?;
        if dim == 0 {
            return Err(EquidistError::NoCuspForms(k));
        }
        Ok(MeasureDensity {
            k,
            dim,
            normalization: (k as f64 - 1.0) / (8.0 * PI * dim as f64),
        })
    }
}

/// One density evaluation with its truncation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensitySample {
    pub value: f64,
    /// `normalization · tail_bound` of the kernel sum.
    pub error: f64,
    /// Imaginary part of the diagonal kernel; zero up to truncation and rounding.
    pub imag: f64,
}

pub fn measure_density(z: Point, cfg: &WeightConfig) -> Result<DensitySample, EquidistError> {
    let md = MeasureDensity::new(cfg.k)?;
    density_with(&md, z, cfg)
}

fn density_with(
    md: &MeasureDensity,
    z: Point,
    cfg: &WeightConfig,
) -> Result<DensitySample, EquidistError> {
    let r = bergman_r(z, z, cfg)?;
    Ok(DensitySample {
        value: md.normalization * r.value.re,
        error: md.normalization * r.tail_bound,
        imag: r.value.im,
    })
}

/// Which base measure a one-dimensional test function is integrated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BaseMeasure {
    /// `dx`
    Lebesgue,
    /// `dy/y`
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TestKind {
    Zero,
    /// `exp(-1/(1-s²))` rescaled from `[-1,1]` to the support.
    SmoothBump,
    Indicator,
    /// Piecewise-linear interpolation of `(xs, ys)`, zero outside `[xs[0], xs[last]]`.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

/// A compactly supported test function `ψ` with its reference integral against
/// the chosen base measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub kind: TestKind,
    pub support: (f64, f64),
    pub measure: BaseMeasure,
    pub reference_integral: f64,
}

fn bump01(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl TestFunction {
    pub fn zero(measure: BaseMeasure) -> Self {
        TestFunction {
            kind: TestKind::Zero,
            support: (0.0, 0.0),
            measure,
            reference_integral: 0.0,
        }
    }

    pub fn smooth_bump(a: f64, b: f64, measure: BaseMeasure) -> Result<Self, EquidistError> {
        Self::build(TestKind::SmoothBump, a, b, measure)
    }

    pub fn indicator(a: f64, b: f64, measure: BaseMeasure) -> Result<Self, EquidistError> {
        Self::build(TestKind::Indicator, a, b, measure)
    }

    /// `ψ ≡ 1` on one period `[-1/2, 1/2]`.
    pub fn one_on_period() -> Self {
        Self::build(TestKind::Indicator, -0.5, 0.5, BaseMeasure::Lebesgue).expect("valid interval")
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>, measure: BaseMeasure) -> Result<Self, EquidistError> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EquidistError::InvalidTestFunction(
                "tabulated nodes must be strictly increasing with matching values".into(),
            ));
        }
        let (a, b) = (xs[0], xs[xs.len() - 1]);
        Self::build(TestKind::Tabulated { xs, ys }, a, b, measure)
    }

    fn build(kind: TestKind, a: f64, b: f64, measure: BaseMeasure) -> Result<Self, EquidistError> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(EquidistError::InvalidTestFunction(format!("bad support [{a}, {b}]")));
        }
        if measure == BaseMeasure::Multiplicative && a <= 0.0 {
            return Err(EquidistError::InvalidTestFunction(
                "support must lie in (0, ∞) for dy/y".into(),
            ));
        }
        let mut f = TestFunction {
            kind,
            support: (a, b),
            measure,
            reference_integral: 0.0,
        };
        let opts = QuadOptions {
            abs_tol: 1e-16,
            rel_tol: 1e-14,
            max_intervals: 4000,
            parallel: false,
        };
        let r = integrate(
            |t| (f.eval(t) * f.measure_weight(t), 0.0),
            a,
            b,
            &f.breakpoints(),
            &opts,
        );
        f.reference_integral = r.value;
        Ok(f)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (a, b) = self.support;
        match &self.kind {
            TestKind::Zero => 0.0,
            TestKind::SmoothBump => bump01((2.0 * t - a - b) / (b - a)),
            TestKind::Indicator => {
                if t >= a && t <= b {
                    1.0
                } else {
                    0.0
                }
            }
            TestKind::Tabulated { xs, ys } => {
                if t < a || t > b {
                    return 0.0;
                }
                let i = xs.partition_point(|&x| x <= t).clamp(1, xs.len() - 1);
                let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    fn measure_weight(&self, t: f64) -> f64 {
        match self.measure {
            BaseMeasure::Lebesgue => 1.0,
            BaseMeasure::Multiplicative => 1.0 / t,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            TestKind::Tabulated { xs, .. } => xs.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, TestKind::Zero)
    }

    pub fn sup_norm(&self) -> f64 {
        match &self.kind {
            TestKind::Zero => 0.0,
            TestKind::SmoothBump => (-1.0f64).exp(),
            TestKind::Indicator => 1.0,
            TestKind::Tabulated { ys, .. } => ys.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Knobs for the integral experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Skip the support-window preconditions.
    pub unsafe_window: bool,
    /// Horizontal case: accept `y > k^{-1/4}(log k)^{1/4}` instead of `y > 1/Y`.
    pub weak_horizontal_window: bool,
    pub max_intervals: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            unsafe_window: false,
            weak_horizontal_window: false,
            max_intervals: 4000,
        }
    }
}

impl IntegrationOptions {
    fn quad(&self, parallel: bool) -> QuadOptions {
        QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: self.max_intervals,
            parallel,
        }
    }
}

/// Result of one integral experiment, in the JSON layout used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralReport {
    pub k: u32,
    /// `x` for vertical lines, `y` for horizontal segments, `NaN` for regions.
    pub x_or_y: f64,
    pub integral: f64,
    /// `(3/π)·∫ψ` against the base measure.
    pub reference: f64,
    /// `integral - reference`
    pub gap: f64,
    /// `gap / |reference|`, or `0` when the reference vanishes.
    pub relative_gap: f64,
    pub reported_error: f64,
    /// Part of `reported_error` propagated from the kernel tails at the nodes.
    pub node_error: f64,
    pub nodes: usize,
    pub wall_time_ms: f64,
    pub normalization: f64,
}

impl IntegralReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        k: u32,
        x_or_y: f64,
        integral: f64,
        reference: f64,
        reported_error: (f64, f64),
        nodes: usize,
        started: Instant,
        normalization: f64,
    ) -> Self {
        let (reported_error, node_error) = reported_error;
        let gap = integral - reference;
        IntegralReport {
            k,
            x_or_y,
            integral,
            reference,
            gap,
            relative_gap: if reference != 0.0 { gap / reference.abs() } else { 0.0 },
            reported_error,
            node_error,
            nodes,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            normalization,
        }
    }

    /// Relative deviation of `∫ψ·R_k/2` from `∫ψ`, i.e. the gap with the
    /// dimension normalization divided out.
    pub fn kernel_relative_gap(&self) -> f64 {
        if self.reference == 0.0 {
            return 0.0;
        }
        let kernel_half = self.integral / (2.0 * self.normalization);
        let base = self.reference / THREE_OVER_PI;
        kernel_half / base - 1.0
    }
}

/// Upper end `k^{1/2}(17 A log k)^{-1/2}` of the admissible support window.
pub fn upper_window(cfg: &WeightConfig) -> f64 {
    let k = cfg.k as f64;
    (k / (17.0 * cfg.a * k.ln())).sqrt()
}

/// Lower end `k^{-1/4}(log k)^{1/4}` of the weak horizontal window.
pub fn weak_lower_window(k: u32) -> f64 {
    let k = k as f64;
    (k.ln() / k).powf(0.25)
}

/// Elliptic points whose spike can reach the path, with a sensible spike scale.
fn spike_radius(k: u32) -> f64 {
    (100.0 / k as f64).sqrt()
}

fn vertical_breakpoints(x: f64, k: u32, elliptic: &[EllipticPoint]) -> Vec<f64> {
    let h = 1.0 / (k as f64).sqrt();
    let reach = spike_radius(k);
    let mut out = Vec::new();
    for e in elliptic {
        let (ex, ey) = (e.location.x(), e.location.y());
        let closest = ((x - ex) * (x - ex) + ey * ey).sqrt();
        let d_min = ((x - ex).abs() / ey).asinh();
        if d_min < reach {
            out.push(closest);
            for j in [1.0, 2.0, 4.0] {
                out.push(closest * (j * h).exp());
                out.push(closest * (-j * h).exp());
            }
        }
    }
    out
}

fn horizontal_breakpoints(y: f64, k: u32, elliptic: &[EllipticPoint]) -> Vec<f64> {
    let h = 1.0 / (k as f64).sqrt();
    let reach = spike_radius(k);
    let mut out = Vec::new();
    for e in elliptic {
        let (ex, ey) = (e.location.x(), e.location.y());
        if (y / ey).ln().abs() < reach {
            out.push(ex);
            for j in [1.0, 2.0, 4.0] {
                out.push(ex + y * j * h);
                out.push(ex - y * j * h);
            }
        }
    }
    out
}

/// `∫ψ(y)·density(x+iy) dy/y` against `(3/π)∫ψ dy/y`.
pub fn integrate_vertical(
    x: f64,
    psi: &TestFunction,
    cfg: &WeightConfig,
    region: &StripRegion,
    opts: &IntegrationOptions,
) -> Result<IntegralReport, EquidistError> {
    let started = Instant::now();
    let md = MeasureDensity::new(cfg.k)?;
    if psi.measure != BaseMeasure::Multiplicative {
        return Err(EquidistError::InvalidTestFunction(
            "vertical integrals use dy/y test functions".into(),
        ));
    }
    if !(-0.5..=0.5).contains(&x) {
        return Err(EquidistError::SupportViolation(format!("x={x} outside [-1/2, 1/2]")));
    }
    if psi.is_zero() {
        return Ok(IntegralReport::new(cfg.k, x, 0.0, 0.0, (0.0, 0.0), 0, started, md.normalization));
    }
    let (a, b) = psi.support;
    let upper = upper_window(cfg);
    if !opts.unsafe_window && !(a > 1.0 / region.y_param && b < upper) {
        return Err(EquidistError::SupportViolation(format!(
            "support [{a}, {b}] not inside (1/Y, k^(1/2)(17 A log k)^(-1/2)) = ({}, {upper})",
            1.0 / region.y_param
        )));
    }
    let elliptic = elliptic_points_near_strip(region.y_param, 1.0);
    let mut breaks = vertical_breakpoints(x, cfg.k, &elliptic);
    breaks.extend(psi.breakpoints());
    let integrand = |y: f64| -> (f64, f64) {
        let w = psi.eval(y) / y;
        if w == 0.0 {
            return (0.0, 0.0);
        }
        let z = Point::new(x, y).expect("positive height");
        match density_with(&md, z, cfg) {
            Ok(s) => (w * s.value, w.abs() * s.error),
            Err(_) => (f64::NAN, f64::INFINITY),
        }
    };
    let r = integrate(integrand, a, b, &breaks, &opts.quad(true));
    if !r.value.is_finite() {
        // surface the kernel failure deterministically
        let z = Point::new(x, 0.5 * (a + b)).expect("positive height");
        density_with(&md, z, cfg)?;
    }
    Ok(IntegralReport::new(
        cfg.k,
        x,
        r.value,
        THREE_OVER_PI * psi.reference_integral,
        (r.error, r.node_error),
        r.evaluations,
        started,
        md.normalization,
    ))
}

/// `∫ψ(x)·density(x+iy) dx` over one period against `(3/π)∫ψ dx`.
pub fn integrate_horizontal(
    y: f64,
    psi: &TestFunction,
    cfg: &WeightConfig,
    region: &StripRegion,
    opts: &IntegrationOptions,
) -> Result<IntegralReport, EquidistError> {
    let started = Instant::now();
    let md = MeasureDensity::new(cfg.k)?;
    if psi.measure != BaseMeasure::Lebesgue {
        return Err(EquidistError::InvalidTestFunction(
            "horizontal integrals use dx test functions".into(),
        ));
    }
    let upper = upper_window(cfg);
    let lower = if opts.weak_horizontal_window {
        weak_lower_window(cfg.k)
    } else {
        1.0 / region.y_param
    };
    if !opts.unsafe_window && !(y > lower && y < upper) {
        return Err(EquidistError::SupportViolation(format!(
            "height {y} not inside ({lower}, {upper})"
        )));
    }
    if psi.is_zero() {
        return Ok(IntegralReport::new(cfg.k, y, 0.0, 0.0, (0.0, 0.0), 0, started, md.normalization));
    }
    let (a, b) = psi.support;
    if a < -0.5 - 1e-15 || b > 0.5 + 1e-15 {
        return Err(EquidistError::SupportViolation(format!(
            "support [{a}, {b}] is not inside one period [-1/2, 1/2]"
        )));
    }
    let elliptic = elliptic_points_near_strip(region.y_param, 1.0);
    let mut breaks = horizontal_breakpoints(y, cfg.k, &elliptic);
    breaks.extend(psi.breakpoints());
    let integrand = |x: f64| -> (f64, f64) {
        let w = psi.eval(x);
        if w == 0.0 {
            return (0.0, 0.0);
        }
        let z = Point::new(x, y).expect("positive height");
        match density_with(&md, z, cfg) {
            Ok(s) => (w * s.value, w.abs() * s.error),
            Err(_) => (f64::NAN, f64::INFINITY),
        }
    };
    let r = integrate(integrand, a, b, &breaks, &opts.quad(true));
    if !r.value.is_finite() {
        let z = Point::new(0.5 * (a + b), y).expect("positive height");
        density_with(&md, z, cfg)?;
    }
    Ok(IntegralReport::new(
        cfg.k,
        y,
        r.value,
        THREE_OVER_PI * psi.reference_integral,
        (r.error, r.node_error),
        r.evaluations,
        started,
        md.normalization,
    ))
}

/// Two-dimensional test functions on the fundamental domain
/// `F = {|x| ≤ 1/2, |z| ≥ 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RegionTestFunction {
    Zero,
    /// `exp(-1/(1-r²/ρ²))` with Euclidean `r = |z - center|`.
    EuclideanBump { cx: f64, cy: f64, radius: f64 },
    /// The same profile in hyperbolic distance from `center`. Centered at `i` the
    /// function is invariant under `z ↦ -1/z` and therefore well defined on the
    /// quotient even though its support crosses the arc `|z| = 1`.
    HyperbolicBump { center: Point, radius: f64 },
}

impl RegionTestFunction {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            RegionTestFunction::Zero => 0.0,
            RegionTestFunction::EuclideanBump { cx, cy, radius } => {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                bump01(r / radius)
            }
            RegionTestFunction::HyperbolicBump { center, radius } => {
                let z = Point::new(x, y).expect("positive height");
                bump01(hyp_distance(z, center) / radius)
            }
        }
    }

    /// Euclidean bounding box `(x0, x1, y0, y1)` of the support.
    pub fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            RegionTestFunction::Zero => None,
            RegionTestFunction::EuclideanBump { cx, cy, radius } => {
                Some((cx - radius, cx + radius, cy - radius, cy + radius))
            }
            RegionTestFunction::HyperbolicBump { center, radius } => {
                let (cy, er) = (center.y() * radius.cosh(), center.y() * radius.sinh());
                Some((center.x() - er, center.x() + er, cy - er, cy + er))
            }
        }
    }

    fn check_support(&self) -> Result<(), EquidistError> {
        let inside_f = |cx: f64, cy: f64, r: f64| {
            cx.abs() + r <= 0.5 && (cx * cx + cy * cy).sqrt() - r >= 1.0
        };
        match *self {
            RegionTestFunction::Zero => Ok(()),
            RegionTestFunction::EuclideanBump { cx, cy, radius } => {
                if radius > 0.0 && inside_f(cx, cy, radius) {
                    Ok(())
                } else {
                    Err(EquidistError::SupportViolation(format!(
                        "Euclidean disk at {cx}+{cy}i radius {radius} leaves the fundamental domain"
                    )))
                }
            }
            RegionTestFunction::HyperbolicBump { center, radius } => {
                let (cy, er) = (center.y() * radius.cosh(), center.y() * radius.sinh());
                let at_i = (center.x()).abs() < 1e-12 && (center.y() - 1.0).abs() < 1e-12;
                // the order-4 point i is separated from e^{iπ/3} by distance acosh(2/√3)
                let max_i_radius = (2.0 / 3f64.sqrt()).acosh();
                let ok = radius > 0.0
                    && (inside_f(center.x(), cy, er)
                        || (at_i && er <= 0.5 && radius < max_i_radius));
                if ok {
                    Ok(())
                } else {
                    Err(EquidistError::SupportViolation(format!(
                        "hyperbolic ball at {center} radius {radius} is not a valid support in the fundamental domain"
                    )))
                }
            }
        }
    }
}

/// `∫_F φ·density dxdy/y²` against `(3/π)∫_F φ dxdy/y²`.
pub fn integrate_region(
    phi: &RegionTestFunction,
    cfg: &WeightConfig,
    opts: &IntegrationOptions,
) -> Result<IntegralReport, EquidistError> {
    let started = Instant::now();
    let md = MeasureDensity::new(cfg.k)?;
    phi.check_support()?;
    let Some((x0, x1, y0, y1)) = phi.bounding_box() else {
        return Ok(IntegralReport::new(cfg.k, f64::NAN, 0.0, 0.0, (0.0, 0.0), 0, started, md.normalization));
    };
    let (x0, x1) = (x0.max(-0.5), x1.min(0.5));
    let lo = |x: f64| y0.max((1.0 - x * x).max(0.0).sqrt());
    let hi = |_: f64| y1;
    let x_breaks = [0.0];
    let outer = IntegrationOptions { ..*opts }.quad(true);
    let inner = QuadOptions {
        rel_tol: opts.rel_tol * 0.1,
        abs_tol: opts.abs_tol * 0.1,
        ..opts.quad(false)
    };
    let reference = integrate_2d(
        |x, y| (phi.eval(x, y) / (y * y), 0.0),
        x0,
        x1,
        lo,
        hi,
        &x_breaks,
        &[],
        &outer,
        &inner,
    );
    let r = integrate_2d(
        |x, y| {
            let w = phi.eval(x, y) / (y * y);
            if w == 0.0 {
                return (0.0, 0.0);
            }
            let z = Point::new(x, y).expect("positive height");
            match density_with(&md, z, cfg) {
                Ok(s) => (w * s.value, w.abs() * s.error),
                Err(_) => (f64::NAN, f64::INFINITY),
            }
        },
        x0,
        x1,
        lo,
        hi,
        &x_breaks,
        &[],
        &outer,
        &inner,
    );
    if !r.value.is_finite() {
        return Err(EquidistError::Kernel(KernelError::InvalidTolerance(cfg.tol)));
    }
    Ok(IntegralReport::new(
        cfg.k,
        f64::NAN,
        r.value,
        THREE_OVER_PI * reference.value,
        (r.error + THREE_OVER_PI * reference.error, r.node_error),
        r.evaluations,
        started,
        md.normalization,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        assert_eq!(dim_cusp_forms(12).unwrap(), 1);
        assert_eq!(dim_cusp_forms(14).unwrap(), 0);
        assert_eq!(dim_cusp_forms(24).unwrap(), 2);
        assert_eq!(dim_cusp_forms(0).unwrap(), 0);
        assert_eq!(dim_cusp_forms(2).unwrap(), 0);
        assert_eq!(dim_cusp_forms(10).unwrap(), 0);
        assert!(dim_cusp_forms(13).is_err());
    }

    #[test]
    fn dimension_matches_monomial_count() {
        // dim M_k = #{(a,b) ≥ 0 : 4a + 6b = k}; dim S_k = dim M_k - 1 for k ≥ 4
        for k in (4..=600).step_by(2) {
            let mut count = 0;
            for a in 0..=k / 4 {
                if (k - 4 * a) % 6 == 0 {
                    count += 1;
                }
            }
            assert_eq!(dim_cusp_forms(k).unwrap(), count - 1, "k={k}");
        }
    }

    #[test]
    fn bump_reference_integrals() {
        let f = TestFunction::smooth_bump(-1.0, 1.0, BaseMeasure::Lebesgue).unwrap();
        // ∫_{-1}^{1} exp(-1/(1-s²)) ds
        assert!((f.reference_integral - 0.443_993_816_168_079_4).abs() < 1e-12);
        let g = TestFunction::smooth_bump(-1.0, 1.0, BaseMeasure::Lebesgue).unwrap();
        assert_eq!(f.reference_integral, g.reference_integral);
        let one = TestFunction::one_on_period();
        assert!((one.reference_integral - 1.0).abs() < 1e-15);
        let ind = TestFunction::indicator(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
        assert!((ind.reference_integral - 2f64.ln()).abs() < 1e-14);
        assert!(TestFunction::smooth_bump(2.0, 1.0, BaseMeasure::Lebesgue).is_err());
        assert!(TestFunction::smooth_bump(0.0, 1.0, BaseMeasure::Multiplicative).is_err());
    }

    #[test]
    fn bump_derivatives_vanish_at_edges() {
        let f = TestFunction::smooth_bump(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
        for t in [1.0 + 1e-3, 2.0 - 1e-3] {
            assert!(f.eval(t) < 1e-100);
        }
        assert_eq!(f.eval(0.5), 0.0);
        assert!((f.eval(1.5) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates() {
        let f = TestFunction::tabulated(vec![0.0, 0.25, 0.5], vec![0.0, 1.0, 0.0], BaseMeasure::Lebesgue).unwrap();
        assert!((f.eval(0.125) - 0.5).abs() < 1e-15);
        assert!((f.reference_integral - 0.25).abs() < 1e-14);
        assert!(TestFunction::tabulated(vec![0.0, 0.0], vec![1.0, 1.0], BaseMeasure::Lebesgue).is_err());
    }

    #[test]
    fn density_requires_cusp_forms() {
        let cfg = WeightConfig::new(14, 1e-12).unwrap();
        assert_eq!(
            measure_density(Point::i(), &cfg),
            Err(EquidistError::NoCuspForms(14))
        );
    }

    #[test]
    fn zero_test_functions() {
        let cfg = WeightConfig::new(1200, 1e-12).unwrap();
        let region = StripRegion::new(10.0, 0.05).unwrap();
        let opts = IntegrationOptions::default();
        let v = integrate_vertical(0.13, &TestFunction::zero(BaseMeasure::Multiplicative), &cfg, &region, &opts).unwrap();
        assert_eq!((v.integral, v.reference, v.gap), (0.0, 0.0, 0.0));
        let h = integrate_horizontal(1.3, &TestFunction::zero(BaseMeasure::Lebesgue), &cfg, &region, &opts).unwrap();
        assert_eq!((h.integral, h.reference, h.gap), (0.0, 0.0, 0.0));
        let r = integrate_region(&RegionTestFunction::Zero, &cfg, &opts).unwrap();
        assert_eq!((r.integral, r.reference, r.gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn support_windows_enforced() {
        let cfg = WeightConfig::new(300, 1e-12).unwrap();
        let region = StripRegion::new(10.0, 0.05).unwrap();
        let psi = TestFunction::smooth_bump(1.0, 2.0, BaseMeasure::Multiplicative).unwrap();
        let opts = IntegrationOptions::default();
        // upper window at k=300, A=2 is ≈ 1.24 < 2
        assert!(matches!(
            integrate_vertical(0.13, &psi, &cfg, &region, &opts),
            Err(EquidistError::SupportViolation(_))
        ));
        let low = TestFunction::smooth_bump(0.05, 0.5, BaseMeasure::Multiplicative).unwrap();
        assert!(matches!(
            integrate_vertical(0.13, &low, &cfg, &region, &opts),
            Err(EquidistError::SupportViolation(_))
        ));
        let one = TestFunction::one_on_period();
        assert!(matches!(
            integrate_horizontal(5.0, &one, &cfg, &region, &opts),
            Err(EquidistError::SupportViolation(_))
        ));
        let bad = RegionTestFunction::EuclideanBump { cx: 0.4, cy: 1.2, radius: 0.2 };
        assert!(matches!(
            integrate_region(&bad, &cfg, &opts),
            Err(EquidistError::SupportViolation(_))
        ));
        let off_center = RegionTestFunction::HyperbolicBump { center: Point::new(0.1, 1.0).unwrap(), radius: 0.2 };
        assert!(matches!(
            integrate_region(&off_center, &cfg, &opts),
            Err(EquidistError::SupportViolation(_))
        ));
    }

    #[test]
    fn weak_window_flag() {
        let cfg = WeightConfig::new(1200, 1e-12).unwrap();
        let region = StripRegion::new(2.0, 0.05).unwrap();
        let one = TestFunction::one_on_period();
        let strict = IntegrationOptions::default();
        assert!(integrate_horizontal(0.4, &one, &cfg, &region, &strict).is_err());
        let weak = IntegrationOptions { weak_horizontal_window: true, ..strict };
        // k^{-1/4}(log k)^{1/4} ≈ 0.277 at k = 1200
        assert!(weak_lower_window(1200) < 0.4);
        assert!(integrate_horizontal(0.4, &one, &cfg, &region, &weak).is_ok());
    }
}
