//! Primitives for the upper half-plane: points, integer unimodular matrices,
//! the Möbius action, the point-pair invariant and hyperbolic distance.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {x}+{y}i is not in the upper half-plane")]
    NotInUpperHalfPlane { x: f64, y: f64 },
    #[error("non-finite coordinate in point {x}+{y}i")]
    NonFinite { x: f64, y: f64 },
    #[error("matrix ({a},{b};{c},{d}) has determinant {det}, expected 1")]
    DeterminantNotOne {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        det: i128,
    },
    #[error("matrix {0} is not elliptic")]
    NotElliptic(GammaMatrix),
}

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::NonFinite { x, y });
        }
        if y <= 0.0 {
            return Err(GeometryError::NotInUpperHalfPlane { x, y });
        }
        Ok(Point { x, y })
    }

    pub fn from_complex(z: Complex64) -> Result<Self, GeometryError> {
        Point::new(z.re, z.im)
    }

    /// The point `i`.
    pub fn i() -> Self {
        Point { x: 0.0, y: 1.0 }
    }

    /// The order-6 elliptic point `e^{iπ/3}`.
    pub fn rho() -> Self {
        Point {
            x: 0.5,
            y: 0.75f64.sqrt(),
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    /// `-conj(z)`, the reflection across the imaginary axis. Stays in the upper half-plane.
    #[inline]
    pub fn reflect(self) -> Self {
        Point {
            x: -self.x,
            y: self.y,
        }
    }

    /// Translate horizontally by `m`.
    #[inline]
    pub fn translate(self, m: f64) -> Self {
        Point {
            x: self.x + m,
            y: self.y,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y.is_sign_negative() {
            write!(f, "{}{}i", self.x, self.y)
        } else {
            write!(f, "{}+{}i", self.x, self.y)
        }
    }
}

/// Classification of `γ ∈ SL(2,Z)` by `|tr γ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceClass {
    /// `|a+d| ∈ {0, 1}`: a rotation about a point of the upper half-plane.
    Elliptic,
    /// `|a+d| = 2`: `±I` or a conjugate of a translation.
    ParabolicOrIdentity,
    /// `|a+d| ≥ 3`.
    Hyperbolic,
}

/// An element of `SL(2,Z)`. The determinant is checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GammaMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl GammaMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, GeometryError> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(GeometryError::DeterminantNotOne { a, b, c, d, det });
        }
        Ok(GammaMatrix { a, b, c, d })
    }

    pub const IDENTITY: GammaMatrix = GammaMatrix {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };

    /// `S = (0,-1;1,0)`, the inversion `z ↦ -1/z`.
    pub const S: GammaMatrix = GammaMatrix {
        a: 0,
        b: -1,
        c: 1,
        d: 0,
    };

    /// `T = (1,1;0,1)`, the translation `z ↦ z+1`.
    pub const T: GammaMatrix = GammaMatrix {
        a: 1,
        b: 1,
        c: 0,
        d: 1,
    };

    /// `T^m`.
    pub fn translation(m: i64) -> Self {
        GammaMatrix {
            a: 1,
            b: m,
            c: 0,
            d: 1,
        }
    }

    #[inline]
    pub fn a(&self) -> i64 {
        self.a
    }
    #[inline]
    pub fn b(&self) -> i64 {
        self.b
    }
    #[inline]
    pub fn c(&self) -> i64 {
        self.c
    }
    #[inline]
    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn classify(&self) -> TraceClass {
        match self.trace().unsigned_abs() {
            0 | 1 => TraceClass::Elliptic,
            2 => TraceClass::ParabolicOrIdentity,
            _ => TraceClass::Hyperbolic,
        }
    }

    pub fn is_elliptic(&self) -> bool {
        self.classify() == TraceClass::Elliptic
    }

    /// True for `I` and `-I`.
    pub fn is_central(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d && self.a.abs() == 1
    }

    pub fn inverse(&self) -> Self {
        GammaMatrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn neg(&self) -> Self {
        GammaMatrix {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    /// Representative of `±γ` with `c > 0`, or `c = 0` and `d > 0`.
    pub fn canonical(&self) -> Self {
        if self.c < 0 || (self.c == 0 && self.d < 0) {
            self.neg()
        } else {
            *self
        }
    }

    /// Key used for deterministic tie-breaking: `(c, d, a, b)` of the canonical form.
    pub fn order_key(&self) -> (i64, i64, i64, i64) {
        let g = self.canonical();
        (g.c, g.d, g.a, g.b)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = GammaMatrix::IDENTITY;
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }
}

impl Mul for GammaMatrix {
    type Output = GammaMatrix;

    fn mul(self, rhs: GammaMatrix) -> GammaMatrix {
        GammaMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }
}

impl fmt::Display for GammaMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}

/// A nonzero complex number stored as `(ln|w|, arg w)` so that large integer
/// powers neither overflow nor underflow before the final conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// Natural log of the magnitude; `-inf` encodes zero.
    pub logmag: f64,
    /// Argument in `(-π, π]`.
    pub phase: f64,
}

/// Reduce an angle into `(-π, π]`.
pub fn reduce_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl LogComplex {
    pub const ONE: LogComplex = LogComplex {
        logmag: 0.0,
        phase: 0.0,
    };

    pub fn new(logmag: f64, phase: f64) -> Self {
        LogComplex {
            logmag,
            phase: reduce_phase(phase),
        }
    }

    pub fn from_complex(w: Complex64) -> Self {
        if w.re == 0.0 && w.im == 0.0 {
            return LogComplex {
                logmag: f64::NEG_INFINITY,
                phase: 0.0,
            };
        }
        LogComplex {
            logmag: w.norm().ln(),
            phase: reduce_phase(w.arg()),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        if self.logmag == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let r = self.logmag.exp();
        let (s, c) = self.phase.sin_cos();
        Complex64::new(r * c, r * s)
    }

    #[inline]
    pub fn magnitude(self) -> f64 {
        self.logmag.exp()
    }

    pub fn mul(self, other: LogComplex) -> Self {
        LogComplex::new(self.logmag + other.logmag, self.phase + other.phase)
    }

    pub fn recip(self) -> Self {
        LogComplex::new(-self.logmag, -self.phase)
    }

    /// `w^k`: `(k·logmag, k·phase mod 2π)`.
    pub fn powi(self, k: i64) -> Self {
        if self.logmag == f64::NEG_INFINITY {
            return if k == 0 { LogComplex::ONE } else { self };
        }
        let kf = k as f64;
        LogComplex::new(kf * self.logmag, kf * self.phase)
    }
}

/// `γz = (az+b)/(cz+d)`. The imaginary part is formed as `y/|cz+d|²`.
pub fn moebius_apply(g: &GammaMatrix, z: Point) -> Point {
    let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
    let (x, y) = (z.x, z.y);
    let cx_d = c * x + d;
    let denom = cx_d * cx_d + c * c * y * y;
    let re = ((a * x + b) * cx_d + a * c * y * y) / denom;
    Point { x: re, y: y / denom }
}

/// `u(z,w) = |z-w|² / (4 Im z Im w)`.
pub fn pair_invariant(z: Point, w: Point) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    (dx * dx + dy * dy) / (4.0 * z.y * w.y)
}

/// Hyperbolic distance from the point-pair invariant. `cosh d = 2u+1` is
/// evaluated as `d = 2·asinh(√u)` to keep accuracy for nearby points.
pub fn hyp_distance(z: Point, w: Point) -> f64 {
    distance_from_invariant(pair_invariant(z, w))
}

#[inline]
pub fn distance_from_invariant(u: f64) -> f64 {
    2.0 * u.sqrt().asinh()
}

#[inline]
pub fn invariant_from_distance(d: f64) -> f64 {
    let s = (0.5 * d).sinh();
    s * s
}

/// The fixed point in the upper half-plane of an elliptic matrix,
/// `(a-d + i√(4-(a+d)²)) / (2c)` with the sign chosen so the imaginary part is positive.
pub fn fixed_point(g: &GammaMatrix) -> Result<Point, GeometryError> {
    if !g.is_elliptic() {
        return Err(GeometryError::NotElliptic(*g));
    }
    let tr = g.trace() as f64;
    let c = g.c as f64;
    let x = (g.a - g.d) as f64 / (2.0 * c);
    let y = (4.0 - tr * tr).sqrt() / (2.0 * c.abs());
    Point::new(x, y)
}

/// `j(γ, z) = cz + d`.
pub fn automorphy_factor(g: &GammaMatrix, z: Point) -> Complex64 {
    Complex64::new(g.c as f64 * z.x + g.d as f64, g.c as f64 * z.y)
}
