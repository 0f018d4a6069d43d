//! Enumeration in `Γ = SL(2,Z)`: coset representatives of `Γ_∞\Γ`, elliptic
//! points of a strip `P(Y)` with their stabilizers, and a certified search for
//! the minimal displacement `min_{γ ≠ ±I} d(z, γz)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperbolic::{
    distance_from_invariant, hyp_distance, moebius_apply, pair_invariant, GammaMatrix, Point,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModularError {
    #[error("stabilizer search with bound {bound} is not closed under multiplication")]
    NotClosed { bound: i64 },
    #[error("invalid strip parameters Y={y_param}, delta={delta}")]
    InvalidRegion { y_param: f64, delta: f64 },
}

/// `P(Y) = { |Re z| ≤ 1/2, Im z > 1/Y }` together with the radius `δ` of the
/// excluded neighbourhoods around elliptic points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripRegion {
    pub y_param: f64,
    pub delta: f64,
}

impl StripRegion {
    pub fn new(y_param: f64, delta: f64) -> Result<Self, ModularError> {
        if !(y_param > 0.0 && y_param.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(ModularError::InvalidRegion { y_param, delta });
        }
        Ok(StripRegion { y_param, delta })
    }

    /// Membership in the closed strip `P(Y)`.
    pub fn contains(&self, z: Point) -> bool {
        z.x().abs() <= 0.5 && z.y() > 1.0 / self.y_param
    }
}

/// An elliptic point with the order of its stabilizer in `SL(2,Z)` (counting `-I`)
/// and a generator of that cyclic stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub location: Point,
    pub stabilizer_order: u32,
    pub generator: GammaMatrix,
}

impl EllipticPoint {
    /// All elements of the stabilizer, `generator^j` for `j = 0..order`.
    pub fn stabilizer_elements(&self) -> Vec<GammaMatrix> {
        (0..self.stabilizer_order)
            .map(|j| self.generator.pow(j))
            .collect()
    }
}

/// A representative of the coset `Γ_∞ γ`, determined by its coprime bottom row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetRep {
    pub matrix: GammaMatrix,
}

impl CosetRep {
    /// Build the representative with bottom row `(c, d)`. Returns `None` unless
    /// `gcd(c,d) = 1` and `(c,d)` is canonical (`c > 0`, or `(c,d) = (0,1)`).
    pub fn new(c: i64, d: i64) -> Option<Self> {
        if c < 0 || (c == 0 && d != 1) {
            return None;
        }
        if c == 0 {
            return Some(CosetRep {
                matrix: GammaMatrix::IDENTITY,
            });
        }
        let (g, x, y) = ext_gcd(c, d);
        if g != 1 {
            return None;
        }
        // x c + y d = 1, so a = y, b = -x gives a d - b c = 1.
        let matrix = GammaMatrix::new(y, -x, c, d).ok()?;
        Some(CosetRep { matrix })
    }

    pub fn c(&self) -> i64 {
        self.matrix.c()
    }

    pub fn d(&self) -> i64 {
        self.matrix.d()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == GammaMatrix::IDENTITY
    }
}

/// Extended Euclid: `(g, x, y)` with `x a + y b = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    ext_gcd(a, b).0
}

/// One representative per coprime pair `(c, d)` with `0 ≤ c ≤ c_max`, where for
/// `c ≥ 1` the entry `d` runs over the closed window `0..=c` (one period of the
/// right `T`-action). `c = 0` contributes the identity coset only.
pub fn coset_reps(c_max: u64) -> Vec<CosetRep> {
    let mut out = vec![CosetRep {
        matrix: GammaMatrix::IDENTITY,
    }];
    for c in 1..=c_max as i64 {
        for d in 0..=c {
            if let Some(rep) = CosetRep::new(c, d) {
                out.push(rep);
            }
        }
    }
    out
}

/// All coset representatives with `|cz + d| ≤ radius` (identity coset always included),
/// ordered by `(c, d)`.
pub fn cosets_in_ball(z: Point, radius: f64) -> Vec<CosetRep> {
    let mut out = vec![CosetRep {
        matrix: GammaMatrix::IDENTITY,
    }];
    let (x, y) = (z.x(), z.y());
    let r2 = radius * radius;
    let c_max = (radius / y).floor() as i64;
    for c in 1..=c_max {
        let cf = c as f64;
        let rem = r2 - cf * cf * y * y;
        if rem < 0.0 {
            continue;
        }
        let half = rem.sqrt();
        let lo = (-cf * x - half).ceil() as i64;
        let hi = (-cf * x + half).floor() as i64;
        for d in lo..=hi {
            if let Some(rep) = CosetRep::new(c, d) {
                out.push(rep);
            }
        }
    }
    out
}

fn base_elliptic() -> [(Point, u32, GammaMatrix); 2] {
    [
        (Point::i(), 4, GammaMatrix::S),
        (
            Point::rho(),
            6,
            GammaMatrix::new(1, -1, 1, 0).expect("det 1"),
        ),
    ]
}

/// Γ-images of `i` and `e^{iπ/3}` with `Im > y_floor` and `|Re| ≤ x_half`.
fn elliptic_points_in_box(y_floor: f64, x_half: f64) -> Vec<EllipticPoint> {
    const SLACK: f64 = 1e-12;
    let mut out: Vec<EllipticPoint> = Vec::new();
    for (z0, order, gen0) in base_elliptic() {
        // Im(γ z0) = Im z0 / |c z0 + d|² > y_floor  ⇔  |c z0 + d| < sqrt(Im z0 / y_floor).
        let radius = (z0.y() / y_floor).sqrt();
        for rep in cosets_in_ball(z0, radius) {
            let g0 = rep.matrix;
            let p0 = moebius_apply(&g0, z0);
            if p0.y() <= y_floor {
                continue;
            }
            let m_lo = (-x_half - p0.x() - SLACK).ceil() as i64;
            let m_hi = (x_half - p0.x() + SLACK).floor() as i64;
            for m in m_lo..=m_hi {
                let g = GammaMatrix::translation(m) * g0;
                let loc = p0.translate(m as f64);
                let duplicate = out.iter().any(|e| {
                    (e.location.x() - loc.x()).abs() < 1e-9 && (e.location.y() - loc.y()).abs() < 1e-9
                });
                if duplicate {
                    continue;
                }
                out.push(EllipticPoint {
                    location: loc,
                    stabilizer_order: order,
                    generator: g * gen0 * g.inverse(),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.location
            .y()
            .total_cmp(&a.location.y())
            .then(a.location.x().total_cmp(&b.location.x()))
    });
    out
}

/// Elliptic points in the closed strip `P(Y)`. Points on both edges `Re z = ±1/2`
/// are reported.
pub fn elliptic_points_in_strip(y_param: f64) -> Vec<EllipticPoint> {
    elliptic_points_in_box(1.0 / y_param, 0.5)
}

/// Elliptic points within hyperbolic distance `margin` of `P(Y)`: the strip is
/// widened by `sinh(margin)` on each side and lowered by the factor `e^{-margin}`.
/// Elliptic heights never exceed 1, so this covers every δ-ball meeting `P(Y)`.
pub fn elliptic_points_near_strip(y_param: f64, margin: f64) -> Vec<EllipticPoint> {
    elliptic_points_in_box((-margin).exp() / y_param, 0.5 + margin.sinh())
}

/// CSV dump with columns `x,y,stab_order,gen_a,gen_b,gen_c,gen_d`.
pub fn elliptic_points_csv(points: &[EllipticPoint]) -> String {
    let mut s = String::from("x,y,stab_order,gen_a,gen_b,gen_c,gen_d\n");
    for e in points {
        let [a, b, c, d] = e.generator.entries();
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{},{},{},{},{}",
            e.location.x(),
            e.location.y(),
            e.stabilizer_order,
            a,
            b,
            c,
            d
        );
    }
    s
}

fn fixes(g: &GammaMatrix, z: Point) -> bool {
    let gz = moebius_apply(g, z);
    let scale = 1.0 + z.x().abs() + z.y();
    (gz.x() - z.x()).abs() < 1e-9 * scale && (gz.y() - z.y()).abs() < 1e-9 * scale
}

/// Brute-force `{g : g z0 = z0}` over matrices with all entries bounded by
/// `search_bound` in absolute value. Fails if the result is not closed under
/// multiplication, which signals a bound too small to contain the whole group.
pub fn stabilizer(z0: Point, search_bound: i64) -> Result<Vec<GammaMatrix>, ModularError> {
    let n = search_bound.max(1);
    let mut found = BTreeSet::new();
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                for d in -n..=n {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    let g = GammaMatrix::new(a, b, c, d).expect("det checked");
                    if fixes(&g, z0) {
                        found.insert(g);
                    }
                }
            }
        }
    }
    for g in &found {
        for h in &found {
            if !found.contains(&(*g * *h)) {
                return Err(ModularError::NotClosed { bound: n });
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Result of [`min_displacement`], with the invariant alongside the distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub matrix: GammaMatrix,
    pub pair_invariant: f64,
    pub distance: f64,
}

/// Minimal `d(z, γz)` over `γ ≠ ±I`, with lexicographic `(c,d,a,b)` tie-breaking.
pub fn min_displacement(z: Point, search_bound: u64) -> (GammaMatrix, f64) {
    let r = min_displacement_excluding(z, search_bound, &[]);
    (r.matrix, r.distance)
}

/// As [`min_displacement`] but also excluding the listed matrices (and their negatives).
///
/// Cosets `Γ_∞ γ₀` are enumerated by `n = |cz+d|²`. Every element of a coset has
/// `Im γz = y/n`, so `u(z, γz) ≥ (n-1)²/(4n)`; the enumeration stops at the first
/// `n` where this exceeds the invariant of the translation `T`, which is always a
/// candidate. `search_bound` is a floor on the enumerated `n`.
pub fn min_displacement_excluding(
    z: Point,
    search_bound: u64,
    exclude: &[GammaMatrix],
) -> Displacement {
    let (x, y) = (z.x(), z.y());
    let excluded: BTreeSet<GammaMatrix> = exclude.iter().map(|g| g.canonical()).collect();

    let mut best = Displacement {
        matrix: GammaMatrix::translation(-1),
        pair_invariant: 1.0 / (4.0 * y * y),
        distance: 0.0,
    };
    // (n-1)²/(4n) ≤ U  ⇔  n ≤ 1 + 2U + 2√(U + U²).
    let u0 = best.pair_invariant;
    let n_max = (1.0 + 2.0 * u0 + 2.0 * (u0 + u0 * u0).sqrt()).max(search_bound as f64);

    for rep in cosets_in_ball(z, n_max.sqrt() * (1.0 + 1e-12)) {
        let g0 = rep.matrix;
        let p0 = moebius_apply(&g0, z);
        let (x0, y1) = (p0.x(), p0.y());
        let dy2 = (y1 - y) * (y1 - y);
        let scale = 4.0 * y * y1;
        let room = scale * best.pair_invariant * (1.0 + 1e-9) - dy2;
        if room < 0.0 {
            continue;
        }
        let half = room.sqrt();
        let m_lo = (x - x0 - half).floor() as i64;
        let m_hi = (x - x0 + half).ceil() as i64;
        for m in m_lo..=m_hi {
            let g = (GammaMatrix::translation(m) * g0).canonical();
            if g.is_central() || excluded.contains(&g) {
                continue;
            }
            let s = x0 + m as f64 - x;
            let u = (s * s + dy2) / scale;
            let tie = (u - best.pair_invariant).abs() <= 1e-12 * best.pair_invariant.max(1e-300);
            if (tie && g.order_key() < best.matrix.order_key()) || (!tie && u < best.pair_invariant) {
                best.matrix = g;
                best.pair_invariant = u;
            }
        }
    }
    best.distance = distance_from_invariant(best.pair_invariant);
    best
}

/// `z ∈ P(Y)` and farther than `δ` from every listed elliptic point.
pub fn in_bulk(z: Point, region: &StripRegion, elliptic: &[EllipticPoint]) -> bool {
    region.contains(z)
        && elliptic
            .iter()
            .all(|e| hyp_distance(z, e.location) > region.delta)
}

/// The listed elliptic point nearest to `z` within distance `δ`, if any.
pub fn nearby_elliptic<'a>(
    z: Point,
    delta: f64,
    elliptic: &'a [EllipticPoint],
) -> Option<&'a EllipticPoint> {
    elliptic
        .iter()
        .map(|e| (hyp_distance(z, e.location), e))
        .filter(|(d, _)| *d <= delta)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e)
}

/// `u(z, γz)` for a single element.
pub fn displacement_invariant(g: &GammaMatrix, z: Point) -> f64 {
    pair_invariant(z, moebius_apply(g, z))
}
