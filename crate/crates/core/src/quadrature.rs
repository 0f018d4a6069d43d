//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one dimension and a
//! nested driver for regions `{a ≤ x ≤ b, lo(x) ≤ y ≤ hi(x)}`.
//!
//! Integrands return `(value, node_error)`. The node error is an externally
//! certified uncertainty of the integrand value (for instance a lattice-sum
//! truncation bound); it is propagated as `Σ |weight|·node_error` alongside the
//! Gauss–Kronrod discretisation estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Evaluate the 15 nodes of a panel in parallel.
    pub parallel: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    /// Gauss–Kronrod estimate plus propagated node errors.
    pub error: f64,
    /// The propagated node-error part of `error`.
    pub node_error: f64,
    pub intervals: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    gk_err: f64,
    node_err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gk_err
            .total_cmp(&other.gk_err)
            .then(other.a.total_cmp(&self.a))
    }
}

fn panel<F>(f: &F, a: f64, b: f64, parallel: bool) -> Panel
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abscissae: Vec<f64> = (0..15)
        .map(|j| {
            if j < 7 {
                center - half * XGK[j]
            } else if j == 7 {
                center
            } else {
                center + half * XGK[14 - j]
            }
        })
        .collect();
    let vals: Vec<(f64, f64)> = if parallel {
        abscissae.par_iter().map(|&x| f(x)).collect()
    } else {
        abscissae.iter().map(|&x| f(x)).collect()
    };
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut node_err = 0.0;
    for (j, &(v, e)) in vals.iter().enumerate() {
        let idx = if j <= 7 { j } else { 14 - j };
        kronrod += WGK[idx] * v;
        node_err += WGK[idx] * e.abs();
        if idx % 2 == 1 {
            gauss += WG[idx / 2] * v;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        gk_err: ((kronrod - gauss) * half).abs(),
        node_err: node_err * half.abs(),
    }
}

/// Integrate over `[a, b]`, starting from the panels delimited by `breakpoints`
/// (sorted, strictly inside `(a, b)`; points outside are ignored).
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            node_error: 0.0,
            intervals: 0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a.min(b) && t < a.max(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        heap.push(panel(&f, w[0], w[1], opts.parallel));
        evaluations += 15;
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value = crate::summation::sum_f64(panels.iter().map(|p| p.value));
        let gk = panels.iter().map(|p| p.gk_err).sum::<f64>();
        let node = panels.iter().map(|p| p.node_err).sum::<f64>();
        (value, gk, node)
    };

    let mut converged = false;
    loop {
        let (value, gk, _) = totals(&heap);
        if gk <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            converged = true;
            break;
        }
        if heap.len() >= opts.max_intervals {
            break;
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        heap.push(panel(&f, worst.a, mid, opts.parallel));
        heap.push(panel(&f, mid, worst.b, opts.parallel));
        evaluations += 30;
    }
    let (value, gk, node) = totals(&heap);
    QuadResult {
        value: sign * value,
        error: gk + node,
        node_error: node,
        intervals: heap.len(),
        evaluations,
        converged,
    }
}

/// Nested integration over `{a ≤ x ≤ b, lo(x) ≤ y ≤ hi(x)}`. The inner integral's
/// reported error becomes the outer integrand's node error, so the final error
/// accounts for both levels. Only the outer panels run in parallel.
pub fn integrate_2d<F, L, H>(
    f: F,
    a: f64,
    b: f64,
    lo: L,
    hi: H,
    x_breaks: &[f64],
    y_breaks: &[f64],
    outer: &QuadOptions,
    inner: &QuadOptions,
) -> QuadResult
where
    F: Fn(f64, f64) -> (f64, f64) + Sync,
    L: Fn(f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let inner = QuadOptions {
        parallel: false,
        ..*inner
    };
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let g = |x: f64| {
        let (y0, y1) = (lo(x), hi(x));
        if y1 <= y0 {
            return (0.0, 0.0);
        }
        let r = integrate(|y| f(x, y), y0, y1, y_breaks, &inner);
        evals.fetch_add(r.evaluations, std::sync::atomic::Ordering::Relaxed);
        (r.value, r.error)
    };
    let mut r = integrate(g, a, b, x_breaks, outer);
    r.evaluations = evals.into_inner();
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| (x.powi(5) - 2.0 * x * x, 0.0), 0.0, 2.0, &[], &QuadOptions::default());
        let exact = 64.0 / 6.0 - 16.0 / 3.0;
        assert!((r.value - exact).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let opts = QuadOptions {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let r = integrate(|x| ((50.0 * x).cos(), 0.0), 0.0, 1.0, &[], &opts);
        assert!((r.value - 50f64.sin() / 50.0).abs() < 1e-12);
        // narrow Gaussian located by a breakpoint
        let s = 1e-3;
        let r = integrate(
            |x| ((-(x - 0.3) * (x - 0.3) / (2.0 * s * s)).exp(), 0.0),
            0.0,
            1.0,
            &[0.3],
            &opts,
        );
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value - exact).abs() < 1e-12 * exact.max(1.0));
    }

    #[test]
    fn reversed_limits_and_node_error() {
        let r = integrate(|_| (1.0, 0.5), 1.0, 0.0, &[], &QuadOptions::default());
        assert!((r.value + 1.0).abs() < 1e-15);
        assert!((r.node_error - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quarter_disk_area() {
        let r = integrate_2d(
            |_, _| (1.0, 0.0),
            0.0,
            1.0,
            |_| 0.0,
            |x| (1.0 - x * x).max(0.0).sqrt(),
            &[],
            &[],
            &QuadOptions { rel_tol: 1e-11, ..Default::default() },
            &QuadOptions { rel_tol: 1e-12, ..Default::default() },
        );
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }
}
