//! Scalar numerics: intervals, the normal distribution, bisection and quadrature.

use crate::error::{invalid, Error, Result};
use alloc::vec::Vec;

/// Closed interval `[lo, hi]` on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower end.
    pub lo: f64,
    /// Upper end.
    pub hi: f64,
}

impl Interval {
    /// Builds `[lo, hi]`; requires `lo ≤ hi` and no NaN.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid("interval", alloc::format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    /// The whole real line.
    pub const fn everything() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    /// Length `hi − lo`.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether `x ∈ [lo, hi]`.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Nearest point of the interval.
    pub fn clamp(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo
        } else if x > self.hi {
            self.hi
        } else {
            x
        }
    }

    /// The interval widened by `r ≥ 0` on both sides.
    pub fn widen(&self, r: f64) -> Self {
        Self { lo: self.lo - r, hi: self.hi + r }
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Midpoint.
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal CDF `Φ(z)`, accurate in the lower tail.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ(z)`, accurate in the upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// `P[a ≤ Z ≤ b]` for a standard normal, computed on the tail that keeps precision.
pub fn norm_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

/// `ln(e^a + e^b)` without overflow; `-∞` inputs are allowed.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Settings for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    /// Stop once the bracket is narrower than this.
    pub xtol: f64,
    /// Hard cap on halvings.
    pub max_iter: usize,
}

impl Default for Bisection {
    fn default() -> Self {
        Self { xtol: 1e-10, max_iter: 200 }
    }
}

impl Bisection {
    /// Bisection that runs until the bracket stops shrinking in floating point.
    pub const fn exhaustive() -> Self {
        Self { xtol: 0.0, max_iter: 200 }
    }
}

/// Root of `f` on `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs or one of them must be zero.
/// An endpoint that is an exact root is returned as is.
pub fn bisect<F: FnMut(f64) -> f64>(
    what: &'static str,
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    opts: Bisection,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::NotBracketed { what, lo, hi });
    }
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= opts.xtol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of nodes used by the library's fixed-grid quadratures.
pub const QUADRATURE_NODES: usize = 2001;

/// `n` equally spaced points from `a` to `b` inclusive (`n ≥ 2`).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
}

/// Composite trapezoid rule over tabulated values.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        out.push(acc);
    }
    out
}

/// Composite Simpson rule on `[a, b]` with [`QUADRATURE_NODES`] nodes.
pub fn simpson<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    simpson_n(f, a, b, QUADRATURE_NODES - 1)
}

/// Composite Simpson rule with `intervals` subintervals (rounded up to even).
pub fn simpson_n<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, intervals: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = (intervals.max(2) + 1) & !1;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Simpson integration split at the given breakpoints, for piecewise smooth integrands.
pub fn simpson_piecewise<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breakpoints: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut left = a;
    for &c in cuts.iter().chain(core::iter::once(&b)) {
        total += simpson(&mut f, left, c);
        left = c;
    }
    total
}

const GL5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss–Legendre on `panels` equal panels of `[a, b]`.
///
/// Nodes are interior, so jumps at `a` or `b` never enter the sum.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = a + h * (i as f64 + 0.5);
        for (t, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            total += w * f(mid + 0.5 * h * t);
        }
    }
    0.5 * h * total
}

/// Composite Gauss–Legendre split at breakpoints, for integrands with jumps there.
pub fn gauss_legendre_piecewise<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breakpoints: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut left = a;
    for &c in cuts.iter().chain(core::iter::once(&b)) {
        total += gauss_legendre(&mut f, left, c, QUADRATURE_NODES / 5);
        left = c;
    }
    total
}

/// SplitMix64 finalizer, used to derive well-separated stream identifiers.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
