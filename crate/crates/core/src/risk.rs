//! Risk functionals and the analytic quantities that govern retraining dynamics.

use crate::aggregate::{gaming_set, Population};
use crate::base::{BaseDistribution, Label};
use crate::cost::CostFunction;
use crate::error::{invalid, Error, Result};
use crate::num::{self, bisect, norm_mass, Bisection};
use crate::response::ResponseModel;
use crate::rng::RandomSource;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// How a risk value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMethod {
    /// Sample mean of the 0-1 loss.
    MonteCarlo,
    /// Exact formula evaluated by quadrature.
    ClosedForm,
}

/// A misclassification rate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    /// Risk in `[0, 1]`.
    pub value: f64,
    /// `√(v(1−v)/n)` for Monte Carlo, 0 for closed form.
    pub std_error: f64,
    /// Sample size (0 for closed form).
    pub n: usize,
    /// Provenance of the value.
    pub method: RiskMethod,
}

impl RiskEstimate {
    /// Estimate from `errors` misclassified out of `n`.
    pub fn from_counts(errors: usize, n: usize) -> Self {
        let v = errors as f64 / n as f64;
        Self { value: v, std_error: libm::sqrt(v * (1.0 - v) / n as f64), n, method: RiskMethod::MonteCarlo }
    }

    /// Exact value.
    pub fn closed_form(value: f64) -> Self {
        Self { value, std_error: 0.0, n: 0, method: RiskMethod::ClosedForm }
    }
}

/// Number of pairs misclassified by `f_θ`.
pub fn misclassified(pairs: &[(f64, Label)], theta: f64) -> usize {
    pairs.iter().filter(|&&(x, y)| (x >= theta) != (y == Label::Positive)).count()
}

/// Misclassification counts of `pairs` at every point of an ascending `grid`, in `O(n log G + G)`.
pub fn grid_error_counts(pairs: &[(f64, Label)], grid: &[f64]) -> Vec<usize> {
    let g = grid.len();
    // bucket[k] counts samples with exactly k grid points ≤ x.
    let mut pos = vec![0usize; g + 1];
    let mut neg = vec![0usize; g + 1];
    let locate = GridLocator::new(grid);
    for &(x, y) in pairs {
        let k = locate.count_at_or_below(x);
        match y {
            Label::Positive => pos[k] += 1,
            Label::Negative => neg[k] += 1,
        }
    }
    // At grid[j]: positives with x < grid[j] have k ≤ j; negatives with x ≥ grid[j] have k > j.
    let mut neg_above: usize = neg.iter().sum();
    let mut pos_below = 0usize;
    let mut out = Vec::with_capacity(g);
    for j in 0..g {
        pos_below += pos[j];
        neg_above -= neg[j];
        out.push(pos_below + neg_above);
    }
    out
}

/// Counts grid points `≤ x` in O(1) for near-uniform grids, with exact comparisons.
struct GridLocator<'a> {
    grid: &'a [f64],
    lo: f64,
    scale: f64,
}

impl<'a> GridLocator<'a> {
    fn new(grid: &'a [f64]) -> Self {
        let (lo, hi) = match grid {
            [] => (0.0, 0.0),
            [only] => (*only, *only),
            [first, .., last] => (*first, *last),
        };
        let scale = if hi > lo { (grid.len() - 1) as f64 / (hi - lo) } else { 0.0 };
        Self { grid, lo, scale }
    }

    fn count_at_or_below(&self, x: f64) -> usize {
        let g = self.grid;
        if g.is_empty() || x.is_nan() {
            return 0;
        }
        let guess = (x - self.lo) * self.scale;
        let mut k = if guess <= 0.0 {
            0
        } else if guess >= g.len() as f64 {
            g.len()
        } else {
            guess as usize + 1
        };
        // Invariant to restore: g[k-1] ≤ x < g[k].
        while k > 0 && g[k - 1] > x {
            k -= 1;
        }
        while k < g.len() && g[k] <= x {
            k += 1;
        }
        k
    }
}

/// `DPR(θ, θ_eval)`: risk of `f_{θ_eval}` on `D(θ)`, by Monte Carlo.
pub fn decoupled_pr(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    theta_eval: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<RiskEstimate> {
    Ok(decoupled_pr_sweep(model, base, theta, &[theta_eval], n, rng)?[0])
}

/// `DPR(θ, ·)` at several evaluation thresholds, all on one shared sample of `D(θ)`.
pub fn decoupled_pr_sweep(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    evals: &[f64],
    n: usize,
    rng: &RandomSource,
) -> Result<Vec<RiskEstimate>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let pairs = Population::draw(model, base, n, rng).respond(theta);
    Ok(evals.iter().map(|&t| RiskEstimate::from_counts(misclassified(&pairs, t), n)).collect())
}

/// `PR(θ) = DPR(θ, θ)`, by Monte Carlo.
pub fn performative_risk(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<RiskEstimate> {
    decoupled_pr(model, base, theta, theta, n, rng)
}

/// Exact `PR(θ)` for noisy agents with cost `|x − x′|` and `γ = 1`.
///
/// Agents at or above `θ` are accepted whatever they perceive, agents below
/// `θ − 1` never are, and an agent at `θ − 1 + z` with `z ∈ (0, 1)` is
/// accepted exactly when `η ∈ [0, z]`.
pub fn nr_pr_closed_form(base: &BaseDistribution, cost: &CostFunction, sigma: f64, theta: f64) -> Result<RiskEstimate> {
    if !cost.is_unit_linear() {
        return Err(Error::Unsupported(String::from("closed-form noisy risk needs cost |x − x′| with γ = 1")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("sigma", "must be positive and finite"));
    }
    let neg = Some(Label::Negative);
    let pos = Some(Label::Positive);
    let left = theta - 1.0;
    let accepted_negatives = base.mass(theta, f64::INFINITY, neg);
    let rejected_positives = base.mass(f64::NEG_INFINITY, left, pos);
    let band_negatives = base.mass(left, theta, neg);
    let mut cuts: Vec<f64> = base.breakpoints().iter().map(|b| b - left).collect();
    cuts.extend([3.0 * sigma, 8.0 * sigma]);
    let band = num::simpson_piecewise(
        |z| {
            let t = left + z;
            let outside = 1.0 - norm_mass(0.0, z / sigma);
            (base.density(t, Label::Positive) - base.density(t, Label::Negative)) * outside
        },
        0.0,
        1.0,
        &cuts,
    );
    let v = accepted_negatives + rejected_positives + band_negatives + band;
    Ok(RiskEstimate::closed_form(v.clamp(0.0, 1.0)))
}

/// Exact `PR(θ)` of `f_θ` on the untouched base population.
pub fn base_risk(base: &BaseDistribution, theta: f64) -> f64 {
    base.mass(theta, f64::INFINITY, Some(Label::Negative)) + base.mass(f64::NEG_INFINITY, theta, Some(Label::Positive))
}

/// Exact `PR(θ)` for any model with a closed form: non-strategic, perfect best
/// response (any monotone cost), noisy response (unit linear cost), and
/// mixtures of these, which are linear in the non-strategic fraction.
pub fn closed_form_pr(model: &ResponseModel, base: &BaseDistribution, theta: f64) -> Result<RiskEstimate> {
    let strategic = match model.behavior() {
        crate::response::Behavior::NonStrategic => base_risk(base, theta),
        crate::response::Behavior::Standard => match gaming_set(base, model.cost(), theta)? {
            // Everyone from the left end of the gaming set upward is accepted.
            Some(q) => base_risk(base, q.lo),
            None => base_risk(base, theta),
        },
        crate::response::Behavior::Noisy { sigma } => nr_pr_closed_form(base, model.cost(), sigma, theta)?.value,
    };
    let p = model.nonstrategic_fraction();
    Ok(RiskEstimate::closed_form(p * base_risk(base, theta) + (1.0 - p) * strategic))
}

/// `Γ(θ)`: mean posterior over the gaming set `Q(θ)`.
pub fn gamma_ratio(base: &BaseDistribution, cost: &CostFunction, theta: f64) -> Result<f64> {
    let q =
        gaming_set(base, cost, theta)?.ok_or_else(|| Error::Domain(format!("gaming set at θ = {theta} is empty")))?;
    let total = base.mass(q.lo, q.hi, None);
    if total <= 0.0 {
        return Err(Error::Domain(format!("gaming set at θ = {theta} has no mass")));
    }
    Ok(base.mass(q.lo, q.hi, Some(Label::Positive)) / total)
}

/// `E[1{x ∈ [a, b]}(2μ(x) − 1)] = P[x ∈ [a, b], y = 1] − P[x ∈ [a, b], y = 0]`.
fn signed_mass(base: &BaseDistribution, a: f64, b: f64) -> f64 {
    base.mass(a, b, Some(Label::Positive)) - base.mass(a, b, Some(Label::Negative))
}

fn z_with(base: &BaseDistribution, cost: &CostFunction, p: f64, theta_sl: f64, theta: f64) -> Result<f64> {
    let gaming = gaming_set(base, cost, theta)?.map_or(0.0, |q| signed_mass(base, q.lo, q.hi));
    Ok(p * signed_mass(base, theta_sl, theta) + (1.0 - p) * gaming)
}

/// `Z(p, θ)`: net gain in accuracy from raising the threshold from just below
/// the boundary atom to just above it, given a fraction `p` of non-strategic agents.
pub fn z_function(base: &BaseDistribution, cost: &CostFunction, p: f64, theta: f64) -> Result<f64> {
    check_probability(p)?;
    let sl = solve_theta_sl(base)?;
    z_with(base, cost, p, sl, theta)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid("p", format!("{p} is not a probability")))
    }
}

/// `θ_SL`: the point where the posterior crosses one half.
pub fn solve_theta_sl(base: &BaseDistribution) -> Result<f64> {
    let f = |x: f64| base.posterior(x).map_or(f64::NAN, |m| m - 0.5);
    let s = base.support();
    if let Ok(r) = bisect("posterior − 1/2", f, s.lo, s.hi, Bisection::default()) {
        return Ok(r);
    }
    // The ends may carry no density; look for the first sign change inside.
    let pts = num::linspace(s.lo, s.hi, 1001);
    for w in pts.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        if a.is_finite() && b.is_finite() && (a == 0.0 || (a < 0.0) != (b < 0.0)) {
            return bisect("posterior − 1/2", f, w[0], w[1], Bisection::default());
        }
    }
    Err(Error::NotBracketed { what: "posterior − 1/2", lo: s.lo, hi: s.hi })
}

/// `θ_PS^SM`: the stable point under perfect best response, where `Γ(θ) = 1/2`.
pub fn solve_theta_ps_sm(base: &BaseDistribution, cost: &CostFunction) -> Result<f64> {
    let sl = solve_theta_sl(base)?;
    let f = |t: f64| gamma_ratio(base, cost, t).map_or(f64::NAN, |g| g - 0.5);
    bisect("Γ − 1/2", f, sl + 1e-6, base.support().hi, Bisection::default())
}

/// `τ(p)`: upper end of the retraining oscillation, the root of `Z(p, ·)` on `[θ_SL, θ_PS^SM]`.
pub fn solve_tau(base: &BaseDistribution, cost: &CostFunction, p: f64) -> Result<f64> {
    check_probability(p)?;
    let sl = solve_theta_sl(base)?;
    let ps = solve_theta_ps_sm(base, cost)?;
    let f = |t: f64| z_with(base, cost, p, sl, t).unwrap_or(f64::NAN);
    // At p = 0 the root is θ_PS^SM itself; rounding may leave Z(0, θ_PS^SM) a hair below zero.
    if f(ps) <= 0.0 {
        return Ok(ps);
    }
    bisect("Z(p, ·)", f, sl, ps, Bisection::default())
}

/// Social burden `B(θ) = E[c(x, θ)·1{x < θ} | y = 1]`.
pub fn social_burden(base: &BaseDistribution, cost: &CostFunction, theta: f64) -> Result<f64> {
    let pos = base.label_mass(Label::Positive);
    if pos <= 0.0 {
        return Err(Error::Domain(String::from("no positive agents")));
    }
    let lo = base.support().lo;
    if theta <= lo {
        return Ok(0.0);
    }
    let integral = num::simpson_piecewise(
        |x| cost.eval(x, theta) * base.density(x, Label::Positive),
        lo,
        theta,
        &base.breakpoints(),
    );
    Ok(integral / pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_match_direct_counting() {
        let pairs = [(0.1, Label::Positive), (0.5, Label::Negative), (0.5, Label::Positive), (0.9, Label::Negative)];
        let grid = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0];
        let fast = grid_error_counts(&pairs, &grid);
        let slow: Vec<usize> = grid.iter().map(|&t| misclassified(&pairs, t)).collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn locator_agrees_with_binary_search() {
        let grid: Vec<f64> = (0..50).map(|i| -1.0 + 0.04 * i as f64 + 0.001 * ((i * 7) % 5) as f64).collect();
        let loc = GridLocator::new(&grid);
        for i in 0..2000 {
            let x = -1.3 + 0.0013 * i as f64;
            assert_eq!(loc.count_at_or_below(x), grid.partition_point(|&t| t <= x), "x = {x}");
        }
        for &x in &grid {
            assert_eq!(loc.count_at_or_below(x), grid.partition_point(|&t| t <= x));
        }
    }

    #[test]
    fn unsupported_cost_is_rejected() {
        let b = BaseDistribution::symmetric_gaussian();
        let c = CostFunction::linear(2.0, 1.0).unwrap();
        assert!(matches!(nr_pr_closed_form(&b, &c, 0.3, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn empty_gaming_set_is_domain_error() {
        let b = BaseDistribution::symmetric_gaussian();
        assert!(matches!(gamma_ratio(&b, &CostFunction::unit_linear(), -5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn risk_estimate_error() {
        let r = RiskEstimate::from_counts(25, 100);
        assert!((r.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
