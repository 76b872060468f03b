//! Offline estimation: the pruned threshold range `Θ₀`, its salient part,
//! oracle-based search for the performative optimum, and σ-inference.

use crate::base::{BaseDistribution, Label};
use crate::cost::{AnchorRole, CostFunction, StepDirection};
use crate::error::{invalid, Error, Result};
use crate::num::Interval;
use crate::response::ResponseModel;
use crate::risk::solve_theta_sl;
use crate::rng::{Engine, RandomSource};
use alloc::format;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};
use rand_distr::{Distribution, Normal};

/// `Θ₀`, its salient part `S(Θ₀, c) = [l′, u′]` and `ζ = P[x ∈ S]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalientRegion {
    /// Threshold range known to contain an optimum.
    pub theta0: Interval,
    /// Features that can cross some threshold in `theta0` within budget.
    pub salient: Interval,
    /// Base mass of `salient`.
    pub zeta: f64,
}

impl SalientRegion {
    /// Base mass of `salient` with label `y`.
    pub fn zeta_label(&self, base: &BaseDistribution, y: Label) -> f64 {
        base.mass(self.salient.lo, self.salient.hi, Some(y))
    }
}

/// Chains `stages` γ-cost steps from `start`; clamps to `range` once a step leaves it.
fn chain(cost: &CostFunction, start: f64, stages: &[(StepDirection, AnchorRole)], range: Interval) -> Result<f64> {
    let mut at = start;
    for &(dir, role) in stages {
        let next = cost.step(at, dir, role)?;
        if !range.contains(next) {
            return Ok(range.clamp(next));
        }
        at = next;
    }
    Ok(at)
}

/// `Θ₀ = [l, u]`: three chained γ-cost steps either side of `θ_SL`, clipped to `theta_range`.
///
/// Down: `c(θ_SL, s′) = γ`, `c(s″, s′) = γ`, `c(s″, l) = γ`.
/// Up: `c(θ_SL, t′) = γ`, `c(t″, t′) = γ`, `c(t″, u) = γ`.
pub fn construct_theta0(base: &BaseDistribution, cost: &CostFunction, theta_range: Interval) -> Result<Interval> {
    use AnchorRole::{Origin, Target};
    use StepDirection::{Down, Up};
    let sl = solve_theta_sl(base)?;
    if !theta_range.contains(sl) {
        return Err(Error::Domain(format!("theta_SL = {sl} lies outside {theta_range:?}")));
    }
    let l = chain(cost, sl, &[(Down, Origin), (Down, Target), (Down, Origin)], theta_range)?;
    let u = chain(cost, sl, &[(Up, Origin), (Up, Target), (Up, Origin)], theta_range)?;
    Interval::new(l, u)
}

/// One more γ-cost step beyond each end of `theta0` (`c(l′, l) = γ`, `c(u, u′) = γ`),
/// clipped to the feature support.
pub fn salient_part(theta0: Interval, cost: &CostFunction, base: &BaseDistribution) -> Result<SalientRegion> {
    let support = base.support();
    let lo = support.clamp(cost.step(theta0.lo, StepDirection::Down, AnchorRole::Target)?);
    let hi = support.clamp(cost.step(theta0.hi, StepDirection::Up, AnchorRole::Origin)?);
    let salient = Interval::new(lo, hi)?;
    Ok(SalientRegion { theta0, salient, zeta: base.mass(lo, hi, None) })
}

/// Black-box access to a hidden response model.
///
/// Each query draws a fresh agent at the queried features and returns one response.
#[derive(Debug)]
pub struct ResponseOracle {
    model: ResponseModel,
    calls: AtomicU64,
}

impl ResponseOracle {
    /// Seals `model` behind the oracle.
    pub fn new(model: ResponseModel) -> Self {
        Self { model, calls: AtomicU64::new(0) }
    }

    /// One draw of `x′` for an agent at `x` facing `theta`.
    pub fn query(&self, x: f64, theta: f64, rng: &mut Engine) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let agent = self.model.draw_agent(x, rng);
        self.model.respond(&agent, theta)
    }

    /// Queries answered so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

/// Per-label sample sizes; `None` uses `⌈ζ_y² ln(1/ε) / (2ε²)⌉`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimatorConfig {
    /// Salient responses per net point for label 0.
    pub n0: Option<usize>,
    /// Salient responses per net point for label 1.
    pub n1: Option<usize>,
}

impl EstimatorConfig {
    /// Sample size for label `y` given `ζ_y` and `ε`.
    pub fn sample_size(&self, y: Label, zeta_y: f64, epsilon: f64) -> usize {
        let over = match y {
            Label::Negative => self.n0,
            Label::Positive => self.n1,
        };
        over.unwrap_or_else(|| {
            libm::ceil(zeta_y * zeta_y * libm::log(1.0 / epsilon) / (2.0 * epsilon * epsilon)) as usize
        })
    }
}

/// Result of [`estimate_optimum_via_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    /// Net spacing and target suboptimality.
    pub epsilon: f64,
    /// Base mass of the salient part.
    pub zeta: f64,
    /// Oracle queries spent.
    pub calls: u64,
    /// Net argmin of the estimated risk.
    pub theta_hat: f64,
    /// Estimated risk at `theta_hat`.
    pub pr_hat: f64,
    /// `pr_hat` plus the DKW radius `ξ`; bounds the true risk at `theta_hat` w.p. ≥ 0.99.
    pub pr_true_bound: f64,
    /// The net and the estimated risk at each of its points.
    pub net: Vec<(f64, f64)>,
}

/// The `ε`-net `l, l + ε, …` over `theta0`, closed with `u`.
pub fn epsilon_net(theta0: Interval, epsilon: f64) -> Vec<f64> {
    let k = libm::floor(theta0.width() / epsilon + 1e-9) as usize;
    let mut net: Vec<f64> = (0..=k).map(|i| theta0.lo + i as f64 * epsilon).collect();
    if theta0.hi - net[k] > 1e-9 * epsilon.max(1.0) {
        net.push(theta0.hi);
    }
    net
}

/// DKW radius: `sup |F̂_n − F| ≤ √(ln(2/δ) / 2n)` with probability `1 − δ`.
pub fn dkw_radius(n: usize, delta: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    libm::sqrt(libm::log(2.0 / delta) / (2.0 * n as f64))
}

/// Base mass of `[a, b)` with label `y` that lies outside `s`.
fn mass_outside(base: &BaseDistribution, s: Interval, a: f64, b: f64, y: Label) -> f64 {
    let total = base.mass(a, b, Some(y));
    let (lo, hi) = (a.max(s.lo), b.min(s.hi));
    let inside = if lo < hi { base.mass(lo, hi, Some(y)) } else { 0.0 };
    (total - inside).max(0.0)
}

/// Estimated `PR(θ)` on the spliced map: oracle responses inside the salient
/// part, the exact base distribution outside it.
///
/// Draws base features per label until `sizes[y]` of them fall in the salient
/// part and queries the oracle for exactly those. Uses `rng` as its own stream.
pub fn net_point_risk(
    oracle: &ResponseOracle,
    base: &BaseDistribution,
    region: &SalientRegion,
    sizes: [usize; 2],
    theta: f64,
    rng: &RandomSource,
) -> Result<f64> {
    let s = region.salient;
    let mut engine = rng.engine();
    let mut pr = mass_outside(base, s, theta, f64::INFINITY, Label::Negative)
        + mass_outside(base, s, f64::NEG_INFINITY, theta, Label::Positive);
    for y in Label::ALL {
        let n = sizes[y.index()];
        if n == 0 {
            continue;
        }
        let zeta_y = region.zeta_label(base, y);
        if zeta_y <= 0.0 {
            return Err(invalid("n_y", format!("{n} salient samples requested for label {y:?} with no salient mass")));
        }
        let mut errors = 0usize;
        let mut got = 0usize;
        while got < n {
            let x = base.draw_label(y, &mut engine)?;
            if !s.contains(x) {
                continue;
            }
            got += 1;
            let accepted = oracle.query(x, theta, &mut engine) >= theta;
            if accepted != (y == Label::Positive) {
                errors += 1;
            }
        }
        pr += zeta_y * errors as f64 / n as f64;
    }
    Ok(pr)
}

/// Searches an `ε`-net of `region.theta0` for the minimizer of the oracle-estimated risk.
///
/// Net point `k` uses `rng.substream(k)`, so results do not depend on evaluation order.
pub fn estimate_optimum_via_oracle(
    oracle: &ResponseOracle,
    base: &BaseDistribution,
    region: &SalientRegion,
    epsilon: f64,
    config: &EstimatorConfig,
    rng: &RandomSource,
) -> Result<OracleEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let start = oracle.calls();
    let points = epsilon_net(region.theta0, epsilon);
    let sizes = sample_sizes(base, region, epsilon, config);
    let mut net = Vec::with_capacity(points.len());
    for (k, &t) in points.iter().enumerate() {
        net.push((t, net_point_risk(oracle, base, region, sizes, t, &rng.substream(k as u64))?));
    }
    finish_estimate(base, region, epsilon, sizes, net, oracle.calls() - start)
}

/// Per-label salient sample sizes for `region` at `epsilon`.
pub fn sample_sizes(
    base: &BaseDistribution,
    region: &SalientRegion,
    epsilon: f64,
    config: &EstimatorConfig,
) -> [usize; 2] {
    Label::ALL.map(|y| config.sample_size(y, region.zeta_label(base, y), epsilon))
}

/// Assembles an [`OracleEstimate`] from evaluated net points; ties go to the smallest threshold.
pub fn finish_estimate(
    base: &BaseDistribution,
    region: &SalientRegion,
    epsilon: f64,
    sizes: [usize; 2],
    net: Vec<(f64, f64)>,
    calls: u64,
) -> Result<OracleEstimate> {
    let &(theta_hat, pr_hat) = net
        .iter()
        .fold(None, |best: Option<&(f64, f64)>, p| match best {
            Some(b) if b.1 <= p.1 => Some(b),
            _ => Some(p),
        })
        .ok_or(Error::EmptySample)?;
    // Union bound over the net at overall confidence 0.99.
    let delta = 0.01 / net.len() as f64;
    let xi: f64 = Label::ALL.iter().map(|&y| region.zeta_label(base, y) * dkw_radius(sizes[y.index()], delta)).sum();
    Ok(OracleEstimate { epsilon, zeta: region.zeta, calls, theta_hat, pr_hat, pr_true_bound: pr_hat + xi, net })
}

/// RMS deviation of perceived thresholds from `true_theta`; the Gaussian MLE of `σ`.
pub fn estimate_sigma(survey: &[f64], true_theta: f64) -> Result<f64> {
    if survey.is_empty() {
        return Err(Error::Domain("empty survey".into()));
    }
    let ss: f64 = survey.iter().map(|t| (t - true_theta) * (t - true_theta)).sum();
    Ok(libm::sqrt(ss / survey.len() as f64))
}

/// `n` perceived thresholds `θ + η`, `η ~ N(0, σ²)`.
pub fn perception_survey(sigma: f64, theta: f64, n: usize, rng: &RandomSource) -> Result<Vec<f64>> {
    let normal = Normal::new(theta, sigma).map_err(|e| invalid("sigma", format!("{e}")))?;
    let mut engine = rng.engine();
    Ok((0..n).map(|_| normal.sample(&mut engine)).collect())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} must be positive")))
    }
}

/// `TV(D(θ), D(θ′)) ≤ |θ − θ′| / 2σ` for noisy response.
pub fn tv_lipschitz_bound(sigma: f64, theta: f64, theta_prime: f64) -> Result<f64> {
    positive("sigma", sigma)?;
    Ok((theta - theta_prime).abs() / (2.0 * sigma))
}

/// TV between aggregates under noise scales `σ` and `σ̂` in dimension `m`:
/// `½ √(|σ² − σ̂²| m / min(σ², σ̂²))`.
pub fn tv_sigma_bound(sigma: f64, sigma_hat: f64, m: usize) -> Result<f64> {
    positive("sigma", sigma)?;
    positive("sigma_hat", sigma_hat)?;
    let (a, b) = (sigma * sigma, sigma_hat * sigma_hat);
    Ok(0.5 * libm::sqrt((a - b).abs() * m as f64 / a.min(b)))
}

/// Risk lost by optimizing against a map within `tv_sup` of the truth: `2 · tv_sup`.
pub fn pr_suboptimality_bound(tv_sup: f64) -> f64 {
    2.0 * tv_sup
}

/// Suboptimality from optimizing with a misestimated noise scale.
pub fn sigma_mismatch_pr_bound(sigma: f64, sigma_hat: f64, m: usize) -> Result<f64> {
    Ok(pr_suboptimality_bound(tv_sigma_bound(sigma, sigma_hat, m)?))
}
