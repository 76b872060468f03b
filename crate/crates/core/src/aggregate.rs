//! The distribution map `D(θ)`: samplers, closed-form densities, diagnostics and distances.

use crate::base::{BaseDistribution, Label};
use crate::cost::CostFunction;
use crate::error::{invalid, Error, Result};
use crate::num::{self, norm_mass, norm_pdf, Interval};
use crate::response::{AgentDraw, Behavior, ResponseModel};
use crate::rng::RandomSource;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// A fixed set of agents that can be confronted with any threshold.
///
/// Reusing one population across thresholds gives common random numbers.
#[derive(Debug, Clone)]
pub struct Population {
    model: ResponseModel,
    draws: Vec<AgentDraw>,
    source: RandomSource,
}

impl Population {
    /// Draws `n` agents: base features and labels, then response traits.
    pub fn draw(model: &ResponseModel, base: &BaseDistribution, n: usize, rng: &RandomSource) -> Self {
        let mut eng = rng.engine();
        let draws = (0..n)
            .map(|_| {
                let (x, y) = base.draw(&mut eng);
                AgentDraw { agent: model.draw_agent(x, &mut eng), y }
            })
            .collect();
        Self { model: model.bounded_for(base), draws, source: *rng }
    }

    /// The agents.
    pub fn draws(&self) -> &[AgentDraw] {
        &self.draws
    }

    /// Population size.
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    /// Whether there are no agents.
    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Model the agents follow (with its target clamp applied).
    pub fn model(&self) -> &ResponseModel {
        &self.model
    }

    /// Post-response `(x′, y)` pairs at threshold `theta`.
    pub fn respond(&self, theta: f64) -> Vec<(f64, Label)> {
        self.draws.iter().map(|d| (self.model.respond(&d.agent, theta), d.y)).collect()
    }

    /// Number of agents misclassified by `f_θ` after responding to `θ`.
    pub fn errors_at(&self, theta: f64) -> usize {
        self.draws.iter().filter(|d| (self.model.respond(&d.agent, theta) >= theta) != (d.y == Label::Positive)).count()
    }

    /// The aggregate sample at `theta`, with provenance.
    pub fn sample_at(&self, theta: f64) -> AggregateSample {
        AggregateSample {
            theta,
            pairs: self.respond(theta),
            provenance: Provenance {
                model: self.model.descriptor(),
                seed: self.source.seed,
                stream_id: self.source.stream_id,
                n: self.draws.len(),
            },
        }
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Model descriptor.
    pub model: String,
    /// Seed of the generating stream.
    pub seed: u64,
    /// Stream id of the generating stream.
    pub stream_id: u64,
    /// Sample size.
    pub n: usize,
}

/// Draws from `D(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSample {
    /// Deployed threshold.
    pub theta: f64,
    /// Post-response features and untouched labels.
    pub pairs: Vec<(f64, Label)>,
    /// Generating model and stream.
    pub provenance: Provenance,
}

impl AggregateSample {
    /// Feature values only.
    pub fn features(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    /// Number of draws equal to `theta` bit for bit.
    pub fn atom_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.0 == self.theta).count()
    }

    /// Empirical `P[y = 1]`.
    pub fn positive_fraction(&self) -> f64 {
        let k = self.pairs.iter().filter(|p| p.1 == Label::Positive).count();
        k as f64 / self.pairs.len().max(1) as f64
    }
}

/// `n` i.i.d. draws from `D(θ; model)`.
pub fn sample_map(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<AggregateSample> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(Population::draw(model, base, n, rng).sample_at(theta))
}

/// Gaming set `{x ∈ X : x < θ, c(x, θ) ≤ γ}` as an interval `[lo, θ)`, if non-empty.
pub fn gaming_set(base: &BaseDistribution, cost: &CostFunction, theta: f64) -> Result<Option<Interval>> {
    let (l, _) = cost.reach_points(theta)?;
    let lo = l.max(base.support().lo);
    Ok((lo < theta).then_some(Interval { lo, hi: theta }))
}

/// Base mass that the perfectly informed population moves onto the boundary `θ`.
pub fn sm_point_mass(base: &BaseDistribution, cost: &CostFunction, theta: f64) -> Result<f64> {
    Ok(gaming_set(base, cost, theta)?.map_or(0.0, |q| base.mass(q.lo, q.hi, None)))
}

/// Closed-form joint density of `D(θ)` for the noisy response model at `(x′, y)`.
pub fn nr_density(
    base: &BaseDistribution,
    cost: &CostFunction,
    sigma: f64,
    theta: f64,
    x_prime: f64,
    y: Label,
) -> Result<f64> {
    Ok(nr_density_pair(base, cost, sigma, theta, x_prime)?[y.index()])
}

fn nr_density_pair(
    base: &BaseDistribution,
    cost: &CostFunction,
    sigma: f64,
    theta: f64,
    x_prime: f64,
) -> Result<[f64; 2]> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("sigma", "must be positive and finite"));
    }
    let (l, u) = cost.reach_points(x_prime)?;
    // Stayers: the perceived threshold lies outside (x′, u_{x′}].
    let stay = 1.0 - norm_mass((x_prime - theta) / sigma, (u - theta) / sigma);
    // Movers: agents in [l_{x′}, x′) whose perceived threshold is exactly x′.
    let aim = norm_pdf((x_prime - theta) / sigma) / sigma;
    let mut out = [0.0; 2];
    for y in Label::ALL {
        out[y.index()] = base.density(x_prime, y) * stay + aim * base.mass(l, x_prime, Some(y));
    }
    Ok(out)
}

/// A point mass in an aggregate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    /// Location.
    pub location: f64,
    /// Probability.
    pub weight: f64,
}

/// Joint density of `D(θ)` tabulated on a grid, plus any atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    /// Ascending evaluation points.
    pub grid: Vec<f64>,
    /// `density[y][i]` is the joint density of `(grid[i], y)`.
    pub density: [Vec<f64>; 2],
    /// Atoms, e.g. at the boundary under perfect best response.
    pub point_masses: Vec<PointMass>,
}

impl DensityProfile {
    /// Feature-marginal density on the grid.
    pub fn marginal(&self) -> Vec<f64> {
        self.density[0].iter().zip(&self.density[1]).map(|(a, b)| a + b).collect()
    }

    /// Trapezoid integral of both densities plus atom weights.
    pub fn total_mass(&self) -> f64 {
        num::trapezoid(&self.grid, &self.marginal()) + self.point_masses.iter().map(|p| p.weight).sum::<f64>()
    }

    /// Marginal CDF at each grid point (trapezoid, atoms included from their location on).
    pub fn marginal_cdf(&self) -> Vec<f64> {
        let mut cdf = num::cumulative_trapezoid(&self.grid, &self.marginal());
        for pm in &self.point_masses {
            for (c, &x) in cdf.iter_mut().zip(&self.grid) {
                if x >= pm.location {
                    *c += pm.weight;
                }
            }
        }
        cdf
    }
}

/// Density profile of `D(θ)` on `grid`.
///
/// Models without atoms (noisy, non-strategic and their mixtures) use the closed
/// form; models with a best-responding component use a histogram whose bins
/// are centred on the grid points, with the boundary atom counted by exact
/// equality and reported separately.
pub fn density_profile(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    grid: &[f64],
    n: usize,
    rng: &RandomSource,
) -> Result<DensityProfile> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid", "needs at least two strictly increasing points"));
    }
    if !model.has_atoms() {
        let p = model.nonstrategic_fraction();
        let mut density = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for (i, &x) in grid.iter().enumerate() {
            let strategic = match model.behavior() {
                Behavior::Noisy { sigma } => nr_density_pair(base, model.cost(), sigma, theta, x)?,
                _ => [base.density(x, Label::Negative), base.density(x, Label::Positive)],
            };
            for y in Label::ALL {
                let k = y.index();
                density[k][i] = p * base.density(x, y) + (1.0 - p) * strategic[k];
            }
        }
        return Ok(DensityProfile { grid: grid.to_vec(), density, point_masses: Vec::new() });
    }
    let sample = sample_map(model, base, theta, n, rng)?;
    let edges = bin_edges(grid);
    let mut counts = [vec![0usize; grid.len()], vec![0usize; grid.len()]];
    let mut atom = 0usize;
    for &(x, y) in &sample.pairs {
        if x == theta {
            atom += 1;
            continue;
        }
        if x < edges[0] || x >= edges[grid.len()] {
            continue;
        }
        let bin = edges.partition_point(|&e| e <= x) - 1;
        counts[y.index()][bin] += 1;
    }
    let total = sample.pairs.len() as f64;
    let density = [0, 1]
        .map(|k| counts[k].iter().enumerate().map(|(i, &c)| c as f64 / (total * (edges[i + 1] - edges[i]))).collect());
    let point_masses =
        if atom > 0 { vec![PointMass { location: theta, weight: atom as f64 / total }] } else { Vec::new() };
    Ok(DensityProfile { grid: grid.to_vec(), density, point_masses })
}

fn bin_edges(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(grid[0] - 0.5 * (grid[1] - grid[0]));
    for w in grid.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(grid[n - 1] + 0.5 * (grid[n - 1] - grid[n - 2]));
    edges
}

/// Distances between two empirical distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Largest gap between the feature-marginal CDFs.
    Ks,
    /// Total variation over `bins` equal-width feature bins crossed with the label.
    TvBinned {
        /// Number of feature bins (at least 10).
        bins: usize,
    },
    /// Area between the feature-marginal CDFs.
    W1,
}

/// Default bin count for [`Metric::TvBinned`].
pub const DEFAULT_TV_BINS: usize = 200;

/// Distance between two aggregate samples.
pub fn empirical_distance(a: &AggregateSample, b: &AggregateSample, metric: Metric) -> Result<f64> {
    match metric {
        Metric::Ks => ks_distance(&a.features(), &b.features()),
        Metric::W1 => w1_distance(&a.features(), &b.features()),
        Metric::TvBinned { bins } => Ok(tv_binned(&a.pairs, &b.pairs, bins, false)?.value),
    }
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptySample);
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(invalid("sample", "contains NaN"));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Walks the merged order statistics, calling `f(x, next_x, Fa, Fb)` after each distinct value.
fn walk_cdfs(a: &[f64], b: &[f64], mut f: impl FnMut(f64, f64, f64, f64)) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => x,
        };
        f(x, next, i as f64 / na, j as f64 / nb);
    }
}

/// Kolmogorov–Smirnov distance between two samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let mut d: f64 = 0.0;
    walk_cdfs(&a, &b, |_, _, fa, fb| d = d.max((fa - fb).abs()));
    Ok(d)
}

/// Wasserstein-1 distance between two samples (area between their CDFs).
pub fn w1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let mut w = 0.0;
    walk_cdfs(&a, &b, |x, next, fa, fb| w += (fa - fb).abs() * (next - x));
    Ok(w)
}

/// Binned total variation with an estimate of its upward sampling bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    /// `½ Σ |p̂ − q̂|` over (bin, label) cells.
    pub value: f64,
    /// `½ Σ √(2/π)·sd(p̂ − q̂)`, the expected contribution of pure noise.
    pub error: f64,
}

/// Binned TV between two labelled samples.
///
/// With `paired = true` the samples must be the same agents under two
/// thresholds (index `i` of `a` and `b` is one agent); the error estimate then
/// uses the paired variance, which is much smaller.
pub fn tv_binned(a: &[(f64, Label)], b: &[(f64, Label)], bins: usize, paired: bool) -> Result<TvEstimate> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins < 10 {
        return Err(invalid("bins", "need at least 10"));
    }
    if paired && a.len() != b.len() {
        return Err(invalid("paired", "paired samples must have equal length"));
    }
    let (lo, hi) = a.iter().chain(b).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
    let width = (hi - lo) / bins as f64;
    let cell = |p: &(f64, Label)| {
        let k = if width > 0.0 { (((p.0 - lo) / width) as usize).min(bins - 1) } else { 0 };
        2 * k + p.1.index()
    };
    let cells = 2 * bins;
    let mut ca = vec![0usize; cells];
    let mut cb = vec![0usize; cells];
    let mut both = vec![0usize; cells];
    for p in a {
        ca[cell(p)] += 1;
    }
    for p in b {
        cb[cell(p)] += 1;
    }
    if paired {
        for (p, q) in a.iter().zip(b) {
            let (i, j) = (cell(p), cell(q));
            if i == j {
                both[i] += 1;
            }
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut value = 0.0;
    let mut error = 0.0;
    let k = libm::sqrt(2.0 / core::f64::consts::PI);
    for c in 0..cells {
        let (pa, pb) = (ca[c] as f64 / na, cb[c] as f64 / nb);
        value += (pa - pb).abs();
        let var = if paired {
            let second = (ca[c] + cb[c] - 2 * both[c]) as f64 / na;
            (second - (pa - pb) * (pa - pb)).max(0.0) / na
        } else {
            pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb
        };
        error += k * libm::sqrt(var);
    }
    Ok(TvEstimate { value: 0.5 * value, error: 0.5 * error })
}

/// One finite-difference estimate of `∂DPR(θ, θ′)/∂θ′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    /// Deployed threshold.
    pub theta: f64,
    /// Evaluation threshold.
    pub theta_prime: f64,
    /// Central difference `[DPR(θ, θ′+δ) − DPR(θ, θ′−δ)] / 2δ`.
    pub derivative: f64,
    /// Its Monte Carlo standard error.
    pub std_error: f64,
}

/// A jump between neighbouring derivative estimates that noise cannot explain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityFlag {
    /// Deployed threshold.
    pub theta: f64,
    /// Left evaluation point.
    pub left: f64,
    /// Right evaluation point.
    pub right: f64,
    /// Size of the jump.
    pub jump: f64,
    /// Standard error of the jump.
    pub noise: f64,
}

/// Output of [`smoothness_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    /// All derivative estimates, grouped by deployed threshold.
    pub estimates: Vec<DerivativeEstimate>,
    /// Detected discontinuities.
    pub flags: Vec<DiscontinuityFlag>,
}

impl SmoothnessReport {
    /// Whether no discontinuity was flagged.
    pub fn is_smooth(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Evaluation points on each side of the deployed threshold.
pub const SMOOTHNESS_OFFSETS: i32 = 10;

/// Jumps larger than this many standard errors are flagged.
pub const SMOOTHNESS_SIGMAS: f64 = 5.0;

/// Finite-difference check that `∂DPR(θ, θ′)/∂θ′` is continuous in `θ′` near each deployed `θ`.
///
/// For each `θ` in `theta_grid` a fresh population is drawn and the central
/// difference is evaluated at `θ′ = θ + kδ`, `|k| ≤ 10`.
pub fn smoothness_diagnostic(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta_grid: &[f64],
    delta: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<SmoothnessReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let mut estimates = Vec::new();
    let mut flags = Vec::new();
    for (idx, &theta) in theta_grid.iter().enumerate() {
        let pop = Population::draw(model, base, n, &rng.substream(idx as u64));
        let mut by_label: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (x, y) in pop.respond(theta) {
            by_label[y.index()].push(x);
        }
        for v in &mut by_label {
            v.sort_by(f64::total_cmp);
        }
        let count =
            |v: &[f64], lo: f64, hi: f64| (v.partition_point(|&x| x < hi) - v.partition_point(|&x| x < lo)) as f64;
        let scale = 2.0 * delta * n as f64;
        let start = estimates.len();
        for k in -SMOOTHNESS_OFFSETS..=SMOOTHNESS_OFFSETS {
            let tp = theta + delta * k as f64;
            let c1 = count(&by_label[1], tp - delta, tp + delta);
            let c0 = count(&by_label[0], tp - delta, tp + delta);
            estimates.push(DerivativeEstimate {
                theta,
                theta_prime: tp,
                derivative: (c1 - c0) / scale,
                std_error: libm::sqrt(c1 + c0) / scale,
            });
        }
        for w in estimates[start..].windows(2) {
            let jump = (w[1].derivative - w[0].derivative).abs();
            let noise = libm::sqrt(w[0].std_error * w[0].std_error + w[1].std_error * w[1].std_error);
            if jump > SMOOTHNESS_SIGMAS * noise && jump > 0.0 {
                flags.push(DiscontinuityFlag { theta, left: w[0].theta_prime, right: w[1].theta_prime, jump, noise });
            }
        }
    }
    Ok(SmoothnessReport { estimates, flags })
}

/// Feature CDF of `D(θ)` under perfect best response, from base CDF arithmetic.
pub fn standard_pushforward_cdf(base: &BaseDistribution, cost: &CostFunction, theta: f64, t: f64) -> Result<f64> {
    Ok(match gaming_set(base, cost, theta)? {
        Some(q) if t < theta => base.cdf(t.min(q.lo), None),
        _ => base.cdf(t, None),
    })
}

/// Exact `W1(D(θa), D(θb))` under perfect best response, by piecewise quadrature of the CDF gap.
pub fn standard_w1(base: &BaseDistribution, cost: &CostFunction, theta_a: f64, theta_b: f64) -> Result<f64> {
    let mut cuts = base.breakpoints();
    for th in [theta_a, theta_b] {
        cuts.push(th);
        if let Some(q) = gaming_set(base, cost, th)? {
            cuts.push(q.lo);
        }
    }
    let lo = cuts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cuts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let qa = gaming_set(base, cost, theta_a)?;
    let qb = gaming_set(base, cost, theta_b)?;
    let cdf = |q: Option<Interval>, th: f64, t: f64| match q {
        Some(q) if t < th => base.cdf(t.min(q.lo), None),
        _ => base.cdf(t, None),
    };
    Ok(num::gauss_legendre_piecewise(|t| (cdf(qa, theta_a, t) - cdf(qb, theta_b, t)).abs(), lo, hi, &cuts))
}

/// `W1(D(1), D(1+ε))/ε` for a uniform population on `[0, 1]` with cost `|x² − x′²|`
/// and perfectly informed agents.
pub fn wasserstein_counterexample(epsilons: &[f64]) -> Result<Vec<(f64, f64)>> {
    let base = BaseDistribution::uniform_marginal(0.0, 1.0, Interval { lo: -10.0, hi: 10.0 })?;
    let cost = CostFunction::squared_difference(1.0)?;
    epsilons
        .iter()
        .map(|&eps| {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(invalid("epsilon", "must be positive"));
            }
            Ok((eps, standard_w1(&base, &cost, 1.0, 1.0 + eps)? / eps))
        })
        .collect()
}
