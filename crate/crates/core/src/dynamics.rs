//! Retraining dynamics and the search for stable and optimal thresholds.

use crate::aggregate::Population;
use crate::base::BaseDistribution;
use crate::error::{invalid, Error, Result};
use crate::num::Interval;
use crate::response::ResponseModel;
use crate::risk::{grid_error_counts, misclassified, RiskEstimate};
use crate::rng::RandomSource;
use crate::threshold::ThetaGrid;
use alloc::format;
use alloc::vec::Vec;

/// Long-run behavior of a threshold sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// The tail settles around `limit` from round `round` on.
    Converged {
        /// Mean of the settled tail.
        limit: f64,
        /// First round after which every iterate stays near the limit.
        round: usize,
    },
    /// Recurrent resets from a high point back to a low point.
    Oscillating {
        /// Mean value right after a reset.
        low: f64,
        /// Mean value right before a reset.
        high: f64,
        /// Mean number of rounds between resets.
        period: f64,
    },
    /// Neither pattern was established within the round budget.
    BudgetExhausted,
}

impl Verdict {
    /// Short tag: `converged`, `oscillating` or `budget_exhausted`.
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Converged { .. } => "converged",
            Verdict::Oscillating { .. } => "oscillating",
            Verdict::BudgetExhausted => "budget_exhausted",
        }
    }
}

/// Thresholds visited by a retraining dynamic.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `θ_0, θ_1, …, θ_rounds`.
    pub thetas: Vec<f64>,
    /// `DPR(θ_k, θ_k)` on the population of round `k` (one entry per round).
    pub risks: Vec<f64>,
    /// Classification of the sequence.
    pub verdict: Verdict,
    /// Resolution used for the classification.
    pub grid_step: f64,
}

/// A fall of more than this many resolution units counts as a reset.
pub const RESET_STEPS: f64 = 10.0;

/// Resets needed (beyond the first) to call a sequence oscillating.
pub const MIN_PERIODS: usize = 5;

/// Classifies a threshold sequence.
///
/// *Oscillating*: at least six resets (falls larger than `10·resolution`), the
/// last within two periods of the end; the first reset may be a transient and
/// is left out of the endpoint means.
/// *Converged*: the last quarter of the sequence (at least 10 points) has no
/// reset-sized move and the means of its two halves agree within one
/// resolution unit, so it neither drifts nor cycles.
pub fn classify(thetas: &[f64], resolution: f64) -> Verdict {
    let jump = RESET_STEPS * resolution;
    let resets: Vec<usize> =
        (0..thetas.len().saturating_sub(1)).filter(|&k| thetas[k + 1] < thetas[k] - jump).collect();
    if resets.len() > MIN_PERIODS {
        let first = resets[0];
        let last = *resets.last().expect("non-empty");
        let period = (last - first) as f64 / (resets.len() - 1) as f64;
        if ((thetas.len() - 1 - last) as f64) <= 2.0 * period {
            let tail = &resets[1..];
            let m = tail.len() as f64;
            return Verdict::Oscillating {
                low: tail.iter().map(|&k| thetas[k + 1]).sum::<f64>() / m,
                high: tail.iter().map(|&k| thetas[k]).sum::<f64>() / m,
                period,
            };
        }
    }
    let w = (thetas.len() / 4).max(10);
    if thetas.len() < w {
        return Verdict::BudgetExhausted;
    }
    let tail = &thetas[thetas.len() - w..];
    if tail.windows(2).any(|p| (p[1] - p[0]).abs() > jump) {
        return Verdict::BudgetExhausted;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (a, b) = tail.split_at(w / 2);
    if (mean(a) - mean(b)).abs() > resolution {
        return Verdict::BudgetExhausted;
    }
    let limit = mean(tail);
    let round = thetas.iter().rposition(|&t| (t - limit).abs() > jump).map_or(0, |k| k + 1);
    Verdict::Converged { limit, round }
}

/// One round of repeated risk minimization with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrmRound {
    /// Next deployed threshold.
    pub next: f64,
    /// `DPR(θ, θ)` on this round's population.
    pub risk_at_theta: f64,
}

fn rrm_round(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    grid: &ThetaGrid,
    n: usize,
    rng: &RandomSource,
) -> Result<RrmRound> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let pairs = Population::draw(model, base, n, rng).respond(theta);
    let counts = grid_error_counts(&pairs, grid.points());
    let best = *counts.iter().min().expect("grid is non-empty");
    // Among tied minimizers stay as close as possible to the current threshold.
    let next = grid
        .points()
        .iter()
        .zip(&counts)
        .filter(|&(_, &c)| c == best)
        .map(|(&t, _)| t)
        .min_by(|a, b| (a - theta).abs().total_cmp(&(b - theta).abs()).then(a.total_cmp(b)))
        .expect("at least one minimizer");
    Ok(RrmRound { next, risk_at_theta: misclassified(&pairs, theta) as f64 / n as f64 })
}

/// Best response of the learner: the grid minimizer of `DPR(θ, ·)` on a fresh population.
///
/// Ties go to the minimizer nearest `θ`, then to the smaller one.
pub fn rrm_step(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta: f64,
    grid: &ThetaGrid,
    n: usize,
    rng: &RandomSource,
) -> Result<f64> {
    Ok(rrm_round(model, base, theta, grid, n, rng)?.next)
}

/// Repeated risk minimization from `theta0`; round `k` draws its population from substream `k`.
pub fn rrm_trajectory(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta0: f64,
    rounds: usize,
    grid: &ThetaGrid,
    n: usize,
    rng: &RandomSource,
) -> Result<Trajectory> {
    if rounds < 10 {
        return Err(invalid("rounds", "need at least 10"));
    }
    let mut thetas = Vec::with_capacity(rounds + 1);
    let mut risks = Vec::with_capacity(rounds);
    let mut theta = theta0;
    thetas.push(theta);
    for k in 0..rounds {
        let r = rrm_round(model, base, theta, grid, n, &rng.substream(k as u64))?;
        risks.push(r.risk_at_theta);
        theta = r.next;
        thetas.push(theta);
    }
    Ok(Trajectory { verdict: classify(&thetas, grid.step()), thetas, risks, grid_step: grid.step() })
}

/// Settings for [`rgd_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgdSettings {
    /// Gradient step.
    pub step_size: f64,
    /// Number of rounds.
    pub rounds: usize,
    /// Half-width of the central difference.
    pub fd_delta: f64,
    /// Population per round.
    pub n: usize,
    /// Projection set `Θ`.
    pub theta_range: Interval,
}

/// Repeated gradient descent `θ ← Proj_Θ(θ − η·∂DPR(θ, θ′)/∂θ′|_{θ′=θ})`.
///
/// The derivative is a central difference on a fresh population per round.
/// Models whose aggregate carries a boundary atom are refused, since the
/// derivative does not exist there.
pub fn rgd_trajectory(
    model: &ResponseModel,
    base: &BaseDistribution,
    theta0: f64,
    settings: &RgdSettings,
    rng: &RandomSource,
) -> Result<Trajectory> {
    if model.has_atoms() {
        return Err(Error::Unsupported(format!(
            "{} has a point mass at the threshold; its risk is not differentiable",
            model.descriptor()
        )));
    }
    let RgdSettings { step_size, rounds, fd_delta, n, theta_range } = *settings;
    if rounds < 10 || n == 0 || fd_delta.is_nan() || fd_delta <= 0.0 || step_size.is_nan() || step_size <= 0.0 {
        return Err(invalid("settings", "need rounds ≥ 10, n ≥ 1, positive step and delta"));
    }
    let mut thetas = Vec::with_capacity(rounds + 1);
    let mut risks = Vec::with_capacity(rounds);
    let mut theta = theta_range.clamp(theta0);
    thetas.push(theta);
    for k in 0..rounds {
        let pairs = Population::draw(model, base, n, &rng.substream(k as u64)).respond(theta);
        let up = misclassified(&pairs, theta + fd_delta) as f64;
        let down = misclassified(&pairs, theta - fd_delta) as f64;
        risks.push(misclassified(&pairs, theta) as f64 / n as f64);
        let grad = (up - down) / (2.0 * fd_delta * n as f64);
        theta = theta_range.clamp(theta - step_size * grad);
        thetas.push(theta);
    }
    let resolution = fd_delta / 10.0;
    Ok(Trajectory { verdict: classify(&thetas, resolution), thetas, risks, grid_step: resolution })
}

/// Local stability of one grid threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEntry {
    /// Deployed threshold.
    pub theta: f64,
    /// No nearby threshold is better by more than three paired standard errors.
    pub stable: bool,
    /// `min_{|θ′−θ| ≤ r} DPR(θ, θ′) − DPR(θ, θ)` (never positive).
    pub margin: f64,
}

/// Scans a grid for thresholds that are local minimizers of their own decoupled risk.
///
/// The comparison uses the paired standard error `√m / n`, where `m` counts
/// agents between `θ` and the best neighbour, since both risks come from
/// one sample.
pub fn local_stability_scan(
    model: &ResponseModel,
    base: &BaseDistribution,
    grid: &ThetaGrid,
    neighborhood: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<Vec<StabilityEntry>> {
    if neighborhood < 2.0 * grid.step() * (1.0 - 1e-9) {
        return Err(invalid("neighborhood", "must span at least two grid steps"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let pts = grid.points();
    let reach = libm::round(neighborhood / grid.step()) as usize;
    let mut out = Vec::with_capacity(pts.len());
    for (i, &theta) in pts.iter().enumerate() {
        let pairs = Population::draw(model, base, n, &rng.substream(i as u64)).respond(theta);
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(pts.len() - 1);
        let window = &pts[lo..=hi];
        let counts = grid_error_counts(&pairs, window);
        let own = counts[i - lo];
        let (j, &best) =
            counts.iter().enumerate().min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0))).expect("non-empty window");
        let other = window[j];
        let (a, b) = if other < theta { (other, theta) } else { (theta, other) };
        let between = pairs.iter().filter(|p| a <= p.0 && p.0 < b).count() as f64;
        let nf = n as f64;
        let se = libm::sqrt(between) / nf;
        let margin = (best as f64 - own as f64) / nf;
        out.push(StabilityEntry { theta, stable: -margin <= 3.0 * se, margin });
    }
    Ok(out)
}

/// `PR` on every grid point, all from one population (common random numbers).
pub fn performative_risk_curve(
    model: &ResponseModel,
    base: &BaseDistribution,
    grid: &ThetaGrid,
    n: usize,
    rng: &RandomSource,
) -> Result<Vec<RiskEstimate>> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let pop = Population::draw(model, base, n, rng);
    Ok(grid.points().iter().map(|&t| RiskEstimate::from_counts(pop.errors_at(t), n)).collect())
}

/// Grid minimizer of `PR` under common random numbers; ties go to the smallest threshold.
pub fn performative_optimum(
    model: &ResponseModel,
    base: &BaseDistribution,
    grid: &ThetaGrid,
    n: usize,
    rng: &RandomSource,
) -> Result<(f64, RiskEstimate)> {
    let curve = performative_risk_curve(model, base, grid, n, rng)?;
    let (i, r) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("grid is non-empty");
    Ok((grid.points()[i], *r))
}

/// Grid minimizer of the exact `PR` (see [`crate::risk::closed_form_pr`]); ties go to the smallest threshold.
pub fn performative_optimum_exact(
    model: &ResponseModel,
    base: &BaseDistribution,
    grid: &ThetaGrid,
) -> Result<(f64, RiskEstimate)> {
    let mut best: Option<(f64, RiskEstimate)> = None;
    for &t in grid.points() {
        let r = crate::risk::closed_form_pr(model, base, t)?;
        if best.is_none_or(|(_, b)| r.value < b.value) {
            best = Some((t, r));
        }
    }
    best.ok_or(Error::EmptySample)
}
