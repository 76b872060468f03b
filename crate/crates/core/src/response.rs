//! Agent response types and population mappings.

use crate::base::{BaseDistribution, Label};
use crate::cost::CostFunction;
use crate::error::{invalid, Error, Result};
use crate::num::Interval;
use crate::rng::{Engine, RandomSource};
use alloc::format;
use alloc::string::String;
use rand::Rng;
use rand_distr::StandardNormal;

/// Perception noise is clamped to this many standard deviations beyond `X`.
pub const TARGET_CLAMP_SIGMAS: f64 = 6.0;

/// How a strategic agent reacts to a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Behavior {
    /// Best response to the true threshold.
    Standard,
    /// Best response to the perceived threshold `θ + η`, `η ~ N(0, σ²)` fixed per agent.
    Noisy {
        /// Perception noise scale.
        sigma: f64,
    },
    /// Never moves.
    NonStrategic,
}

/// The traits of one agent that a response may depend on. The label is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    /// True features.
    pub x: f64,
    /// Perception noise (0 unless the behavior is noisy).
    pub eta: f64,
    /// False when a mixture made this agent non-strategic.
    pub strategic: bool,
}

/// An agent together with its label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentDraw {
    /// Response-relevant traits.
    pub agent: Agent,
    /// True label.
    pub y: Label,
}

/// A population mapping: every agent follows `behavior`, except a fraction `p`
/// of a mixture who are non-strategic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseModel {
    behavior: Behavior,
    mixture: Option<f64>,
    cost: CostFunction,
    target_range: Interval,
}

impl ResponseModel {
    fn pure(behavior: Behavior, cost: CostFunction) -> Self {
        Self { behavior, mixture: None, cost, target_range: Interval::everything() }
    }

    /// Perfectly informed best response.
    pub fn standard(cost: CostFunction) -> Self {
        Self::pure(Behavior::Standard, cost)
    }

    /// Best response to a noisy perception of the threshold.
    pub fn noisy(cost: CostFunction, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("{sigma} must be positive and finite")));
        }
        Ok(Self::pure(Behavior::Noisy { sigma }, cost))
    }

    /// Agents that never change their features.
    pub fn non_strategic(cost: CostFunction) -> Self {
        Self::pure(Behavior::NonStrategic, cost)
    }

    /// A `p` fraction of agents turn non-strategic, the rest follow `inner`.
    pub fn mixture(p: f64, inner: ResponseModel) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("{p} is not a probability")));
        }
        if inner.mixture.is_some() {
            return Err(Error::InvariantViolation(String::from("mixtures nest only one level deep")));
        }
        Ok(Self { mixture: Some(p), ..inner })
    }

    /// Behavior of strategic agents.
    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    /// Fraction of agents forced to be non-strategic (0 for pure models).
    pub fn nonstrategic_fraction(&self) -> f64 {
        self.mixture.unwrap_or(0.0)
    }

    /// Whether this model was built with [`ResponseModel::mixture`].
    pub fn is_mixture(&self) -> bool {
        self.mixture.is_some()
    }

    /// Noise scale of noisy agents.
    pub fn sigma(&self) -> Option<f64> {
        match self.behavior {
            Behavior::Noisy { sigma } => Some(sigma),
            _ => None,
        }
    }

    /// Manipulation cost.
    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    /// Whether the aggregate response can carry a point mass at the threshold.
    pub fn has_atoms(&self) -> bool {
        self.behavior == Behavior::Standard && self.nonstrategic_fraction() < 1.0
    }

    /// Where noisy agents may aim: defaults to the whole line.
    pub fn target_range(&self) -> Interval {
        self.target_range
    }

    /// Copy with an explicit clamp range for perceived thresholds.
    pub fn with_target_range(mut self, range: Interval) -> Self {
        self.target_range = range;
        self
    }

    /// Copy whose noisy targets are clamped to `X` widened by six noise scales.
    pub fn bounded_for(&self, base: &BaseDistribution) -> Self {
        let r = self.sigma().unwrap_or(0.0) * TARGET_CLAMP_SIGMAS;
        self.with_target_range(base.support().widen(r))
    }

    /// Short text identifying the model.
    pub fn descriptor(&self) -> String {
        let inner = match self.behavior {
            Behavior::Standard => String::from("standard"),
            Behavior::Noisy { sigma } => format!("noisy(sigma={sigma})"),
            Behavior::NonStrategic => String::from("non_strategic"),
        };
        match self.mixture {
            Some(p) => format!("mixture(p={p}, {inner})"),
            None => inner,
        }
    }

    /// Draws the response traits of an agent with features `x`.
    ///
    /// Every model consumes the same randomness per agent, so populations drawn
    /// from one stream are coupled across models.
    pub fn draw_agent(&self, x: f64, rng: &mut Engine) -> Agent {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        Agent { x, eta: self.sigma().map_or(0.0, |s| s * z), strategic: u >= self.nonstrategic_fraction() }
    }

    /// Post-response features `x′` of `agent` facing threshold `theta`.
    pub fn respond(&self, agent: &Agent, theta: f64) -> f64 {
        let x = agent.x;
        if !agent.strategic {
            return x;
        }
        let target = match self.behavior {
            Behavior::NonStrategic => return x,
            Behavior::Standard => theta,
            Behavior::Noisy { .. } => self.target_range.clamp(theta + agent.eta),
        };
        if x < target && self.cost.eval(x, target) <= self.cost_gamma() {
            target
        } else {
            x
        }
    }

    fn cost_gamma(&self) -> f64 {
        crate::cost::Cost::gamma(&self.cost)
    }
}

/// Interface the constraint checkers need from a response model.
pub trait Respond {
    /// Post-response features.
    fn respond(&self, agent: &Agent, theta: f64) -> f64;
    /// Cost used to price movements.
    fn cost(&self) -> &CostFunction;
    /// Fresh agent at `x`.
    fn draw_agent(&self, x: f64, rng: &mut Engine) -> Agent;
}

impl Respond for ResponseModel {
    fn respond(&self, agent: &Agent, theta: f64) -> f64 {
        ResponseModel::respond(self, agent, theta)
    }
    fn cost(&self) -> &CostFunction {
        ResponseModel::cost(self)
    }
    fn draw_agent(&self, x: f64, rng: &mut Engine) -> Agent {
        ResponseModel::draw_agent(self, x, rng)
    }
}

/// One expenditure probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpenditureWitness {
    /// The agent probed.
    pub agent: Agent,
    /// Threshold faced.
    pub theta: f64,
    /// Response.
    pub x_prime: f64,
    /// `c(x, x′)`.
    pub expenditure: f64,
}

/// Outcome of [`check_expenditure_constraint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpenditureVerdict {
    /// No probe spent more than `γ + 1e-12`.
    pub passed: bool,
    /// Largest cost observed.
    pub max_expenditure: f64,
    /// First violating probe, if any.
    pub witness: Option<ExpenditureWitness>,
}

/// Probes `c(x, R(x, θ)) ≤ γ` on random agents with `x ∈ x_range`, `θ ∈ theta_range`.
pub fn check_expenditure_constraint<M: Respond + ?Sized>(
    model: &M,
    x_range: Interval,
    theta_range: Interval,
    trials: usize,
    rng: &RandomSource,
) -> Result<ExpenditureVerdict> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let mut eng = rng.engine();
    let gamma = crate::cost::Cost::gamma(model.cost());
    let mut verdict = ExpenditureVerdict { passed: true, max_expenditure: 0.0, witness: None };
    for _ in 0..trials {
        let x = x_range.lo + x_range.width() * eng.random::<f64>();
        let theta = theta_range.lo + theta_range.width() * eng.random::<f64>();
        let agent = model.draw_agent(x, &mut eng);
        let x_prime = model.respond(&agent, theta);
        let spent = model.cost().eval(x, x_prime);
        verdict.max_expenditure = verdict.max_expenditure.max(spent);
        if spent > gamma + 1e-12 && verdict.witness.is_none() {
            verdict.passed = false;
            verdict.witness = Some(ExpenditureWitness { agent, theta, x_prime, expenditure: spent });
        }
    }
    Ok(verdict)
}

/// An agent accepted at a larger threshold but rejected at a smaller one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityWitness {
    /// The agent.
    pub agent: Agent,
    /// Smaller threshold where it was rejected.
    pub rejected_at: f64,
    /// Larger threshold where it was accepted.
    pub accepted_at: f64,
}

/// Outcome of [`check_expenditure_monotonicity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityVerdict {
    /// Every probed acceptance pattern was non-increasing in `θ`.
    pub passed: bool,
    /// First counterexample, if any.
    pub witness: Option<MonotonicityWitness>,
}

/// Replays random agents across an ascending threshold grid and checks that
/// acceptance, once lost, is never regained.
pub fn check_expenditure_monotonicity<M: Respond + ?Sized>(
    model: &M,
    x_range: Interval,
    theta_grid: &[f64],
    trials: usize,
    rng: &RandomSource,
) -> Result<MonotonicityVerdict> {
    if theta_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("theta_grid", "must be sorted ascending"));
    }
    let mut eng = rng.engine();
    for _ in 0..trials {
        let x = x_range.lo + x_range.width() * eng.random::<f64>();
        let agent = model.draw_agent(x, &mut eng);
        if let Some(w) = acceptance_reversal(model, &agent, theta_grid) {
            return Ok(MonotonicityVerdict { passed: false, witness: Some(w) });
        }
    }
    Ok(MonotonicityVerdict { passed: true, witness: None })
}

/// First place where `agent` is rejected at some grid point but accepted at a later one.
pub fn acceptance_reversal<M: Respond + ?Sized>(
    model: &M,
    agent: &Agent,
    theta_grid: &[f64],
) -> Option<MonotonicityWitness> {
    let mut rejected_at = None;
    for &theta in theta_grid {
        let accepted = model.respond(agent, theta) >= theta;
        match (accepted, rejected_at) {
            (false, None) => rejected_at = Some(theta),
            (true, Some(r)) => return Some(MonotonicityWitness { agent: *agent, rejected_at: r, accepted_at: theta }),
            _ => {}
        }
    }
    None
}
