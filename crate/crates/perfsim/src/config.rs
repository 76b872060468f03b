//! JSON scenario configuration.

use crate::RunError;
use perfsim_core::{
    BaseDistribution, Component, ComponentKind, CostFunction, CostKind, Interval, Label, ResponseModel, ThetaGrid,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Repeated risk minimization trajectories, one per `p`.
    Oscillation,
    /// Tabulated aggregate densities per model and threshold.
    Densities,
    /// Performative optima and their social burden over `(p, σ)`.
    OptimaBurden,
    /// Finite-difference smoothness diagnostic per model.
    Smoothness,
    /// Oracle-based estimation of the performative optimum.
    Estimation,
    /// Wasserstein ratios for the squared-cost uniform example.
    Counterexample,
}

impl Scenario {
    /// Name as written in configs.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Oscillation => "oscillation",
            Scenario::Densities => "densities",
            Scenario::OptimaBurden => "optima_burden",
            Scenario::Smoothness => "smoothness",
            Scenario::Estimation => "estimation",
            Scenario::Counterexample => "counterexample",
        }
    }
}

/// Base distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// `N(0, 1/9)` negatives and `N(1, 1/9)` positives on `[−5, 6]`.
    SymmetricGaussian,
    /// Equal-weight Gaussians with a shared std.
    TwoGaussians {
        /// Negative mean.
        mean0: f64,
        /// Positive mean.
        mean1: f64,
        /// Shared standard deviation.
        std: f64,
        /// Feature support `[lo, hi]`.
        support: [f64; 2],
    },
    /// One Gaussian feature marginal with independent fair labels.
    Gaussian {
        /// Mean.
        mean: f64,
        /// Standard deviation.
        std: f64,
        /// Feature support `[lo, hi]`.
        support: [f64; 2],
    },
    /// Explicit labelled components.
    Mixture {
        /// Components; weights sum to one.
        components: Vec<ComponentSpec>,
        /// Feature support `[lo, hi]`.
        support: [f64; 2],
    },
}

/// One labelled mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    /// 0 or 1.
    pub label: u8,
    /// Mixture weight.
    pub weight: f64,
    /// Feature distribution.
    pub dist: DistSpec,
}

/// A one-dimensional feature distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// `N(mean, std²)`.
    Gaussian {
        /// Mean.
        mean: f64,
        /// Standard deviation.
        std: f64,
    },
    /// Uniform on `[lo, hi]`.
    Uniform {
        /// Left end.
        lo: f64,
        /// Right end.
        hi: f64,
    },
}

/// Manipulation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    /// `α|x′ − x|`.
    Linear {
        /// Slope.
        alpha: f64,
        /// Reward for acceptance.
        gamma: f64,
    },
    /// `|x′² − x²|`.
    SquaredDifference {
        /// Reward for acceptance.
        gamma: f64,
    },
}

/// Evenly spaced grid `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// First point.
    pub lo: f64,
    /// Last point.
    pub hi: f64,
    /// Spacing.
    pub step: f64,
}

impl GridSpec {
    /// Points of the grid.
    pub fn points(&self) -> Result<Vec<f64>, RunError> {
        Ok(ThetaGrid::new(self.lo, self.hi, self.step)?.points().to_vec())
    }
}

/// Individual response behavior of the strategic agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// Perfect best response.
    Standard,
    /// Best response to a noisy perceived threshold; one model per `sigma`.
    Noisy,
    /// Nobody moves.
    NonStrategic,
}

fn default_response() -> ResponseKind {
    ResponseKind::Standard
}

fn default_n() -> usize {
    100_000
}

fn default_rounds() -> usize {
    2_000
}

fn default_base() -> BaseSpec {
    BaseSpec::SymmetricGaussian
}

fn default_cost() -> CostSpec {
    CostSpec::Linear { alpha: 1.0, gamma: 1.0 }
}

fn default_p() -> Vec<f64> {
    vec![0.0]
}

fn default_grid() -> GridSpec {
    GridSpec { lo: -0.5, hi: 2.5, step: 0.005 }
}

fn default_delta() -> f64 {
    0.02
}

fn default_trials() -> usize {
    1
}

/// A complete, validated-on-load scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Experiment to run.
    pub scenario: Scenario,
    /// Master seed.
    pub seed: u64,
    /// Population size per Monte Carlo evaluation.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Retraining rounds (oscillation).
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Base distribution.
    #[serde(default = "default_base")]
    pub base: BaseSpec,
    /// Cost function.
    #[serde(default = "default_cost")]
    pub cost: CostSpec,
    /// Strategic behavior.
    #[serde(default = "default_response")]
    pub response: ResponseKind,
    /// Fractions of non-strategic agents.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Noise scales for `noisy` response.
    #[serde(default)]
    pub sigma: Vec<f64>,
    /// Threshold grid for searches and retraining.
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    /// Deployed thresholds (densities, smoothness).
    #[serde(default)]
    pub thetas: Vec<f64>,
    /// Feature grid for density tables.
    #[serde(default)]
    pub x_grid: Option<GridSpec>,
    /// Also tabulate the perfect-response model (densities) or report it as a reference (optima_burden).
    #[serde(default)]
    pub include_standard: bool,
    /// Starting threshold for retraining; defaults to the supervised threshold.
    #[serde(default)]
    pub theta0: Option<f64>,
    /// Finite-difference half-width (smoothness).
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Accuracy targets (estimation) or perturbation sizes (counterexample).
    #[serde(default)]
    pub epsilon: Vec<f64>,
    /// Independent repetitions (estimation).
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn interval(name: &str, s: [f64; 2]) -> Result<Interval, RunError> {
    Interval::new(s[0], s[1]).map_err(|e| RunError::Config(format!("{name}: {e}")))
}

impl ScenarioConfig {
    /// Parses JSON and validates.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Checks ranges and the fields each scenario needs.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.n == 0 {
            return bad("n: must be at least 1".into());
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p: {p} is not in [0, 1]"));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("sigma: {s} must be positive"));
        }
        if self.response == ResponseKind::Noisy && self.sigma.is_empty() {
            return bad("sigma: noisy response needs at least one value".into());
        }
        if self.response != ResponseKind::Noisy && !self.sigma.is_empty() && self.scenario != Scenario::Densities {
            return bad("sigma: only meaningful with noisy response".into());
        }
        if self.p.is_empty() {
            return bad("p: needs at least one value".into());
        }
        self.base()?;
        self.cost()?;
        self.grid.points().map_err(|e| RunError::Config(format!("grid: {e}")))?;
        match self.scenario {
            Scenario::Oscillation if self.rounds < 10 => return bad("rounds: need at least 10".into()),
            Scenario::Densities => {
                if self.thetas.is_empty() {
                    return bad("thetas: densities needs at least one threshold".into());
                }
                match self.x_grid {
                    None => return bad("x_grid: densities needs a feature grid".into()),
                    Some(g) => {
                        g.points().map_err(|e| RunError::Config(format!("x_grid: {e}")))?;
                    }
                }
                if self.response != ResponseKind::Noisy && !self.sigma.is_empty() {
                    return bad("sigma: only meaningful with noisy response".into());
                }
            }
            Scenario::Smoothness => {
                if self.thetas.is_empty() {
                    return bad("thetas: smoothness needs at least one threshold".into());
                }
                if !(self.delta.is_finite() && self.delta > 0.0) {
                    return bad(format!("delta: {} must be positive", self.delta));
                }
            }
            Scenario::Estimation => {
                if self.epsilon.is_empty() {
                    return bad("epsilon: estimation needs at least one value".into());
                }
                if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                    return bad(format!("epsilon: {e} must lie in (0, 1)"));
                }
                if self.trials == 0 {
                    return bad("trials: must be at least 1".into());
                }
            }
            Scenario::Counterexample => {
                if self.epsilon.is_empty() {
                    return bad("epsilon: counterexample needs at least one value".into());
                }
                if let Some(e) = self.epsilon.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                    return bad(format!("epsilon: {e} must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The base distribution.
    pub fn base(&self) -> Result<BaseDistribution, RunError> {
        let b = match &self.base {
            BaseSpec::SymmetricGaussian => Ok(BaseDistribution::symmetric_gaussian()),
            BaseSpec::TwoGaussians { mean0, mean1, std, support } => {
                BaseDistribution::two_gaussians(*mean0, *mean1, *std, interval("base.support", *support)?)
            }
            BaseSpec::Gaussian { mean, std, support } => {
                BaseDistribution::two_gaussians(*mean, *mean, *std, interval("base.support", *support)?)
            }
            BaseSpec::Mixture { components, support } => {
                let mut out = Vec::with_capacity(components.len());
                for c in components {
                    out.push(Component {
                        label: Label::from_index(c.label)
                            .map_err(|e| RunError::Config(format!("base.components: {e}")))?,
                        weight: c.weight,
                        kind: match c.dist {
                            DistSpec::Gaussian { mean, std } => ComponentKind::Gaussian { mean, std },
                            DistSpec::Uniform { lo, hi } => ComponentKind::Uniform { lo, hi },
                        },
                    });
                }
                BaseDistribution::new(out, interval("base.support", *support)?)
            }
        };
        b.map_err(|e| RunError::Config(format!("base: {e}")))
    }

    /// The cost function.
    pub fn cost(&self) -> Result<CostFunction, RunError> {
        let c = match self.cost {
            CostSpec::Linear { alpha, gamma } => CostFunction::new(CostKind::Linear { alpha }, gamma),
            CostSpec::SquaredDifference { gamma } => CostFunction::squared_difference(gamma),
        };
        c.map_err(|e| RunError::Config(format!("cost: {e}")))
    }

    /// Strategic models before mixing: one per `sigma` for noisy response.
    pub fn strategic_models(&self) -> Result<Vec<ResponseModel>, RunError> {
        let c = self.cost()?;
        Ok(match self.response {
            ResponseKind::Standard => vec![ResponseModel::standard(c)],
            ResponseKind::NonStrategic => vec![ResponseModel::non_strategic(c)],
            ResponseKind::Noisy => self.sigma.iter().map(|&s| ResponseModel::noisy(c, s)).collect::<Result<_, _>>()?,
        })
    }

    /// `mixture(p, inner)`, or `inner` itself when `p = 0`.
    pub fn mixed(p: f64, inner: &ResponseModel) -> Result<ResponseModel, RunError> {
        if p == 0.0 {
            Ok(*inner)
        } else {
            Ok(ResponseModel::mixture(p, *inner)?)
        }
    }

    /// Threshold grid.
    pub fn theta_grid(&self) -> Result<ThetaGrid, RunError> {
        Ok(ThetaGrid::new(self.grid.lo, self.grid.hi, self.grid.step)?)
    }
}
