//! Manipulation costs `c(x, x′)` and the budget `γ`.

use crate::error::{invalid, Error, Result};
use crate::num::{bisect, Bisection, Interval};
use crate::rng::RandomSource;
use alloc::format;
use rand::Rng;

/// Anything that prices a feature change and carries a reward `γ` for acceptance.
pub trait Cost {
    /// Cost of moving from `x` to `x_prime`.
    fn cost(&self, x: f64, x_prime: f64) -> f64;
    /// Utility of a positive classification.
    fn gamma(&self) -> f64;
}

/// Built-in cost shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    /// `α·|x − x′|`.
    Linear {
        /// Slope.
        alpha: f64,
    },
    /// `|x² − x′²|`; valid on a half-line not containing both signs.
    SquaredDifference,
}

/// A cost shape together with the acceptance reward `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFunction {
    kind: CostKind,
    gamma: f64,
}

/// Which end of a `γ`-cost step to find.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDirection {
    /// Step towards smaller values.
    Down,
    /// Step towards larger values.
    Up,
}

/// Which argument of `c` the anchor occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorRole {
    /// Solve `c(anchor, t) = γ`.
    Origin,
    /// Solve `c(t, anchor) = γ`.
    Target,
}

const MONOTONE_PROBES: usize = 32;

impl CostFunction {
    /// Validates `γ > 0` and `α > 0`.
    pub fn new(kind: CostKind, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("{gamma} must be positive and finite")));
        }
        if let CostKind::Linear { alpha } = kind {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(invalid("alpha", format!("{alpha} must be positive and finite")));
            }
        }
        Ok(Self { kind, gamma })
    }

    /// `α·|x − x′|` with reward `γ`.
    pub fn linear(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(CostKind::Linear { alpha }, gamma)
    }

    /// `|x − x′|` with `γ = 1`.
    pub fn unit_linear() -> Self {
        Self { kind: CostKind::Linear { alpha: 1.0 }, gamma: 1.0 }
    }

    /// `|x² − x′²|` with reward `γ`.
    pub fn squared_difference(gamma: f64) -> Result<Self> {
        Self::new(CostKind::SquaredDifference, gamma)
    }

    /// Cost shape.
    pub fn kind(&self) -> CostKind {
        self.kind
    }

    /// Whether this is `|x − x′|` with `γ = 1`.
    pub fn is_unit_linear(&self) -> bool {
        self.kind == CostKind::Linear { alpha: 1.0 } && self.gamma == 1.0
    }

    /// `c(x, x′)`.
    pub fn eval(&self, x: f64, x_prime: f64) -> f64 {
        match self.kind {
            CostKind::Linear { alpha } => alpha * (x - x_prime).abs(),
            CostKind::SquaredDifference => (x * x - x_prime * x_prime).abs(),
        }
    }

    /// Reach points `(l_x, u_x)` with `c(l_x, x) = γ` and `c(x, u_x) = γ`.
    ///
    /// Errors if the cost is not increasing along the segment searched.
    pub fn reach_points(&self, x: f64) -> Result<(f64, f64)> {
        let l = self.step(x, StepDirection::Down, AnchorRole::Target)?;
        let u = self.step(x, StepDirection::Up, AnchorRole::Origin)?;
        Ok((l, u))
    }

    /// The point `t` on the given side of `anchor` at which the cost reaches `γ`.
    pub fn step(&self, anchor: f64, dir: StepDirection, role: AnchorRole) -> Result<f64> {
        let sign = match dir {
            StepDirection::Down => -1.0,
            StepDirection::Up => 1.0,
        };
        let g = |t: f64| {
            let c = match role {
                AnchorRole::Origin => self.eval(anchor, t),
                AnchorRole::Target => self.eval(t, anchor),
            };
            c - self.gamma
        };
        let mut h = 1.0;
        let mut far = anchor + sign * h;
        let mut found = false;
        for _ in 0..64 {
            if g(far) >= 0.0 {
                found = true;
                break;
            }
            h *= 2.0;
            far = anchor + sign * h;
        }
        if !found {
            return Err(Error::InvariantViolation(format!("cost from {anchor} never reaches gamma = {}", self.gamma)));
        }
        let (lo, hi) = if sign < 0.0 { (far, anchor) } else { (anchor, far) };
        let root = bisect("reach point", g, lo, hi, Bisection::exhaustive())?;
        // The cost must grow with distance from the anchor along the segment.
        let mut prev = g(anchor);
        for i in 1..=MONOTONE_PROBES {
            let t = anchor + (root - anchor) * (i as f64 / MONOTONE_PROBES as f64);
            let v = g(t);
            if v <= prev {
                return Err(Error::InvariantViolation(format!("cost is not increasing between {anchor} and {root}")));
            }
            prev = v;
        }
        Ok(root)
    }
}

impl Cost for CostFunction {
    fn cost(&self, x: f64, x_prime: f64) -> f64 {
        self.eval(x, x_prime)
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Randomized check of the validity conditions on `domain`:
/// `c(x, x) = 0`, strict growth along segments, and continuity.
pub fn check_cost_validity<C: Cost + ?Sized>(
    cost: &C,
    domain: Interval,
    trials: usize,
    rng: &RandomSource,
) -> Result<()> {
    let mut eng = rng.engine();
    let draw = |e: &mut crate::rng::Engine| domain.lo + domain.width() * e.random::<f64>();
    for _ in 0..trials {
        let x = draw(&mut eng);
        let x2 = draw(&mut eng);
        if cost.cost(x, x).abs() > 1e-12 {
            return Err(Error::InvariantViolation(format!("c({x}, {x}) ≠ 0")));
        }
        if x == x2 {
            continue;
        }
        let s = 0.01 + 0.98 * eng.random::<f64>();
        let mid = x + s * (x2 - x);
        if cost.cost(x, mid).partial_cmp(&cost.cost(x, x2)) != Some(core::cmp::Ordering::Less) {
            return Err(Error::InvariantViolation(format!("c({x}, {mid}) ≥ c({x}, {x2}) although {mid} lies between")));
        }
        let eps = 1e-9 * (1.0 + x2.abs());
        if (cost.cost(x, x2) - cost.cost(x, x2 + eps)).abs() > 1e-6 {
            return Err(Error::InvariantViolation(format!("c({x}, ·) jumps near {x2}")));
        }
    }
    Ok(())
}
