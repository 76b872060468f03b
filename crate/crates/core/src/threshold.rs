//! Threshold classifiers and the grid of candidate thresholds.

use crate::error::{invalid, Result};
use crate::num::Interval;
use alloc::format;
use alloc::vec::Vec;

/// `f_θ(x) = 1{x ≥ θ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdClassifier {
    /// Decision boundary.
    pub theta: f64,
}

impl ThresholdClassifier {
    /// Classifier with boundary `theta`.
    pub const fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// Whether `x` is classified positive.
    pub fn accepts(&self, x: f64) -> bool {
        x >= self.theta
    }
}

/// Equally spaced thresholds `lo, lo + step, …` covering `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    points: Vec<f64>,
    step: f64,
}

impl ThetaGrid {
    /// Grid from `lo` to `hi` (inclusive, up to rounding) with the given step.
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("grid", format!("[{lo}, {hi}] is not a proper interval")));
        }
        if !(step.is_finite() && step > 0.0 && step <= hi - lo) {
            return Err(invalid("step", format!("{step} does not fit in [{lo}, {hi}]")));
        }
        let count = libm::round((hi - lo) / step) as usize + 1;
        if count > 10_000_000 {
            return Err(invalid("step", "grid would exceed 10^7 points"));
        }
        // Points are computed as lo + i·step (never accumulated) so they are reproducible.
        let points = (0..count).map(|i| lo + step * i as f64).collect();
        Ok(Self { points, step })
    }

    /// `[−0.5, 2.5]` with step `0.005` (601 points).
    pub fn standard() -> Self {
        Self::new(-0.5, 2.5, 0.005).expect("preset is valid")
    }

    /// Grid points in ascending order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Spacing.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// `Θ = [first, last]`.
    pub fn range(&self) -> Interval {
        Interval { lo: self.points[0], hi: *self.points.last().expect("non-empty") }
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; grids hold at least two points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point nearest to `theta`.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let i = self.points.partition_point(|&p| p < theta);
        if i == 0 {
            0
        } else if i == self.points.len() || theta - self.points[i - 1] <= self.points[i] - theta {
            i - 1
        } else {
            i
        }
    }
}
