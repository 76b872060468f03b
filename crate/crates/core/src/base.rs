//! The pre-strategic population: a joint distribution over features and labels.

use crate::error::{invalid, Error, Result};
use crate::num::{log_add_exp, norm_cdf, norm_mass, norm_sf, Interval};
use crate::rng::RandomSource;
use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

/// Binary label `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// `y = 0`.
    Negative = 0,
    /// `y = 1`.
    Positive = 1,
}

impl Label {
    /// Both labels, in index order.
    pub const ALL: [Label; 2] = [Label::Negative, Label::Positive];

    /// 0 or 1.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Label from 0/1.
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            _ => Err(invalid("label", format!("{i} is not 0 or 1"))),
        }
    }
}

/// Shape of one mixture component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentKind {
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

impl ComponentKind {
    fn density(&self, x: f64) -> f64 {
        match *self {
            ComponentKind::Gaussian { mean, std } => crate::num::norm_pdf((x - mean) / std) / std,
            ComponentKind::Uniform { lo, hi } => {
                if lo <= x && x <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    fn log_density(&self, x: f64) -> f64 {
        match *self {
            ComponentKind::Gaussian { mean, std } => {
                let z = (x - mean) / std;
                -0.5 * z * z - libm::log(std) - 0.918_938_533_204_672_7
            }
            ComponentKind::Uniform { lo, hi } => {
                if lo <= x && x <= hi {
                    -libm::log(hi - lo)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            ComponentKind::Gaussian { mean, std } => norm_cdf((x - mean) / std),
            ComponentKind::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match *self {
            ComponentKind::Gaussian { mean, std } => norm_mass((a - mean) / std, (b - mean) / std),
            ComponentKind::Uniform { lo, hi } => {
                let l = a.max(lo);
                let h = b.min(hi);
                if h > l {
                    (h - l) / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    fn mass_outside(&self, support: &Interval) -> f64 {
        match *self {
            ComponentKind::Gaussian { mean, std } => {
                norm_cdf((support.lo - mean) / std) + norm_sf((support.hi - mean) / std)
            }
            ComponentKind::Uniform { .. } => 1.0 - self.mass(support.lo, support.hi),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ComponentKind::Gaussian { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            ComponentKind::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// One weighted, labelled component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    /// Label carried by every draw from this component.
    pub label: Label,
    /// Mixture weight.
    pub weight: f64,
    /// Feature distribution.
    pub kind: ComponentKind,
}

/// Joint distribution of `(x, y)` as a finite mixture of labelled components on a support `X`.
///
/// Gaussians are sampled and evaluated untruncated; construction checks that
/// each component puts less than `1e-6` of its mass outside `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseDistribution {
    components: Vec<Component>,
    support: Interval,
}

/// Largest mass a component may leave outside the support.
pub const MAX_OUTSIDE_MASS: f64 = 1e-6;

impl BaseDistribution {
    /// Validates and builds a mixture.
    pub fn new(components: Vec<Component>, support: Interval) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "at least one component is required"));
        }
        if !(support.lo.is_finite() && support.hi.is_finite() && support.lo < support.hi) {
            return Err(invalid("support", "must be a finite interval with lo < hi"));
        }
        let mut total = 0.0;
        for c in &components {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(invalid("weight", format!("{} is not a probability", c.weight)));
            }
            total += c.weight;
            match c.kind {
                ComponentKind::Gaussian { mean, std } => {
                    if !(mean.is_finite() && std.is_finite() && std > 0.0) {
                        return Err(invalid("std", format!("gaussian({mean}, {std}) is degenerate")));
                    }
                }
                ComponentKind::Uniform { lo, hi } => {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(invalid("uniform", format!("[{lo}, {hi}] is empty")));
                    }
                }
            }
            let outside = c.kind.mass_outside(&support);
            if outside >= MAX_OUTSIDE_MASS {
                return Err(invalid("support", format!("component {:?} leaves mass {outside:e} outside X", c.kind)));
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weight", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { components, support })
    }

    /// `½·N(0, (1/3)²)` with label 0 and `½·N(1, (1/3)²)` with label 1 on `X = [−5, 6]`.
    pub fn symmetric_gaussian() -> Self {
        Self::two_gaussians(0.0, 1.0, 1.0 / 3.0, Interval { lo: -5.0, hi: 6.0 }).expect("preset is valid")
    }

    /// Equal-weight Gaussians with a shared standard deviation, label 0 at `mean0`.
    pub fn two_gaussians(mean0: f64, mean1: f64, std: f64, support: Interval) -> Result<Self> {
        Self::new(
            alloc::vec![
                Component { label: Label::Negative, weight: 0.5, kind: ComponentKind::Gaussian { mean: mean0, std } },
                Component { label: Label::Positive, weight: 0.5, kind: ComponentKind::Gaussian { mean: mean1, std } },
            ],
            support,
        )
    }

    /// Uniform feature marginal on `[lo, hi]`, labelled 0 below the midpoint and 1 above.
    pub fn uniform_marginal(lo: f64, hi: f64, support: Interval) -> Result<Self> {
        let mid = 0.5 * (lo + hi);
        Self::new(
            alloc::vec![
                Component { label: Label::Negative, weight: 0.5, kind: ComponentKind::Uniform { lo, hi: mid } },
                Component { label: Label::Positive, weight: 0.5, kind: ComponentKind::Uniform { lo: mid, hi } },
            ],
            support,
        )
    }

    /// Mixture components.
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Feature support `X`.
    pub fn support(&self) -> Interval {
        self.support
    }

    /// Joint density of `(x, y)` for `x ∈ X`.
    pub fn pdf(&self, x: f64, y: Label) -> Result<f64> {
        self.check_in_support(x)?;
        Ok(self.density(x, y))
    }

    /// Joint density on the whole real line (no support check).
    pub fn density(&self, x: f64, y: Label) -> f64 {
        self.components.iter().filter(|c| c.label == y).map(|c| c.weight * c.kind.density(x)).sum()
    }

    /// Feature-marginal density on the whole real line.
    pub fn marginal_density(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.kind.density(x)).sum()
    }

    /// `ln pdf(x, y)`, stable far in the tails.
    pub fn log_density(&self, x: f64, y: Label) -> f64 {
        self.components
            .iter()
            .filter(|c| c.label == y && c.weight > 0.0)
            .map(|c| libm::log(c.weight) + c.kind.log_density(x))
            .fold(f64::NEG_INFINITY, log_add_exp)
    }

    /// Posterior `μ(x) = P[y = 1 | x]` for `x ∈ X`.
    pub fn posterior(&self, x: f64) -> Result<f64> {
        self.check_in_support(x)?;
        let l1 = self.log_density(x, Label::Positive);
        let l0 = self.log_density(x, Label::Negative);
        if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
            return Err(Error::Domain(format!("no density at x = {x}")));
        }
        Ok(1.0 / (1.0 + libm::exp(l0 - l1)))
    }

    /// `P[x ≤ t, y = label]`, or the marginal CDF when `label` is `None`.
    pub fn cdf(&self, t: f64, label: Option<Label>) -> f64 {
        self.selected(label).map(|c| c.weight * c.kind.cdf(t)).sum()
    }

    /// `P[a ≤ x ≤ b, y = label]`, or the marginal mass when `label` is `None`.
    pub fn mass(&self, a: f64, b: f64, label: Option<Label>) -> f64 {
        self.selected(label).map(|c| c.weight * c.kind.mass(a, b)).sum()
    }

    /// `P[y = label]`.
    pub fn label_mass(&self, label: Label) -> f64 {
        self.selected(Some(label)).map(|c| c.weight).sum()
    }

    /// Points where the density may be non-smooth: support ends and uniform edges.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = alloc::vec![self.support.lo, self.support.hi];
        for c in &self.components {
            if let ComponentKind::Uniform { lo, hi } = c.kind {
                v.push(lo);
                v.push(hi);
            }
        }
        v
    }

    /// Whether `μ` is strictly increasing across the given ascending points of `X`.
    ///
    /// Ties are allowed where `μ` has saturated to within `1e-12` of 0 or 1.
    pub fn posterior_is_increasing(&self, points: &[f64]) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for &x in points {
            match self.posterior(x) {
                Ok(m) if m > prev || (m == prev && !(1e-12..=1.0 - 1e-12).contains(&m)) => prev = m,
                _ => return false,
            }
        }
        true
    }

    /// `n` i.i.d. draws of `(x, y)`.
    pub fn sample(&self, n: usize, rng: &RandomSource) -> Vec<(f64, Label)> {
        let mut eng = rng.engine();
        (0..n).map(|_| self.draw(&mut eng)).collect()
    }

    /// `n` i.i.d. feature draws conditional on `y = label`.
    pub fn sample_label(&self, label: Label, n: usize, rng: &RandomSource) -> Result<Vec<f64>> {
        let mut eng = rng.engine();
        (0..n).map(|_| self.draw_label(label, &mut eng)).collect()
    }

    /// One draw of `(x, y)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Label) {
        let c = pick(&self.components, 1.0, rng.random::<f64>());
        (c.kind.draw(rng), c.label)
    }

    /// One feature draw conditional on `y = label`.
    pub fn draw_label<R: Rng + ?Sized>(&self, label: Label, rng: &mut R) -> Result<f64> {
        let total = self.label_mass(label);
        if total <= 0.0 {
            return Err(Error::Domain(format!("label {} has no mass", label.index())));
        }
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut chosen = None;
        for c in self.selected(Some(label)) {
            acc += c.weight / total;
            chosen = Some(c);
            if u < acc {
                break;
            }
        }
        Ok(chosen.expect("label has components").kind.draw(rng))
    }

    fn selected(&self, label: Option<Label>) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(move |c| label.is_none_or(|l| c.label == l))
    }

    fn check_in_support(&self, x: f64) -> Result<()> {
        if self.support.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("x = {x} outside support [{}, {}]", self.support.lo, self.support.hi)))
        }
    }
}

fn pick(components: &[Component], total: f64, u: f64) -> &Component {
    let mut acc = 0.0;
    for c in components {
        acc += c.weight / total;
        if u < acc {
            return c;
        }
    }
    components.last().expect("non-empty")
}
