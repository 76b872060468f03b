//! Closed-form quantities checked against independent arithmetic.

use perfsim_core::aggregate::{
    density_profile, nr_density, standard_w1, w1_distance, wasserstein_counterexample, Population,
};
use perfsim_core::num::Interval;
use perfsim_core::risk::{
    closed_form_pr, gamma_ratio, nr_pr_closed_form, performative_risk, social_burden, solve_tau, solve_theta_ps_sm,
    solve_theta_sl, z_function,
};
use perfsim_core::{BaseDistribution, CostFunction, Label, RandomSource, ResponseModel};
use proptest::prelude::*;

const S: f64 = 1.0 / 3.0;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `P[a ≤ x < b, y]` for the symmetric mixture.
fn mass(a: f64, b: f64, y: Label) -> f64 {
    let m = if y == Label::Positive { 1.0 } else { 0.0 };
    0.5 * (big_phi((b - m) / S) - big_phi((a - m) / S))
}

fn both(a: f64, b: f64) -> f64 {
    mass(a, b, Label::Negative) + mass(a, b, Label::Positive)
}

fn setup() -> (BaseDistribution, CostFunction) {
    (BaseDistribution::symmetric_gaussian(), CostFunction::unit_linear())
}

#[test]
fn supervised_threshold_is_exactly_one_half() {
    let (b, _) = setup();
    assert_eq!(solve_theta_sl(&b).unwrap(), 0.5);
    assert!((b.posterior(0.5).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn posterior_at_one() {
    let (b, _) = setup();
    // Gaussian pdf ratio 3 standard deviations apart: 1 / (1 + e^{-4.5}).
    let oracle = phi(0.0) / (phi(0.0) + phi(1.0 / S));
    assert!((oracle - 0.989013).abs() < 1e-6);
    assert!((b.posterior(1.0).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn stable_point_of_perfect_response() {
    let (b, c) = setup();
    assert!((gamma_ratio(&b, &c, 1.0).unwrap() - 0.5).abs() < 1e-12);
    assert!((solve_theta_ps_sm(&b, &c).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn tau_matches_independent_bisection() {
    let (b, c) = setup();
    let z = |p: f64, t: f64| {
        p * (mass(0.5, t, Label::Positive) - mass(0.5, t, Label::Negative))
            + (1.0 - p) * (mass(t - 1.0, t, Label::Positive) - mass(t - 1.0, t, Label::Negative))
    };
    for p in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9] {
        let (mut lo, mut hi) = (0.5 + 1e-9, 1.0);
        // Z < 0 just above θ_SL and Z > 0 at θ_PS for p > 0.
        assert!(z(p, lo) < 0.0 && z(p, hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if z(p, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = solve_tau(&b, &c, p).unwrap();
        assert!((tau - hi).abs() < 1e-8, "p = {p}: {tau} vs {hi}");
        assert!(z_function(&b, &c, p, tau).unwrap().abs() < 1e-8);
    }
    assert!((solve_tau(&b, &c, 0.1).unwrap() - 0.983639).abs() < 1e-5);
    assert!((solve_tau(&b, &c, 0.5).unwrap() - 0.894306).abs() < 1e-5);
    assert!((solve_tau(&b, &c, 1.0).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn burden_is_truncated_gaussian_mean() {
    let (b, c) = setup();
    for theta in [0.2, 0.5, 0.8, 1.0, 1.4] {
        let d = (theta - 1.0) / S;
        let oracle = (theta - 1.0) * big_phi(d) + S * phi(d);
        let got = social_burden(&b, &c, theta).unwrap();
        assert!((got - oracle).abs() < 1e-7, "θ = {theta}: {got} vs {oracle}");
    }
    let b05 = social_burden(&b, &c, 0.5).unwrap();
    assert!((b05 - (S * phi(1.5) - 0.5 * big_phi(-1.5))).abs() < 1e-7);
    assert!((b05 - 0.0098).abs() < 1e-4);
}

#[test]
fn perfect_response_risk_at_one_and_a_half() {
    let (b, c) = setup();
    let pr = closed_form_pr(&ResponseModel::standard(c), &b, 1.5).unwrap().value;
    let oracle = mass(0.5, f64::INFINITY, Label::Negative) + mass(f64::NEG_INFINITY, 0.5, Label::Positive);
    assert!((pr - oracle).abs() < 1e-12);
    assert!((pr - big_phi(-1.5)).abs() < 1e-12);
}

#[test]
fn noisy_risk_matches_monte_carlo() {
    let (b, c) = setup();
    for (sigma, theta) in [(0.1, 0.8), (0.3, 1.0), (0.3, 1.2)] {
        let m = ResponseModel::noisy(c, sigma).unwrap();
        let exact = nr_pr_closed_form(&b, &c, sigma, theta).unwrap().value;
        let mc = performative_risk(&m, &b, theta, 200_000, &RandomSource::new(31)).unwrap();
        assert!((exact - mc.value).abs() <= 3.0 * mc.std_error, "σ={sigma} θ={theta}: {exact} vs {mc:?}");
    }
}

#[test]
fn small_noise_limit_is_not_perfect_response() {
    let (b, c) = setup();
    let theta = 1.5;
    // Movers with η < 0 aim short of θ and stay rejected; half of them in the limit.
    let limit = mass(theta, f64::INFINITY, Label::Negative)
        + mass(f64::NEG_INFINITY, theta - 1.0, Label::Positive)
        + 0.5 * both(theta - 1.0, theta);
    let nr = nr_pr_closed_form(&b, &c, 1e-4, theta).unwrap().value;
    assert!((nr - limit).abs() < 1e-3, "{nr} vs {limit}");
    let sm = closed_form_pr(&ResponseModel::standard(c), &b, theta).unwrap().value;
    assert!((limit - 0.2667).abs() < 1e-3 && (sm - 0.0668).abs() < 1e-3);
}

#[test]
fn small_noise_aggregate_converges_weakly() {
    let (b, c) = setup();
    let rng = RandomSource::new(4);
    let sm = Population::draw(&ResponseModel::standard(c), &b, 50_000, &rng).sample_at(1.0);
    let mut last = f64::INFINITY;
    for sigma in [0.1, 0.01, 0.001] {
        let nr = Population::draw(&ResponseModel::noisy(c, sigma).unwrap(), &b, 50_000, &rng).sample_at(1.0);
        let w = w1_distance(&nr.features(), &sm.features()).unwrap();
        assert!(w < last);
        last = w;
    }
    assert!(last < 2e-3);
}

#[test]
fn noisy_density_is_a_probability_density() {
    let (b, c) = setup();
    let m = ResponseModel::noisy(c, 0.3).unwrap();
    let grid: Vec<f64> = (0..=11_000).map(|i| -5.0 + i as f64 * 1e-3).collect();
    let prof = density_profile(&m, &b, 1.0, &grid, 0, &RandomSource::new(0)).unwrap();
    assert!(prof.point_masses.is_empty());
    assert!((prof.total_mass() - 1.0).abs() < 1e-3);
    assert!(prof.marginal().iter().all(|&d| d > 0.0));
    // Label masses are untouched by the response.
    let pos = perfsim_core::num::trapezoid(&grid, &prof.density[1]);
    assert!((pos - 0.5).abs() < 1e-3);
}

#[test]
fn noisy_density_far_from_threshold_is_base() {
    let (b, c) = setup();
    // Nobody moves to 3.2 when θ = 0 and σ is small; density is untouched there.
    for y in Label::ALL {
        let d = nr_density(&b, &c, 0.05, 0.0, -2.0, y).unwrap();
        assert!((d - b.density(-2.0, y)).abs() < 1e-12);
    }
}

#[test]
fn wasserstein_ratio_closed_form() {
    let eps = [1.0, 1e-2, 1e-4];
    let got = wasserstein_counterexample(&eps).unwrap();
    for (&e, &(ge, ratio)) in eps.iter().zip(&got) {
        assert_eq!(e, ge);
        let s = (e * e + 2.0 * e).sqrt().min(1.0);
        let w1 = s * s / 2.0 + s * (1.0 - s) + e * (1.0 - s);
        assert!((ratio - w1 / e).abs() / (w1 / e) < 1e-4, "ε = {e}: {ratio} vs {}", w1 / e);
    }
    assert!(got[2].1 / got[1].1 >= 5.0);
}

#[test]
fn standard_w1_vanishes_for_equal_thresholds() {
    let (b, c) = setup();
    assert!(standard_w1(&b, &c, 1.0, 1.0).unwrap().abs() < 1e-12);
}

proptest! {
    #[test]
    fn gamma_ratio_increases(t in 0.0f64..2.0, d in 1e-3f64..0.5) {
        let (b, c) = setup();
        prop_assert!(gamma_ratio(&b, &c, t).unwrap() <= gamma_ratio(&b, &c, t + d).unwrap() + 1e-12);
    }

    #[test]
    fn tau_decreases_in_p(p in 0.01f64..0.99, d in 1e-3f64..0.3) {
        let (b, c) = setup();
        let q = (p + d).min(1.0);
        prop_assert!(solve_tau(&b, &c, q).unwrap() <= solve_tau(&b, &c, p).unwrap() + 1e-9);
    }

    #[test]
    fn tau_between_supervised_and_stable(p in 0.0f64..=1.0) {
        let (b, c) = setup();
        let t = solve_tau(&b, &c, p).unwrap();
        prop_assert!((0.5 - 1e-9..=1.0 + 1e-6).contains(&t));
    }

    #[test]
    fn posterior_increases_for_gaussian_pairs(m0 in -1.0f64..1.0, gap in 0.1f64..2.0, s in 0.2f64..1.0) {
        let b = BaseDistribution::two_gaussians(m0, m0 + gap, s, Interval::new(m0 - 12.0 * s, m0 + gap + 12.0 * s).unwrap()).unwrap();
        let pts: Vec<f64> = (0..200).map(|i| m0 - 10.0 * s + i as f64 * (gap + 20.0 * s) / 199.0).collect();
        prop_assert!(b.posterior_is_increasing(&pts));
        let sl = solve_theta_sl(&b).unwrap();
        prop_assert!((sl - (m0 + gap / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn closed_form_pr_is_linear_in_p(p in 0.0f64..=1.0, t in 0.0f64..2.0) {
        let (b, c) = setup();
        let inner = ResponseModel::noisy(c, 0.3).unwrap();
        let mix = closed_form_pr(&ResponseModel::mixture(p, inner).unwrap(), &b, t).unwrap().value;
        let ns = closed_form_pr(&ResponseModel::non_strategic(c), &b, t).unwrap().value;
        let st = closed_form_pr(&inner, &b, t).unwrap().value;
        prop_assert!((mix - (p * ns + (1.0 - p) * st)).abs() < 1e-12);
    }
}
