//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Scenario unless stated: two Gaussians (means 0 and 1, std 1/3, equal weight),
//! cost |x − x′| with γ = 1, threshold grid step 0.005.

use perfsim::parallel::map_indexed;
use perfsim::scenario::estimate_optimum_parallel;
use perfsim::ScenarioConfig;
use perfsim_core::aggregate::{
    density_profile, sample_map, sm_point_mass, smoothness_diagnostic, tv_binned, wasserstein_counterexample,
    Population, DEFAULT_TV_BINS,
};
use perfsim_core::dynamics::{
    local_stability_scan, performative_optimum, performative_optimum_exact, rrm_trajectory, Verdict,
};
use perfsim_core::estimation::{
    construct_theta0, salient_part, sigma_mismatch_pr_bound, tv_lipschitz_bound, tv_sigma_bound, EstimatorConfig,
    ResponseOracle,
};
use perfsim_core::risk::{
    closed_form_pr, nr_pr_closed_form, performative_risk, social_burden, solve_tau, solve_theta_ps_sm, solve_theta_sl,
};
use perfsim_core::{BaseDistribution, CostFunction, RandomSource, ResponseModel, ThetaGrid};
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const N: usize = 100_000;
const STEP: f64 = 0.005;

fn base() -> BaseDistribution {
    BaseDistribution::symmetric_gaussian()
}

fn cost() -> CostFunction {
    CostFunction::unit_linear()
}

fn mix(p: f64, inner: ResponseModel) -> ResponseModel {
    if p == 0.0 {
        inner
    } else {
        ResponseModel::mixture(p, inner).unwrap()
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn analytic_anchors() -> Outcome {
    let (b, c) = (base(), cost());
    let sl = solve_theta_sl(&b).map_err(|e| e.to_string())?;
    let ps = solve_theta_ps_sm(&b, &c).map_err(|e| e.to_string())?;
    let m = ResponseModel::standard(c);
    let g = ThetaGrid::standard();
    let (po, _) = performative_optimum_exact(&m, &b, &g).map_err(|e| e.to_string())?;
    let (po_mc, _) = performative_optimum(&m, &b, &g, N, &RandomSource::new(1)).map_err(|e| e.to_string())?;
    check(
        sl == 0.5 && (ps - 1.0).abs() <= 1e-6 && (po - 1.5).abs() <= 0.05 && (po_mc - 1.5).abs() <= 0.05,
        format!("θ_SL = {sl}, θ_PS = {ps:.9}, θ_PO = {po:.3} (grid argmin at n = 1e5: {po_mc:.3})"),
    )
}

fn oscillation() -> Outcome {
    let (b, c) = (base(), cost());
    let g = ThetaGrid::standard();
    let rng = RandomSource::new(2024);
    let ps = [1.0, 0.0, 0.1, 0.5];
    let trajectories =
        map_indexed(ps.len(), |i| rrm_trajectory(&mix(ps[i], ResponseModel::standard(c)), &b, 0.5, 2000, &g, N, &rng));
    let mut ok = true;
    let mut parts = Vec::new();
    for (&p, t) in ps.iter().zip(trajectories) {
        let t = t.map_err(|e| e.to_string())?;
        match (p, t.verdict) {
            (1.0, Verdict::Converged { limit, .. }) => {
                ok &= (limit - 0.5).abs() <= 0.01;
                parts.push(format!("p=1 → {limit:.4}"));
            }
            (0.0, Verdict::Converged { limit, .. }) => {
                ok &= (limit - 1.0).abs() <= 0.02;
                parts.push(format!("p=0 → {limit:.4}"));
            }
            (_, Verdict::Oscillating { low, high, period }) if p > 0.0 && p < 1.0 => {
                let tau = solve_tau(&b, &c, p).map_err(|e| e.to_string())?;
                ok &= (low - 0.5).abs() <= 0.01 && (high - tau).abs() <= 0.01;
                parts.push(format!("p={p} oscillates [{low:.4}, {high:.4}] τ = {tau:.4} period {period}"));
            }
            (_, v) => {
                ok = false;
                parts.push(format!("p={p}: unexpected {v:?}"));
            }
        }
    }
    let t1 = solve_tau(&b, &c, 0.1).map_err(|e| e.to_string())?;
    let t5 = solve_tau(&b, &c, 0.5).map_err(|e| e.to_string())?;
    ok &= t1 > t5;
    parts.push(format!("τ(0.1) = {t1:.6} > τ(0.5) = {t5:.6}"));
    check(ok, parts.join("; "))
}

fn degeneracy() -> Outcome {
    let (b, c) = (base(), cost());
    let s = sample_map(&ResponseModel::standard(c), &b, 1.0, N, &RandomSource::new(8)).map_err(|e| e.to_string())?;
    let w = sm_point_mass(&b, &c, 1.0).map_err(|e| e.to_string())?;
    let frac = s.atom_count() as f64 / N as f64;
    let se = (w * (1.0 - w) / N as f64).sqrt();
    let inside = s.features().iter().filter(|&&x| 0.0 < x && x < 1.0).count();
    let mut ok = (frac - w).abs() <= 3.0 * se && inside == 0 && (w - 0.4987).abs() < 1e-4;
    let mut parts = vec![format!("atom {frac:.5} vs {w:.5} ± 3·{se:.5}, {inside} strictly inside (0, 1)")];
    let xs: Vec<f64> = (0..=11_000).map(|i| -5.0 + 0.001 * i as f64).collect();
    for sigma in [0.1, 0.3] {
        let m = ResponseModel::noisy(c, sigma).unwrap();
        let atoms = sample_map(&m, &b, 1.0, N, &RandomSource::new(8)).map_err(|e| e.to_string())?.atom_count();
        let prof = density_profile(&m, &b, 1.0, &xs, N, &RandomSource::new(8)).map_err(|e| e.to_string())?;
        let min = prof.marginal().into_iter().fold(f64::INFINITY, f64::min);
        ok &= atoms == 0 && prof.point_masses.is_empty() && min > 0.0;
        parts.push(format!("noisy σ={sigma}: {atoms} atoms, min density {min:.3e}"));
    }
    check(ok, parts.join("; "))
}

fn closed_form_fidelity() -> Outcome {
    let (b, c) = (base(), cost());
    let n = 1_000_000;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for sigma in [0.1, 0.3] {
        let m = ResponseModel::noisy(c, sigma).unwrap();
        for theta in [0.8, 1.0, 1.2] {
            let exact = nr_pr_closed_form(&b, &c, sigma, theta).map_err(|e| e.to_string())?.value;
            let mc = performative_risk(&m, &b, theta, n, &RandomSource::new(31)).map_err(|e| e.to_string())?;
            let z = (mc.value - exact).abs() / mc.std_error;
            worst = worst.max(z);
            ok &= z <= 3.0;
        }
    }
    // Density: total mass and KS against a 10^6-sample empirical CDF at θ = 1, σ = 0.3.
    let m = ResponseModel::noisy(c, 0.3).unwrap();
    let xs: Vec<f64> = (0..=11_000).map(|i| -5.0 + 0.001 * i as f64).collect();
    let prof = density_profile(&m, &b, 1.0, &xs, n, &RandomSource::new(32)).map_err(|e| e.to_string())?;
    let mass = prof.total_mass();
    let cdf = prof.marginal_cdf();
    let mut sample = sample_map(&m, &b, 1.0, n, &RandomSource::new(33)).map_err(|e| e.to_string())?.features();
    sample.sort_by(f64::total_cmp);
    let ks = xs
        .iter()
        .zip(&cdf)
        .map(|(&x, &f)| (sample.partition_point(|&s| s <= x) as f64 / n as f64 - f).abs())
        .fold(0.0, f64::max);
    ok &= (mass - 1.0).abs() <= 1e-3 && ks < 0.01;
    check(ok, format!("max |MC − exact| = {worst:.2} SE over 6 points; density mass {mass:.6}, KS {ks:.5}"))
}

fn optima_and_burden() -> Outcome {
    let (b, c) = (base(), cost());
    let g = ThetaGrid::standard();
    let sigmas = [0.05, 0.1, 0.2, 0.3, 0.5];
    let ps = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9];
    let mut ok = true;
    let mut rows = Vec::new();
    for &s in &sigmas {
        let mut row = Vec::new();
        for &p in &ps {
            let m = mix(p, ResponseModel::noisy(c, s).unwrap());
            let (po, _) = performative_optimum_exact(&m, &b, &g).map_err(|e| e.to_string())?;
            row.push(po);
        }
        ok &= row.windows(2).all(|w| w[1] <= w[0] + 2.0 * STEP + 1e-9);
        rows.push(row);
    }
    let at_p0: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let burden: Vec<f64> = at_p0.iter().map(|&t| social_burden(&b, &c, t).unwrap()).collect();
    ok &= at_p0.windows(2).all(|w| w[1] <= w[0] + 2.0 * STEP + 1e-9);
    ok &= burden.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let (po_sm, _) = performative_optimum_exact(&ResponseModel::standard(c), &b, &g).map_err(|e| e.to_string())?;
    let b_sm = social_burden(&b, &c, po_sm).map_err(|e| e.to_string())?;
    let b_nr = burden[3];
    ok &= b_nr < b_sm;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
    check(
        ok,
        format!(
            "θ_PO(p=0) by σ {}; burden {}; B(NR 0.3) = {b_nr:.4} < B(SM) = {b_sm:.4}; θ_PO(σ=0.3) by p {}",
            fmt(&at_p0),
            fmt(&burden),
            fmt(&rows[3])
        ),
    )
}

fn tv_bounds() -> Outcome {
    let (b, c) = (base(), cost());
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for sigma in [0.1, 0.3] {
        let m = ResponseModel::noisy(c, sigma).unwrap();
        let pop = Population::draw(&m, &b, N, &RandomSource::new(41));
        for theta in [0.6, 0.8, 1.0, 1.2] {
            for gap in [0.05, 0.2] {
                let tv = tv_binned(&pop.respond(theta), &pop.respond(theta + gap), DEFAULT_TV_BINS, true)
                    .map_err(|e| e.to_string())?;
                let bound = tv_lipschitz_bound(sigma, theta, theta + gap).map_err(|e| e.to_string())?;
                worst = worst.max(tv.value - bound - 3.0 * tv.error);
                ok &= tv.value <= bound + 3.0 * tv.error;
            }
        }
    }
    let g = ThetaGrid::standard();
    let mut parts = vec![format!("Lipschitz slack ≥ {:.4}", -worst)];
    for (s, s_hat) in [(0.3, 0.33), (0.1, 0.12), (0.3, 0.25)] {
        let rng = RandomSource::new(42);
        let truth = ResponseModel::noisy(c, s).unwrap();
        let guess = ResponseModel::noisy(c, s_hat).unwrap();
        let bound = tv_sigma_bound(s, s_hat, 1).map_err(|e| e.to_string())?;
        let mut max_tv: f64 = 0.0;
        for theta in [0.8, 1.0, 1.2] {
            let a = Population::draw(&truth, &b, N, &rng).respond(theta);
            let z = Population::draw(&guess, &b, N, &rng).respond(theta);
            let tv = tv_binned(&a, &z, DEFAULT_TV_BINS, true).map_err(|e| e.to_string())?;
            ok &= tv.value <= bound + 3.0 * tv.error;
            max_tv = max_tv.max(tv.value);
        }
        let (_, best) = performative_optimum_exact(&truth, &b, &g).map_err(|e| e.to_string())?;
        let (po_hat, _) = performative_optimum_exact(&guess, &b, &g).map_err(|e| e.to_string())?;
        let gap = closed_form_pr(&truth, &b, po_hat).map_err(|e| e.to_string())?.value - best.value;
        let pr_bound = sigma_mismatch_pr_bound(s, s_hat, 1).map_err(|e| e.to_string())?;
        ok &= gap <= pr_bound;
        parts.push(format!("({s}, {s_hat}): TV {max_tv:.4} ≤ {bound:.4}, PR gap {gap:.2e} ≤ {pr_bound:.4}"));
    }
    check(ok, parts.join("; "))
}

fn estimation() -> Outcome {
    let b = base();
    let eps = 0.02;
    let support = b.support();
    let fine = ThetaGrid::new(support.lo, support.hi, STEP).map_err(|e| e.to_string())?;
    let mut calls = Vec::new();
    let mut hits = 0;
    for alpha in [1.0, 2.0, 4.0] {
        let c = CostFunction::linear(alpha, 1.0).map_err(|e| e.to_string())?;
        let m = ResponseModel::standard(c);
        let region = salient_part(construct_theta0(&b, &c, support).map_err(|e| e.to_string())?, &c, &b)
            .map_err(|e| e.to_string())?;
        let trials = if alpha == 1.0 { 20 } else { 1 };
        let (_, best) = performative_optimum_exact(&m, &b, &fine).map_err(|e| e.to_string())?;
        let mut spent = 0;
        for t in 0..trials {
            let oracle = ResponseOracle::new(m);
            let rng = RandomSource::with_stream(700, t);
            let est = estimate_optimum_parallel(&oracle, &b, &region, eps, &EstimatorConfig::default(), &rng)
                .map_err(|e| e.to_string())?;
            if alpha == 1.0 {
                let truth = closed_form_pr(&m, &b, est.theta_hat).map_err(|e| e.to_string())?.value;
                hits += usize::from(truth <= best.value + eps);
            }
            spent = est.calls;
        }
        calls.push(spent);
    }
    let ok = hits >= 18 && calls[0] > calls[1] && calls[1] > calls[2];
    check(ok, format!("{hits}/20 trials within ε of PR(θ_PO); calls at α = 1/2/4: {calls:?}"))
}

fn smoothness() -> Outcome {
    let (b, c) = (base(), cost());
    let thetas = [0.7, 0.8];
    let delta = 0.005;
    let n = 200_000;
    let rng = RandomSource::new(51);
    let noisy = ResponseModel::noisy(c, 0.3).unwrap();
    let ns = ResponseModel::non_strategic(c);
    let sm = mix(0.5, ResponseModel::standard(c));
    let r_noisy = smoothness_diagnostic(&noisy, &b, &thetas, delta, n, &rng).map_err(|e| e.to_string())?;
    let r_ns = smoothness_diagnostic(&ns, &b, &thetas, delta, n, &rng).map_err(|e| e.to_string())?;
    let r_sm = smoothness_diagnostic(&sm, &b, &thetas, delta, n, &rng).map_err(|e| e.to_string())?;
    let at_theta = thetas.iter().all(|&t| r_sm.flags.iter().any(|f| f.left < t && t <= f.right + 1e-12));
    let grid = ThetaGrid::new(0.0, 1.5, 0.05).map_err(|e| e.to_string())?;
    let stable = |m: &ResponseModel| {
        local_stability_scan(m, &b, &grid, 0.1, N, &RandomSource::new(52))
            .map(|s| s.iter().filter(|e| e.stable).count())
            .map_err(|e| e.to_string())
    };
    let (s_noisy, s_ns) = (stable(&noisy)?, stable(&ns)?);
    check(
        r_noisy.is_smooth() && r_ns.is_smooth() && at_theta && s_noisy >= 1 && s_ns >= 1,
        format!(
            "flags: noisy {} / non-strategic {} / mixture {} (at θ′ = θ: {at_theta}); stable points: noisy {s_noisy}, non-strategic {s_ns}",
            r_noisy.flags.len(),
            r_ns.flags.len(),
            r_sm.flags.len()
        ),
    )
}

fn wasserstein() -> Outcome {
    let r = wasserstein_counterexample(&[1e-2, 1e-4]).map_err(|e| e.to_string())?;
    let factor = r[1].1 / r[0].1;
    check(factor >= 5.0, format!("ratio {:.3} at 1e-2, {:.3} at 1e-4, factor {factor:.2}", r[0].1, r[1].1))
}

fn determinism() -> Outcome {
    let configs = [
        r#"{"scenario": "oscillation", "seed": 7, "n": 5000, "rounds": 200, "p": [0.0, 0.5]}"#,
        r#"{"scenario": "densities", "seed": 7, "n": 5000, "response": "noisy", "sigma": [0.3], "thetas": [1.0],
            "x_grid": {"lo": -1.0, "hi": 2.0, "step": 0.05}, "include_standard": true}"#,
        r#"{"scenario": "optima_burden", "seed": 7, "n": 5000, "response": "noisy", "sigma": [0.3], "p": [0.0, 0.5]}"#,
        r#"{"scenario": "smoothness", "seed": 7, "n": 5000, "p": [0.5], "thetas": [0.8], "delta": 0.01}"#,
        r#"{"scenario": "estimation", "seed": 7, "grid": {"lo": -5.0, "hi": 6.0, "step": 0.005},
            "cost": {"kind": "linear", "alpha": 4.0, "gamma": 1.0}, "epsilon": [0.1], "trials": 2}"#,
        r#"{"scenario": "counterexample", "seed": 7, "epsilon": [0.01, 0.001]}"#,
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, text) in configs.iter().enumerate() {
        let cfg = ScenarioConfig::from_json(text).map_err(|e| e.to_string())?;
        let a = tmp.path().join(format!("{i}a"));
        let z = tmp.path().join(format!("{i}b"));
        let pa = perfsim::run(&cfg, &a).map_err(|e| e.to_string())?;
        let pz = perfsim::run(&cfg, &z).map_err(|e| e.to_string())?;
        if pa.len() != pz.len() {
            return Err(format!("{}: file lists differ", cfg.scenario.name()));
        }
        for (x, y) in pa.iter().zip(&pz) {
            let (bx, by) = (std::fs::read(x).map_err(|e| e.to_string())?, std::fs::read(y).map_err(|e| e.to_string())?);
            if bx != by || x.file_name() != y.file_name() {
                return Err(format!("{} differs", x.display()));
            }
            files += 1;
        }
    }
    Ok(format!("{files} files byte-identical across reruns of 6 scenarios"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("analytic anchors", analytic_anchors),
        ("oscillation", oscillation),
        ("degeneracy diagnostics", degeneracy),
        ("closed-form fidelity", closed_form_fidelity),
        ("optima and burden trends", optima_and_burden),
        ("TV bounds", tv_bounds),
        ("oracle estimation", estimation),
        ("smoothness dichotomy", smoothness),
        ("Wasserstein counterexample", wasserstein),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
