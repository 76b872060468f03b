//! Binds each scenario to library calls and writes its outputs.

use crate::config::{ResponseKind, Scenario, ScenarioConfig};
use crate::output::{num, opt, write_csv, write_json, Provenance};
use crate::parallel::map_indexed;
use crate::RunError;
use perfsim_core::aggregate::{density_profile, smoothness_diagnostic, wasserstein_counterexample};
use perfsim_core::dynamics::{performative_optimum, performative_optimum_exact, rrm_trajectory, Verdict};
use perfsim_core::estimation::{
    construct_theta0, epsilon_net, finish_estimate, net_point_risk, salient_part, sample_sizes, EstimatorConfig,
    OracleEstimate, ResponseOracle,
};
use perfsim_core::risk::{social_burden, solve_tau, solve_theta_sl};
use perfsim_core::{BaseDistribution, RandomSource, ResponseModel};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Runs `cfg`, writing into `out` (created if missing); returns the files written.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let prov = Provenance::of(cfg);
    match cfg.scenario {
        Scenario::Oscillation => oscillation(cfg, out, &prov),
        Scenario::Densities => densities(cfg, out, &prov),
        Scenario::OptimaBurden => optima_burden(cfg, out, &prov),
        Scenario::Smoothness => smoothness(cfg, out, &prov),
        Scenario::Estimation => estimation(cfg, out, &prov),
        Scenario::Counterexample => counterexample(cfg, out, &prov),
    }
}

/// One `(strategic model, p)` combination.
struct Variant {
    model: ResponseModel,
    p: f64,
    sigma: Option<f64>,
}

impl Variant {
    fn tag(&self) -> String {
        let kind = match (self.model.behavior(), self.sigma) {
            (_, Some(s)) => format!("noisy_sigma{s}"),
            (perfsim_core::Behavior::NonStrategic, _) => "non_strategic".into(),
            _ => "standard".into(),
        };
        format!("{kind}_p{}", self.p)
    }

    fn cells(&self) -> Vec<String> {
        vec![self.model.descriptor(), num(self.p), opt(self.sigma)]
    }
}

fn variants(cfg: &ScenarioConfig) -> Result<Vec<Variant>, RunError> {
    let mut out = Vec::new();
    for inner in cfg.strategic_models()? {
        for &p in &cfg.p {
            out.push(Variant { model: ScenarioConfig::mixed(p, &inner)?, p, sigma: inner.sigma() });
        }
    }
    Ok(out)
}

fn oscillation(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.base()?;
    let cost = cfg.cost()?;
    let grid = cfg.theta_grid()?;
    let theta0 = match cfg.theta0 {
        Some(t) => t,
        None => solve_theta_sl(&base)?,
    };
    // Every variant sees the same populations round by round.
    let rng = RandomSource::new(cfg.seed);
    let vs = variants(cfg)?;
    let trajectories =
        map_indexed(vs.len(), |i| rrm_trajectory(&vs[i].model, &base, theta0, cfg.rounds, &grid, cfg.n, &rng));
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (v, t) in vs.iter().zip(trajectories) {
        let t = t?;
        let tag = t.verdict.tag();
        let rows = t
            .thetas
            .iter()
            .enumerate()
            .map(|(k, th)| vec![k.to_string(), num(*th), opt(t.risks.get(k).copied()), tag.to_string()]);
        let header = ["round", "theta", "dpr_at_theta", "verdict"];
        files.push(write_csv(out, &format!("trajectory_{}.csv", v.tag()), prov, &header, rows)?);
        let tau = if cfg.response == ResponseKind::Standard { Some(solve_tau(&base, &cost, v.p)?) } else { None };
        let (limit, low, high, period) = match t.verdict {
            Verdict::Converged { limit, .. } => (Some(limit), None, None, None),
            Verdict::Oscillating { low, high, period } => (None, Some(low), Some(high), Some(period)),
            Verdict::BudgetExhausted => (None, None, None, None),
        };
        let mut row = v.cells();
        row.extend([t.verdict.tag().to_string(), opt(limit), opt(low), opt(high), opt(period), opt(tau)]);
        summary.push(row);
    }
    files.push(write_csv(
        out,
        "oscillation.csv",
        prov,
        &["model", "p", "sigma", "verdict", "limit", "low", "high", "period", "tau"],
        summary,
    )?);
    Ok(files)
}

fn densities(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.base()?;
    let xs = cfg.x_grid.expect("validated").points()?;
    let mut vs = variants(cfg)?;
    if cfg.include_standard && cfg.response != ResponseKind::Standard {
        let inner = ResponseModel::standard(cfg.cost()?);
        for &p in &cfg.p {
            vs.push(Variant { model: ScenarioConfig::mixed(p, &inner)?, p, sigma: None });
        }
    }
    let rng = RandomSource::new(cfg.seed);
    let mut files = Vec::new();
    let mut atoms = Vec::new();
    for (j, &theta) in cfg.thetas.iter().enumerate() {
        for v in &vs {
            let prof = density_profile(&v.model, &base, theta, &xs, cfg.n, &rng.substream(j as u64))?;
            let marginal = prof.marginal();
            let rows = (0..xs.len())
                .map(|i| vec![num(xs[i]), num(prof.density[0][i]), num(prof.density[1][i]), num(marginal[i])]);
            files.push(write_csv(
                out,
                &format!("density_{}_theta{theta}.csv", v.tag()),
                prov,
                &["grid_x", "density_y0", "density_y1", "marginal"],
                rows,
            )?);
            for pm in &prof.point_masses {
                let mut row = v.cells();
                row.extend([num(theta), num(pm.location), num(pm.weight)]);
                atoms.push(row);
            }
        }
    }
    files.push(write_csv(
        out,
        "point_masses.csv",
        prov,
        &["model", "p", "sigma", "theta", "location", "weight"],
        atoms,
    )?);
    Ok(files)
}

fn optimum_row(v: &Variant, base: &BaseDistribution, cfg: &ScenarioConfig) -> Result<Vec<String>, RunError> {
    let grid = cfg.theta_grid()?;
    let cost = cfg.cost()?;
    let (theta_mc, pr_mc) = performative_optimum(&v.model, base, &grid, cfg.n, &RandomSource::new(cfg.seed))?;
    let (theta, pr, method) = match performative_optimum_exact(&v.model, base, &grid) {
        Ok((t, r)) => (t, r.value, "closed_form"),
        Err(perfsim_core::Error::Unsupported(_)) => (theta_mc, pr_mc.value, "monte_carlo"),
        Err(e) => return Err(e.into()),
    };
    let mut row = v.cells();
    row.extend([
        num(theta),
        num(pr),
        num(social_burden(base, &cost, theta)?),
        method.to_string(),
        num(theta_mc),
        num(pr_mc.value),
        num(pr_mc.std_error),
    ]);
    Ok(row)
}

fn optima_burden(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.base()?;
    let mut vs = variants(cfg)?;
    if cfg.include_standard {
        let c = cfg.cost()?;
        vs.push(Variant { model: ResponseModel::standard(c), p: 0.0, sigma: None });
        vs.push(Variant { model: ResponseModel::non_strategic(c), p: 0.0, sigma: None });
    }
    let rows = map_indexed(vs.len(), |i| optimum_row(&vs[i], &base, cfg)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let header = ["model", "p", "sigma", "theta_po", "pr", "burden", "method", "theta_po_mc", "pr_mc", "pr_mc_se"];
    Ok(vec![write_csv(out, "optima_burden.csv", prov, &header, rows)?])
}

fn smoothness(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.base()?;
    let vs = variants(cfg)?;
    let rng = RandomSource::new(cfg.seed);
    let reports =
        map_indexed(vs.len(), |i| smoothness_diagnostic(&vs[i].model, &base, &cfg.thetas, cfg.delta, cfg.n, &rng));
    let (mut est, mut flags, mut summary) = (Vec::new(), Vec::new(), Vec::new());
    for (v, r) in vs.iter().zip(reports) {
        let r = r?;
        for e in &r.estimates {
            let mut row = v.cells();
            row.extend([num(e.theta), num(e.theta_prime), num(e.derivative), num(e.std_error)]);
            est.push(row);
        }
        for f in &r.flags {
            let mut row = v.cells();
            row.extend([num(f.theta), num(f.left), num(f.right), num(f.jump), num(f.noise)]);
            flags.push(row);
        }
        let mut row = v.cells();
        row.extend([r.is_smooth().to_string(), r.flags.len().to_string()]);
        summary.push(row);
    }
    Ok(vec![
        write_csv(
            out,
            "smoothness_estimates.csv",
            prov,
            &["model", "p", "sigma", "theta", "theta_prime", "derivative", "std_error"],
            est,
        )?,
        write_csv(
            out,
            "smoothness_flags.csv",
            prov,
            &["model", "p", "sigma", "theta", "left", "right", "jump", "noise"],
            flags,
        )?,
        write_csv(out, "smoothness.csv", prov, &["model", "p", "sigma", "smooth", "flags"], summary)?,
    ])
}

/// One estimation run, in output form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    /// Net spacing and target suboptimality.
    pub epsilon: f64,
    /// Base mass of the salient part.
    pub zeta: f64,
    /// Oracle queries spent.
    pub calls: u64,
    /// Estimated optimum.
    pub theta_hat: f64,
    /// Estimated risk at `theta_hat`.
    pub pr_hat: f64,
    /// High-probability upper bound on the true risk at `theta_hat`.
    pub pr_true_bound: f64,
}

impl From<&OracleEstimate> for EstimationReport {
    fn from(e: &OracleEstimate) -> Self {
        Self {
            epsilon: e.epsilon,
            zeta: e.zeta,
            calls: e.calls,
            theta_hat: e.theta_hat,
            pr_hat: e.pr_hat,
            pr_true_bound: e.pr_true_bound,
        }
    }
}

#[derive(Serialize)]
struct EstimationFile {
    provenance: Provenance,
    model: String,
    theta0: [f64; 2],
    salient: [f64; 2],
    reports: Vec<EstimationReport>,
}

/// [`perfsim_core::estimation::estimate_optimum_via_oracle`] with net points on worker threads.
///
/// Identical output to the sequential version: point `k` always uses `rng.substream(k)`.
pub fn estimate_optimum_parallel(
    oracle: &ResponseOracle,
    base: &BaseDistribution,
    region: &perfsim_core::estimation::SalientRegion,
    epsilon: f64,
    config: &EstimatorConfig,
    rng: &RandomSource,
) -> Result<OracleEstimate, RunError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(perfsim_core::Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")).into());
    }
    let start = oracle.calls();
    let points = epsilon_net(region.theta0, epsilon);
    let sizes = sample_sizes(base, region, epsilon, config);
    let risks =
        map_indexed(points.len(), |k| net_point_risk(oracle, base, region, sizes, points[k], &rng.substream(k as u64)));
    let net = points.iter().zip(risks).map(|(&t, r)| r.map(|r| (t, r))).collect::<Result<Vec<_>, _>>()?;
    Ok(finish_estimate(base, region, epsilon, sizes, net, oracle.calls() - start)?)
}

fn estimation(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.base()?;
    let cost = cfg.cost()?;
    let v = variants(cfg)?.into_iter().next().expect("at least one variant");
    let g = cfg.theta_grid()?.range();
    let region = salient_part(construct_theta0(&base, &cost, g)?, &cost, &base)?;
    let mut reports = Vec::new();
    for (ei, &eps) in cfg.epsilon.iter().enumerate() {
        for t in 0..cfg.trials {
            let oracle = ResponseOracle::new(v.model);
            let rng = RandomSource::with_stream(cfg.seed, (ei * cfg.trials + t) as u64);
            let est = estimate_optimum_parallel(&oracle, &base, &region, eps, &EstimatorConfig::default(), &rng)?;
            reports.push(EstimationReport::from(&est));
        }
    }
    let file = EstimationFile {
        provenance: prov.clone(),
        model: v.model.descriptor(),
        theta0: [region.theta0.lo, region.theta0.hi],
        salient: [region.salient.lo, region.salient.hi],
        reports,
    };
    Ok(vec![write_json(out, "estimation.json", &file)?])
}

fn counterexample(cfg: &ScenarioConfig, out: &Path, prov: &Provenance) -> Result<Vec<PathBuf>, RunError> {
    let rows = wasserstein_counterexample(&cfg.epsilon)?.into_iter().map(|(e, r)| vec![num(e), num(r * e), num(r)]);
    Ok(vec![write_csv(out, "counterexample.csv", prov, &["epsilon", "w1", "ratio"], rows)?])
}
