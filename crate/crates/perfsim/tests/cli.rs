//! End-to-end runs of the `perfsim` binary and the scenario driver.

use perfsim::output::read_csv;
use perfsim::scenario::estimate_optimum_parallel;
use perfsim::ScenarioConfig;
use perfsim_core::estimation::{
    construct_theta0, estimate_optimum_via_oracle, salient_part, EstimatorConfig, ResponseOracle,
};
use perfsim_core::{BaseDistribution, CostFunction, RandomSource, ResponseModel};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_perfsim"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn fig1_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run(&config("fig1.json"), dir, &["--samples", "2000"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ca, cb) = (contents(&a), contents(&b));
    assert_eq!(ca.len(), 6);
    assert_eq!(ca, cb);
    for (name, bytes) in &ca {
        let text = String::from_utf8(bytes.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(
            first.starts_with("# perfsim ") && first.contains("seed=7") && first.contains("config_sha256="),
            "{name}"
        );
    }
}

#[test]
fn overrides_change_the_provenance_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("counterexample.json");
    assert!(run(&cfg, &tmp.path().join("a"), &[]).status.success());
    assert!(run(&cfg, &tmp.path().join("b"), &["--seed", "9"]).status.success());
    let head = |d: &str| {
        let t = std::fs::read_to_string(tmp.path().join(d).join("counterexample.csv")).unwrap();
        t.lines().next().unwrap().to_string()
    };
    assert_ne!(head("a"), head("b"));
    assert!(head("b").contains("seed=9"));
}

#[test]
fn exit_codes_separate_config_and_runtime_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"scenario\": \"counterexample\",\n  \"seed\": 1,\n  \"epsilon\": [0.1],\n  \"colour\": 3\n}\n",
    )
    .unwrap();
    let o = bin().arg("validate").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("colour") && msg.contains("line 5"), "{msg}");

    let range = tmp.path().join("range.json");
    std::fs::write(&range, r#"{"scenario": "optima_burden", "seed": 1, "p": [1.5]}"#).unwrap();
    assert_eq!(run(&range, &tmp.path().join("o"), &[]).status.code(), Some(1));
    assert_eq!(run(&tmp.path().join("missing.json"), &tmp.path().join("o"), &[]).status.code(), Some(1));

    // Output directory blocked by a regular file.
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    assert_eq!(run(&config("counterexample.json"), &blocker, &[]).status.code(), Some(2));

    for name in ["fig1.json", "fig1b.json", "fig3.json", "fig4.json", "smoothness.json", "estimation.json"] {
        let o = bin().arg("validate").arg("--config").arg(config(name)).output().unwrap();
        assert!(o.status.success(), "{name}");
    }
}

#[test]
fn fig3_point_masses_only_for_perfect_response() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("fig3.json"), tmp.path(), &["--samples", "20000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&tmp.path().join("point_masses.csv")).unwrap();
    assert_eq!(header[0], "model");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[0] == "standard" && r[3] == r[4]));
    let (header, rows) = read_csv(&tmp.path().join("density_noisy_sigma0.3_p0_theta1.csv")).unwrap();
    assert_eq!(header, ["grid_x", "density_y0", "density_y1", "marginal"]);
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn fig4_optimum_falls_with_nonstrategic_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("fig4.json"), tmp.path(), &["--samples", "5000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&tmp.path().join("optima_burden.csv")).unwrap();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (sigma, p, po) = (col("sigma"), col("p"), col("theta_po"));
    let mut by_sigma: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r[sigma].is_empty()) {
        by_sigma.entry(r[sigma].clone()).or_default().push((r[p].parse().unwrap(), r[po].parse().unwrap()));
    }
    assert_eq!(by_sigma.len(), 5);
    for (s, mut v) in by_sigma {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in v.windows(2) {
            assert!(w[1].1 <= w[0].1 + 2.0 * 0.005 + 1e-9, "σ = {s}: {w:?}");
        }
    }
    let reference: Vec<_> = rows.iter().filter(|r| r[sigma].is_empty()).map(|r| r[0].clone()).collect();
    assert_eq!(reference, ["standard", "non_strategic"]);
}

#[test]
fn parallel_estimate_matches_sequential() {
    let b = BaseDistribution::symmetric_gaussian();
    let c = CostFunction::linear(2.0, 1.0).unwrap();
    let region = salient_part(construct_theta0(&b, &c, b.support()).unwrap(), &c, &b).unwrap();
    let model = ResponseModel::standard(c);
    let rng = RandomSource::with_stream(4, 1);
    let seq =
        estimate_optimum_via_oracle(&ResponseOracle::new(model), &b, &region, 0.05, &EstimatorConfig::default(), &rng)
            .unwrap();
    let par =
        estimate_optimum_parallel(&ResponseOracle::new(model), &b, &region, 0.05, &EstimatorConfig::default(), &rng)
            .unwrap();
    assert_eq!(seq, par);
}

#[test]
fn library_config_round_trips() {
    let text = std::fs::read_to_string(config("estimation.json")).unwrap();
    let cfg = ScenarioConfig::from_json(&text).unwrap();
    let again = ScenarioConfig::from_json(&cfg.canonical_json()).unwrap();
    assert_eq!(cfg, again);
}
