//! CSV and JSON writers that stamp every file with its provenance.

use crate::{RunError, ScenarioConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Library version written into every output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where an output came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    /// Tool name and version.
    pub version: String,
    /// Scenario name.
    pub scenario: String,
    /// Master seed.
    pub seed: u64,
    /// SHA-256 of the canonical effective configuration.
    pub config_sha256: String,
}

impl Provenance {
    /// Provenance of a run of `cfg`.
    pub fn of(cfg: &ScenarioConfig) -> Self {
        let digest = Sha256::digest(cfg.canonical_json().as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").expect("writing to a String");
        }
        Self {
            version: format!("perfsim {VERSION}"),
            scenario: cfg.scenario.name().to_string(),
            seed: cfg.seed,
            config_sha256: hex,
        }
    }

    /// `# perfsim 0.1.0 scenario=… seed=… config_sha256=…`
    pub fn comment_line(&self) -> String {
        format!("# {} scenario={} seed={} config_sha256={}", self.version, self.scenario, self.seed, self.config_sha256)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// `num` for optional values; empty for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes `dir/name` as a provenance comment, a header row and `rows`.
pub fn write_csv<I>(dir: &Path, name: &str, prov: &Provenance, header: &[&str], rows: I) -> Result<PathBuf, RunError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let path = dir.join(name);
    let mut file = BufWriter::new(File::create(&path)?);
    writeln!(file, "{}", prov.comment_line())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.into_error()))?.flush()?;
    Ok(path)
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Reads a CSV written by [`write_csv`], skipping `#` lines; returns header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), RunError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<Result<_, _>>()?;
    Ok((header, rows))
}
