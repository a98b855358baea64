//! Deterministic result emission: atomically written CSV tables with fixed
//! column orders, pretty JSON summaries, the seeded-choice manifest, and
//! the per-run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Writes via a temp file in the same directory plus rename, so an
/// interrupted run never leaves a truncated file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV with a fixed header, rendered in memory and written atomically.
pub struct CsvFile {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvFile {
    pub fn new(headers: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(headers)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn save(self, path: &Path) -> Result<()> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        atomic_write(path, &bytes)
    }
}

/// Shortest round-trip decimal rendering; stable across runs.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

/// Pretty JSON plus trailing newline, atomically written. Serialize with
/// ordered maps (or plain structs) for stable bytes.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// One seeded decision, reproducible from (seed, key) alone. The sample
/// manifest is the audit trail for every random choice a harness made.
#[derive(Debug, Clone, Serialize)]
pub struct SampledChoice {
    pub key: String,
    pub pool: usize,
    pub picked: Vec<usize>,
}

/// Per-run metadata. Two runs over identical inputs differ only in the
/// timestamps here, never in the result files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    pub config_sha256: Option<String>,
    pub dataset_sha256: Option<String>,
    pub fixture_sha256: Option<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Interpolated (R-7) quantile of a nonempty sample.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

/// Count, mean, and quartiles of a score sample.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreSummary {
    pub count: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl ScoreSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
        Some(Self {
            count: sorted.len(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
        })
    }
}

/// Least-squares slope of y on x; `None` when x has no variance.
pub fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in points {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    (var > 0.0).then(|| cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let values = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&values, 0.5), 2.5);
        assert_eq!(quantile(&values, 0.25), 1.75);
        assert_eq!(quantile(&values, 1.0), 4.0);
    }

    #[test]
    fn slope_closed_form() {
        assert_eq!(regression_slope(&[(0.0, 0.0), (1.0, 2.0)]), Some(2.0));
        let on_identity: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(regression_slope(&on_identity), Some(1.0));
        assert_eq!(regression_slope(&[(1.0, 2.0), (1.0, 3.0)]), None);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("tps-emit-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
