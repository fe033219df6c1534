//! Machine-readable artifact emission.
//!
//! Every artifact is self-describing: JSON documents carry a
//! `schema_version`, the SHA-256 of the canonical configuration and the
//! seed; CSV files carry the same three facts in `#`-prefixed comment
//! lines before the column header. Floats are written with 17 significant
//! digits (round-trip safe), `.` decimal separator, comma-separated.
//! Writes are single-writer: each file is assembled in memory and written
//! once.

use crate::config::RunConfig;
use logsob::numeric::fmt_g17;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Version stamp carried by every artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Where artifacts go and how they are stamped.
pub struct OutputContext {
    out_dir: PathBuf,
    config_sha256: String,
    seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    config_sha256: &'a str,
    seed: u64,
    report: &'a T,
}

impl OutputContext {
    /// Create the output directory and compute the configuration hash.
    ///
    /// The hash identifies the mathematical run, so plumbing fields that
    /// cannot affect any computed number (`out_dir`, `threads`) are
    /// normalized to their defaults before hashing: the same computation
    /// sent to two directories carries the same stamp.
    pub fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        let mut canon = cfg.clone();
        canon.out_dir = RunConfig::default().out_dir;
        canon.threads = None;
        let canonical = canon.to_json();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect::<String>();
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
            anyhow::anyhow!("cannot create output directory {}: {e}", cfg.out_dir.display())
        })?;
        Ok(OutputContext { out_dir: cfg.out_dir.clone(), config_sha256, seed: cfg.seed })
    }

    pub fn config_sha256(&self) -> &str {
        &self.config_sha256
    }

    /// Serialize `payload` into the stamped JSON envelope and write it.
    pub fn write_json<T: Serialize>(&self, name: &str, payload: &T) -> anyhow::Result<PathBuf> {
        let env = Envelope {
            schema_version: SCHEMA_VERSION,
            config_sha256: &self.config_sha256,
            seed: self.seed,
            report: payload,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        let path = self.out_dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
        Ok(path)
    }

    /// Start a CSV artifact with the stamped comment header.
    pub fn csv(&self, name: &str, columns: &[&str]) -> CsvFile {
        let mut buf = String::new();
        buf.push_str(&format!("# schema_version: {SCHEMA_VERSION}\n"));
        buf.push_str(&format!("# config_sha256: {}\n", self.config_sha256));
        buf.push_str(&format!("# seed: {}\n", self.seed));
        buf.push_str(&columns.join(","));
        buf.push('\n');
        CsvFile { path: self.out_dir.join(name), columns: columns.len(), buf }
    }
}

/// An in-memory CSV artifact; nothing touches disk until [`CsvFile::finish`].
pub struct CsvFile {
    path: PathBuf,
    columns: usize,
    buf: String,
}

impl CsvFile {
    /// Add a free-form comment line to the header region or between rows.
    pub fn comment(&mut self, text: &str) {
        for line in text.lines() {
            self.buf.push_str("# ");
            self.buf.push_str(line);
            self.buf.push('\n');
        }
    }

    /// Append one data row; cells are written verbatim.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    /// Write the file in one shot and return its path.
    pub fn finish(self) -> anyhow::Result<PathBuf> {
        std::fs::write(&self.path, self.buf)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", self.path.display()))?;
        Ok(self.path)
    }
}

/// A float cell: 17 significant digits, `.` decimal.
pub fn num(x: f64) -> String {
    fmt_g17(x)
}

/// Relative path helper for user-facing messages.
pub fn display_path(p: &Path) -> String {
    p.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_is_self_describing() {
        let dir = std::env::temp_dir().join("logsob-output-test");
        let cfg = RunConfig { out_dir: dir.clone(), ..RunConfig::default() };
        let ctx = OutputContext::new(&cfg).unwrap();
        let mut csv = ctx.csv("t.csv", &["a", "b"]);
        csv.row(&[num(1.0), num(0.5)]);
        let path = csv.finish().unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# schema_version: "));
        assert!(lines[1].starts_with("# config_sha256: "));
        assert!(lines[2].starts_with("# seed: 42"));
        assert_eq!(lines[3], "a,b");
        assert!(lines[4].starts_with("1.0000000000000000e0,5.0"));
    }

    #[test]
    fn same_config_same_hash_different_config_different_hash() {
        let dir = std::env::temp_dir().join("logsob-output-test2");
        let cfg = RunConfig { out_dir: dir.clone(), ..RunConfig::default() };
        let a = OutputContext::new(&cfg).unwrap();
        let b = OutputContext::new(&cfg).unwrap();
        assert_eq!(a.config_sha256(), b.config_sha256());
        let cfg2 = RunConfig { seed: 43, ..cfg };
        let c = OutputContext::new(&cfg2).unwrap();
        assert_ne!(a.config_sha256(), c.config_sha256());
    }
}
