//! Run configuration: a plain key-value JSON document.
//!
//! Every field has a documented default, so an empty file (or no file at
//! all) is a valid configuration; unknown keys are rejected so typos fail
//! loudly. A configuration round-trips losslessly through
//! [`RunConfig::to_json`] / [`RunConfig::from_json`].

use logsob::{GridSpec, Potential, QuadSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Potential selector: a built-in family or a tabulated file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// Φ(x) = |x|^alpha.
    Power { alpha: f64 },
    /// Φ(x) = |x|^alpha · ln(e + |x|)^beta.
    PowerLog { alpha: f64, beta: f64 },
    /// Tabulated potential loaded from a file.
    Table { path: PathBuf },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Power { alpha: 1.5 }
    }
}

/// Full configuration for one run. Defaults (used for any omitted key):
///
/// | key             | default                  |
/// |-----------------|--------------------------|
/// | `potential`     | `{"family":"power","alpha":1.5}` |
/// | `epsilon`       | 0.5                      |
/// | `big_m`         | 1.0                      |
/// | `b_const`       | 1.0                      |
/// | `a_const`       | 4.0                      |
/// | `lambda`        | 1.0                      |
/// | `c_h`           | 1.0                      |
/// | `quadrature`    | library defaults         |
/// | `grid`          | library defaults         |
/// | `seed`          | 42                       |
/// | `threads`       | null (available parallelism) |
/// | `out_dir`       | `"out"`                  |
/// | `sample_n`      | 1000                     |
/// | `deviation_n`   | 1                        |
/// | `trials`        | 10000                    |
/// | `deviation_grid`| `[0.5, 1.0, 1.5, 2.0, 2.5]` |
/// | `clamp_at`      | 5.0                      |
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Which potential to analyse.
    pub potential: PotentialSpec,
    /// Growth-window margin ε ∈ (0, 1/2].
    pub epsilon: f64,
    /// Growth-window threshold M.
    pub big_m: f64,
    /// Slope parameter B of the mixed quadratic/conjugate cost.
    pub b_const: f64,
    /// Leading constant A used by the deviation bounds; it must dominate
    /// the certified entropy-energy constant for the bounds to be valid.
    pub a_const: f64,
    /// Scale parameter λ of the ψ/K weight construction.
    pub lambda: f64,
    /// Normalisation constant of the comparison function τ.
    pub c_h: f64,
    /// Quadrature and truncation policy.
    pub quadrature: QuadSpec,
    /// Scan-grid density for hypothesis checks and criterion scans.
    pub grid: GridSpec,
    /// RNG seed for sampling and Monte-Carlo subcommands.
    pub seed: u64,
    /// Worker threads; `null` means available parallelism. The
    /// `LOGSOB_THREADS` environment variable overrides this field.
    /// Results never depend on the thread count.
    pub threads: Option<usize>,
    /// Directory artifacts are written into (created if missing).
    pub out_dir: PathBuf,
    /// Number of draws written by `sample`.
    pub sample_n: usize,
    /// Sample size n of the empirical mean in `concentration`.
    pub deviation_n: usize,
    /// Monte-Carlo trials in `concentration` (at least 100).
    pub trials: usize,
    /// Deviation levels λ checked by `concentration`.
    pub deviation_grid: Vec<f64>,
    /// Half-width c of the clamped observable clamp(x, −c, c) used by
    /// `concentration`.
    pub clamp_at: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: PotentialSpec::default(),
            epsilon: 0.5,
            big_m: 1.0,
            b_const: 1.0,
            a_const: 4.0,
            lambda: 1.0,
            c_h: 1.0,
            quadrature: QuadSpec::default(),
            grid: GridSpec::default(),
            seed: 42,
            threads: None,
            out_dir: PathBuf::from("out"),
            sample_n: 1000,
            deviation_n: 1,
            trials: 10_000,
            deviation_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            clamp_at: 5.0,
        }
    }
}

impl RunConfig {
    /// Parse a configuration from its JSON text.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Load a configuration file.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("malformed config {}: {e}", path.display()))
    }

    /// Canonical JSON form (stable key order; the hashing input).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Construct the configured potential.
    pub fn build_potential(&self) -> anyhow::Result<Potential> {
        let p = match &self.potential {
            PotentialSpec::Power { alpha } => Potential::power(*alpha)?,
            PotentialSpec::PowerLog { alpha, beta } => Potential::power_log(*alpha, *beta)?,
            PotentialSpec::Table { path } => Potential::from_table_file(path)?,
        };
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_losslessly() {
        let cfg = RunConfig::default();
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn non_default_values_survive_the_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.potential = PotentialSpec::PowerLog { alpha: 1.5, beta: 1.0 };
        cfg.epsilon = 0.1;
        cfg.threads = Some(3);
        cfg.quadrature.trunc_override = Some(25.0);
        cfg.deviation_grid = vec![0.25];
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg.to_json(), back.to_json());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"potential": {"family": "power", "alpha": 1.5, "beta": 2}}"#).is_err());
    }

    #[test]
    fn empty_document_gives_the_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.to_json(), RunConfig::default().to_json());
    }
}
