//! Experiment configuration: one JSON document, every key overridable by a
//! CLI flag. Identical config + seed yields byte-identical outputs.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use czx_core::corpus::CorpusSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub symbol: String,
    pub n: usize,
    pub betas: Vec<f64>,
    pub qs: Vec<f64>,
    /// Truncation radius, either in cell units ("4h") or absolute ("0.25").
    pub eps: String,
    pub shape: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub seed: u64,
    pub corpus_count: usize,
    pub calibration_count: usize,
    pub outdir: PathBuf,
    pub beta0: f64,
    pub refine: usize,
    pub radius: Option<f64>,
    /// Frozen main constant; when absent, sweeps calibrate one.
    pub cap: Option<f64>,
    pub uniformity_factor: f64,
    pub baseline_factor: f64,
    pub lambdas: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            symbol: "sign".into(),
            n: 1,
            betas: vec![0.5],
            qs: vec![2.0],
            eps: "4h".into(),
            shape: vec![4096],
            h: 1.0 / 128.0,
            origin: vec![-16.0],
            seed: 7,
            corpus_count: 12,
            calibration_count: 8,
            outdir: PathBuf::from("out"),
            beta0: 0.01,
            refine: 8,
            radius: None,
            cap: None,
            uniformity_factor: 2.0,
            baseline_factor: 1.5,
            lambdas: None,
            input: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| "parsing config JSON")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            bail!("n must be 1, 2 or 3, got {}", self.n);
        }
        if self.shape.len() != self.n || self.origin.len() != self.n {
            bail!(
                "shape/origin must have n = {} entries, got {}/{}",
                self.n,
                self.shape.len(),
                self.origin.len()
            );
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b > 0.0 && *b < self.n as f64)) {
            bail!("betas must be nonempty and inside (0, n)");
        }
        if self.qs.iter().any(|q| *q <= 1.0) {
            bail!("exponents q must exceed 1");
        }
        if !(self.h > 0.0) {
            bail!("h must be positive");
        }
        self.eps_value()?;
        Ok(())
    }

    /// Resolve the eps policy against the grid spacing.
    pub fn eps_value(&self) -> Result<f64> {
        let s = self.eps.trim();
        let v = if let Some(mult) = s.strip_suffix('h') {
            let m: f64 = mult
                .parse()
                .with_context(|| format!("bad eps multiplier {s:?}"))?;
            m * self.h
        } else {
            s.parse::<f64>().with_context(|| format!("bad eps {s:?}"))?
        };
        if !(v > 0.0) {
            bail!("eps must be positive, got {v}");
        }
        Ok(v)
    }

    pub fn corpus(&self) -> CorpusSpec {
        let extent = self
            .shape
            .iter()
            .map(|&s| s as f64 * self.h)
            .fold(f64::INFINITY, f64::min);
        CorpusSpec {
            seed: self.seed,
            n: self.n,
            shape: self.shape.clone(),
            h: self.h,
            origin: self.origin.clone(),
            count: self.corpus_count,
            support_halfwidth: extent / 4.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_parsing() {
        let mut cfg = ExperimentConfig::default();
        cfg.eps = "4h".into();
        assert!((cfg.eps_value().unwrap() - 4.0 / 128.0).abs() < 1e-15);
        cfg.eps = "0.25".into();
        assert!((cfg.eps_value().unwrap() - 0.25).abs() < 1e-15);
        cfg.eps = "-1h".into();
        assert!(cfg.eps_value().is_err());
    }

    #[test]
    fn validation_catches_shape_mismatch() {
        let mut cfg = ExperimentConfig::default();
        cfg.n = 2;
        assert!(cfg.validate().is_err());
    }
}
