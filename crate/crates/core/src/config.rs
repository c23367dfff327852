//! Run configuration for a full co-segmentation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CosegError, Result};

fn default_k_basis() -> usize {
    crate::spectral::DEFAULT_K_BASIS
}
fn default_k_eigs() -> usize {
    crate::spectral::DEFAULT_K_EIGS
}
fn default_k_embed() -> usize {
    crate::preseg::DEFAULT_K_EMBED
}
fn default_n_times() -> usize {
    crate::descriptors::DEFAULT_N_TIMES
}
fn default_h_factor() -> f64 {
    crate::laplace::DEFAULT_H_FACTOR
}
fn default_truncation() -> Option<f64> {
    Some(1e-9)
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("coseg_out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub shapes: Vec<PathBuf>,
    pub n_parts: usize,
    /// Number of shared labels; defaults to `n_parts`.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<usize>,
    #[serde(default = "default_k_basis")]
    pub k_basis: usize,
    #[serde(default = "default_k_eigs")]
    pub k_eigs: usize,
    #[serde(default = "default_k_embed")]
    pub k_embed: usize,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
    #[serde(default = "default_h_factor")]
    pub h_factor: f64,
    /// Kernel cutoff; `null` keeps every entry.
    #[serde(default = "default_truncation")]
    pub truncation_epsilon: Option<f64>,
    /// `null` selects the data-dependent default.
    #[serde(default)]
    pub ridge: Option<f64>,
    /// Weight of the Laplacian-commutativity penalty; 0 disables it.
    #[serde(default)]
    pub commutativity: f64,
    #[serde(default)]
    pub split_components: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// Optional per-shape ground truth, scored into the diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<PathBuf>>,
    #[serde(default)]
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(shapes: Vec<PathBuf>, n_parts: usize) -> Self {
        RunConfig {
            shapes,
            n_parts,
            labels: None,
            k_basis: default_k_basis(),
            k_eigs: default_k_eigs(),
            k_embed: default_k_embed(),
            n_times: default_n_times(),
            h_factor: default_h_factor(),
            truncation_epsilon: default_truncation(),
            ridge: None,
            commutativity: 0.0,
            split_components: false,
            seed: 0,
            output_dir: default_output_dir(),
            cache_dir: None,
            ground_truth: None,
            verbosity: 0,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.labels.unwrap_or(self.n_parts)
    }

    pub fn truncation(&self) -> crate::laplace::Truncation {
        match self.truncation_epsilon {
            Some(e) => crate::laplace::Truncation::Epsilon(e),
            None => crate::laplace::Truncation::Disabled,
        }
    }

    /// Field-level range and existence checks.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.shapes.is_empty() {
            errs.push("shapes: at least one mesh is required".to_string());
        }
        for p in &self.shapes {
            if !p.is_file() {
                errs.push(format!("shapes: {} does not exist", p.display()));
            }
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != self.shapes.len() {
                errs.push(format!(
                    "ground_truth: {} files for {} shapes",
                    gt.len(),
                    self.shapes.len()
                ));
            }
            for p in gt {
                if !p.is_file() {
                    errs.push(format!("ground_truth: {} does not exist", p.display()));
                }
            }
        }
        if self.n_parts < 1 {
            errs.push("n_parts: must be at least 1".into());
        }
        if self.labels == Some(0) {
            errs.push("L: must be at least 1".into());
        }
        if self.k_basis < 2 {
            errs.push(format!("k_basis: must be at least 2, got {}", self.k_basis));
        }
        if self.k_eigs < 2 {
            errs.push(format!("k_eigs: must be at least 2, got {}", self.k_eigs));
        }
        if self.k_embed < 1 {
            errs.push("k_embed: must be at least 1".into());
        }
        if self.n_times < 2 {
            errs.push(format!("n_times: must be at least 2, got {}", self.n_times));
        }
        if !(self.h_factor > 0.0 && self.h_factor.is_finite()) {
            errs.push(format!("h_factor: must be positive, got {}", self.h_factor));
        }
        if let Some(e) = self.truncation_epsilon {
            if !(e > 0.0 && e < 1.0) {
                errs.push(format!("truncation_epsilon: must lie in (0, 1), got {e}"));
            }
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0 && r.is_finite()) {
                errs.push(format!("ridge: must be non-negative, got {r}"));
            }
        }
        if !(self.commutativity >= 0.0 && self.commutativity.is_finite()) {
            errs.push(format!(
                "commutativity: must be non-negative, got {}",
                self.commutativity
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CosegError::Validation(errs))
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.shapes.iter_mut().for_each(fix);
        if let Some(gt) = &mut self.ground_truth {
            gt.iter_mut().for_each(fix);
        }
        fix(&mut self.output_dir);
        if let Some(c) = &mut self.cache_dir {
            fix(c);
        }
    }
}

/// Parse, default, resolve relative paths against the file's directory, and validate.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        CosegError::Validation(vec![format!("config: cannot read {}: {e}", path.display())])
    })?;
    let mut cfg = parse_config_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.resolve_paths(base);
    cfg.validate()?;
    Ok(cfg)
}

/// Parse and default without touching the filesystem.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| CosegError::Validation(vec![format!("config: {e}")]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(r#"{"shapes": ["a.off", "b.off"], "n_parts": 4}"#).unwrap();
        assert_eq!(cfg.k_basis, 50);
        assert_eq!(cfg.k_eigs, 300);
        assert_eq!(cfg.n_times, 100);
        assert_eq!(cfg.k_embed, 10);
        assert_eq!(cfg.n_labels(), 4);
        assert_eq!(cfg.h_factor, 2.0);
        assert_eq!(cfg.truncation_epsilon, Some(1e-9));
        assert_eq!(cfg, RunConfig::new(vec!["a.off".into(), "b.off".into()], 4));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config_str(r#"{"shapes": [], "n_parts": 2, "fro": 1}"#).unwrap_err();
        assert!(matches!(&err, CosegError::Validation(_)));
        assert!(err.to_string().contains("fro"));
    }

    #[test]
    fn ranges_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = dir.path().join("m.off");
        fs::write(&mesh, "OFF\n").unwrap();
        let mut cfg = RunConfig::new(vec![mesh], 2);
        cfg.validate().unwrap();
        cfg.k_basis = 1;
        cfg.ridge = Some(-1.0);
        cfg.labels = Some(0);
        let CosegError::Validation(errs) = cfg.validate().unwrap_err() else {
            panic!("expected validation error");
        };
        assert_eq!(errs.len(), 3);
        assert!(errs[0].starts_with("L:"));
    }

    #[test]
    fn missing_file_is_a_validation_error() {
        let err = parse_config(Path::new("/nonexistent/cfg.json")).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Validation);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.off"), "").unwrap();
        let cfg_path = dir.path().join("run.json");
        fs::write(
            &cfg_path,
            r#"{"shapes": ["a.off"], "n_parts": 1, "output_dir": "out"}"#,
        )
        .unwrap();
        let cfg = parse_config(&cfg_path).unwrap();
        assert_eq!(cfg.shapes[0], dir.path().join("a.off"));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.hash(), cfg.clone().hash());
    }
}
