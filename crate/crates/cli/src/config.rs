//! Pipeline configuration loaded from TOML.
//!
//! ```toml
//! tip_sign = 1            # optional; default picks the upper end
//!
//! [swing]
//! t_acc = 500
//! t_strd = 500
//! n_eps = 10
//! tau_mean = 1e7
//! tau_var = 6e11
//! tau_t = 100000
//!
//! [impact]
//! t_acc = 4000
//! t_strd = 500
//! n_c = 3
//! pattern = "triangular"
//!
//! [contour]
//! t_acc_ball = 2000
//! t_acc_racket = 500
//!
//! [output]
//! timings = false
//! ```
//!
//! Every key is optional.

use std::path::{Path, PathBuf};

use impact_core::contour::ContourParams;
use impact_core::geometry::TipSign;
use impact_core::pats::ImpactParams;
use impact_core::swing::SwingParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write the JSON result here instead of stdout.
    pub json: Option<PathBuf>,
    /// Also render the located impacts as SVG.
    pub plot: Option<PathBuf>,
    /// Include per-stage wall-clock times in results.
    pub timings: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub swing: SwingParams<f64>,
    pub impact: ImpactParams<f64>,
    pub contour: ContourParams,
    /// `+1` or `−1`; see [`TipSign`].
    pub tip_sign: Option<i8>,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text, path)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.swing.validate().map_err(|e| invalid(&e))?;
        self.impact.validate().map_err(|e| invalid(&e))?;
        self.contour.validate().map_err(|e| invalid(&e))?;
        self.tip()?;
        Ok(())
    }

    pub fn tip(&self) -> Result<Option<TipSign>, ConfigError> {
        match self.tip_sign {
            None => Ok(None),
            Some(1) => Ok(Some(TipSign::Plus)),
            Some(-1) => Ok(Some(TipSign::Minus)),
            Some(other) => Err(ConfigError::Invalid(format!(
                "tip_sign must be 1 or -1, got {other}"
            ))),
        }
    }

    pub fn set_tip(&mut self, tip: TipSign) {
        self.tip_sign = Some(tip.value::<f64>() as i8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use impact_core::pats::FocalPattern;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = PipelineConfig::from_toml("", Path::new("x.toml")).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.swing.tau_mean, 1e7);
        assert_eq!(cfg.swing.tau_var, 6e11);
        assert_eq!(cfg.swing.tau_t, 100_000);
        assert_eq!(cfg.impact.t_acc, 4000);
        assert_eq!(cfg.impact.n_c, 3);
        assert_eq!(cfg.contour.t_acc_ball, 2000);
        assert_eq!(cfg.contour.t_acc_racket, 500);
    }

    #[test]
    fn partial_sections_override() {
        let text = "tip_sign = -1\n[impact]\nn_c = 1\npattern = \"uniform\"\n[swing]\ntau_t = 50000\n";
        let cfg = PipelineConfig::from_toml(text, Path::new("x.toml")).unwrap();
        assert_eq!(cfg.impact.n_c, 1);
        assert_eq!(cfg.impact.pattern, FocalPattern::Uniform);
        assert_eq!(cfg.impact.t_acc, 4000);
        assert_eq!(cfg.swing.tau_t, 50_000);
        assert_eq!(cfg.tip().unwrap(), Some(TipSign::Minus));
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        for text in ["[impact]\nn_c = 0\n", "tip_sign = 2\n", "[swing]\nbogus = 1\n", "[impact\n"] {
            assert!(PipelineConfig::from_toml(text, Path::new("x.toml")).is_err(), "{text}");
        }
    }
}
