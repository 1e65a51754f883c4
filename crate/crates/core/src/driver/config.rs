//! Experiment configuration as flat `key = value` text.

use super::presets::{Preset, DEFAULT_REFERENCE_LEVEL};
use crate::error::{Error, Result};
use crate::estimators::EstimatorFamily;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub family: EstimatorFamily,
    /// Dörfler parameter in `(0, 1]`; `1` refines uniformly.
    pub theta: f64,
    pub rounds: usize,
    /// Rounds stop once the number of interior vertices would exceed this.
    pub max_dofs: usize,
    /// Refinement depth of the oscillation oracle; `0` skips the oscillation.
    pub oracle_depth: usize,
    pub reference_level: usize,
    /// Directory for CSV, JSON and plot files.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Sine,
            family: EstimatorFamily::Residual,
            theta: 0.5,
            rounds: 5,
            max_dofs: 200_000,
            oracle_depth: 3,
            reference_level: DEFAULT_REFERENCE_LEVEL,
            output: None,
        }
    }
}

pub const KEYS: [&str; 8] =
    ["preset", "family", "theta", "rounds", "max_dofs", "oracle_depth", "reference_level", "output"];

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}` expects a number, got `{value}`")))
}

impl ExperimentConfig {
    /// Reads `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "preset" => self.preset = value.parse()?,
            "family" => self.family = value.parse()?,
            "theta" => self.theta = number(key, value)?,
            "rounds" => self.rounds = number(key, value)?,
            "max_dofs" => self.max_dofs = number(key, value)?,
            "oracle_depth" => self.oracle_depth = number(key, value)?,
            "reference_level" => self.reference_level = number(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg =
            ExperimentConfig::parse("preset = face_dirac\n# comment\ntheta=0.3 # trailing\nfamily = equil\n").unwrap();
        assert_eq!(cfg.preset, Preset::FaceDirac);
        assert_eq!(cfg.family, EstimatorFamily::Equilibrated);
        assert_eq!(cfg.theta, 0.3);
        assert_eq!(cfg.rounds, 5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::parse("theta = 0").is_err());
        assert!(ExperimentConfig::parse("theta = 1.5").is_err());
        assert!(ExperimentConfig::parse("rounds = 0").is_err());
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("rounds").is_err());
    }
}
