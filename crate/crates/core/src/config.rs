//! Run configuration shared by the simulator front ends.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Standard,
    RawNormalized,
    Coincidence,
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// Angles are in degrees, as given on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub alice_angles_deg: Vec<f64>,
    pub bob_angles_deg: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub estimator: Estimator,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(alice_angles_deg: Vec<f64>, bob_angles_deg: Vec<f64>, trials: u64, master_seed: u64) -> Result<Self> {
        let cfg = ExperimentConfig {
            run_id: format!("run-{master_seed:016x}"),
            alice_angles_deg,
            bob_angles_deg,
            trials,
            master_seed,
            estimator: Estimator::All,
            format: OutputFormat::Json,
            out: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        for (name, list) in [("alice", &self.alice_angles_deg), ("bob", &self.bob_angles_deg)] {
            if list.is_empty() {
                return Err(Error::Config(format!("{name} needs at least one angle")));
            }
            if let Some(bad) = list.iter().find(|a| !a.is_finite()) {
                return Err(Error::Config(format!("{name} angle {bad} is not finite")));
            }
        }
        if self.run_id.is_empty() {
            return Err(Error::Config("run id must not be empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_stable() {
        let mut cfg = ExperimentConfig::new(vec![0.0, 45.0], vec![22.5, -22.5], 1000, 42).unwrap();
        cfg.estimator = Estimator::RawNormalized;
        cfg.format = OutputFormat::Csv;
        cfg.out = Some(PathBuf::from("out/result.csv"));
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert!(text.contains("\"raw_normalized\""));
    }

    #[test]
    fn validation() {
        assert!(matches!(ExperimentConfig::new(vec![], vec![0.0], 1, 0), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::new(vec![0.0], vec![f64::NAN], 1, 0), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::new(vec![0.0], vec![0.0], 0, 0), Err(Error::Config(_))));
    }
}
