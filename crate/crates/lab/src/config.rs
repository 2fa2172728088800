use std::path::{Path, PathBuf};

use coco_core::ScenarioSpec;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Adagrad,
    Ahag,
    Coco1,
    Coco2,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Adagrad => "adagrad",
            Algorithm::Ahag => "ahag",
            Algorithm::Coco1 => "coco1",
            Algorithm::Coco2 => "coco2",
        }
    }
}

/// Optional parameter overrides; each applies to a subset of algorithms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Cost weight `V` (coco2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    /// Lipschitz constant used by the algorithm (coco1, coco2); must dominate the scenario's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Known comparator path-length bound (adagrad); absent means path-free steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_path: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "is_default")]
    pub overrides: Overrides,
    /// Horizons for `sweep`, strictly increasing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
    /// Comparator names to report regret against; all registered ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparators: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Overrides the scenario seed when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn is_default(o: &Overrides) -> bool {
    *o == Overrides::default()
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(LabError::Config(format!(
            "{name} must be positive and finite, got {x}"
        ))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec, algorithm: Algorithm) -> Self {
        Self {
            scenario,
            algorithm,
            overrides: Overrides::default(),
            horizons: Vec::new(),
            comparators: None,
            out_dir: None,
            seed: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scenario spec with the top-level seed applied.
    pub fn effective_scenario(&self) -> ScenarioSpec {
        let mut spec = self.scenario.clone();
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        spec
    }

    /// Copy of this config that runs over `horizon` rounds.
    pub fn at_horizon(&self, horizon: usize) -> Self {
        let mut cfg = self.clone();
        cfg.scenario.horizon = horizon;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.contains(&0) {
            return Err(LabError::Config("horizons must be positive".into()));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::Config(format!(
                "horizons must be strictly increasing, got {:?}",
                self.horizons
            )));
        }
        if matches!(&self.comparators, Some(c) if c.is_empty()) {
            return Err(LabError::Config("at least one comparator is required".into()));
        }
        positive("overrides.v", self.overrides.v)?;
        positive("overrides.g", self.overrides.g)?;
        if let Some(p) = self.overrides.known_path {
            if !(p.is_finite() && p >= 0.0) {
                return Err(LabError::Config(format!(
                    "overrides.known_path must be non-negative, got {p}"
                )));
            }
        }
        let alg = self.algorithm;
        if self.overrides.v.is_some() && alg != Algorithm::Coco2 {
            return Err(LabError::Config(format!("overrides.v does not apply to {}", alg.name())));
        }
        if self.overrides.g.is_some() && !matches!(alg, Algorithm::Coco1 | Algorithm::Coco2) {
            return Err(LabError::Config(format!("overrides.g does not apply to {}", alg.name())));
        }
        if self.overrides.known_path.is_some() && alg != Algorithm::Adagrad {
            return Err(LabError::Config(format!(
                "overrides.known_path does not apply to {}",
                alg.name()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coco_core::ScenarioFamily;

    fn base() -> RunConfig {
        RunConfig::new(ScenarioSpec::new(ScenarioFamily::Static, 10, 1), Algorithm::Coco2)
    }

    #[test]
    fn horizons_must_increase() {
        let mut c = base();
        c.horizons = vec![10, 100, 100];
        assert!(matches!(c.validate(), Err(LabError::Config(_))));
        c.horizons = vec![10, 100, 1000];
        c.validate().unwrap();
    }

    #[test]
    fn overrides_are_checked_per_algorithm() {
        let mut c = base();
        c.overrides.known_path = Some(1.0);
        assert!(c.validate().is_err());
        c.overrides = Overrides { v: Some(-1.0), ..Default::default() };
        assert!(c.validate().is_err());
        c.overrides = Overrides { v: Some(3.0), g: Some(2.0), known_path: None };
        c.validate().unwrap();
        c.comparators = Some(vec![]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let c = base();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        let bad = text.replace("\"algorithm\"", "\"algo\"");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }
}
