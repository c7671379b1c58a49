//! Scenario configuration: JSON ingestion, defaults and validation.

use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::deterrent::DeterrentScheme;
use crate::env::Environment;
use crate::error::{AuditError, Result};
use crate::mechanism::Mechanism;
use crate::outcome::DEFAULT_STATE_BUDGET;
use crate::privacy::{AuditSettings, HISTOGRAM_BOUND_CONSTANT};
use crate::scenario::SearchOptions;

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
pub const DEFAULT_MC_SAMPLES: u64 = 100_000;
pub const DEFAULT_Z: f64 = 3.0;

fn default_eps_grid() -> Vec<f64> {
    DEFAULT_EPS_GRID.to_vec()
}

fn default_levels() -> Vec<usize> {
    vec![0]
}

fn default_cells() -> Vec<CellSpec> {
    vec![CellSpec { k: 0, r: 1 }]
}

fn default_z() -> f64 {
    DEFAULT_Z
}

fn default_states() -> u64 {
    DEFAULT_STATE_BUDGET
}

fn default_mc_samples() -> u64 {
    DEFAULT_MC_SAMPLES
}

fn one() -> f64 {
    1.0
}

fn histogram_constant() -> f64 {
    HISTOGRAM_BOUND_CONSTANT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PrivacySpec {
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    /// Adversary budgets `k` audited for single players.
    #[serde(default = "default_levels")]
    pub adversaries: Vec<usize>,
    /// Group sizes `c >= 2` checked against the group transform.
    #[serde(default)]
    pub group_sizes: Vec<usize>,
}

impl Default for PrivacySpec {
    fn default() -> Self {
        Self {
            eps_grid: default_eps_grid(),
            adversaries: default_levels(),
            group_sizes: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub k: usize,
    pub r: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TruthfulnessSpec {
    #[serde(default = "default_cells")]
    pub cells: Vec<CellSpec>,
    /// Target gain `ε` for the pass/fail verdict. Absent means the smallest
    /// bound implied by the measured privacy curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl Default for TruthfulnessSpec {
    fn default() -> Self {
        Self {
            cells: default_cells(),
            eps: None,
        }
    }
}

/// Constants of the shape bounds reported next to measured curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    #[serde(default = "histogram_constant")]
    pub histogram: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            histogram: histogram_constant(),
            c1: 1.0,
            c2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    #[serde(default)]
    pub privacy: PrivacySpec,
    #[serde(default)]
    pub truthfulness: TruthfulnessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterrent: Option<DeterrentScheme>,
    #[serde(default)]
    pub bounds: BoundConstants,
    #[serde(default)]
    pub search: SearchOptions,
    /// Standard deviations used for Monte Carlo confidence bounds.
    #[serde(default = "default_z")]
    pub confidence_z: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            privacy: PrivacySpec::default(),
            truthfulness: TruthfulnessSpec::default(),
            deterrent: None,
            bounds: BoundConstants::default(),
            search: SearchOptions::default(),
            confidence_z: DEFAULT_Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_states")]
    pub enumeration_states: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            enumeration_states: DEFAULT_STATE_BUDGET,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub environment: Environment,
    pub mechanism: Mechanism,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; never echoed since it cannot change results.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

impl ScenarioConfig {
    /// Checks every cross-field constraint; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.environment.validate()?;
        let warnings = self.mechanism.validate(&self.environment)?;
        let n = self.environment.players;
        let p = &self.audit.privacy;
        if p.eps_grid.is_empty() {
            return Err(AuditError::config("audit.privacy.eps_grid", "must not be empty"));
        }
        if p.eps_grid.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(AuditError::config(
                "audit.privacy.eps_grid",
                "entries must be finite and >= 0",
            ));
        }
        if let Some(&k) = p.adversaries.iter().find(|&&k| k >= n) {
            return Err(AuditError::config(
                "audit.privacy.adversaries",
                format!("k = {k} leaves no free player among {n}"),
            ));
        }
        for &c in &p.group_sizes {
            if c < 2 || c > n {
                return Err(AuditError::config(
                    "audit.privacy.group_sizes",
                    format!("group size {c} must be in 2..={n}"),
                ));
            }
        }
        for (i, cell) in self.audit.truthfulness.cells.iter().enumerate() {
            if cell.r == 0 || cell.k + cell.r > n {
                return Err(AuditError::config(
                    format!("audit.truthfulness.cells[{i}]"),
                    format!("need r >= 1 and k + r <= {n}"),
                ));
            }
        }
        if let Some(eps) = self.audit.truthfulness.eps {
            if !(eps >= 0.0) {
                return Err(AuditError::config("audit.truthfulness.eps", "must be >= 0"));
            }
        }
        if let Some(d) = &self.audit.deterrent {
            d.validate(n)?;
        }
        let b = &self.audit.bounds;
        if [b.histogram, b.c1, b.c2].iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(AuditError::config("audit.bounds", "constants must be positive"));
        }
        if !(self.audit.confidence_z.is_finite() && self.audit.confidence_z > 0.0) {
            return Err(AuditError::config("audit.confidence_z", "must be positive"));
        }
        if self.budgets.mc_samples == 0 {
            return Err(AuditError::config("budgets.mc_samples", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(AuditError::config("workers", "must be positive"));
        }
        Ok(warnings)
    }

    /// Settings for the audit layer.
    pub fn settings(&self) -> AuditSettings {
        AuditSettings {
            eps_grid: self.audit.privacy.eps_grid.clone(),
            mc_samples: self.budgets.mc_samples,
            seed: self.seed,
            z: self.audit.confidence_z,
            search: self.audit.search.clone(),
        }
    }

    /// Echo with every default spelled out.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)?)
    }
}

/// Parses and validates a configuration; errors carry the JSON path.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        AuditError::config(
            if path == "." { String::from("<root>") } else { path },
            e.into_inner().to_string(),
        )
    })?;
    de.end().map_err(|e| AuditError::config("<root>", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// JSON schema of [`ScenarioConfig`] as pretty-printed text.
pub fn config_schema() -> Result<String> {
    let schema = serde_json::to_value(schemars::schema_for!(ScenarioConfig))?;
    Ok(serde_json::to_string_pretty(&schema)? + "\n")
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "environment": {
            "players": 3,
            "type_space": {"kind": "finite", "labels": ["a", "b"]},
            "distribution": {"kind": "categorical", "probabilities": [0.5, 0.5]},
            "alternatives": [{"name": "a"}, {"name": "b"}],
            "utility": {"kind": "table", "values": [[1, 0], [0, 1]]},
            "utility_bound": 1
        },
        "mechanism": {
            "family": "histogram",
            "partition": {"kind": "table", "block_of": [0, 1], "blocks": 2},
            "chooser": {"name": "plurality"}
        }
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.budgets.mc_samples, 100_000);
        assert_eq!(c.audit.privacy.eps_grid, vec![0.1, 0.2, 0.5, 1.0]);
        assert_eq!(c.seed, 0);
        assert_eq!(c.budgets.enumeration_states, 10_000_000);
        let echo = c.to_json().unwrap();
        assert!(echo.contains("\"mc_samples\": 100000"));
        assert_eq!(parse_config(&echo).unwrap(), c);
    }

    #[test]
    fn unknown_chooser_names_the_field() {
        let text = MINIMAL.replace("\"plurality\"", "\"borda\"");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let msg = err.to_string();
        assert!(msg.contains("mechanism"), "{msg}");
        assert!(msg.contains("borda"), "{msg}");
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let text = MINIMAL.replace("[0.5, 0.5]", "[0.5, 0.4]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("distribution"), "{err}");
    }

    #[test]
    fn cell_and_group_ranges() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.audit.truthfulness.cells = vec![CellSpec { k: 2, r: 2 }];
        assert!(c.validate().is_err());
        c.audit.truthfulness.cells = vec![CellSpec { k: 1, r: 2 }];
        c.audit.privacy.group_sizes = vec![4];
        assert!(c.validate().is_err());
        c.audit.privacy.group_sizes = vec![2];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        assert!(parse_config(&format!("{MINIMAL} x")).is_err());
    }
}
