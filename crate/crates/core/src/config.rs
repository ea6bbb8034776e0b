//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "scenario": "cs2",
//!   "cs2": { "bandwidth_hz": 1e6 },
//!   "plan": { "master_seed": 7, "topologies": 100, "realizations": 1 },
//!   "output_dir": "results"
//! }
//! ```
//!
//! Exactly one of `cs1` / `cs2` must be present and must match `scenario`.
//! Omitted fields take their defaults. Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backhaul::Cs2Config;
use crate::error::{Error, Result};
use crate::relay::Cs1Config;
use crate::stats::TrialPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Cs1,
    Cs2,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Cs1 => "cs1",
            Scenario::Cs2 => "cs2",
        }
    }

    pub fn default_plan(self) -> TrialPlan {
        match self {
            Scenario::Cs1 => TrialPlan {
                master_seed: 0,
                topologies: 200,
                realizations: 500,
            },
            Scenario::Cs2 => TrialPlan {
                master_seed: 0,
                topologies: 100,
                realizations: 1,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioConfig {
    Cs1(Cs1Config),
    Cs2(Cs2Config),
}

impl ScenarioConfig {
    pub fn scenario(&self) -> Scenario {
        match self {
            ScenarioConfig::Cs1(_) => Scenario::Cs1,
            ScenarioConfig::Cs2(_) => Scenario::Cs2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub plan: TrialPlan,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for `scenario`, writing to `results`.
    pub fn defaults(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario: match scenario {
                Scenario::Cs1 => ScenarioConfig::Cs1(Cs1Config::default()),
                Scenario::Cs2 => ScenarioConfig::Cs2(Cs2Config::default()),
            },
            plan: scenario.default_plan(),
            output_dir: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (prefix, checked) = match &self.scenario {
            ScenarioConfig::Cs1(c) => ("cs1", c.validate()),
            ScenarioConfig::Cs2(c) => ("cs2", c.validate()),
        };
        checked.map_err(|e| prefixed(prefix, e))?;
        if self.plan.topologies == 0 {
            return Err(Error::config("plan.topologies", "must be at least 1"));
        }
        if self.plan.realizations == 0 {
            return Err(Error::config("plan.realizations", "must be at least 1"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        Ok(())
    }
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { path, message } => Error::config(format!("{prefix}.{path}"), message),
        other => Error::config(prefix, other.to_string()),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cs1: Option<Cs1Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cs2: Option<Cs2Config>,
    #[serde(default)]
    plan: WirePlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topologies: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    realizations: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let wire: Wire = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        Error::config(path, e.into_inner().to_string())
    })?;

    let scenario = match (wire.scenario, wire.cs1, wire.cs2) {
        (Scenario::Cs1, Some(c), None) => ScenarioConfig::Cs1(c),
        (Scenario::Cs2, None, Some(c)) => ScenarioConfig::Cs2(c),
        (Scenario::Cs1, _, Some(_)) => return Err(Error::config("cs2", "block not allowed when scenario is cs1")),
        (Scenario::Cs2, Some(_), _) => return Err(Error::config("cs1", "block not allowed when scenario is cs2")),
        (s, _, _) => {
            return Err(Error::config(
                s.as_str(),
                format!("block required for scenario {}", s.as_str()),
            ))
        }
    };
    let defaults = scenario.scenario().default_plan();
    let cfg = ExperimentConfig {
        scenario,
        plan: TrialPlan {
            master_seed: wire.plan.master_seed.unwrap_or(defaults.master_seed),
            topologies: wire.plan.topologies.unwrap_or(defaults.topologies),
            realizations: wire.plan.realizations.unwrap_or(defaults.realizations),
        },
        output_dir: wire.output_dir.unwrap_or_else(|| PathBuf::from("results")),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Pretty JSON with every field written out.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let (cs1, cs2) = match &cfg.scenario {
        ScenarioConfig::Cs1(c) => (Some(c.clone()), None),
        ScenarioConfig::Cs2(c) => (None, Some(c.clone())),
    };
    let wire = Wire {
        scenario: cfg.scenario.scenario(),
        cs1,
        cs2,
        plan: WirePlan {
            master_seed: Some(cfg.plan.master_seed),
            topologies: Some(cfg.plan.topologies),
            realizations: Some(cfg.plan.realizations),
        },
        output_dir: Some(cfg.output_dir.clone()),
    };
    let mut s = serde_json::to_string_pretty(&wire).expect("config serialises");
    s.push('\n');
    s
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_path(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_cs2_block_gives_defaults() {
        let cfg = parse_config(r#"{"scenario": "cs2", "cs2": {}}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Scenario::Cs2));
    }

    #[test]
    fn noise_psd_round_trips() {
        let cfg = parse_config(r#"{"scenario": "cs2", "cs2": {"noise_psd_dbm_hz": -174}}"#).unwrap();
        match &cfg.scenario {
            ScenarioConfig::Cs2(c) => assert_eq!(c.noise_psd_dbm_hz, -174.0),
            _ => unreachable!(),
        }
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn negative_bandwidth_names_field() {
        let path = config_path(r#"{"scenario": "cs2", "cs2": {"bandwidth_hz": -1}}"#);
        assert_eq!(path, "cs2.bandwidth_hz");
        let path = config_path(r#"{"scenario": "cs1", "cs1": {"bandwidth_hz": 0}}"#);
        assert_eq!(path, "cs1.bandwidth_hz");
    }

    #[test]
    fn unknown_and_mistyped_keys_name_field() {
        assert_eq!(
            config_path(r#"{"scenario": "cs2", "cs2": {"bandwith_hz": 1}}"#),
            "cs2.bandwith_hz"
        );
        assert_eq!(
            config_path(r#"{"scenario": "cs2", "cs2": {"n_users": "x"}}"#),
            "cs2.n_users"
        );
        assert_eq!(config_path(r#"{"scenario": "cs2", "cs2": {}, "extra": 1}"#), "extra");
        assert_eq!(
            config_path(r#"{"scenario": "cs2", "cs2": {}, "plan": {"topologies": 0}}"#),
            "plan.topologies"
        );
        assert_eq!(config_path(r#"{"scenario": "cs3"}"#), "scenario");
    }

    #[test]
    fn scenario_block_must_match() {
        assert_eq!(config_path(r#"{"scenario": "cs2"}"#), "cs2");
        assert_eq!(config_path(r#"{"scenario": "cs2", "cs2": {}, "cs1": {}}"#), "cs1");
        assert_eq!(config_path(r#"{"scenario": "cs1", "cs2": {}}"#), "cs2");
        assert!(parse_config("not json").is_err());
    }

    #[test]
    fn plan_defaults_follow_scenario() {
        let cfg = parse_config(r#"{"scenario": "cs1", "cs1": {}, "plan": {"master_seed": 9}}"#).unwrap();
        assert_eq!(
            cfg.plan,
            TrialPlan {
                master_seed: 9,
                topologies: 200,
                realizations: 500
            }
        );
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
    }

    #[test]
    fn rendered_defaults_round_trip() {
        for s in [Scenario::Cs1, Scenario::Cs2] {
            let cfg = ExperimentConfig::defaults(s);
            assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
        }
        let mut cfg = ExperimentConfig::defaults(Scenario::Cs1);
        if let ScenarioConfig::Cs1(c) = &mut cfg.scenario {
            c.self_interference_db = Some(-90.0);
        }
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }
}
