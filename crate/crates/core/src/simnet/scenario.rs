//! Scenario files: the household, its loads, the day-ahead MDL and the link.
//!
//! ```json
//! {
//!   "time_model": { "interval_minutes": 60 },
//!   "mdl": [3.0, 3.0, ...],
//!   "loads": [
//!     { "id": "ev", "name": "PHEV charger", "class": "ISL", "rated_kw": 3.3,
//!       "alpha": 0, "beta": 6, "gamma_minutes": 240 },
//!     { "id": "base", "name": "lights and fans", "class": "NINSL",
//!       "ninsl_demand": [0.2, 0.2, ...] }
//!   ],
//!   "link": { "min_s": 7, "max_s": 9, "seed": 1 },
//!   "penalty_rate_x": 1.0
//! }
//! ```
//!
//! `power_factor` per load is optional and defaults to 1.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::link::{LinkError, LinkModel};
use crate::domain::{
    LoadClass, LoadError, LoadId, LoadSpec, MdlError, MdlProfile, ScheduleConfig, TimeModel, TimeModelError,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TimeModel(#[from] TimeModelError),
    #[error(transparent)]
    Mdl(#[from] MdlError),
    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(#[from] LoadError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("link delay up to {max_delay} s does not fit inside a {interval_s} s interval")]
    DelayTooLong { max_delay: f64, interval_s: f64 },
    #[error("duplicate load id {0}")]
    DuplicateId(LoadId),
    #[error("penalty rate must be finite and non-negative")]
    BadRate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeModelFile {
    pub interval_minutes: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadFile {
    pub id: LoadId,
    #[serde(default)]
    pub name: String,
    pub class: LoadClass,
    #[serde(default)]
    pub rated_kw: Option<f64>,
    #[serde(default)]
    pub alpha: Option<usize>,
    #[serde(default)]
    pub beta: Option<usize>,
    #[serde(default)]
    pub gamma_minutes: Option<u32>,
    #[serde(default)]
    pub ninsl_demand: Option<Vec<f64>>,
    #[serde(default)]
    pub power_factor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkFile {
    pub min_s: f64,
    pub max_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for LinkFile {
    fn default() -> Self {
        let m = LinkModel::default();
        Self {
            min_s: m.min_delay,
            max_s: m.max_delay,
            seed: m.seed,
        }
    }
}

/// On-disk shape of a scenario, before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub time_model: TimeModelFile,
    pub mdl: Vec<f64>,
    #[serde(default)]
    pub loads: Vec<LoadFile>,
    #[serde(default)]
    pub link: LinkFile,
    #[serde(default = "default_rate")]
    pub penalty_rate_x: f64,
}

fn default_rate() -> f64 {
    1.0
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub time_model: TimeModel,
    pub mdl: MdlProfile,
    pub loads: Vec<LoadSpec>,
    pub link: LinkModel,
    pub penalty_rate_x: f64,
}

impl Scenario {
    pub fn new(
        time_model: TimeModel,
        mdl: MdlProfile,
        loads: Vec<LoadSpec>,
        link: LinkModel,
        penalty_rate_x: f64,
    ) -> Result<Self, ScenarioError> {
        if mdl.len() != time_model.horizon() {
            return Err(MdlError::Length {
                expected: time_model.horizon(),
                found: mdl.len(),
            }
            .into());
        }
        if !(penalty_rate_x.is_finite() && penalty_rate_x >= 0.0) {
            return Err(ScenarioError::BadRate);
        }
        if link.max_delay >= time_model.interval_seconds() {
            return Err(ScenarioError::DelayTooLong {
                max_delay: link.max_delay,
                interval_s: time_model.interval_seconds(),
            });
        }
        let mut seen = BTreeSet::new();
        let mut validated = Vec::with_capacity(loads.len());
        for load in loads {
            if !seen.insert(load.id.clone()) {
                return Err(ScenarioError::DuplicateId(load.id));
            }
            validated.push(load.validate(&time_model)?);
        }
        Ok(Self {
            time_model,
            mdl,
            loads: validated,
            link,
            penalty_rate_x,
        })
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let tm = TimeModel::new(file.time_model.interval_minutes)?;
        let mdl = MdlProfile::new(file.mdl, &tm)?;
        let link = LinkModel::new(file.link.min_s, file.link.max_s, file.link.seed)?;
        let loads = file
            .loads
            .into_iter()
            .map(|l| {
                let config = match l.class {
                    LoadClass::Ninsl => None,
                    _ => Some(ScheduleConfig::new(
                        l.alpha.unwrap_or(0),
                        l.beta.unwrap_or(0),
                        l.gamma_minutes.unwrap_or(0),
                    )),
                };
                let rated_kw = match (l.rated_kw, &l.ninsl_demand) {
                    (Some(kw), _) => kw,
                    (None, Some(d)) => d.iter().copied().fold(0.0, f64::max),
                    (None, None) => 0.0,
                };
                LoadSpec {
                    id: l.id,
                    name: l.name,
                    class: l.class,
                    rated_kw,
                    config,
                    ninsl_demand: l.ninsl_demand,
                    power_factor: l.power_factor.unwrap_or(1.0),
                }
            })
            .collect();
        Self::new(tm, mdl, loads, link, file.penalty_rate_x)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            time_model: TimeModelFile {
                interval_minutes: self.time_model.interval_minutes(),
            },
            mdl: self.mdl.limits().to_vec(),
            loads: self
                .loads
                .iter()
                .map(|l| LoadFile {
                    id: l.id.clone(),
                    name: l.name.clone(),
                    class: l.class,
                    rated_kw: Some(l.rated_kw),
                    alpha: l.config.map(|c| c.alpha),
                    beta: l.config.map(|c| c.beta),
                    gamma_minutes: l.config.map(|c| c.gamma_minutes),
                    ninsl_demand: l.ninsl_demand.clone(),
                    power_factor: Some(l.power_factor),
                })
                .collect(),
            link: LinkFile {
                min_s: self.link.min_delay,
                max_s: self.link.max_delay,
                seed: self.link.seed,
            },
            penalty_rate_x: self.penalty_rate_x,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.link = self.link.with_seed(seed);
        self
    }

    /// Total NINSL demand at `t`.
    pub fn ninsl_total(&self, t: usize) -> f64 {
        self.loads
            .iter()
            .filter(|l| l.class == LoadClass::Ninsl)
            .map(|l| l.ninsl_demand_at(t))
            .sum()
    }
}

/// The bundled case-study household.
pub const CASE_STUDY_JSON: &str = include_str!("../../scenarios/case_study.json");

pub fn case_study() -> Scenario {
    Scenario::from_json(CASE_STUDY_JSON).expect("bundled scenario is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(loads: &str) -> String {
        format!(
            r#"{{"time_model":{{"interval_minutes":60}},"mdl":{mdl},"loads":[{loads}],
                "link":{{"min_s":7,"max_s":9,"seed":5}},"penalty_rate_x":1.0}}"#,
            mdl = serde_json::to_string(&vec![2.0; 24]).unwrap()
        )
    }

    #[test]
    fn parses_a_minimal_scenario() {
        let s = Scenario::from_json(&minimal(
            r#"{"id":"w","name":"washer","class":"NISL","rated_kw":0.5,"alpha":8,"beta":12,"gamma_minutes":120}"#,
        ))
        .unwrap();
        assert_eq!(s.loads.len(), 1);
        assert_eq!(s.loads[0].config, Some(ScheduleConfig::new(8, 12, 120)));
        assert_eq!(s.link.seed, 5);
    }

    #[test]
    fn infeasible_load_is_rejected() {
        let err = Scenario::from_json(&minimal(
            r#"{"id":"p","class":"ISL","rated_kw":1.0,"alpha":5,"beta":6,"gamma_minutes":180}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, ScenarioError::InfeasibleScenario(_)), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let one = r#"{"id":"p","class":"ISL","rated_kw":1.0,"alpha":5,"beta":6,"gamma_minutes":60}"#;
        let err = Scenario::from_json(&minimal(&format!("{one},{one}"))).unwrap_err();
        assert!(matches!(err, ScenarioError::DuplicateId(_)));
    }

    #[test]
    fn delay_must_fit_in_an_interval() {
        let tm = TimeModel::new(1).unwrap();
        let mdl = MdlProfile::uniform(1.0, &tm).unwrap();
        let link = LinkModel::new(7.0, 60.0, 0).unwrap();
        let err = Scenario::new(tm, mdl, vec![], link, 1.0).unwrap_err();
        assert!(matches!(err, ScenarioError::DelayTooLong { .. }));
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(matches!(Scenario::from_json("{"), Err(ScenarioError::Json(_))));
        let bad_mdl = r#"{"time_model":{"interval_minutes":60},"mdl":[1,2]}"#;
        assert!(matches!(Scenario::from_json(bad_mdl), Err(ScenarioError::Mdl(_))));
    }

    #[test]
    fn file_round_trip() {
        let s = case_study();
        let again = Scenario::from_file(s.to_file()).unwrap();
        assert_eq!(again.loads, s.loads);
        assert_eq!(again.mdl, s.mdl);
    }
}
