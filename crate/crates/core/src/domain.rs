//! Load taxonomy, the interval time model, per-load schedule windows and the
//! day-ahead maximum demand limit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MINUTES_PER_DAY: u32 = 1440;

/// India Standard Time, GMT+5:30.
pub const IST_OFFSET_MINUTES: i32 = 330;

/// How a household load may be operated by the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LoadClass {
    /// Non-interruptible, non-schedulable: runs whenever the user wants.
    Ninsl,
    /// Non-interruptible, schedulable: flexible start, runs to completion.
    Nisl,
    /// Interruptible, schedulable: may run in pieces adding up to gamma.
    Isl,
}

impl LoadClass {
    pub fn is_schedulable(self) -> bool {
        !matches!(self, LoadClass::Ninsl)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LoadClass::Ninsl => "NINSL",
            LoadClass::Nisl => "NISL",
            LoadClass::Isl => "ISL",
        }
    }
}

impl fmt::Display for LoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown load class {0:?} (expected NINSL, NISL or ISL)")]
pub struct UnknownClass(pub String);

impl FromStr for LoadClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NINSL" => Ok(LoadClass::Ninsl),
            "NISL" => Ok(LoadClass::Nisl),
            "ISL" => Ok(LoadClass::Isl),
            other => Err(UnknownClass(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeModelError {
    #[error("interval length must be positive")]
    ZeroInterval,
    #[error("interval length {0} min does not divide one hour")]
    NotHourDivisor(u32),
}

/// Splits one day into equal scheduling intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeModel {
    interval_minutes: u32,
    utc_offset_minutes: i32,
}

impl TimeModel {
    pub fn new(interval_minutes: u32) -> Result<Self, TimeModelError> {
        Self::with_offset(interval_minutes, IST_OFFSET_MINUTES)
    }

    pub fn with_offset(interval_minutes: u32, utc_offset_minutes: i32) -> Result<Self, TimeModelError> {
        if interval_minutes == 0 {
            return Err(TimeModelError::ZeroInterval);
        }
        if 60 % interval_minutes != 0 {
            return Err(TimeModelError::NotHourDivisor(interval_minutes));
        }
        Ok(Self {
            interval_minutes,
            utc_offset_minutes,
        })
    }

    /// One-hour intervals, matching an hourly demand limit.
    pub fn hourly() -> Self {
        Self::new(60).expect("60 divides 60")
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn interval_seconds(&self) -> f64 {
        f64::from(self.interval_minutes) * 60.0
    }

    /// Fraction of an hour covered by one interval; kW times this is kWh.
    pub fn interval_hours(&self) -> f64 {
        f64::from(self.interval_minutes) / 60.0
    }

    /// Number of intervals in a day.
    pub fn horizon(&self) -> usize {
        (MINUTES_PER_DAY / self.interval_minutes) as usize
    }

    pub fn utc_offset_minutes(&self) -> i32 {
        self.utc_offset_minutes
    }

    /// Local wall-clock start of an interval as `HH:MM`.
    pub fn local_clock(&self, interval: usize) -> String {
        let minutes = interval as u32 * self.interval_minutes;
        format!("{:02}:{:02}", minutes / 60, minutes % 60)
    }

    /// UTC wall-clock start of an interval as `HH:MM`.
    pub fn utc_clock(&self, interval: usize) -> String {
        let local = interval as i64 * i64::from(self.interval_minutes);
        let utc = (local - i64::from(self.utc_offset_minutes)).rem_euclid(i64::from(MINUTES_PER_DAY));
        format!("{:02}:{:02}", utc / 60, utc % 60)
    }
}

impl Default for TimeModel {
    fn default() -> Self {
        Self::hourly()
    }
}

/// The consumer-entered (alpha, beta, gamma) triple.
///
/// `alpha` and `beta` are interval indices, both inclusive. `gamma` is the
/// required run time in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub alpha: usize,
    pub beta: usize,
    pub gamma_minutes: u32,
}

impl ScheduleConfig {
    /// The triple stored for loads that take no user input.
    pub const EMPTY: ScheduleConfig = ScheduleConfig {
        alpha: 0,
        beta: 0,
        gamma_minutes: 0,
    };

    pub fn new(alpha: usize, beta: usize, gamma_minutes: u32) -> Self {
        Self {
            alpha,
            beta,
            gamma_minutes,
        }
    }

    pub fn window_len(&self) -> usize {
        self.beta + 1 - self.alpha
    }

    pub fn contains(&self, interval: usize) -> bool {
        self.alpha <= interval && interval <= self.beta
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("window reversed: alpha {alpha} is after beta {beta}")]
    WindowReversed { alpha: usize, beta: usize },
    #[error("gamma {gamma} min exceeds the window capacity of {capacity} min")]
    InfeasibleGamma { gamma: u32, capacity: u32 },
    #[error("gamma must be positive for schedulable loads")]
    NonPositiveGamma,
    #[error("interval {index} is outside the {horizon}-interval day")]
    OutOfHorizon { index: usize, horizon: usize },
    #[error("gamma {gamma} min is not a whole number of {interval}-min intervals")]
    PartialInterval { gamma: u32, interval: u32 },
}

impl ConfigError {
    /// Short token naming the failure, safe to put on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::WindowReversed { .. } => "WindowReversed",
            ConfigError::InfeasibleGamma { .. } => "InfeasibleGamma",
            ConfigError::NonPositiveGamma => "NonPositiveGamma",
            ConfigError::OutOfHorizon { .. } => "OutOfHorizon",
            ConfigError::PartialInterval { .. } => "PartialInterval",
        }
    }
}

/// Checks a logged triple against the rules for `class`.
///
/// NINSL loads take no input, so any triple collapses to [`ScheduleConfig::EMPTY`].
pub fn validate_config(class: LoadClass, cfg: ScheduleConfig, tm: &TimeModel) -> Result<ScheduleConfig, ConfigError> {
    if !class.is_schedulable() {
        return Ok(ScheduleConfig::EMPTY);
    }
    if cfg.alpha > cfg.beta {
        return Err(ConfigError::WindowReversed {
            alpha: cfg.alpha,
            beta: cfg.beta,
        });
    }
    let horizon = tm.horizon();
    if cfg.beta >= horizon {
        return Err(ConfigError::OutOfHorizon {
            index: cfg.beta,
            horizon,
        });
    }
    if cfg.gamma_minutes == 0 {
        return Err(ConfigError::NonPositiveGamma);
    }
    if !cfg.gamma_minutes.is_multiple_of(tm.interval_minutes()) {
        return Err(ConfigError::PartialInterval {
            gamma: cfg.gamma_minutes,
            interval: tm.interval_minutes(),
        });
    }
    let capacity = cfg.window_len() as u32 * tm.interval_minutes();
    if cfg.gamma_minutes > capacity {
        return Err(ConfigError::InfeasibleGamma {
            gamma: cfg.gamma_minutes,
            capacity,
        });
    }
    Ok(cfg)
}

/// Number of intervals a validated config must run for.
pub fn required_intervals(cfg: &ScheduleConfig, tm: &TimeModel) -> usize {
    debug_assert_eq!(cfg.gamma_minutes % tm.interval_minutes(), 0);
    (cfg.gamma_minutes / tm.interval_minutes()) as usize
}

/// Identifies a node and its load. Doubles as the node's network address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LoadId(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid load id {0:?}: must be non-empty without '|', whitespace or control characters")]
pub struct InvalidLoadId(pub String);

impl LoadId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidLoadId> {
        let id = id.into();
        if is_token(&id) {
            Ok(Self(id))
        } else {
            Err(InvalidLoadId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// A token may sit in a `|`-delimited line without escaping.
pub(crate) fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c != '|' && !c.is_whitespace() && !c.is_control())
}

impl fmt::Display for LoadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for LoadId {
    type Error = InvalidLoadId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        LoadId::new(value)
    }
}

impl From<LoadId> for String {
    fn from(id: LoadId) -> Self {
        id.0
    }
}

impl FromStr for LoadId {
    type Err = InvalidLoadId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LoadId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("load {id}: {source}")]
    Config {
        id: LoadId,
        #[source]
        source: ConfigError,
    },
    #[error("load {0}: schedulable loads need a schedule config")]
    MissingConfig(LoadId),
    #[error("load {0}: NINSL loads need a demand series and take no schedule config")]
    NinslShape(LoadId),
    #[error("load {0}: schedulable loads must not carry a NINSL demand series")]
    UnexpectedDemand(LoadId),
    #[error("load {id}: demand series has {found} entries, expected {expected}")]
    DemandLength { id: LoadId, expected: usize, found: usize },
    #[error("load {id}: demand at interval {interval} is negative or not finite")]
    BadDemand { id: LoadId, interval: usize },
    #[error("load {0}: rated power must be positive and finite")]
    BadRatedPower(LoadId),
    #[error("load {0}: power factor must lie in (0, 1]")]
    BadPowerFactor(LoadId),
}

/// A household load attached to one smart load node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub id: LoadId,
    pub name: String,
    pub class: LoadClass,
    /// Draw while ON, in kW.
    pub rated_kw: f64,
    pub config: Option<ScheduleConfig>,
    /// User-driven draw per interval, in kW. NINSL only.
    pub ninsl_demand: Option<Vec<f64>>,
    /// Displacement power factor the node's meter sees while the load runs.
    pub power_factor: f64,
}

impl LoadSpec {
    pub fn schedulable(
        id: LoadId,
        name: impl Into<String>,
        class: LoadClass,
        rated_kw: f64,
        config: ScheduleConfig,
    ) -> Self {
        Self {
            id,
            name: name.into(),
            class,
            rated_kw,
            config: Some(config),
            ninsl_demand: None,
            power_factor: 1.0,
        }
    }

    pub fn ninsl(id: LoadId, name: impl Into<String>, demand: Vec<f64>) -> Self {
        let peak = demand.iter().copied().fold(0.0, f64::max);
        Self {
            id,
            name: name.into(),
            class: LoadClass::Ninsl,
            rated_kw: peak,
            config: None,
            ninsl_demand: Some(demand),
            power_factor: 1.0,
        }
    }

    pub fn with_power_factor(mut self, pf: f64) -> Self {
        self.power_factor = pf;
        self
    }

    /// Checks the shape rules and normalizes the schedule config.
    pub fn validate(mut self, tm: &TimeModel) -> Result<Self, LoadError> {
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(LoadError::BadPowerFactor(self.id));
        }
        match self.class {
            LoadClass::Ninsl => {
                let Some(demand) = &self.ninsl_demand else {
                    return Err(LoadError::NinslShape(self.id));
                };
                if self.config.is_some_and(|c| c != ScheduleConfig::EMPTY) {
                    return Err(LoadError::NinslShape(self.id));
                }
                if demand.len() != tm.horizon() {
                    return Err(LoadError::DemandLength {
                        id: self.id.clone(),
                        expected: tm.horizon(),
                        found: demand.len(),
                    });
                }
                if let Some(interval) = demand.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(LoadError::BadDemand { id: self.id, interval });
                }
                if !(self.rated_kw.is_finite() && self.rated_kw >= 0.0) {
                    return Err(LoadError::BadRatedPower(self.id));
                }
                self.config = None;
            }
            LoadClass::Nisl | LoadClass::Isl => {
                if self.ninsl_demand.is_some() {
                    return Err(LoadError::UnexpectedDemand(self.id));
                }
                if !(self.rated_kw.is_finite() && self.rated_kw > 0.0) {
                    return Err(LoadError::BadRatedPower(self.id));
                }
                let Some(cfg) = self.config else {
                    return Err(LoadError::MissingConfig(self.id));
                };
                let cfg = validate_config(self.class, cfg, tm).map_err(|source| LoadError::Config {
                    id: self.id.clone(),
                    source,
                })?;
                self.config = Some(cfg);
            }
        }
        Ok(self)
    }

    /// kW drawn at `interval` when the relay is ON (schedulable) or by the user (NINSL).
    pub fn ninsl_demand_at(&self, interval: usize) -> f64 {
        self.ninsl_demand
            .as_ref()
            .and_then(|d| d.get(interval).copied())
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdlError {
    #[error("MDL profile has {found} entries, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("MDL at interval {0} must be positive and finite")]
    NonPositive(usize),
}

/// Day-ahead maximum demand limit, in kW per interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlProfile {
    limits: Vec<f64>,
}

impl MdlProfile {
    pub fn new(limits: Vec<f64>, tm: &TimeModel) -> Result<Self, MdlError> {
        if limits.len() != tm.horizon() {
            return Err(MdlError::Length {
                expected: tm.horizon(),
                found: limits.len(),
            });
        }
        if let Some(i) = limits.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(MdlError::NonPositive(i));
        }
        Ok(Self { limits })
    }

    pub fn uniform(limit_kw: f64, tm: &TimeModel) -> Result<Self, MdlError> {
        Self::new(vec![limit_kw; tm.horizon()], tm)
    }

    pub fn limit(&self, interval: usize) -> Option<f64> {
        self.limits.get(interval).copied()
    }

    pub fn limits(&self) -> &[f64] {
        &self.limits
    }

    pub fn len(&self) -> usize {
        self.limits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.limits.is_empty()
    }
}
