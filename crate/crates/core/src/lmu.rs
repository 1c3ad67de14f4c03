//! Load management unit: the master that keeps the registry of logged loads,
//! decides every interval which schedulable loads run under the maximum
//! demand limit, and accounts the energy drawn beyond it.
//!
//! Scheduling policy for interval `t`, applied in order:
//!
//! 1. budget = MDL[t] − NINSL demand[t] (NINSL loads are never curtailed, so
//!    the budget may start negative);
//! 2. NISL loads that already started and are unfinished stay ON;
//! 3. loads with zero slack (priority 1) go ON regardless of budget;
//! 4. the remaining candidates, highest priority first (ties: earlier beta,
//!    smaller rated power, load id), go ON when their rated power fits what
//!    is left of the budget;
//! 5. ISL candidates left out get OFF; unstarted NISL loads simply wait.
//!
//! Priority is the slack ratio `remaining intervals / (beta − t + 1)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::domain::{
    required_intervals, validate_config, ConfigError, LoadClass, LoadId, LoadSpec, MdlProfile, ScheduleConfig,
    TimeModel,
};
use crate::protocol::{Ack, AckStatus, Command, ConfigLog, Message, RefKind, Relay, Telemetry};

const BUDGET_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmuError {
    #[error("load {0} already started today and cannot be reconfigured")]
    DuplicateActiveLoad(LoadId),
    #[error("invalid config for {id}: {source}")]
    InvalidConfig {
        id: LoadId,
        #[source]
        source: ConfigError,
    },
    #[error("config for {id} arrived at interval {now}; its window can no longer fit gamma")]
    WindowElapsed { id: LoadId, now: usize },
    #[error("rated power of {0} must be positive")]
    BadRatedPower(LoadId),
    #[error("load {0} is not schedulable now")]
    NotSchedulable(LoadId),
    #[error("interval {t} is outside the window of {id}")]
    OutsideWindow { id: LoadId, t: usize },
    #[error("no MDL for interval {0}")]
    MdlMissing(usize),
    #[error("corrupt registry: {0}")]
    CorruptRegistry(String),
    #[error("profile has {profile} intervals but MDL has {mdl}")]
    LengthMismatch { profile: usize, mdl: usize },
    #[error("rate must be finite")]
    BadRate,
}

impl LmuError {
    pub fn code(&self) -> &'static str {
        match self {
            LmuError::DuplicateActiveLoad(_) => "DuplicateActiveLoad",
            LmuError::InvalidConfig { source, .. } => source.code(),
            LmuError::WindowElapsed { .. } => "WindowElapsed",
            LmuError::BadRatedPower(_) => "BadRatedPower",
            LmuError::NotSchedulable(_) => "NotSchedulable",
            LmuError::OutsideWindow { .. } => "OutsideWindow",
            LmuError::MdlMissing(_) => "MdlMissing",
            LmuError::CorruptRegistry(_) => "CorruptRegistry",
            LmuError::LengthMismatch { .. } => "LengthMismatch",
            LmuError::BadRate => "BadRate",
        }
    }
}

/// What the LMU remembers about one logged load.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadEntry {
    pub id: LoadId,
    pub class: LoadClass,
    pub rated_kw: f64,
    /// `None` for NINSL loads.
    pub config: Option<ScheduleConfig>,
    pub remaining_minutes: u32,
    pub started: bool,
    pub running: bool,
}

impl LoadEntry {
    fn remaining_intervals(&self, tm: &TimeModel) -> usize {
        (self.remaining_minutes / tm.interval_minutes()) as usize
    }
}

#[derive(Debug, Clone)]
pub struct Registry {
    tm: TimeModel,
    /// First interval not yet decided.
    next_interval: usize,
    loads: BTreeMap<LoadId, LoadEntry>,
}

impl Registry {
    pub fn new(tm: TimeModel) -> Self {
        Self {
            tm,
            next_interval: 0,
            loads: BTreeMap::new(),
        }
    }

    /// Registry pre-filled from load specs, as if every node had logged its config.
    pub fn from_specs<'a>(tm: TimeModel, specs: impl IntoIterator<Item = &'a LoadSpec>) -> Result<Self, LmuError> {
        let mut reg = Self::new(tm);
        for spec in specs {
            let cfg = spec.config.unwrap_or(ScheduleConfig::EMPTY);
            reg.register(&ConfigLog {
                node_id: spec.id.clone(),
                class: spec.class,
                alpha: cfg.alpha,
                beta: cfg.beta,
                gamma_minutes: cfg.gamma_minutes,
                rated_kw: spec.rated_kw,
            })?;
        }
        Ok(reg)
    }

    pub fn time_model(&self) -> &TimeModel {
        &self.tm
    }

    pub fn next_interval(&self) -> usize {
        self.next_interval
    }

    pub fn get(&self, id: &LoadId) -> Option<&LoadEntry> {
        self.loads.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LoadEntry> {
        self.loads.values()
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }

    /// Stores a logged config. Re-logging a load that has not started yet
    /// replaces its entry and resets its remaining run time.
    pub fn register(&mut self, cfg: &ConfigLog) -> Result<(), LmuError> {
        let id = cfg.node_id.clone();
        if self.loads.get(&id).is_some_and(|e| e.started) {
            return Err(LmuError::DuplicateActiveLoad(id));
        }
        let entry = if cfg.class.is_schedulable() {
            let config = validate_config(
                cfg.class,
                ScheduleConfig::new(cfg.alpha, cfg.beta, cfg.gamma_minutes),
                &self.tm,
            )
            .map_err(|source| LmuError::InvalidConfig { id: id.clone(), source })?;
            if !(cfg.rated_kw.is_finite() && cfg.rated_kw > 0.0) {
                return Err(LmuError::BadRatedPower(id));
            }
            let first = config.alpha.max(self.next_interval);
            let slots = (config.beta + 1).saturating_sub(first);
            if slots < required_intervals(&config, &self.tm) {
                return Err(LmuError::WindowElapsed {
                    id,
                    now: self.next_interval,
                });
            }
            LoadEntry {
                id: id.clone(),
                class: cfg.class,
                rated_kw: cfg.rated_kw,
                config: Some(config),
                remaining_minutes: config.gamma_minutes,
                started: false,
                running: false,
            }
        } else {
            LoadEntry {
                id: id.clone(),
                class: cfg.class,
                rated_kw: cfg.rated_kw,
                config: None,
                remaining_minutes: 0,
                started: false,
                running: false,
            }
        };
        self.loads.insert(id, entry);
        Ok(())
    }

    /// Records what was decided for `t` and moves on to `t + 1`.
    pub fn commit(&mut self, t: usize, decision: &Decision) -> Result<(), LmuError> {
        if t != self.next_interval {
            return Err(LmuError::CorruptRegistry(format!(
                "committing interval {t} while expecting {}",
                self.next_interval
            )));
        }
        let step = self.tm.interval_minutes();
        for entry in self.loads.values_mut() {
            if !entry.class.is_schedulable() {
                continue;
            }
            let on = decision.on.contains(&entry.id);
            if on {
                if entry.remaining_minutes < step {
                    return Err(LmuError::CorruptRegistry(format!(
                        "{} switched on with no run time left",
                        entry.id
                    )));
                }
                entry.remaining_minutes -= step;
                entry.started = true;
            }
            entry.running = on && entry.remaining_minutes > 0;
        }
        self.next_interval = t + 1;
        Ok(())
    }
}

/// Urgency of a schedulable load at one interval.
///
/// Kept as the ratio `remaining / slots` so comparisons are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorityScore {
    remaining_intervals: usize,
    slots_left: usize,
}

impl PriorityScore {
    pub fn value(&self) -> f64 {
        self.remaining_intervals as f64 / self.slots_left as f64
    }

    /// True when the load must run in every interval left in its window.
    pub fn is_critical(&self) -> bool {
        self.remaining_intervals >= self.slots_left
    }
}

impl Ord for PriorityScore {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.remaining_intervals * other.slots_left).cmp(&(other.remaining_intervals * self.slots_left))
    }
}

impl PartialOrd for PriorityScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Slack-ratio priority of `entry` at interval `t`.
pub fn priority(entry: &LoadEntry, t: usize, tm: &TimeModel) -> Result<PriorityScore, LmuError> {
    let cfg = match entry.config {
        Some(cfg) if entry.class.is_schedulable() && entry.remaining_minutes > 0 => cfg,
        _ => return Err(LmuError::NotSchedulable(entry.id.clone())),
    };
    if !cfg.contains(t) {
        return Err(LmuError::OutsideWindow {
            id: entry.id.clone(),
            t,
        });
    }
    Ok(PriorityScore {
        remaining_intervals: entry.remaining_intervals(tm),
        slots_left: cfg.beta - t + 1,
    })
}

/// Relay decisions for one interval.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decision {
    /// Loads to switch ON, in decision order.
    pub on: Vec<LoadId>,
    /// Loads to switch OFF.
    pub off: Vec<LoadId>,
}

impl Decision {
    pub fn is_empty(&self) -> bool {
        self.on.is_empty() && self.off.is_empty()
    }

    pub fn commands(&self, issued_at: f64) -> Vec<Command> {
        let on = self.on.iter().map(|id| (id, Relay::On));
        let off = self.off.iter().map(|id| (id, Relay::Off));
        on.chain(off)
            .map(|(id, action)| Command {
                node_id: id.clone(),
                action,
                issued_at,
            })
            .collect()
    }
}

/// Decides which schedulable loads run during interval `t`.
pub fn schedule_interval(
    reg: &Registry,
    t: usize,
    mdl: &MdlProfile,
    ninsl_total_kw: f64,
) -> Result<Decision, LmuError> {
    let limit = mdl.limit(t).ok_or(LmuError::MdlMissing(t))?;
    if t != reg.next_interval {
        return Err(LmuError::CorruptRegistry(format!(
            "scheduling interval {t} while expecting {}",
            reg.next_interval
        )));
    }
    let tm = &reg.tm;
    let mut budget = limit - ninsl_total_kw;
    let mut decision = Decision::default();

    let mut candidates = Vec::new();
    for entry in reg.loads.values() {
        if !entry.class.is_schedulable() || entry.remaining_minutes == 0 {
            continue;
        }
        let cfg = entry
            .config
            .ok_or_else(|| LmuError::CorruptRegistry(format!("{} has no config", entry.id)))?;
        let locked = entry.class == LoadClass::Nisl && entry.started;
        if !cfg.contains(t) {
            if locked || t > cfg.beta {
                return Err(LmuError::CorruptRegistry(format!(
                    "{} still needs {} min after its window",
                    entry.id, entry.remaining_minutes
                )));
            }
            continue;
        }
        if locked {
            budget -= entry.rated_kw;
            decision.on.push(entry.id.clone());
            continue;
        }
        candidates.push((priority(entry, t, tm)?, entry));
    }

    let (forced, mut optional): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|(p, _)| p.is_critical());
    for (_, entry) in &forced {
        budget -= entry.rated_kw;
        decision.on.push(entry.id.clone());
    }

    optional.sort_by(|(pa, a), (pb, b)| {
        pb.cmp(pa)
            .then_with(|| a.config.map(|c| c.beta).cmp(&b.config.map(|c| c.beta)))
            .then_with(|| a.rated_kw.total_cmp(&b.rated_kw))
            .then_with(|| a.id.cmp(&b.id))
    });
    for (_, entry) in optional {
        if entry.rated_kw <= budget + BUDGET_EPSILON {
            budget -= entry.rated_kw;
            decision.on.push(entry.id.clone());
        } else if entry.class == LoadClass::Isl {
            decision.off.push(entry.id.clone());
        }
    }
    Ok(decision)
}

/// The unmanaged consumer: each schedulable load runs from its alpha until
/// done, with no regard for the demand limit.
pub fn baseline_interval(reg: &Registry, t: usize) -> Decision {
    let on = reg
        .loads
        .values()
        .filter(|e| e.class.is_schedulable() && e.remaining_minutes > 0)
        .filter(|e| e.config.is_some_and(|c| c.alpha <= t))
        .map(|e| e.id.clone())
        .collect();
    Decision { on, off: Vec::new() }
}

/// Baseline decisions for every remaining interval of the day.
pub fn baseline_schedule(reg: &Registry) -> Vec<Decision> {
    let mut reg = reg.clone();
    (reg.next_interval..reg.tm.horizon())
        .map(|t| {
            let d = baseline_interval(&reg, t);
            reg.commit(t, &d)
                .expect("baseline decisions respect remaining run time");
            d
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Loads start at alpha and run straight through.
    None,
    /// Slack-ratio priority scheduling under the MDL.
    #[default]
    Priority,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::None => "none",
            Algorithm::Priority => "priority",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Algorithm::None),
            "priority" => Ok(Algorithm::Priority),
            other => Err(format!("unknown algorithm {other:?} (expected none or priority)")),
        }
    }
}

/// Runs one algorithm over the whole day without a network in between.
///
/// `ninsl_kw[t]` is the total NINSL demand at `t`.
pub fn plan_day(
    reg: &Registry,
    mdl: &MdlProfile,
    ninsl_kw: &[f64],
    algorithm: Algorithm,
) -> Result<Vec<Decision>, LmuError> {
    let mut reg = reg.clone();
    let horizon = reg.tm.horizon();
    let mut out = Vec::with_capacity(horizon);
    for t in reg.next_interval..horizon {
        let d = match algorithm {
            Algorithm::None => baseline_interval(&reg, t),
            Algorithm::Priority => schedule_interval(&reg, t, mdl, ninsl_kw.get(t).copied().unwrap_or(0.0))?,
        };
        reg.commit(t, &d)?;
        out.push(d);
    }
    Ok(out)
}

/// Exact rational quantity, rendered as `f64` in reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(BigRational);

impl Exact {
    pub fn zero() -> Self {
        Exact(BigRational::zero())
    }

    /// The decimal a finite `f64` prints as, taken exactly: `0.1` is one tenth,
    /// not its binary approximation.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        // `Display` for f64 gives the shortest round-tripping decimal, never
        // in exponent form.
        let text = v.to_string();
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.as_str()),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(numer, denom);
        Some(Exact(if negative { -value } else { value }))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl std::ops::Add for &Exact {
    type Output = Exact;
    fn add(self, rhs: &Exact) -> Exact {
        Exact(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Exact {
    type Output = Exact;
    fn sub(self, rhs: &Exact) -> Exact {
        Exact(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &Exact {
    type Output = Exact;
    fn mul(self, rhs: &Exact) -> Exact {
        Exact(&self.0 * &rhs.0)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

/// Energy drawn above the MDL and what it costs at `rate_x` per kWh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyReport {
    /// kWh.
    pub energy_over_mdl: Exact,
    pub rate_x: Exact,
    pub penalty: Exact,
    pub intervals_over: usize,
}

impl PenaltyReport {
    pub fn from_energy(energy_over_mdl: Exact, rate_x: Exact, intervals_over: usize) -> Self {
        let penalty = &energy_over_mdl * &rate_x;
        Self {
            energy_over_mdl,
            rate_x,
            penalty,
            intervals_over,
        }
    }
}

/// Sums the per-interval excess of `profile_kw` over the MDL.
pub fn penalty(profile_kw: &[f64], mdl: &MdlProfile, rate_x: f64, tm: &TimeModel) -> Result<PenaltyReport, LmuError> {
    if profile_kw.len() != mdl.len() {
        return Err(LmuError::LengthMismatch {
            profile: profile_kw.len(),
            mdl: mdl.len(),
        });
    }
    let rate = Exact::from_f64(rate_x).ok_or(LmuError::BadRate)?;
    let hours = Exact::from_ratio(i64::from(tm.interval_minutes()), 60);
    let mut energy = Exact::zero();
    let mut intervals_over = 0;
    for (t, (&p, &m)) in profile_kw.iter().zip(mdl.limits()).enumerate() {
        let demand = Exact::from_f64(p)
            .ok_or_else(|| LmuError::CorruptRegistry(format!("non-finite demand at interval {t}")))?;
        let limit = Exact::from_f64(m).ok_or(LmuError::MdlMissing(t))?;
        let excess = &demand - &limit;
        if excess > Exact::zero() {
            energy = &energy + &(&excess * &hours);
            intervals_over += 1;
        }
    }
    Ok(PenaltyReport::from_energy(energy, rate, intervals_over))
}

/// The master service: ingests node messages and issues decisions.
#[derive(Debug, Clone)]
pub struct Lmu {
    registry: Registry,
    mdl: MdlProfile,
    algorithm: Algorithm,
    telemetry: BTreeMap<LoadId, Telemetry>,
    run_complete_acks: usize,
    rejected_configs: Vec<(LoadId, LmuError)>,
}

impl Lmu {
    pub fn new(tm: TimeModel, mdl: MdlProfile, algorithm: Algorithm) -> Self {
        Self {
            registry: Registry::new(tm),
            mdl,
            algorithm,
            telemetry: BTreeMap::new(),
            run_complete_acks: 0,
            rejected_configs: Vec::new(),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn latest_telemetry(&self, id: &LoadId) -> Option<&Telemetry> {
        self.telemetry.get(id)
    }

    pub fn run_complete_acks(&self) -> usize {
        self.run_complete_acks
    }

    pub fn rejected_configs(&self) -> &[(LoadId, LmuError)] {
        &self.rejected_configs
    }

    /// Handles a message from a node. Returns the reply to send back, if any.
    pub fn ingest(&mut self, msg: &Message) -> Option<Message> {
        match msg {
            Message::ConfigLog(cfg) => {
                let status = match self.registry.register(cfg) {
                    Ok(()) => AckStatus::Ok,
                    Err(e) => {
                        let status = AckStatus::Rejected(e.code().to_string());
                        self.rejected_configs.push((cfg.node_id.clone(), e));
                        status
                    }
                };
                Some(Message::Ack(Ack {
                    node_id: cfg.node_id.clone(),
                    ref_kind: RefKind::Config,
                    status,
                }))
            }
            Message::Telemetry(tel) => {
                self.telemetry.insert(tel.node_id.clone(), tel.clone());
                None
            }
            Message::Ack(ack) => {
                if ack.status == AckStatus::RunComplete {
                    self.run_complete_acks += 1;
                }
                None
            }
            _ => None,
        }
    }

    /// Decides interval `t` and records the decision.
    pub fn decide(&mut self, t: usize, ninsl_total_kw: f64) -> Result<Decision, LmuError> {
        let d = match self.algorithm {
            Algorithm::None => baseline_interval(&self.registry, t),
            Algorithm::Priority => schedule_interval(&self.registry, t, &self.mdl, ninsl_total_kw)?,
        };
        self.registry.commit(t, &d)?;
        Ok(d)
    }
}
