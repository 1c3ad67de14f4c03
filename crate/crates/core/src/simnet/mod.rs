//! Deterministic day-long simulation of the home area network.
//!
//! Time is seconds from local midnight. Interval `t` spans
//! `[t·I, (t+1)·I)` with `I` the interval length. Each interval runs as:
//!
//! 1. at `t·I − max_delay` the LMU processes what has arrived, decides `t`,
//!    and sends its commands, so they land before the boundary whatever the
//!    link delay;
//! 2. at the boundary `t·I` every node closes out interval `t − 1` (run time,
//!    energy, telemetry), applies queued UI input and the commands that
//!    arrived, and the relay states for `t` are latched.
//!
//! Nodes log their configuration two intervals before midnight.

mod link;
mod output;
mod scenario;

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

pub use link::{Delivery, Direction, InFlight, Link, LinkError, LinkModel, DEFAULT_MAX_DELAY, DEFAULT_MIN_DELAY};
pub use output::{event_log_text, profile_csv, LoggedEvent};
pub use scenario::{
    case_study, LinkFile, LoadFile, Scenario, ScenarioError, ScenarioFile, TimeModelFile, CASE_STUDY_JSON,
};

use crate::domain::{LoadClass, LoadId, TimeModel};
use crate::lmu::{penalty, Algorithm, Decision, Lmu, LmuError, PenaltyReport};
use crate::protocol::{Ack, AckStatus, Command, Message, PanelState, ProfilePoint, RefKind, UiEvent};
use crate::sln::{NodeState, SlnError};

/// Intervals before midnight at which nodes send their logged config.
const CONFIG_LEAD_INTERVALS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Lmu(#[from] LmuError),
    #[error(transparent)]
    Node(#[from] SlnError),
    #[error("message addressed to unknown node {0}")]
    UnknownNode(LoadId),
}

/// Rounds kW to the meter's milliwatt resolution so sums print cleanly and
/// reproduce exactly.
pub fn round_kw(kw: f64) -> f64 {
    (kw * 1e6).round() / 1e6
}

/// Position within the simulated day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub current_interval: usize,
    /// Seconds into the current interval.
    pub sub_second: f64,
    pub tm: TimeModel,
}

impl SimClock {
    /// Clock reading at `time` seconds from midnight. Times outside the day
    /// read as its first or last instant.
    pub fn at(tm: TimeModel, time: f64) -> Self {
        let len = tm.interval_seconds();
        let last = tm.horizon() - 1;
        let time = time.max(0.0);
        let current_interval = ((time / len).floor() as usize).min(last);
        let sub_second = if current_interval == last {
            (time - last as f64 * len).min(len.next_down())
        } else {
            time - current_interval as f64 * len
        };
        Self {
            current_interval,
            sub_second,
            tm,
        }
    }
}

/// What one interval produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalOutcome {
    pub profile: ProfilePoint,
    pub relays: Vec<bool>,
    pub decision: Decision,
    pub panels: Vec<PanelState>,
    /// Replies to UI input applied at this boundary.
    pub ui_acks: Vec<Ack>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(skip)]
    pub time_model: TimeModel,
    pub load_ids: Vec<LoadId>,
    pub mdl_kw: Vec<f64>,
    pub aggregate_profile: Vec<f64>,
    /// `relays[t][i]`: load `i` (scenario order) drew power during `t`.
    #[serde(skip)]
    pub relays: Vec<Vec<bool>>,
    pub per_load_on_intervals: BTreeMap<LoadId, Vec<usize>>,
    pub energy_delivered_kwh: BTreeMap<LoadId, f64>,
    pub penalty_report: PenaltyReport,
    #[serde(skip)]
    pub decisions: Vec<Decision>,
    #[serde(skip)]
    pub event_log: Vec<LoggedEvent>,
    pub run_complete_acks: usize,
}

impl SimResult {
    pub fn profile_csv(&self) -> String {
        profile_csv(self)
    }

    pub fn event_log_text(&self) -> String {
        event_log_text(&self.event_log)
    }

    pub fn over_kw(&self, t: usize) -> f64 {
        round_kw((self.aggregate_profile[t] - self.mdl_kw[t]).max(0.0))
    }

    /// Commands the LMU sent, with their send times.
    pub fn commands(&self) -> impl Iterator<Item = (&LoggedEvent, &Command)> {
        self.event_log.iter().filter_map(|e| match &e.message {
            Message::Command(c) => Some((e, c)),
            _ => None,
        })
    }
}

/// The network mid-day: nodes, LMU, link and everything in flight.
pub struct Simulation {
    scenario: Scenario,
    algorithm: Algorithm,
    lmu: Lmu,
    nodes: Vec<NodeState>,
    index: BTreeMap<LoadId, usize>,
    inboxes: Vec<Vec<Command>>,
    link: Link,
    in_flight: InFlight,
    ui_queue: VecDeque<UiEvent>,
    next_interval: usize,
    aggregate: Vec<f64>,
    relays: Vec<Vec<bool>>,
    decisions: Vec<Decision>,
    event_log: Vec<LoggedEvent>,
}

impl Simulation {
    pub fn new(scenario: Scenario, algorithm: Algorithm) -> Result<Self, SimError> {
        let tm = scenario.time_model;
        let nodes = scenario
            .loads
            .iter()
            .map(|spec| NodeState::new(spec.clone(), tm))
            .collect::<Result<Vec<_>, _>>()?;
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id().clone(), i)).collect();
        let mut sim = Self {
            lmu: Lmu::new(tm, scenario.mdl.clone(), algorithm),
            link: Link::new(scenario.link),
            inboxes: vec![Vec::new(); nodes.len()],
            nodes,
            index,
            in_flight: InFlight::default(),
            ui_queue: VecDeque::new(),
            next_interval: 0,
            aggregate: Vec::with_capacity(tm.horizon()),
            relays: Vec::with_capacity(tm.horizon()),
            decisions: Vec::with_capacity(tm.horizon()),
            event_log: Vec::new(),
            scenario,
            algorithm,
        };
        let logged_at = -CONFIG_LEAD_INTERVALS * tm.interval_seconds();
        for i in 0..sim.nodes.len() {
            let cfg = Message::ConfigLog(sim.nodes[i].config_message());
            sim.send(cfg, logged_at, Direction::Up);
        }
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn lmu(&self) -> &Lmu {
        &self.lmu
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn next_interval(&self) -> usize {
        self.next_interval
    }

    pub fn is_finished(&self) -> bool {
        self.next_interval >= self.scenario.time_model.horizon()
    }

    /// Every message that has crossed the link so far, in delivery order.
    pub fn event_log(&self) -> &[LoggedEvent] {
        &self.event_log
    }

    pub fn panels(&self) -> Vec<PanelState> {
        self.nodes.iter().map(NodeState::panel).collect()
    }

    /// Queues consumer input; it takes effect at the next interval boundary.
    pub fn queue_ui(&mut self, event: UiEvent) {
        self.ui_queue.push_back(event);
    }

    fn send(&mut self, message: Message, at: f64, direction: Direction) {
        let d = self.link.send(message, at, direction);
        self.in_flight.push(d);
    }

    fn node_index(&self, id: &LoadId) -> Result<usize, SimError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| SimError::UnknownNode(id.clone()))
    }

    fn deliver_until(&mut self, until: f64) -> Result<(), SimError> {
        while let Some(d) = self.in_flight.pop_due(until) {
            match d.direction {
                Direction::Up => {
                    if let Some(reply) = self.lmu.ingest(&d.message) {
                        self.send(reply, d.deliver_at, Direction::Down);
                    }
                }
                Direction::Down => {
                    if let Message::Command(cmd) = &d.message {
                        let i = self.node_index(&cmd.node_id)?;
                        self.inboxes[i].push(cmd.clone());
                    }
                }
            }
            self.event_log.push(LoggedEvent::from(d));
        }
        Ok(())
    }

    fn close_interval(&mut self, interval: usize, at: f64) -> Result<(), SimError> {
        for i in 0..self.nodes.len() {
            let tel = self.nodes[i].tick(interval, at)?;
            self.send(Message::Telemetry(tel), at, Direction::Up);
        }
        Ok(())
    }

    fn apply_ui(&mut self, at: f64) -> Vec<Ack> {
        let mut acks = Vec::new();
        while let Some(event) = self.ui_queue.pop_front() {
            let status = match self.index.get(&event.node_id).copied() {
                None => AckStatus::Rejected("UnknownNode".into()),
                Some(i) => match self.nodes[i].handle_input(event.input) {
                    Ok(Some(cfg)) => {
                        self.send(Message::ConfigLog(cfg), at, Direction::Up);
                        AckStatus::Ok
                    }
                    Ok(None) => AckStatus::Ok,
                    Err(e) => AckStatus::Rejected(e.code().into()),
                },
            };
            acks.push(Ack {
                node_id: event.node_id,
                ref_kind: RefKind::UiEvent,
                status,
            });
        }
        acks
    }

    /// NINSL demand as the nodes currently report it.
    fn ninsl_total(&self, t: usize) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.spec().class == LoadClass::Ninsl)
            .map(|n| n.draw_kw(t))
            .sum()
    }

    /// Runs the next interval. `None` once the day is over.
    pub fn step(&mut self) -> Result<Option<IntervalOutcome>, SimError> {
        if self.is_finished() {
            return Ok(None);
        }
        let t = self.next_interval;
        let tm = self.scenario.time_model;
        let boundary = t as f64 * tm.interval_seconds();
        let decide_at = boundary - self.link.model().max_delay;

        self.deliver_until(decide_at)?;
        let decision = self.lmu.decide(t, self.ninsl_total(t))?;
        for cmd in decision.commands(decide_at) {
            self.send(Message::Command(cmd), decide_at, Direction::Down);
        }

        self.deliver_until(boundary)?;
        if t > 0 {
            self.close_interval(t - 1, boundary)?;
        }
        let ui_acks = self.apply_ui(boundary);
        for i in 0..self.nodes.len() {
            for cmd in std::mem::take(&mut self.inboxes[i]) {
                let status = match self.nodes[i].apply_command(&cmd) {
                    Ok(status) => status,
                    Err(e) => AckStatus::Rejected(e.code().into()),
                };
                let ack = Message::Ack(Ack {
                    node_id: cmd.node_id,
                    ref_kind: RefKind::Command,
                    status,
                });
                self.send(ack, boundary, Direction::Up);
            }
        }

        let draws: Vec<f64> = self.nodes.iter().map(|n| n.draw_kw(t)).collect();
        let aggregate = round_kw(draws.iter().sum());
        let mdl_kw = self.scenario.mdl.limit(t).unwrap_or(0.0);
        let relays: Vec<bool> = draws.iter().map(|&kw| kw > 0.0).collect();
        self.aggregate.push(aggregate);
        self.relays.push(relays.clone());
        self.decisions.push(decision.clone());
        self.next_interval = t + 1;

        Ok(Some(IntervalOutcome {
            profile: ProfilePoint {
                interval: t,
                aggregate_kw: aggregate,
                mdl_kw,
                over_kw: round_kw((aggregate - mdl_kw).max(0.0)),
            },
            relays,
            decision,
            panels: self.panels(),
            ui_acks,
        }))
    }

    /// Closes the last interval, drains the link and tallies the day.
    pub fn finish(mut self) -> Result<SimResult, SimError> {
        while self.step()?.is_some() {}
        let tm = self.scenario.time_model;
        let horizon = tm.horizon();
        let end = horizon as f64 * tm.interval_seconds();
        self.close_interval(horizon - 1, end)?;
        self.deliver_until(f64::INFINITY)?;

        let load_ids: Vec<LoadId> = self.nodes.iter().map(|n| n.id().clone()).collect();
        let per_load_on_intervals = load_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), (0..horizon).filter(|&t| self.relays[t][i]).collect()))
            .collect();
        let energy_delivered_kwh = self
            .nodes
            .iter()
            .map(|n| (n.id().clone(), n.energy_delivered_kwh()))
            .collect();
        let penalty_report = penalty(&self.aggregate, &self.scenario.mdl, self.scenario.penalty_rate_x, &tm)?;

        Ok(SimResult {
            algorithm: self.algorithm,
            seed: self.scenario.link.seed,
            time_model: tm,
            load_ids,
            mdl_kw: self.scenario.mdl.limits().to_vec(),
            aggregate_profile: self.aggregate,
            relays: self.relays,
            per_load_on_intervals,
            energy_delivered_kwh,
            penalty_report,
            decisions: self.decisions,
            event_log: self.event_log,
            run_complete_acks: self.lmu.run_complete_acks(),
        })
    }
}

/// Simulates one day of `scenario` under `algorithm`.
pub fn run_day(scenario: &Scenario, algorithm: Algorithm) -> Result<SimResult, SimError> {
    Simulation::new(scenario.clone(), algorithm)?.finish()
}
