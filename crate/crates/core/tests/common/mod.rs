//! Shared helpers for the integration tests: random households and an
//! independent checker for the scheduling rules.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use sln_han::domain::{LoadClass, LoadId, TimeModel};
use sln_han::simnet::{LinkFile, LoadFile, Scenario, ScenarioFile, TimeModelFile};

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub min_loads: usize,
    pub max_loads: usize,
    pub intervals: &'static [u32],
    pub with_ninsl: bool,
    /// Every window exactly as long as its run time.
    pub degenerate: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            min_loads: 1,
            max_loads: 6,
            intervals: &[60, 30, 15],
            with_ninsl: true,
            degenerate: false,
        }
    }
}

/// Tenths of a kW, so every value has a short exact decimal form.
fn tenths(rng: &mut impl Rng, lo: u32, hi: u32) -> f64 {
    f64::from(rng.random_range(lo..=hi)) / 10.0
}

/// A feasible household: every window can hold its run time.
pub fn random_file(rng: &mut impl Rng, p: &GenParams) -> ScenarioFile {
    let interval = p.intervals[rng.random_range(0..p.intervals.len())];
    let horizon = (1440 / interval) as usize;
    let n = rng.random_range(p.min_loads..=p.max_loads);
    let mut loads = Vec::with_capacity(n + 1);
    for i in 0..n {
        let class = if rng.random_bool(0.5) {
            LoadClass::Isl
        } else {
            LoadClass::Nisl
        };
        let alpha = rng.random_range(0..horizon);
        let mut beta = rng.random_range(alpha..horizon);
        let k = rng.random_range(1..=beta - alpha + 1) as u32;
        if p.degenerate {
            beta = alpha + k as usize - 1;
        }
        loads.push(LoadFile {
            id: LoadId::new(format!("l{i}")).unwrap(),
            name: String::new(),
            class,
            rated_kw: Some(tenths(rng, 1, 40)),
            alpha: Some(alpha),
            beta: Some(beta),
            gamma_minutes: Some(k * interval),
            ninsl_demand: None,
            power_factor: Some(tenths(rng, 5, 10)),
        });
    }
    if p.with_ninsl {
        // A stated triple on a NINSL load must be ignored.
        let demand = (0..horizon).map(|_| tenths(rng, 0, 15)).collect();
        loads.push(LoadFile {
            id: LoadId::new("base").unwrap(),
            name: "non-interruptible".into(),
            class: LoadClass::Ninsl,
            rated_kw: None,
            alpha: Some(rng.random_range(0..horizon)),
            beta: Some(horizon - 1),
            gamma_minutes: Some(interval),
            ninsl_demand: Some(demand),
            power_factor: Some(tenths(rng, 5, 10)),
        });
    }
    ScenarioFile {
        time_model: TimeModelFile {
            interval_minutes: interval,
        },
        mdl: (0..horizon).map(|_| tenths(rng, 10, 60)).collect(),
        loads,
        link: LinkFile {
            min_s: 7.0,
            max_s: 9.0,
            seed: rng.random(),
        },
        penalty_rate_x: 1.0,
    }
}

pub fn random_scenario(rng: &mut impl Rng, p: &GenParams) -> Scenario {
    Scenario::from_file(random_file(rng, p)).expect("generated scenarios are feasible")
}

/// Checks run time, window and contiguity for every schedulable load.
pub fn check_schedule(scenario: &Scenario, on: &BTreeMap<LoadId, Vec<usize>>) -> Result<(), String> {
    let tm: TimeModel = scenario.time_model;
    for load in scenario.loads.iter().filter(|l| l.class.is_schedulable()) {
        let cfg = load.config.ok_or(format!("{} has no config", load.id))?;
        let intervals = on.get(&load.id).cloned().unwrap_or_default();
        let need = (cfg.gamma_minutes / tm.interval_minutes()) as usize;
        if intervals.len() != need {
            return Err(format!("{} ran {} intervals, needs {need}", load.id, intervals.len()));
        }
        if let Some(t) = intervals.iter().find(|&&t| t < cfg.alpha || t > cfg.beta) {
            return Err(format!("{} ran at {t} outside {}..={}", load.id, cfg.alpha, cfg.beta));
        }
        if load.class == LoadClass::Nisl && intervals.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(format!("{} was interrupted: {intervals:?}", load.id));
        }
    }
    Ok(())
}

pub mod oracle;

pub mod strategies {
    use proptest::prelude::*;
    use sln_han::domain::{LoadClass, LoadId};
    use sln_han::protocol::{
        Ack, AckStatus, Command, ConfigLog, Message, PanelState, ProfilePoint, RefKind, Relay, Screen, Telemetry,
        UiEvent, UiInput,
    };

    pub fn load_id() -> impl Strategy<Value = LoadId> {
        "[A-Za-z0-9_.:-]{1,12}".prop_map(|s| LoadId::new(s).unwrap())
    }

    pub fn class() -> impl Strategy<Value = LoadClass> {
        prop_oneof![Just(LoadClass::Ninsl), Just(LoadClass::Nisl), Just(LoadClass::Isl)]
    }

    pub fn schedulable_class() -> impl Strategy<Value = LoadClass> {
        prop_oneof![Just(LoadClass::Nisl), Just(LoadClass::Isl)]
    }

    fn relay() -> impl Strategy<Value = Relay> {
        prop_oneof![Just(Relay::On), Just(Relay::Off)]
    }

    /// Finite values, including awkward ones for shortest-form printing.
    pub fn number() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            any::<i32>().prop_map(f64::from),
            (1u32..1000, 1u32..1000).prop_map(|(a, b)| f64::from(a) / f64::from(b)),
            Just(0.0),
            Just(1e-9),
            Just(123456789.125),
        ]
    }

    pub fn non_negative() -> impl Strategy<Value = f64> {
        number().prop_map(f64::abs)
    }

    fn positive() -> impl Strategy<Value = f64> {
        non_negative().prop_filter("positive", |v| *v > 0.0)
    }

    fn window() -> impl Strategy<Value = (usize, usize, u32)> {
        (0usize..200, 0usize..50, 1u32..5000).prop_map(|(a, w, g)| (a, a + w, g))
    }

    fn config_log() -> impl Strategy<Value = ConfigLog> {
        prop_oneof![
            (load_id(), schedulable_class(), window(), positive()).prop_map(
                |(node_id, class, (alpha, beta, gamma_minutes), rated_kw)| {
                    ConfigLog {
                        node_id,
                        class,
                        alpha,
                        beta,
                        gamma_minutes,
                        rated_kw,
                    }
                }
            ),
            (load_id(), non_negative()).prop_map(|(node_id, rated_kw)| ConfigLog {
                node_id,
                class: LoadClass::Ninsl,
                alpha: 0,
                beta: 0,
                gamma_minutes: 0,
                rated_kw,
            }),
        ]
    }

    fn ack_status() -> impl Strategy<Value = AckStatus> {
        prop_oneof![
            Just(AckStatus::Ok),
            Just(AckStatus::RunComplete),
            "[A-Za-z]{1,16}".prop_map(AckStatus::Rejected),
        ]
    }

    fn ui_input() -> impl Strategy<Value = UiInput> {
        prop_oneof![
            Just(UiInput::Menu),
            Just(UiInput::ConfigureNode),
            Just(UiInput::Back),
            class().prop_map(UiInput::ChooseClass),
            (0usize..100, 0usize..100, 0u32..3000).prop_map(|(alpha, beta, gamma_minutes)| UiInput::Log {
                alpha,
                beta,
                gamma_minutes
            }),
            (class(), 0usize..100, 0usize..100, 0u32..3000).prop_map(|(class, alpha, beta, gamma_minutes)| {
                UiInput::Submit {
                    class,
                    alpha,
                    beta,
                    gamma_minutes,
                }
            }),
        ]
    }

    fn screen() -> impl Strategy<Value = Screen> {
        prop_oneof![
            Just(Screen::Default),
            Just(Screen::Menu),
            Just(Screen::NodeConfig),
            Just(Screen::DataLogging)
        ]
    }

    /// Any message `encode` accepts.
    pub fn message() -> impl Strategy<Value = Message> {
        prop_oneof![
            config_log().prop_map(Message::ConfigLog),
            (
                load_id(),
                number(),
                non_negative(),
                non_negative(),
                number(),
                prop::option::of(0.0..=1.0f64),
                relay()
            )
                .prop_map(|(node_id, timestamp, vrms, irms, real_power, power_factor, relay)| {
                    Message::Telemetry(Telemetry {
                        node_id,
                        timestamp,
                        vrms,
                        irms,
                        real_power,
                        power_factor,
                        relay,
                    })
                }),
            (load_id(), relay(), number()).prop_map(|(node_id, action, issued_at)| Message::Command(Command {
                node_id,
                action,
                issued_at
            })),
            (
                load_id(),
                prop_oneof![Just(RefKind::Config), Just(RefKind::Command), Just(RefKind::UiEvent)],
                ack_status()
            )
                .prop_map(|(node_id, ref_kind, status)| Message::Ack(Ack {
                    node_id,
                    ref_kind,
                    status
                })),
            (load_id(), ui_input()).prop_map(|(node_id, input)| Message::UiEvent(UiEvent { node_id, input })),
            (0usize..1440, non_negative(), non_negative(), non_negative()).prop_map(
                |(interval, aggregate_kw, mdl_kw, over_kw)| Message::Profile(ProfilePoint {
                    interval,
                    aggregate_kw,
                    mdl_kw,
                    over_kw
                })
            ),
            (load_id(), screen(), schedulable_class(), window(), relay()).prop_map(
                |(node_id, screen, class, (alpha, beta, gamma_minutes), relay)| Message::Panel(PanelState {
                    node_id,
                    screen,
                    class,
                    alpha,
                    beta,
                    gamma_minutes,
                    relay
                })
            ),
        ]
    }
}
