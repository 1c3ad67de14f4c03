//! Virtual smart load node.
//!
//! A node sits between the wall socket and one load. It owns the relay,
//! meters the load, takes the consumer's (alpha, beta, gamma) through a small
//! menu, and obeys ON/OFF commands from the LMU.

use thiserror::Error;

use crate::domain::{validate_config, ConfigError, LoadClass, LoadId, LoadSpec, ScheduleConfig, TimeModel};
use crate::metering::{self, ElectricalParams, MeteringError};
use crate::protocol::{AckStatus, Command, ConfigLog, PanelState, Relay, Screen, Telemetry, UiInput};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlnError {
    #[error("command for {got} delivered to node {expected}")]
    WrongNode { expected: LoadId, got: LoadId },
    #[error("node {0} drives a NINSL load and accepts no commands")]
    NinslCommand(LoadId),
    #[error("input not valid on the {0:?} screen")]
    WrongScreen(Screen),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("node {0} has no rated power for a schedulable load")]
    NoRatedPower(LoadId),
    #[error(transparent)]
    Metering(#[from] MeteringError),
}

impl SlnError {
    pub fn code(&self) -> &'static str {
        match self {
            SlnError::WrongNode { .. } => "WrongNode",
            SlnError::NinslCommand(_) => "NinslCommand",
            SlnError::WrongScreen(_) => "WrongScreen",
            SlnError::Config(e) => e.code(),
            SlnError::NoRatedPower(_) => "NoRatedPower",
            SlnError::Metering(_) => "Metering",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    spec: LoadSpec,
    tm: TimeModel,
    relay: Relay,
    energy_delivered_kwh: f64,
    minutes_run: u32,
    screen: Screen,
    chosen_class: Option<LoadClass>,
    supply_vrms: f64,
    reading_cache: Option<(f64, Option<ElectricalParams>)>,
}

impl NodeState {
    /// `spec` must already be validated against `tm`.
    pub fn new(spec: LoadSpec, tm: TimeModel) -> Result<Self, SlnError> {
        Ok(Self {
            spec,
            tm,
            relay: Relay::Off,
            energy_delivered_kwh: 0.0,
            minutes_run: 0,
            screen: Screen::Default,
            chosen_class: None,
            supply_vrms: metering::supply_vrms()?,
            reading_cache: None,
        })
    }

    pub fn id(&self) -> &LoadId {
        &self.spec.id
    }

    pub fn spec(&self) -> &LoadSpec {
        &self.spec
    }

    pub fn relay(&self) -> Relay {
        self.relay
    }

    pub fn energy_delivered_kwh(&self) -> f64 {
        self.energy_delivered_kwh
    }

    pub fn minutes_run(&self) -> u32 {
        self.minutes_run
    }

    pub fn screen(&self) -> Screen {
        self.screen
    }

    fn gamma(&self) -> u32 {
        self.spec.config.map_or(0, |c| c.gamma_minutes)
    }

    /// Builds the message announcing the node's current configuration.
    pub fn config_message(&self) -> ConfigLog {
        let cfg = self.spec.config.unwrap_or(ScheduleConfig::EMPTY);
        ConfigLog {
            node_id: self.spec.id.clone(),
            class: self.spec.class,
            alpha: cfg.alpha,
            beta: cfg.beta,
            gamma_minutes: cfg.gamma_minutes,
            rated_kw: self.spec.rated_kw,
        }
    }

    pub fn panel(&self) -> PanelState {
        let cfg = self.spec.config.unwrap_or(ScheduleConfig::EMPTY);
        PanelState {
            node_id: self.spec.id.clone(),
            screen: self.screen,
            class: self.spec.class,
            alpha: cfg.alpha,
            beta: cfg.beta,
            gamma_minutes: cfg.gamma_minutes,
            relay: self.relay,
        }
    }

    /// Drives the menu. Returns a config message when the input completed
    /// data logging.
    pub fn handle_input(&mut self, input: UiInput) -> Result<Option<ConfigLog>, SlnError> {
        match (self.screen, input) {
            (_, UiInput::Back) => {
                self.screen = Screen::Default;
                self.chosen_class = None;
                Ok(None)
            }
            (Screen::Default, UiInput::Menu) => {
                self.screen = Screen::Menu;
                Ok(None)
            }
            (Screen::Menu, UiInput::ConfigureNode) => {
                self.screen = Screen::NodeConfig;
                Ok(None)
            }
            (Screen::NodeConfig, UiInput::ChooseClass(class)) => {
                self.chosen_class = Some(class);
                self.screen = Screen::DataLogging;
                if class.is_schedulable() {
                    Ok(None)
                } else {
                    // Nothing to ask the consumer for.
                    self.log_config(class, 0, 0, 0).map(Some)
                }
            }
            (
                Screen::DataLogging,
                UiInput::Log {
                    alpha,
                    beta,
                    gamma_minutes,
                },
            ) => {
                let class = self.chosen_class.unwrap_or(self.spec.class);
                self.log_config(class, alpha, beta, gamma_minutes).map(Some)
            }
            (
                _,
                UiInput::Submit {
                    class,
                    alpha,
                    beta,
                    gamma_minutes,
                },
            ) => {
                let saved = (self.screen, self.chosen_class);
                self.screen = Screen::DataLogging;
                self.chosen_class = Some(class);
                let out = self.log_config(class, alpha, beta, gamma_minutes);
                if out.is_err() {
                    (self.screen, self.chosen_class) = saved;
                }
                out.map(Some)
            }
            (screen, _) => Err(SlnError::WrongScreen(screen)),
        }
    }

    /// Stores a consumer-entered configuration and returns the message to send
    /// to the LMU. On error the previous configuration is kept.
    pub fn log_config(
        &mut self,
        class: LoadClass,
        alpha: usize,
        beta: usize,
        gamma_minutes: u32,
    ) -> Result<ConfigLog, SlnError> {
        if self.screen != Screen::DataLogging {
            return Err(SlnError::WrongScreen(self.screen));
        }
        let cfg = validate_config(class, ScheduleConfig::new(alpha, beta, gamma_minutes), &self.tm)?;
        if class.is_schedulable() {
            if self.spec.rated_kw.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(SlnError::NoRatedPower(self.spec.id.clone()));
            }
            self.spec.config = Some(cfg);
            self.spec.ninsl_demand = None;
        } else {
            self.spec.config = None;
            if self.spec.ninsl_demand.is_none() {
                self.spec.ninsl_demand = Some(vec![0.0; self.tm.horizon()]);
            }
        }
        self.spec.class = class;
        self.screen = Screen::Default;
        self.chosen_class = None;
        Ok(self.config_message())
    }

    /// Switches the relay as the LMU says. A node that already ran for gamma
    /// stays OFF and answers [`AckStatus::RunComplete`].
    pub fn apply_command(&mut self, cmd: &Command) -> Result<AckStatus, SlnError> {
        if cmd.node_id != self.spec.id {
            return Err(SlnError::WrongNode {
                expected: self.spec.id.clone(),
                got: cmd.node_id.clone(),
            });
        }
        if !self.spec.class.is_schedulable() {
            return Err(SlnError::NinslCommand(self.spec.id.clone()));
        }
        match cmd.action {
            Relay::On if self.minutes_run >= self.gamma() => {
                self.relay = Relay::Off;
                Ok(AckStatus::RunComplete)
            }
            action => {
                self.relay = action;
                Ok(AckStatus::Ok)
            }
        }
    }

    /// kW the load draws during `interval` given the current relay.
    pub fn draw_kw(&self, interval: usize) -> f64 {
        if self.spec.class.is_schedulable() {
            if self.relay.is_on() {
                self.spec.rated_kw
            } else {
                0.0
            }
        } else {
            self.spec.ninsl_demand_at(interval)
        }
    }

    /// Closes out `interval`: accumulates run time and energy, opens the relay
    /// once gamma is reached, and reports a meter reading taken at `at`.
    pub fn tick(&mut self, interval: usize, at: f64) -> Result<Telemetry, SlnError> {
        let kw = self.draw_kw(interval);
        self.energy_delivered_kwh += kw * self.tm.interval_hours();
        if self.spec.class.is_schedulable() && self.relay.is_on() {
            self.minutes_run += self.tm.interval_minutes();
            if self.minutes_run >= self.gamma() {
                self.relay = Relay::Off;
            }
        }
        let flowing = if self.spec.class.is_schedulable() {
            if self.relay.is_on() {
                self.spec.rated_kw
            } else {
                0.0
            }
        } else {
            kw
        };
        let reading = self.read_meter(flowing)?;
        Ok(Telemetry {
            node_id: self.spec.id.clone(),
            timestamp: at,
            vrms: reading.map_or(self.supply_vrms, |p| p.vrms),
            irms: reading.map_or(0.0, |p| p.irms),
            real_power: reading.map_or(0.0, |p| p.real_power),
            power_factor: reading.map(|p| p.power_factor),
            relay: self.relay_for_report(flowing),
        })
    }

    fn relay_for_report(&self, flowing_kw: f64) -> Relay {
        if self.spec.class.is_schedulable() {
            self.relay
        } else if flowing_kw > 0.0 {
            Relay::On
        } else {
            Relay::Off
        }
    }

    fn read_meter(&mut self, kw: f64) -> Result<Option<ElectricalParams>, SlnError> {
        if let Some((cached_kw, reading)) = self.reading_cache {
            if cached_kw == kw {
                return Ok(reading);
            }
        }
        let reading = metering::meter_load(kw, self.spec.power_factor)?;
        self.reading_cache = Some((kw, reading));
        Ok(reading)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> LoadId {
        LoadId::new(s).unwrap()
    }

    fn node(class: LoadClass, cfg: ScheduleConfig) -> NodeState {
        let tm = TimeModel::hourly();
        let spec = LoadSpec::schedulable(id("n1"), "washer", class, 1.5, cfg)
            .validate(&tm)
            .unwrap();
        NodeState::new(spec, tm).unwrap()
    }

    fn cmd(action: Relay) -> Command {
        Command {
            node_id: id("n1"),
            action,
            issued_at: 0.0,
        }
    }

    fn to_logging(n: &mut NodeState, class: LoadClass) {
        n.handle_input(UiInput::Menu).unwrap();
        n.handle_input(UiInput::ConfigureNode).unwrap();
        n.handle_input(UiInput::ChooseClass(class)).unwrap();
    }

    #[test]
    fn menu_walk_logs_config() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        to_logging(&mut n, LoadClass::Nisl);
        assert_eq!(n.screen(), Screen::DataLogging);
        let msg = n.log_config(LoadClass::Nisl, 10, 14, 120).unwrap();
        assert_eq!(msg.alpha, 10);
        assert_eq!(msg.gamma_minutes, 120);
        assert_eq!(n.spec().config, Some(ScheduleConfig::new(10, 14, 120)));
        assert_eq!(n.spec().class, LoadClass::Nisl);
        assert_eq!(n.screen(), Screen::Default);
    }

    #[test]
    fn ninsl_logging_takes_no_input() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        n.handle_input(UiInput::Menu).unwrap();
        n.handle_input(UiInput::ConfigureNode).unwrap();
        let msg = n.handle_input(UiInput::ChooseClass(LoadClass::Ninsl)).unwrap().unwrap();
        assert_eq!((msg.alpha, msg.beta, msg.gamma_minutes), (0, 0, 0));
        assert_eq!(n.screen(), Screen::Default);

        // Direct call with a triple still yields (0,0,0).
        to_logging(&mut n, LoadClass::Nisl);
        let msg = n.log_config(LoadClass::Ninsl, 3, 5, 60).unwrap();
        assert_eq!(
            (msg.class, msg.alpha, msg.beta, msg.gamma_minutes),
            (LoadClass::Ninsl, 0, 0, 0)
        );
    }

    #[test]
    fn infeasible_config_leaves_node_unchanged() {
        let original = ScheduleConfig::new(0, 3, 60);
        let mut n = node(LoadClass::Isl, original);
        to_logging(&mut n, LoadClass::Isl);
        let err = n.log_config(LoadClass::Isl, 5, 6, 180).unwrap_err();
        assert_eq!(err.code(), "InfeasibleGamma");
        assert_eq!(n.spec().config, Some(original));
        assert_eq!(n.screen(), Screen::DataLogging);
    }

    #[test]
    fn logging_requires_the_logging_screen() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        assert_eq!(
            n.log_config(LoadClass::Isl, 0, 1, 60),
            Err(SlnError::WrongScreen(Screen::Default))
        );
        assert_eq!(
            n.handle_input(UiInput::ConfigureNode),
            Err(SlnError::WrongScreen(Screen::Default))
        );
        n.handle_input(UiInput::Menu).unwrap();
        n.handle_input(UiInput::Back).unwrap();
        assert_eq!(n.screen(), Screen::Default);
    }

    #[test]
    fn failed_submit_restores_screen() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        let bad = UiInput::Submit {
            class: LoadClass::Isl,
            alpha: 5,
            beta: 6,
            gamma_minutes: 180,
        };
        assert!(n.handle_input(bad).is_err());
        assert_eq!(n.screen(), Screen::Default);
        let good = UiInput::Submit {
            class: LoadClass::Nisl,
            alpha: 10,
            beta: 14,
            gamma_minutes: 120,
        };
        assert!(n.handle_input(good).unwrap().is_some());
        assert_eq!(n.panel().alpha, 10);
    }

    #[test]
    fn commands_switch_relay_idempotently() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 120));
        assert_eq!(n.relay(), Relay::Off);
        assert_eq!(n.apply_command(&cmd(Relay::On)), Ok(AckStatus::Ok));
        assert_eq!(n.relay(), Relay::On);
        let before = n.clone();
        assert_eq!(n.apply_command(&cmd(Relay::On)), Ok(AckStatus::Ok));
        assert_eq!(n.relay(), before.relay());
        assert_eq!(n.minutes_run(), before.minutes_run());
        n.apply_command(&cmd(Relay::Off)).unwrap();
        assert_eq!(n.relay(), Relay::Off);
    }

    #[test]
    fn finished_node_refuses_on() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        n.apply_command(&cmd(Relay::On)).unwrap();
        n.tick(0, 3600.0).unwrap();
        assert_eq!(n.minutes_run(), 60);
        assert_eq!(n.relay(), Relay::Off);
        assert_eq!(n.apply_command(&cmd(Relay::On)), Ok(AckStatus::RunComplete));
        assert_eq!(n.relay(), Relay::Off);
    }

    #[test]
    fn command_errors() {
        let mut n = node(LoadClass::Isl, ScheduleConfig::new(0, 3, 60));
        let other = Command {
            node_id: id("n2"),
            action: Relay::On,
            issued_at: 0.0,
        };
        assert!(matches!(n.apply_command(&other), Err(SlnError::WrongNode { .. })));

        let tm = TimeModel::hourly();
        let spec = LoadSpec::ninsl(id("n1"), "lights", vec![0.2; 24])
            .validate(&tm)
            .unwrap();
        let mut ninsl = NodeState::new(spec, tm).unwrap();
        assert_eq!(
            ninsl.apply_command(&cmd(Relay::On)),
            Err(SlnError::NinslCommand(id("n1")))
        );
    }

    #[test]
    fn tick_accumulates_only_while_on() {
        let mut n = node(LoadClass::Nisl, ScheduleConfig::new(0, 5, 180));
        let idle = n.tick(0, 3600.0).unwrap();
        assert_eq!(n.energy_delivered_kwh(), 0.0);
        assert_eq!(idle.irms, 0.0);
        assert_eq!(idle.power_factor, None);
        assert_eq!(idle.relay, Relay::Off);

        n.apply_command(&cmd(Relay::On)).unwrap();
        let tel = n.tick(1, 7200.0).unwrap();
        assert_eq!(n.energy_delivered_kwh(), 1.5);
        assert!((tel.real_power - 1500.0).abs() < 1e-6);
        assert_eq!(tel.relay, Relay::On);
    }

    #[test]
    fn nisl_run_accumulates_to_gamma() {
        // Hand-computed: 3 ticks of 60 min at 1.5 kW -> 60/120/180 min, 1.5/3.0/4.5 kWh.
        let mut n = node(LoadClass::Nisl, ScheduleConfig::new(0, 5, 180));
        n.apply_command(&cmd(Relay::On)).unwrap();
        let expected = [(60, 1.5, Relay::On), (120, 3.0, Relay::On), (180, 4.5, Relay::Off)];
        for (t, (minutes, kwh, relay)) in expected.into_iter().enumerate() {
            let tel = n.tick(t, 3600.0 * (t + 1) as f64).unwrap();
            assert_eq!(n.minutes_run(), minutes);
            assert_eq!(n.energy_delivered_kwh(), kwh);
            assert_eq!(tel.relay, relay);
            assert_eq!(n.relay(), relay);
        }
        let tel = n.tick(3, 4.0 * 3600.0).unwrap();
        assert_eq!(n.minutes_run(), 180);
        assert_eq!(tel.irms, 0.0);
    }

    #[test]
    fn ninsl_reports_its_demand() {
        let tm = TimeModel::hourly();
        let mut demand = vec![0.0; 24];
        demand[7] = 0.46;
        let spec = LoadSpec::ninsl(id("tv"), "tv", demand).validate(&tm).unwrap();
        let mut n = NodeState::new(spec, tm).unwrap();
        let tel = n.tick(7, 8.0 * 3600.0).unwrap();
        assert!((tel.real_power - 460.0).abs() < 1e-6);
        assert_eq!(tel.relay, Relay::On);
        let tel = n.tick(8, 9.0 * 3600.0).unwrap();
        assert_eq!(tel.real_power, 0.0);
        assert!((n.energy_delivered_kwh() - 0.46).abs() < 1e-12);
    }
}
