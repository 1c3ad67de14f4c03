//! Node ↔ LMU wire protocol.
//!
//! One message per line, ASCII, fields separated by `|`, first field a tag:
//!
//! ```text
//! CFG|node|class|alpha|beta|gamma_min|rated_kw
//! TEL|node|timestamp_s|vrms|irms|real_power_w|pf|relay      pf is NA when no current flows
//! CMD|node|ON/OFF|issued_at_s
//! ACK|node|CFG/CMD/UIE|OK/RUNCOMPLETE/ERR:<code>
//! UIE|node|event[|args]                                     keypad events from the live console
//! PRF|interval|aggregate_kw|mdl_kw|over_kw                  live profile stream
//! SCR|node|screen|class|alpha|beta|gamma_min|relay          live node panel
//! ```
//!
//! UI events: `MENU`, `CONFIG`, `CLASS|<class>`, `LOG|alpha|beta|gamma`,
//! `BACK`, and `SUBMIT|<class>|alpha|beta|gamma` which runs the whole
//! menu sequence at once.
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`, so `decode(encode(m)) == m` holds exactly.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{is_token, LoadClass, LoadId};

pub const DELIMITER: char = '|';

/// Longest line [`LineReader`] buffers before giving up on it.
pub const MAX_LINE_BYTES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relay {
    On,
    Off,
}

impl Relay {
    pub fn is_on(self) -> bool {
        self == Relay::On
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relay::On => "ON",
            Relay::Off => "OFF",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ON" => Some(Relay::On),
            "OFF" => Some(Relay::Off),
            _ => None,
        }
    }
}

impl fmt::Display for Relay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigLog {
    pub node_id: LoadId,
    pub class: LoadClass,
    pub alpha: usize,
    pub beta: usize,
    pub gamma_minutes: u32,
    pub rated_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub node_id: LoadId,
    /// Sim-time seconds from local midnight.
    pub timestamp: f64,
    pub vrms: f64,
    pub irms: f64,
    /// W.
    pub real_power: f64,
    /// `None` when no current flows.
    pub power_factor: Option<f64>,
    pub relay: Relay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub node_id: LoadId,
    pub action: Relay,
    pub issued_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefKind {
    Config,
    Command,
    UiEvent,
}

impl RefKind {
    fn as_str(self) -> &'static str {
        match self {
            RefKind::Config => "CFG",
            RefKind::Command => "CMD",
            RefKind::UiEvent => "UIE",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "CFG" => Some(RefKind::Config),
            "CMD" => Some(RefKind::Command),
            "UIE" => Some(RefKind::UiEvent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AckStatus {
    Ok,
    /// The node already ran for gamma and ignored an ON.
    RunComplete,
    /// Rejected, with a short reason code.
    Rejected(String),
}

impl AckStatus {
    fn render(&self, out: &mut String) {
        match self {
            AckStatus::Ok => out.push_str("OK"),
            AckStatus::RunComplete => out.push_str("RUNCOMPLETE"),
            AckStatus::Rejected(code) => {
                out.push_str("ERR:");
                out.push_str(code);
            }
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "OK" => Some(AckStatus::Ok),
            "RUNCOMPLETE" => Some(AckStatus::RunComplete),
            _ => s
                .strip_prefix("ERR:")
                .filter(|code| is_token(code))
                .map(|code| AckStatus::Rejected(code.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub node_id: LoadId,
    pub ref_kind: RefKind,
    pub status: AckStatus,
}

/// Keypad and menu input on a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UiInput {
    Menu,
    ConfigureNode,
    ChooseClass(LoadClass),
    Log {
        alpha: usize,
        beta: usize,
        gamma_minutes: u32,
    },
    Back,
    Submit {
        class: LoadClass,
        alpha: usize,
        beta: usize,
        gamma_minutes: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiEvent {
    pub node_id: LoadId,
    pub input: UiInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Screen {
    Default,
    Menu,
    NodeConfig,
    DataLogging,
}

impl Screen {
    pub fn as_str(self) -> &'static str {
        match self {
            Screen::Default => "DEFAULT",
            Screen::Menu => "MENU",
            Screen::NodeConfig => "NODECONFIG",
            Screen::DataLogging => "DATALOGGING",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "DEFAULT" => Some(Screen::Default),
            "MENU" => Some(Screen::Menu),
            "NODECONFIG" => Some(Screen::NodeConfig),
            "DATALOGGING" => Some(Screen::DataLogging),
            _ => None,
        }
    }
}

/// One interval of the aggregate load curve, streamed in live mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub interval: usize,
    pub aggregate_kw: f64,
    pub mdl_kw: f64,
    pub over_kw: f64,
}

/// Mirror of a node's display, streamed in live mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelState {
    pub node_id: LoadId,
    pub screen: Screen,
    pub class: LoadClass,
    pub alpha: usize,
    pub beta: usize,
    pub gamma_minutes: u32,
    pub relay: Relay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    ConfigLog(ConfigLog),
    Telemetry(Telemetry),
    Command(Command),
    Ack(Ack),
    UiEvent(UiEvent),
    Profile(ProfilePoint),
    Panel(PanelState),
}

impl Message {
    pub fn tag(&self) -> &'static str {
        match self {
            Message::ConfigLog(_) => "CFG",
            Message::Telemetry(_) => "TEL",
            Message::Command(_) => "CMD",
            Message::Ack(_) => "ACK",
            Message::UiEvent(_) => "UIE",
            Message::Profile(_) => "PRF",
            Message::Panel(_) => "SCR",
        }
    }

    pub fn node_id(&self) -> Option<&LoadId> {
        match self {
            Message::ConfigLog(m) => Some(&m.node_id),
            Message::Telemetry(m) => Some(&m.node_id),
            Message::Command(m) => Some(&m.node_id),
            Message::Ack(m) => Some(&m.node_id),
            Message::UiEvent(m) => Some(&m.node_id),
            Message::Panel(m) => Some(&m.node_id),
            Message::Profile(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("empty line")]
    EmptyLine,
    #[error("line is not valid UTF-8")]
    NotUtf8,
    #[error("line exceeds {MAX_LINE_BYTES} bytes")]
    LineTooLong,
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("{tag}: expected {expected} fields, found {found}")]
    FieldCount {
        tag: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("field {position}: expected {expected}, found {found:?}")]
    FieldParse {
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error("invalid message: {0}")]
    InvalidMessage(&'static str),
}

fn check_config_fields(
    class: LoadClass,
    alpha: usize,
    beta: usize,
    gamma: u32,
    rated_kw: f64,
) -> Result<(), ProtocolError> {
    if !rated_kw.is_finite() || rated_kw < 0.0 {
        return Err(ProtocolError::InvalidMessage(
            "rated power must be finite and non-negative",
        ));
    }
    if class.is_schedulable() {
        if alpha > beta {
            return Err(ProtocolError::InvalidMessage("alpha after beta"));
        }
        if gamma == 0 {
            return Err(ProtocolError::InvalidMessage(
                "gamma must be positive for schedulable loads",
            ));
        }
        if rated_kw == 0.0 {
            return Err(ProtocolError::InvalidMessage("schedulable load with zero rated power"));
        }
    } else if (alpha, beta, gamma) != (0, 0, 0) {
        return Err(ProtocolError::InvalidMessage("NINSL config must be (0,0,0)"));
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<(), ProtocolError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ProtocolError::InvalidMessage("non-finite numeric field"))
    }
}

fn check_pf(pf: Option<f64>) -> Result<(), ProtocolError> {
    match pf {
        Some(p) if !(p.is_finite() && (0.0..=1.0).contains(&p)) => {
            Err(ProtocolError::InvalidMessage("power factor outside [0, 1]"))
        }
        _ => Ok(()),
    }
}

impl Message {
    /// Checks the invariants [`encode`] and [`decode`] enforce.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            Message::ConfigLog(c) => check_config_fields(c.class, c.alpha, c.beta, c.gamma_minutes, c.rated_kw),
            Message::Telemetry(t) => {
                check_finite(&[t.timestamp, t.vrms, t.irms, t.real_power])?;
                check_pf(t.power_factor)
            }
            Message::Command(c) => check_finite(&[c.issued_at]),
            Message::Ack(a) => match &a.status {
                AckStatus::Rejected(code) if !is_token(code) => {
                    Err(ProtocolError::InvalidMessage("ack reason code is not a token"))
                }
                _ => Ok(()),
            },
            Message::UiEvent(_) => Ok(()),
            Message::Profile(p) => check_finite(&[p.aggregate_kw, p.mdl_kw, p.over_kw]),
            Message::Panel(p) => {
                if p.class.is_schedulable() {
                    Ok(())
                } else {
                    check_config_fields(p.class, p.alpha, p.beta, p.gamma_minutes, 0.0)
                }
            }
        }
    }
}

/// Renders a message as one `\n`-terminated line.
pub fn encode(msg: &Message) -> Result<String, ProtocolError> {
    msg.validate()?;
    let mut out = String::with_capacity(48);
    out.push_str(msg.tag());
    // Writing into a String cannot fail.
    let mut field = |value: &dyn fmt::Display| {
        out.push(DELIMITER);
        let _ = write!(out, "{value}");
    };
    match msg {
        Message::ConfigLog(c) => {
            field(&c.node_id);
            field(&c.class);
            field(&c.alpha);
            field(&c.beta);
            field(&c.gamma_minutes);
            field(&c.rated_kw);
        }
        Message::Telemetry(t) => {
            field(&t.node_id);
            field(&t.timestamp);
            field(&t.vrms);
            field(&t.irms);
            field(&t.real_power);
            match t.power_factor {
                Some(pf) => field(&pf),
                None => field(&"NA"),
            }
            field(&t.relay);
        }
        Message::Command(c) => {
            field(&c.node_id);
            field(&c.action);
            field(&c.issued_at);
        }
        Message::Ack(a) => {
            field(&a.node_id);
            field(&a.ref_kind.as_str());
            let mut status = String::new();
            a.status.render(&mut status);
            field(&status);
        }
        Message::UiEvent(e) => {
            field(&e.node_id);
            match e.input {
                UiInput::Menu => field(&"MENU"),
                UiInput::ConfigureNode => field(&"CONFIG"),
                UiInput::Back => field(&"BACK"),
                UiInput::ChooseClass(class) => {
                    field(&"CLASS");
                    field(&class);
                }
                UiInput::Log {
                    alpha,
                    beta,
                    gamma_minutes,
                } => {
                    field(&"LOG");
                    field(&alpha);
                    field(&beta);
                    field(&gamma_minutes);
                }
                UiInput::Submit {
                    class,
                    alpha,
                    beta,
                    gamma_minutes,
                } => {
                    field(&"SUBMIT");
                    field(&class);
                    field(&alpha);
                    field(&beta);
                    field(&gamma_minutes);
                }
            }
        }
        Message::Profile(p) => {
            field(&p.interval);
            field(&p.aggregate_kw);
            field(&p.mdl_kw);
            field(&p.over_kw);
        }
        Message::Panel(p) => {
            field(&p.node_id);
            field(&p.screen.as_str());
            field(&p.class);
            field(&p.alpha);
            field(&p.beta);
            field(&p.gamma_minutes);
            field(&p.relay);
        }
    }
    out.push('\n');
    Ok(out)
}

struct Fields<'a> {
    tag: &'static str,
    items: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn expect(&self, count: usize) -> Result<(), ProtocolError> {
        if self.items.len() == count {
            Ok(())
        } else {
            Err(ProtocolError::FieldCount {
                tag: self.tag,
                expected: count,
                found: self.items.len(),
            })
        }
    }

    fn raw(&self, position: usize) -> &'a str {
        self.items[position]
    }

    fn err(&self, position: usize, expected: &'static str) -> ProtocolError {
        ProtocolError::FieldParse {
            position,
            expected,
            found: self.items[position].to_string(),
        }
    }

    fn node(&self, position: usize) -> Result<LoadId, ProtocolError> {
        LoadId::new(self.raw(position)).map_err(|_| self.err(position, "node id token"))
    }

    fn class(&self, position: usize) -> Result<LoadClass, ProtocolError> {
        self.raw(position)
            .parse()
            .map_err(|_| self.err(position, "load class (NINSL, NISL, ISL)"))
    }

    fn index(&self, position: usize) -> Result<usize, ProtocolError> {
        let s = self.raw(position);
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(position, "unsigned integer"));
        }
        s.parse().map_err(|_| self.err(position, "unsigned integer"))
    }

    fn minutes(&self, position: usize) -> Result<u32, ProtocolError> {
        let s = self.raw(position);
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(position, "minutes (unsigned integer)"));
        }
        s.parse().map_err(|_| self.err(position, "minutes (unsigned integer)"))
    }

    fn real(&self, position: usize) -> Result<f64, ProtocolError> {
        match self.raw(position).parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(position, "finite real number")),
        }
    }

    fn relay(&self, position: usize) -> Result<Relay, ProtocolError> {
        Relay::parse(self.raw(position)).ok_or_else(|| self.err(position, "ON or OFF"))
    }
}

/// Decodes raw bytes; invalid UTF-8 is an error, not a panic.
pub fn decode_bytes(line: &[u8]) -> Result<Message, ProtocolError> {
    let text = std::str::from_utf8(line).map_err(|_| ProtocolError::NotUtf8)?;
    decode(text)
}

/// Parses one line. A single trailing `\n` (or `\r\n`) is accepted.
pub fn decode(line: &str) -> Result<Message, ProtocolError> {
    let body = line.strip_suffix('\n').unwrap_or(line);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.is_empty() {
        return Err(ProtocolError::EmptyLine);
    }
    if body.contains(['\n', '\r']) {
        return Err(ProtocolError::InvalidMessage("embedded line break"));
    }
    let mut parts = body.split(DELIMITER);
    let tag_text = parts.next().unwrap_or_default();
    let tag = match tag_text {
        "CFG" => "CFG",
        "TEL" => "TEL",
        "CMD" => "CMD",
        "ACK" => "ACK",
        "UIE" => "UIE",
        "PRF" => "PRF",
        "SCR" => "SCR",
        other => return Err(ProtocolError::UnknownTag(other.to_string())),
    };
    let mut items = vec![tag_text];
    items.extend(parts);
    let f = Fields { tag, items };

    let msg = match tag {
        "CFG" => {
            f.expect(7)?;
            Message::ConfigLog(ConfigLog {
                node_id: f.node(1)?,
                class: f.class(2)?,
                alpha: f.index(3)?,
                beta: f.index(4)?,
                gamma_minutes: f.minutes(5)?,
                rated_kw: f.real(6)?,
            })
        }
        "TEL" => {
            f.expect(8)?;
            let power_factor = match f.raw(6) {
                "NA" => None,
                _ => Some(f.real(6).map_err(|_| f.err(6, "power factor or NA"))?),
            };
            Message::Telemetry(Telemetry {
                node_id: f.node(1)?,
                timestamp: f.real(2)?,
                vrms: f.real(3)?,
                irms: f.real(4)?,
                real_power: f.real(5)?,
                power_factor,
                relay: f.relay(7)?,
            })
        }
        "CMD" => {
            f.expect(4)?;
            Message::Command(Command {
                node_id: f.node(1)?,
                action: f.relay(2)?,
                issued_at: f.real(3)?,
            })
        }
        "ACK" => {
            f.expect(4)?;
            Message::Ack(Ack {
                node_id: f.node(1)?,
                ref_kind: RefKind::parse(f.raw(2)).ok_or_else(|| f.err(2, "CFG, CMD or UIE"))?,
                status: AckStatus::parse(f.raw(3)).ok_or_else(|| f.err(3, "OK, RUNCOMPLETE or ERR:<code>"))?,
            })
        }
        "UIE" => {
            if f.items.len() < 3 {
                return Err(ProtocolError::FieldCount {
                    tag,
                    expected: 3,
                    found: f.items.len(),
                });
            }
            let node_id = f.node(1)?;
            let input = match f.raw(2) {
                "MENU" => {
                    f.expect(3)?;
                    UiInput::Menu
                }
                "CONFIG" => {
                    f.expect(3)?;
                    UiInput::ConfigureNode
                }
                "BACK" => {
                    f.expect(3)?;
                    UiInput::Back
                }
                "CLASS" => {
                    f.expect(4)?;
                    UiInput::ChooseClass(f.class(3)?)
                }
                "LOG" => {
                    f.expect(6)?;
                    UiInput::Log {
                        alpha: f.index(3)?,
                        beta: f.index(4)?,
                        gamma_minutes: f.minutes(5)?,
                    }
                }
                "SUBMIT" => {
                    f.expect(7)?;
                    UiInput::Submit {
                        class: f.class(3)?,
                        alpha: f.index(4)?,
                        beta: f.index(5)?,
                        gamma_minutes: f.minutes(6)?,
                    }
                }
                _ => return Err(f.err(2, "UI event (MENU, CONFIG, CLASS, LOG, BACK, SUBMIT)")),
            };
            Message::UiEvent(UiEvent { node_id, input })
        }
        "PRF" => {
            f.expect(5)?;
            Message::Profile(ProfilePoint {
                interval: f.index(1)?,
                aggregate_kw: f.real(2)?,
                mdl_kw: f.real(3)?,
                over_kw: f.real(4)?,
            })
        }
        "SCR" => {
            f.expect(8)?;
            Message::Panel(PanelState {
                node_id: f.node(1)?,
                screen: Screen::parse(f.raw(2)).ok_or_else(|| f.err(2, "screen name"))?,
                class: f.class(3)?,
                alpha: f.index(4)?,
                beta: f.index(5)?,
                gamma_minutes: f.minutes(6)?,
                relay: f.relay(7)?,
            })
        }
        _ => unreachable!("tag matched above"),
    };
    msg.validate()?;
    Ok(msg)
}

/// Per-connection reassembly of `\n`-framed messages from a byte stream.
#[derive(Debug, Default)]
pub struct LineReader {
    buf: Vec<u8>,
    discarding: bool,
}

impl LineReader {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds bytes and returns every message completed by them, in order.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<Result<Message, ProtocolError>> {
        let mut out = Vec::new();
        for &b in bytes {
            if b == b'\n' {
                if self.discarding {
                    self.discarding = false;
                } else {
                    out.push(decode_bytes(&self.buf));
                }
                self.buf.clear();
                continue;
            }
            if self.discarding {
                continue;
            }
            if self.buf.len() == MAX_LINE_BYTES {
                self.buf.clear();
                self.discarding = true;
                out.push(Err(ProtocolError::LineTooLong));
                continue;
            }
            self.buf.push(b);
        }
        out
    }

    /// Bytes of an unterminated trailing line.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n1() -> LoadId {
        LoadId::new("n1").unwrap()
    }

    fn cfg() -> Message {
        Message::ConfigLog(ConfigLog {
            node_id: n1(),
            class: LoadClass::Nisl,
            alpha: 10,
            beta: 14,
            gamma_minutes: 120,
            rated_kw: 1.5,
        })
    }

    #[test]
    fn config_log_line() {
        assert_eq!(encode(&cfg()).unwrap(), "CFG|n1|NISL|10|14|120|1.5\n");
        assert_eq!(decode("CFG|n1|NISL|10|14|120|1.5\n").unwrap(), cfg());
    }

    #[test]
    fn command_line() {
        let cmd = Message::Command(Command {
            node_id: n1(),
            action: Relay::On,
            issued_at: 3600.0,
        });
        assert_eq!(encode(&cmd).unwrap(), "CMD|n1|ON|3600\n");
        assert_eq!(decode("CMD|n1|ON|3600").unwrap(), cmd);
    }

    #[test]
    fn telemetry_round_trip() {
        let tel = Message::Telemetry(Telemetry {
            node_id: n1(),
            timestamp: 7200.0,
            vrms: 230.0,
            irms: 6.521739130434782,
            real_power: 1500.0,
            power_factor: Some(1.0),
            relay: Relay::On,
        });
        let line = encode(&tel).unwrap();
        assert_eq!(decode(&line).unwrap(), tel);

        let idle = Message::Telemetry(Telemetry {
            node_id: n1(),
            timestamp: 0.0,
            vrms: 230.0,
            irms: 0.0,
            real_power: 0.0,
            power_factor: None,
            relay: Relay::Off,
        });
        assert_eq!(encode(&idle).unwrap(), "TEL|n1|0|230|0|0|NA|OFF\n");
        assert_eq!(decode(&encode(&idle).unwrap()).unwrap(), idle);
    }

    #[test]
    fn ack_and_ui_lines() {
        let ack = Message::Ack(Ack {
            node_id: n1(),
            ref_kind: RefKind::Config,
            status: AckStatus::Rejected("InfeasibleGamma".into()),
        });
        assert_eq!(encode(&ack).unwrap(), "ACK|n1|CFG|ERR:InfeasibleGamma\n");
        let ui = decode("UIE|n1|SUBMIT|ISL|5|6|120\n").unwrap();
        assert_eq!(
            ui,
            Message::UiEvent(UiEvent {
                node_id: n1(),
                input: UiInput::Submit {
                    class: LoadClass::Isl,
                    alpha: 5,
                    beta: 6,
                    gamma_minutes: 120
                }
            })
        );
        assert_eq!(decode("PRF|3|4.5|4|0.5").unwrap().tag(), "PRF");
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            decode("CFG|n1|NISL|10|14\n"),
            Err(ProtocolError::FieldCount {
                tag: "CFG",
                expected: 7,
                found: 5
            })
        );
        assert_eq!(decode("XYZ|n1\n"), Err(ProtocolError::UnknownTag("XYZ".into())));
        assert_eq!(decode("\n"), Err(ProtocolError::EmptyLine));
        assert_eq!(decode(""), Err(ProtocolError::EmptyLine));
        assert_eq!(decode_bytes(&[0xff, 0xfe]), Err(ProtocolError::NotUtf8));
    }

    #[test]
    fn field_errors_report_position() {
        assert_eq!(
            decode("CFG|n1|NISL|ten|14|120|1.5"),
            Err(ProtocolError::FieldParse {
                position: 3,
                expected: "unsigned integer",
                found: "ten".into()
            })
        );
        assert!(matches!(
            decode("CMD|n1|ON|NaN"),
            Err(ProtocolError::FieldParse { position: 3, .. })
        ));
        assert!(matches!(
            decode("CMD|n1|MAYBE|1"),
            Err(ProtocolError::FieldParse { position: 2, .. })
        ));
        assert!(matches!(
            decode("CMD||ON|1"),
            Err(ProtocolError::FieldParse { position: 1, .. })
        ));
        assert!(matches!(
            decode("CFG|n1|NISL|-1|14|120|1.5"),
            Err(ProtocolError::FieldParse { .. })
        ));
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(
            decode("CFG|n1|NISL|14|10|120|1.5"),
            Err(ProtocolError::InvalidMessage(_))
        ));
        assert!(matches!(
            decode("CFG|n1|NINSL|1|2|60|0.2"),
            Err(ProtocolError::InvalidMessage(_))
        ));
        assert!(matches!(
            decode("CMD|n1|ON|1\nCMD|n1|ON|2"),
            Err(ProtocolError::InvalidMessage(_))
        ));
        let bad = Message::Command(Command {
            node_id: n1(),
            action: Relay::Off,
            issued_at: f64::INFINITY,
        });
        assert!(matches!(encode(&bad), Err(ProtocolError::InvalidMessage(_))));
    }

    #[test]
    fn line_reader_reassembles_split_lines() {
        let mut reader = LineReader::new();
        assert!(reader.push(b"CFG|n1|NISL|10|1").is_empty());
        assert_eq!(reader.pending(), 16);
        let out = reader.push(b"4|120|1.5\nCMD|n1|ON|3600\nXY");
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].as_ref().unwrap(), &cfg());
        assert!(matches!(out[1], Ok(Message::Command(_))));
        assert_eq!(reader.push(b"Z\n"), vec![Err(ProtocolError::UnknownTag("XYZ".into()))]);
    }

    #[test]
    fn line_reader_drops_oversized_lines() {
        let mut reader = LineReader::new();
        let big = vec![b'a'; MAX_LINE_BYTES + 10];
        let out = reader.push(&big);
        assert_eq!(out, vec![Err(ProtocolError::LineTooLong)]);
        let out = reader.push(b"tail\nCMD|n1|OFF|0\n");
        assert_eq!(out.len(), 1);
        assert!(out[0].is_ok());
    }
}
