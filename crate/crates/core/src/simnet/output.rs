//! Result files: the profile CSV and the timestamped event log.

use std::fmt::Write as _;

use super::link::{Delivery, Direction};
use super::SimResult;
use crate::protocol::{encode, Message};

/// A message as it crossed the link.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub sent_at: f64,
    pub delivered_at: f64,
    pub direction: Direction,
    pub message: Message,
}

impl From<Delivery> for LoggedEvent {
    fn from(d: Delivery) -> Self {
        Self {
            sent_at: d.sent_at,
            delivered_at: d.deliver_at,
            direction: d.direction,
            message: d.message,
        }
    }
}

/// `interval,aggregate_kw,mdl_kw,over_kw,<load>_relay...`, one row per interval.
pub fn profile_csv(result: &SimResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "interval".to_string(),
        "aggregate_kw".into(),
        "mdl_kw".into(),
        "over_kw".into(),
    ];
    header.extend(result.load_ids.iter().map(|id| format!("{id}_relay")));
    w.write_record(&header).expect("write to memory");
    for (t, aggregate) in result.aggregate_profile.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            aggregate.to_string(),
            result.mdl_kw[t].to_string(),
            result.over_kw(t).to_string(),
        ];
        row.extend(result.relays[t].iter().map(|&on| u8::from(on).to_string()));
        w.write_record(&row).expect("write to memory");
    }
    let bytes = w.into_inner().expect("flush to memory");
    String::from_utf8(bytes).expect("csv of ASCII fields")
}

/// One line per delivered message:
/// `<delivered_s> <sent_s> <UP|DOWN> <protocol line>`.
pub fn event_log_text(events: &[LoggedEvent]) -> String {
    let mut out = String::new();
    for e in events {
        // Logged messages were produced by the simulator and always encode.
        let line = encode(&e.message).unwrap_or_else(|err| format!("INVALID {err}\n"));
        let _ = write!(
            out,
            "{:.3} {:.3} {} {}",
            e.delivered_at,
            e.sent_at,
            e.direction.as_str(),
            line
        );
    }
    out
}
