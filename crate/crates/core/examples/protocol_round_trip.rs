// One message of every kind, encoded to its wire line and parsed back,
// then a stream split across arbitrary reads.

use sln_han::domain::{LoadClass, LoadId};
use sln_han::protocol::{
    decode, encode, Ack, AckStatus, Command, ConfigLog, LineReader, Message, ProtocolError, RefKind, Relay, Telemetry,
    UiEvent, UiInput,
};

pub fn run_example() -> Result<(), ProtocolError> {
    let id = LoadId::new("pump").expect("valid id");
    let messages = vec![
        Message::ConfigLog(ConfigLog {
            node_id: id.clone(),
            class: LoadClass::Isl,
            alpha: 6,
            beta: 17,
            gamma_minutes: 180,
            rated_kw: 1.1,
        }),
        Message::Command(Command {
            node_id: id.clone(),
            action: Relay::On,
            issued_at: 21591.5,
        }),
        Message::Telemetry(Telemetry {
            node_id: id.clone(),
            timestamp: 25200.0,
            vrms: 230.0,
            irms: 5.978,
            real_power: 1100.0,
            power_factor: Some(0.8),
            relay: Relay::On,
        }),
        Message::Ack(Ack {
            node_id: id.clone(),
            ref_kind: RefKind::Command,
            status: AckStatus::RunComplete,
        }),
        Message::UiEvent(UiEvent {
            node_id: id,
            input: UiInput::Submit {
                class: LoadClass::Isl,
                alpha: 8,
                beta: 12,
                gamma_minutes: 120,
            },
        }),
    ];

    let mut wire = String::new();
    for m in &messages {
        let line = encode(m)?;
        assert_eq!(&decode(&line)?, m);
        print!("{line}");
        wire.push_str(&line);
    }

    let mut reader = LineReader::new();
    let mut parsed = Vec::new();
    for chunk in wire.as_bytes().chunks(7) {
        parsed.extend(reader.push(chunk));
    }
    let parsed: Result<Vec<_>, _> = parsed.into_iter().collect();
    assert_eq!(parsed?, messages);
    println!("reassembled {} messages from 7-byte reads", messages.len());

    for bad in ["CMD|pump|MAYBE|0", "TEL|pump|1", "XYZ|pump"] {
        println!("{bad:<18} -> {}", decode(bad).unwrap_err());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), ProtocolError> {
    run_example()
}
