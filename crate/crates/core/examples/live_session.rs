// Serves the bundled household over WebSocket at a fast pace and plays the
// dashboard's part: reschedule the dryer from its keypad, then watch the
// stream.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use sln_han::live::{serve, LiveConfig, LiveError};
use sln_han::lmu::Algorithm;
use sln_han::protocol::{decode, Message};
use sln_han::simnet::case_study;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message as WsMessage;

pub fn run_example() -> Result<(), LiveError> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let config = LiveConfig {
            listen: "127.0.0.1:0".parse().expect("valid address"),
            tick: Duration::from_millis(10),
            algorithm: Algorithm::Priority,
            max_sessions: Some(1),
        };
        let (ready, addr) = oneshot::channel();
        let server = tokio::spawn(serve(case_study(), config, Some(ready)));
        let addr = addr.await.expect("server starts");

        let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}")).await?;
        ws.send(WsMessage::text("UIE|dryer|SUBMIT|NISL|13|16|60\n")).await?;
        while let Some(frame) = ws.next().await {
            let WsMessage::Text(text) = frame? else { continue };
            match decode(text.as_str()) {
                Ok(Message::Profile(p)) => println!(
                    "interval {:>2}: {:>5.2} kW (limit {}){}",
                    p.interval,
                    p.aggregate_kw,
                    p.mdl_kw,
                    if p.over_kw > 0.0 { "  over" } else { "" }
                ),
                Ok(Message::Panel(_)) | Ok(Message::Telemetry(_)) => {}
                _ => print!("  {text}"),
            }
        }
        server.await.expect("server task")?;
        Ok(())
    })
}

#[allow(dead_code)]
fn main() -> Result<(), LiveError> {
    run_example()
}
