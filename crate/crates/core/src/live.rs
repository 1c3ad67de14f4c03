//! Live mode: one simulated day paced by the wall clock and mirrored to a
//! WebSocket client.
//!
//! The server speaks the node protocol, one line per text frame. It pushes
//! `SCR` panel lines when a session opens and after every interval, a `PRF`
//! line per interval, every message that crossed the simulated link, and
//! `ACK|node|UIE|...` replies to consumer input. The client sends `UIE`
//! lines; they are queued and applied at the next interval boundary. One
//! session runs at a time; further connections wait until it ends.

use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message as WsMessage;

use crate::lmu::Algorithm;
use crate::protocol::{encode, LineReader, Message};
use crate::simnet::{Scenario, SimError, Simulation};

#[derive(Debug, Error)]
pub enum LiveError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("websocket: {0}")]
    WebSocket(#[from] tokio_tungstenite::tungstenite::Error),
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub listen: SocketAddr,
    /// Wall-clock time per simulated interval.
    pub tick: Duration,
    pub algorithm: Algorithm,
    /// Stop after this many sessions; `None` serves forever.
    pub max_sessions: Option<usize>,
}

/// Binds `config.listen` and serves sessions. The bound address goes to
/// `ready` once the listener is up.
pub async fn serve(
    scenario: Scenario,
    config: LiveConfig,
    ready: Option<oneshot::Sender<SocketAddr>>,
) -> Result<(), LiveError> {
    let listener = TcpListener::bind(config.listen).await?;
    if let Some(ready) = ready {
        let _ = ready.send(listener.local_addr()?);
    }
    let mut served = 0;
    while config.max_sessions.is_none_or(|max| served < max) {
        let (stream, _) = listener.accept().await?;
        served += 1;
        if let Err(e) = session(stream, scenario.clone(), &config).await {
            match e {
                // A client hanging up mid-day is routine.
                LiveError::WebSocket(_) | LiveError::Io(_) => {}
                other => return Err(other),
            }
        }
    }
    Ok(())
}

fn lines(messages: impl IntoIterator<Item = Message>) -> Vec<String> {
    messages.into_iter().filter_map(|m| encode(&m).ok()).collect()
}

async fn session(stream: TcpStream, scenario: Scenario, config: &LiveConfig) -> Result<(), LiveError> {
    let mut ws = tokio_tungstenite::accept_async(stream).await?;
    let mut sim = Simulation::new(scenario, config.algorithm)?;
    let mut reader = LineReader::new();
    let mut forwarded = 0;

    for line in lines(sim.panels().into_iter().map(Message::Panel)) {
        ws.send(WsMessage::text(line)).await?;
    }

    let mut ticker = tokio::time::interval(config.tick);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    // The first tick completes immediately; give the client one period to
    // send input before interval 0.
    ticker.tick().await;

    loop {
        tokio::select! {
            _ = ticker.tick() => {
                let Some(outcome) = sim.step()? else { break };
                let mut out = Vec::new();
                out.extend(outcome.ui_acks.into_iter().map(Message::Ack));
                let log = sim.event_log();
                out.extend(log[forwarded..].iter().map(|e| e.message.clone()));
                forwarded = log.len();
                out.push(Message::Profile(outcome.profile));
                out.extend(outcome.panels.into_iter().map(Message::Panel));
                for line in lines(out) {
                    ws.send(WsMessage::text(line)).await?;
                }
            }
            incoming = ws.next() => {
                let frame = match incoming {
                    Some(frame) => frame?,
                    None => return Ok(()),
                };
                let bytes = match frame {
                    WsMessage::Text(text) => text.as_bytes().to_vec(),
                    WsMessage::Binary(bin) => bin.to_vec(),
                    WsMessage::Close(_) => return Ok(()),
                    _ => continue,
                };
                let mut bytes = bytes;
                if bytes.last() != Some(&b'\n') {
                    bytes.push(b'\n');
                }
                for msg in reader.push(&bytes).into_iter().flatten() {
                    if let Message::UiEvent(event) = msg {
                        sim.queue_ui(event);
                    }
                }
            }
        }
    }

    let result = sim.finish()?;
    for line in lines(result.event_log[forwarded..].iter().map(|e| e.message.clone())) {
        ws.send(WsMessage::text(line)).await?;
    }
    ws.close(None).await?;
    Ok(())
}
