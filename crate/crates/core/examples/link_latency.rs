// The simulated radio link: delay distribution for the default model and
// how a burst of commands arrives at the far end.

use sln_han::domain::LoadId;
use sln_han::protocol::{Command, Message, Relay};
use sln_han::simnet::{Direction, InFlight, Link, LinkError, LinkModel};

pub fn run_example() -> Result<(), LinkError> {
    let mut link = Link::new(LinkModel::default().with_seed(2017));
    let n = 10_000;
    let mut buckets = [0usize; 8];
    let mut sum = 0.0;
    for _ in 0..n {
        let d = link.sample_delay();
        sum += d;
        buckets[(((d - 7.0) / 0.25) as usize).min(7)] += 1;
    }
    println!("{n} delays, mean {:.4} s", sum / n as f64);
    for (i, count) in buckets.iter().enumerate() {
        let lo = 7.0 + 0.25 * i as f64;
        println!("{lo:>5.2}-{:<5.2} {}", lo + 0.25, "#".repeat(count / 40));
    }

    let mut link = Link::new(LinkModel::new(2.0, 5.0, 1)?);
    let mut queue = InFlight::default();
    for name in ["ev", "pump", "dryer"] {
        let cmd = Message::Command(Command {
            node_id: LoadId::new(name).expect("valid id"),
            action: Relay::On,
            issued_at: 100.0,
        });
        queue.push(link.send(cmd, 100.0, Direction::Down));
    }
    while let Some(d) = queue.pop_due(f64::INFINITY) {
        println!("t={:.3}  {:?}", d.deliver_at, d.message.node_id().map(LoadId::as_str));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), LinkError> {
    run_example()
}
