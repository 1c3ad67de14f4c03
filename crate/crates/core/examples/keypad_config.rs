// A consumer walks a node through its keypad screens to reschedule a
// washing machine, then the node runs under relay commands and switches
// itself off once the requested run time is met.

use sln_han::domain::{LoadClass, LoadId, LoadSpec, ScheduleConfig, TimeModel};
use sln_han::protocol::{Command, Relay, UiInput};
use sln_han::sln::{NodeState, SlnError};

pub fn run_example() -> Result<(), SlnError> {
    let tm = TimeModel::hourly();
    let spec = LoadSpec::schedulable(
        LoadId::new("washer").expect("valid id"),
        "washing machine",
        LoadClass::Nisl,
        0.5,
        ScheduleConfig::new(7, 16, 120),
    )
    .with_power_factor(0.7);
    let mut node = NodeState::new(spec, tm)?;

    let inputs = [
        UiInput::Menu,
        UiInput::ConfigureNode,
        UiInput::ChooseClass(LoadClass::Nisl),
        UiInput::Log {
            alpha: 9,
            beta: 13,
            gamma_minutes: 120,
        },
    ];
    for input in inputs {
        let logged = node.handle_input(input)?;
        println!("{input:?} -> {:?}", node.screen());
        if let Some(cfg) = logged {
            println!("  node logs {cfg:?}");
        }
    }

    // An impossible window is refused and the screen is left alone.
    node.handle_input(UiInput::Menu)?;
    let refused = node.handle_input(UiInput::Submit {
        class: LoadClass::Nisl,
        alpha: 12,
        beta: 12,
        gamma_minutes: 120,
    });
    println!(
        "submit 12..12 for 120 min -> {:?} (screen {:?})",
        refused.map(|_| ()),
        node.screen()
    );
    node.handle_input(UiInput::Back)?;

    let on = Command {
        node_id: node.id().clone(),
        action: Relay::On,
        issued_at: 9.0 * tm.interval_seconds() - 9.0,
    };
    println!("ON -> {:?}", node.apply_command(&on)?);
    for t in 9..12 {
        let tel = node.tick(t, (t + 1) as f64 * tm.interval_seconds())?;
        println!(
            "end of {}: relay {:?}, {:.0} W, pf {:?}, ran {} min",
            tm.local_clock(t),
            tel.relay,
            tel.real_power,
            tel.power_factor,
            node.minutes_run()
        );
    }
    println!("ON again -> {:?}", node.apply_command(&on)?);
    println!("delivered {} kWh", node.energy_delivered_kwh());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), SlnError> {
    run_example()
}
