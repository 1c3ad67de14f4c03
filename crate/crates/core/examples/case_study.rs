// Runs the bundled household twice, unmanaged and under the priority
// scheduler, and prints both load curves against the demand limit.

use sln_han::lmu::Algorithm;
use sln_han::simnet::{case_study, run_day, SimError};

pub fn run_example() -> Result<(), SimError> {
    let scenario = case_study();
    let tm = scenario.time_model;
    let unmanaged = run_day(&scenario, Algorithm::None)?;
    let managed = run_day(&scenario, Algorithm::Priority)?;

    println!("{:>5}  {:>6}  {:>9}  {:>9}", "time", "MDL", "case I", "case II");
    for t in 0..tm.horizon() {
        let flag = |kw: f64| if kw > unmanaged.mdl_kw[t] { '*' } else { ' ' };
        let (a, b) = (unmanaged.aggregate_profile[t], managed.aggregate_profile[t]);
        println!(
            "{:>5}  {:>6.2}  {:>8.2}{}  {:>8.2}{}",
            tm.local_clock(t),
            unmanaged.mdl_kw[t],
            a,
            flag(a),
            b,
            flag(b)
        );
    }
    for (label, r) in [
        ("case I  (no scheduling)", &unmanaged),
        ("case II (priority)     ", &managed),
    ] {
        let p = &r.penalty_report;
        println!(
            "{label}: {} kWh over MDL in {} intervals, penalty {} x",
            p.energy_over_mdl, p.intervals_over, p.penalty
        );
    }
    let saved = &unmanaged.penalty_report.energy_over_mdl - &managed.penalty_report.energy_over_mdl;
    println!("savings (E1 - E2): {saved} x");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), SimError> {
    run_example()
}
