// The scheduler on its own: three loads competing for a tight evening
// limit, planned without a network, next to the unmanaged baseline.

use sln_han::domain::{LoadClass, LoadId, LoadSpec, MdlProfile, ScheduleConfig, TimeModel};
use sln_han::lmu::{penalty, plan_day, Algorithm, LmuError, Registry};

pub fn run_example() -> Result<(), LmuError> {
    let tm = TimeModel::hourly();
    let id = |s: &str| LoadId::new(s).expect("valid id");
    let loads = [
        LoadSpec::schedulable(id("ev"), "car", LoadClass::Isl, 3.3, ScheduleConfig::new(18, 23, 180)),
        LoadSpec::schedulable(
            id("heater"),
            "water heater",
            LoadClass::Isl,
            2.0,
            ScheduleConfig::new(18, 21, 120),
        ),
        LoadSpec::schedulable(
            id("dryer"),
            "dryer",
            LoadClass::Nisl,
            1.5,
            ScheduleConfig::new(19, 22, 120),
        ),
    ];
    let reg = Registry::from_specs(tm, &loads)?;
    let mdl = MdlProfile::uniform(4.0, &tm).expect("positive limit");
    let ninsl = vec![0.4; tm.horizon()];

    for algorithm in [Algorithm::None, Algorithm::Priority] {
        let plan = plan_day(&reg, &mdl, &ninsl, algorithm)?;
        println!("{algorithm}:");
        let mut profile = ninsl.clone();
        for (t, d) in plan.iter().enumerate() {
            profile[t] +=
                d.on.iter()
                    .map(|on| loads.iter().find(|l| &l.id == on).map_or(0.0, |l| l.rated_kw))
                    .sum::<f64>();
            if t >= 18 {
                let names: Vec<_> = d.on.iter().map(LoadId::as_str).collect();
                println!("  {} {:>4.1} kW  {}", tm.local_clock(t), profile[t], names.join(" "));
            }
        }
        let report = penalty(&profile, &mdl, 1.0, &tm)?;
        println!(
            "  {} kWh over the limit in {} intervals",
            report.energy_over_mdl, report.intervals_over
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), LmuError> {
    run_example()
}
