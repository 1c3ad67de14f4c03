// What a node's meter reports for a resistive, an inductive and a
// nearly reactive load, starting from biased sensor samples.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, SQRT_2};

use sln_han::metering::{
    compute_params, meter_load, remove_dc_offset, synthesize, MeteringError, WaveformSpec, MAINS_VRMS, SENSOR_DC_OFFSET,
};

pub fn run_example() -> Result<(), MeteringError> {
    let peak_v = MAINS_VRMS * SQRT_2;
    let voltage = remove_dc_offset(&synthesize(
        &WaveformSpec::mains(peak_v, 0.0).with_offset(SENSOR_DC_OFFSET),
    )?)?;

    println!(
        "{:>8}  {:>8}  {:>7}  {:>9}  {:>9}  {:>6}",
        "lag", "Vrms", "Irms", "P (W)", "S (VA)", "PF"
    );
    for (label, lag) in [
        ("0", 0.0),
        ("30 deg", FRAC_PI_6),
        ("60 deg", FRAC_PI_3),
        ("89 deg", 89f64.to_radians()),
    ] {
        let raw = synthesize(&WaveformSpec::mains(10.0 * SQRT_2, -lag).with_offset(SENSOR_DC_OFFSET))?;
        let current = remove_dc_offset(&raw)?;
        let p = compute_params(&voltage, &current)?;
        println!(
            "{label:>8}  {:>8.3}  {:>7.3}  {:>9.1}  {:>9.1}  {:>6.4}",
            p.vrms, p.irms, p.real_power, p.apparent_power, p.power_factor
        );
    }

    // The shortcut the simulator uses: meter a load from its rating.
    let washer = meter_load(0.5, 0.7)?.expect("a running load draws current");
    println!(
        "0.5 kW washer at pf 0.7: {:.3} A, {:.1} W, pf {:.3}",
        washer.irms, washer.real_power, washer.power_factor
    );
    println!("switched-off load: {:?}", meter_load(0.0, 1.0)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), MeteringError> {
    run_example()
}
