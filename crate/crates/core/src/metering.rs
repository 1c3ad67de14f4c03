//! Software stand-in for the node's voltage/current sensing chain.
//!
//! Waveforms are synthesized with the DC bias the analog front end adds,
//! the bias is stripped again, and RMS, real power, apparent power and
//! power factor are computed over whole cycles.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal supply and sampling defaults.
pub const MAINS_VRMS: f64 = 230.0;
pub const MAINS_HZ: f64 = 50.0;
pub const DEFAULT_SAMPLE_RATE: f64 = 3200.0;
pub const DEFAULT_CYCLES: u32 = 10;
/// Bias added by the front end so the ADC sees a unipolar signal.
pub const SENSOR_DC_OFFSET: f64 = 2.5;

const MIN_SAMPLES_PER_CYCLE: f64 = 32.0;
const WHOLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeteringError {
    #[error("invalid waveform spec: {0}")]
    InvalidSpec(&'static str),
    #[error("empty sample series")]
    EmptySeries,
    #[error("voltage has {voltage} samples but current has {current}")]
    LengthMismatch { voltage: usize, current: usize },
    #[error("need at least {MIN_SERIES} samples, got {0}")]
    TooShort(usize),
    #[error("apparent power is zero; power factor undefined")]
    ZeroSignal,
}

const MIN_SERIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    /// Peak value.
    pub amplitude: f64,
    pub frequency: f64,
    /// Radians.
    pub phase: f64,
    pub dc_offset: f64,
    pub sample_rate: f64,
    /// Seconds.
    pub duration: f64,
}

impl WaveformSpec {
    /// A mains-frequency sine over the default window.
    pub fn mains(amplitude: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency: MAINS_HZ,
            phase,
            dc_offset: 0.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration: f64::from(DEFAULT_CYCLES) / MAINS_HZ,
        }
    }

    pub fn with_offset(mut self, dc_offset: f64) -> Self {
        self.dc_offset = dc_offset;
        self
    }

    pub fn with_cycles(mut self, cycles: u32) -> Self {
        self.duration = f64::from(cycles) / self.frequency;
        self
    }

    pub fn with_sample_rate(mut self, sample_rate: f64) -> Self {
        self.sample_rate = sample_rate;
        self
    }

    fn sample_count(&self) -> Result<usize, MeteringError> {
        let finite = [
            self.amplitude,
            self.frequency,
            self.phase,
            self.dc_offset,
            self.sample_rate,
            self.duration,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(MeteringError::InvalidSpec("non-finite field"));
        }
        if self.frequency <= 0.0 || self.sample_rate <= 0.0 || self.duration <= 0.0 {
            return Err(MeteringError::InvalidSpec(
                "frequency, sample rate and duration must be positive",
            ));
        }
        if self.sample_rate < MIN_SAMPLES_PER_CYCLE * self.frequency {
            return Err(MeteringError::InvalidSpec("sample rate below 32 samples per cycle"));
        }
        let cycles = self.duration * self.frequency;
        if (cycles - cycles.round()).abs() > WHOLE_TOLERANCE * cycles.max(1.0) {
            return Err(MeteringError::InvalidSpec("duration is not a whole number of cycles"));
        }
        let samples = self.duration * self.sample_rate;
        if (samples - samples.round()).abs() > WHOLE_TOLERANCE * samples.max(1.0) {
            return Err(MeteringError::InvalidSpec("duration is not a whole number of samples"));
        }
        Ok(samples.round() as usize)
    }
}

/// Samples `dc_offset + amplitude * sin(2π f k / fs + phase)`.
pub fn synthesize(spec: &WaveformSpec) -> Result<Vec<f64>, MeteringError> {
    let n = spec.sample_count()?;
    let omega = 2.0 * PI * spec.frequency / spec.sample_rate;
    Ok((0..n)
        .map(|k| spec.dc_offset + spec.amplitude * (omega * k as f64 + spec.phase).sin())
        .collect())
}

/// Subtracts the series mean.
pub fn remove_dc_offset(samples: &[f64]) -> Result<Vec<f64>, MeteringError> {
    if samples.is_empty() {
        return Err(MeteringError::EmptySeries);
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(samples.iter().map(|s| s - mean).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectricalParams {
    pub vrms: f64,
    pub irms: f64,
    /// W.
    pub real_power: f64,
    /// VA.
    pub apparent_power: f64,
    /// Magnitude only; lead/lag is not reported.
    pub power_factor: f64,
}

fn rms(series: &[f64]) -> f64 {
    (series.iter().map(|x| x * x).sum::<f64>() / series.len() as f64).sqrt()
}

/// RMS of the mains voltage as the node measures it, bias removed.
pub fn supply_vrms() -> Result<f64, MeteringError> {
    let v = synthesize(&WaveformSpec::mains(MAINS_VRMS * SQRT_2, 0.0).with_offset(SENSOR_DC_OFFSET))?;
    Ok(rms(&remove_dc_offset(&v)?))
}

/// Computes electrical parameters from offset-free voltage and current series
/// spanning whole cycles.
pub fn compute_params(voltage: &[f64], current: &[f64]) -> Result<ElectricalParams, MeteringError> {
    if voltage.len() != current.len() {
        return Err(MeteringError::LengthMismatch {
            voltage: voltage.len(),
            current: current.len(),
        });
    }
    if voltage.len() < MIN_SERIES {
        return Err(MeteringError::TooShort(voltage.len()));
    }
    let vrms = rms(voltage);
    let irms = rms(current);
    let real_power = voltage.iter().zip(current).map(|(v, i)| v * i).sum::<f64>() / voltage.len() as f64;
    let apparent_power = vrms * irms;
    if apparent_power == 0.0 {
        return Err(MeteringError::ZeroSignal);
    }
    // |mean(v·i)| ≤ rms(v)·rms(i) holds exactly (Cauchy–Schwarz) but rounding can
    // push the ratio a hair past 1.
    let power_factor = (real_power.abs() / apparent_power).min(1.0);
    Ok(ElectricalParams {
        vrms,
        irms,
        real_power,
        apparent_power,
        power_factor,
    })
}

/// What a node's meter reads for a load drawing `kw` at power factor `pf`
/// from a 230 V / 50 Hz supply.
///
/// `None` when nothing flows (relay open or zero demand).
pub fn meter_load(kw: f64, pf: f64) -> Result<Option<ElectricalParams>, MeteringError> {
    if kw <= 0.0 {
        return Ok(None);
    }
    let v_peak = MAINS_VRMS * SQRT_2;
    let i_rms = kw * 1000.0 / (MAINS_VRMS * pf);
    let lag = pf.clamp(0.0, 1.0).acos();
    let v = synthesize(&WaveformSpec::mains(v_peak, 0.0).with_offset(SENSOR_DC_OFFSET))?;
    let i = synthesize(&WaveformSpec::mains(i_rms * SQRT_2, -lag).with_offset(SENSOR_DC_OFFSET))?;
    let params = compute_params(&remove_dc_offset(&v)?, &remove_dc_offset(&i)?)?;
    Ok(Some(params))
}
