// SPDX-License-Identifier: Apache-2.0

//! Transmission-line signal synthesis: the 50 Hz sinusoid, delayed 256-sample
//! measured frames, Gaussian measurement delays and partial-discharge bursts.
//!
//! Time is integer nanoseconds throughout. Reals only appear as amplitudes.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DfcError, Result};

pub const SAMPLES_PER_FRAME: usize = 256;
/// One step: the interval between consecutive samples of a frame.
pub const SAMPLE_PERIOD_NS: i64 = 78_125;
pub const PERIOD_NS: i64 = 20_000_000;
pub const TICK_NS: i64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlSignalParams {
    pub a_rms: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

impl TlSignalParams {
    pub fn new(a_rms: f64, freq_hz: f64, phase_rad: f64) -> Result<Self> {
        let p = TlSignalParams {
            a_rms,
            freq_hz,
            phase_rad,
        };
        p.validate()?;
        Ok(p)
    }

    /// `sin` in phase with the frame: `A(t) = sin(2π f t)`.
    pub fn unit_sine() -> Self {
        TlSignalParams {
            a_rms: 1.0,
            freq_hz: 50.0,
            phase_rad: -PI / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_rms > 0.0 && self.a_rms.is_finite()) {
            return Err(DfcError::InvalidParams(format!(
                "a_rms must be > 0, got {}",
                self.a_rms
            )));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(DfcError::InvalidParams(format!(
                "freq_hz must be > 0, got {}",
                self.freq_hz
            )));
        }
        if !(-PI..=PI).contains(&self.phase_rad) {
            return Err(DfcError::InvalidParams(format!(
                "phase_rad must lie in [-pi, pi], got {}",
                self.phase_rad
            )));
        }
        Ok(())
    }
}

impl Default for TlSignalParams {
    fn default() -> Self {
        TlSignalParams {
            a_rms: 1.0,
            freq_hz: 50.0,
            phase_rad: 0.0,
        }
    }
}

/// `A(t) = a_rms * cos(2π f t + φ)`, `t` in nanoseconds.
pub fn tl_amplitude(params: &TlSignalParams, t_ns: i64) -> f64 {
    params.a_rms * (TAU * params.freq_hz * (t_ns as f64 * 1e-9) + params.phase_rad).cos()
}

/// One period of measured data: 256 samples whose i-th time tag is step `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredFrame {
    samples: Vec<f64>,
    delay_ns: i64,
}

impl MeasuredFrame {
    pub fn from_samples(samples: Vec<f64>, delay_ns: i64) -> Result<Self> {
        if samples.len() != SAMPLES_PER_FRAME {
            return Err(DfcError::InvalidParams(format!(
                "a frame holds {SAMPLES_PER_FRAME} samples, got {}",
                samples.len()
            )));
        }
        check_delay(delay_ns)?;
        Ok(MeasuredFrame { samples, delay_ns })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn delay_ns(&self) -> i64 {
        self.delay_ns
    }

    pub fn period_ns(&self) -> i64 {
        PERIOD_NS
    }

    pub fn step_tags(&self) -> impl Iterator<Item = usize> {
        0..SAMPLES_PER_FRAME
    }

    /// Nominal sampling time of step `index`.
    pub fn time_ns(index: usize) -> i64 {
        index as i64 * SAMPLE_PERIOD_NS
    }
}

fn check_delay(delay_ns: i64) -> Result<()> {
    if !(0..PERIOD_NS).contains(&delay_ns) {
        return Err(DfcError::out_of_range("delay_ns", delay_ns));
    }
    Ok(())
}

/// Samples `A(t - Δt)` at each step tag.
pub fn sample_frame(params: &TlSignalParams, delay_ns: i64) -> Result<MeasuredFrame> {
    check_delay(delay_ns)?;
    let samples = (0..SAMPLES_PER_FRAME)
        .map(|i| tl_amplitude(params, MeasuredFrame::time_ns(i) - delay_ns))
        .collect();
    Ok(MeasuredFrame { samples, delay_ns })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayDistribution {
    pub mean_ns: f64,
    pub sigma_ns: f64,
    pub clip_ns: i64,
}

impl DelayDistribution {
    pub fn new(mean_ns: f64, sigma_ns: f64, clip_ns: i64) -> Result<Self> {
        let d = DelayDistribution {
            mean_ns,
            sigma_ns,
            clip_ns,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_ns.is_finite() {
            return Err(DfcError::InvalidParams("mean_ns must be finite".into()));
        }
        if !(self.sigma_ns >= 0.0 && self.sigma_ns.is_finite()) {
            return Err(DfcError::InvalidParams(format!(
                "sigma_ns must be >= 0, got {}",
                self.sigma_ns
            )));
        }
        if !(0..PERIOD_NS).contains(&self.clip_ns) {
            return Err(DfcError::out_of_range("clip_ns", self.clip_ns));
        }
        Ok(())
    }
}

impl Default for DelayDistribution {
    fn default() -> Self {
        DelayDistribution {
            mean_ns: 0.0,
            sigma_ns: 100_000.0,
            clip_ns: 1_000_000,
        }
    }
}

/// Draws a delay in nanoseconds, clamped to `[0, clip_ns]` and rounded to the
/// 10 ns clock tick. Pure in `(dist, seed)`.
pub fn draw_delay(dist: &DelayDistribution, seed: u64) -> Result<i64> {
    dist.validate()?;
    let normal = Normal::new(dist.mean_ns, dist.sigma_ns)
        .map_err(|e| DfcError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = (normal.sample(&mut rng).round() as i64).clamp(0, dist.clip_ns);
    let mut ticked = (ns + TICK_NS / 2).div_euclid(TICK_NS) * TICK_NS;
    if ticked > dist.clip_ns {
        ticked -= TICK_NS;
    }
    Ok(ticked)
}

/// Damped sinusoidal burst added from `onset_step` onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdParams {
    pub onset_step: usize,
    pub amplitude: f64,
    pub decay_per_step: f64,
    pub oscillation_period_steps: f64,
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        if self.onset_step >= SAMPLES_PER_FRAME {
            return Err(DfcError::out_of_range("onset_step", self.onset_step));
        }
        if !self.amplitude.is_finite() {
            return Err(DfcError::InvalidParams(
                "PD amplitude must be finite".into(),
            ));
        }
        if !(self.decay_per_step > 0.0 && self.decay_per_step < 1.0) {
            return Err(DfcError::InvalidParams(format!(
                "PD decay must lie in (0, 1), got {}",
                self.decay_per_step
            )));
        }
        if !(self.oscillation_period_steps > 0.0 && self.oscillation_period_steps.is_finite()) {
            return Err(DfcError::InvalidParams(
                "PD oscillation period must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Disturbance contributed at `step`.
    pub fn value_at(&self, step: usize) -> f64 {
        if step < self.onset_step {
            return 0.0;
        }
        let k = (step - self.onset_step) as f64;
        self.amplitude
            * self.decay_per_step.powf(k)
            * (TAU * k / self.oscillation_period_steps).sin()
    }
}

pub fn inject_pd(frame: &MeasuredFrame, pd: &PdParams) -> Result<MeasuredFrame> {
    pd.validate()?;
    let samples = frame
        .samples
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            if k >= pd.onset_step {
                y + pd.value_at(k)
            } else {
                y
            }
        })
        .collect();
    Ok(MeasuredFrame {
        samples,
        delay_ns: frame.delay_ns,
    })
}
