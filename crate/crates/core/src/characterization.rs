// SPDX-License-Identifier: Apache-2.0

//! Accuracy sweeps, the corner-error experiment and the arithmetic cost model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DfcError, Result};
use crate::fixed_point::{FxFormat, Rounding, MAX_FRAC_BITS};
use crate::interpolation::{correct_frame, interpolate, InterpolationConfig, Quantization};
use crate::mdc_sim::{recover_delay, ClockConfig};
use crate::signal_model::{
    draw_delay, inject_pd, sample_frame, tl_amplitude, DelayDistribution, PdParams, TlSignalParams,
    PERIOD_NS, TICK_NS,
};
use crate::weight_matrix::{StepTime, WeightMatrix};

/// Accuracy bound used throughout.
pub const ERROR_THRESHOLD: f64 = 0.001;

pub const DEGREE_AXIS: std::ops::RangeInclusive<usize> = 3..=24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Degree,
    FracBits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: i64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Least axis value below the threshold; `None` if no point passes.
    pub selected_min: Option<i64>,
    pub threshold: f64,
    pub grid_stride: u64,
}

impl SweepReport {
    fn new(axis: SweepAxis, points: Vec<SweepPoint>, threshold: f64, grid_stride: u64) -> Self {
        let selected_min = points
            .iter()
            .find(|p| p.max_abs_error < threshold)
            .map(|p| p.value);
        SweepReport {
            axis,
            points,
            selected_min,
            threshold,
            grid_stride,
        }
    }

    pub fn error_at(&self, value: i64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.value == value)
            .map(|p| p.max_abs_error)
    }
}

fn check_sweep_args(threshold: f64, grid_stride: u64) -> Result<()> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(DfcError::InvalidParams(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    if grid_stride == 0 {
        return Err(DfcError::InvalidParams("grid_stride must be >= 1".into()));
    }
    Ok(())
}

/// Max |L(t) - A(t)| over the 10 ns grid of one period, every `grid_stride`-th point.
pub fn grid_error(cfg: &InterpolationConfig, wm: &WeightMatrix, grid_stride: u64) -> Result<f64> {
    let params = TlSignalParams::unit_sine();
    let frame = sample_frame(&params, 0)?;
    let points = (PERIOD_NS / TICK_NS) as u64;
    let n = points.div_ceil(grid_stride) as usize;
    (0..n)
        .into_par_iter()
        .with_min_len(4096)
        .map(|j| {
            let t = (j as u64 * grid_stride) as i64 * TICK_NS;
            let got = interpolate(&frame, StepTime::from_ns(t), cfg, wm)?;
            Ok((got - tl_amplitude(&params, t)).abs())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Float-path error for each degree in [`DEGREE_AXIS`].
pub fn sweep_degree(threshold: f64, grid_stride: u64) -> Result<SweepReport> {
    sweep_degree_over(DEGREE_AXIS, threshold, grid_stride)
}

pub fn sweep_degree_over(
    degrees: std::ops::RangeInclusive<usize>,
    threshold: f64,
    grid_stride: u64,
) -> Result<SweepReport> {
    check_sweep_args(threshold, grid_stride)?;
    let points = degrees
        .map(|d| {
            let cfg = InterpolationConfig::float(d);
            let wm = cfg.weights()?;
            Ok(SweepPoint {
                value: d as i64,
                max_abs_error: grid_error(&cfg, &wm, grid_stride)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport::new(
        SweepAxis::Degree,
        points,
        threshold,
        grid_stride,
    ))
}

/// Fixed-point error for 0..=32 fraction bits at `degree`, register-boundary
/// quantization, floor rounding.
pub fn sweep_fractions(degree: usize, threshold: f64, grid_stride: u64) -> Result<SweepReport> {
    sweep_fractions_with(
        degree,
        threshold,
        grid_stride,
        Quantization::RegisterBoundary,
        Rounding::Floor,
    )
}

pub fn sweep_fractions_with(
    degree: usize,
    threshold: f64,
    grid_stride: u64,
    quantization: Quantization,
    rounding: Rounding,
) -> Result<SweepReport> {
    check_sweep_args(threshold, grid_stride)?;
    let points = (0..=MAX_FRAC_BITS)
        .map(|bits| {
            let cfg = InterpolationConfig {
                quantization,
                ..InterpolationConfig::fixed(degree, FxFormat::with_rounding(bits, rounding)?)
            };
            let wm = cfg.weights()?;
            Ok(SweepPoint {
                value: bits as i64,
                max_abs_error: grid_error(&cfg, &wm, grid_stride)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport::new(
        SweepAxis::FracBits,
        points,
        threshold,
        grid_stride,
    ))
}

/// Strict interior local extrema.
pub fn find_corners(samples: &[f64]) -> Result<Vec<usize>> {
    if samples.len() < 3 {
        return Err(DfcError::InvalidParams(
            "corner detection needs at least 3 samples".into(),
        ));
    }
    Ok((1..samples.len() - 1)
        .filter(|&k| {
            let (a, b, c) = (samples[k - 1], samples[k], samples[k + 1]);
            (b > a && b > c) || (b < a && b < c)
        })
        .collect())
}

/// Corners of `reference` and `|candidate - reference|` at each of them.
pub fn corner_errors(candidate: &[f64], reference: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    if candidate.len() != reference.len() {
        return Err(DfcError::InvalidParams(format!(
            "frame lengths differ: {} vs {}",
            candidate.len(),
            reference.len()
        )));
    }
    let steps = find_corners(reference)?;
    let errors = steps
        .iter()
        .map(|&k| (candidate[k] - reference[k]).abs())
        .collect();
    Ok((steps, errors))
}

/// Signal, delay and disturbance used for the corner audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerScenario {
    pub signal: TlSignalParams,
    pub delay: DelayDistribution,
    pub pd: Option<PdParams>,
    pub clock: ClockConfig,
}

impl Default for CornerScenario {
    /// Sine with crest and trough at steps 64 and 192; delays up to 1 ms; a PD
    /// burst that has died out well before the trough.
    fn default() -> Self {
        CornerScenario {
            signal: TlSignalParams::unit_sine(),
            delay: DelayDistribution {
                mean_ns: 500_000.0,
                sigma_ns: 200_000.0,
                clip_ns: 1_000_000,
            },
            pd: Some(PdParams {
                onset_step: 100,
                amplitude: 0.3,
                decay_per_step: 0.7,
                oscillation_period_steps: 6.0,
            }),
            clock: ClockConfig::default(),
        }
    }
}

impl CornerScenario {
    pub fn undisturbed() -> Self {
        CornerScenario {
            delay: DelayDistribution {
                mean_ns: 0.0,
                sigma_ns: 0.0,
                clip_ns: 0,
            },
            pd: None,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerReport {
    pub seed: u64,
    pub injected_delay_ns: i64,
    pub recovered_delay_ticks: i64,
    pub corner_steps: Vec<usize>,
    pub abs_errors: Vec<f64>,
    pub max_error: f64,
    /// Output register LSB, reported apart from the interpolation error.
    pub resolution: f64,
}

pub fn corner_error_experiment(seed: u64, cfg: &InterpolationConfig) -> Result<CornerReport> {
    corner_error_experiment_with(seed, cfg, &CornerScenario::default())
}

/// Draws a delay, measures it through the MDC, corrects the disturbed frame
/// and audits it at the corners of the undelayed, PD-free reference.
pub fn corner_error_experiment_with(
    seed: u64,
    cfg: &InterpolationConfig,
    scenario: &CornerScenario,
) -> Result<CornerReport> {
    let delay_ns = draw_delay(&scenario.delay, seed)?;
    let injected_ticks = (delay_ns / scenario.clock.tick_ns as i64) as u64;
    let recovered = recover_delay(injected_ticks, scenario.clock)?
        .ok_or_else(|| DfcError::InvalidParams("MDC lost the DRDY for the scenario delay".into()))?
        as i64;

    let mut measured = sample_frame(&scenario.signal, delay_ns)?;
    if let Some(pd) = &scenario.pd {
        measured = inject_pd(&measured, pd)?;
    }
    let reference = sample_frame(&scenario.signal, 0)?;
    let wm = cfg.weights()?;
    let corrected = correct_frame(&measured, recovered, cfg, &wm)?;
    let (corner_steps, abs_errors) = corner_errors(&corrected.samples, reference.samples())?;
    let max_error = abs_errors.iter().copied().fold(0.0, f64::max);
    Ok(CornerReport {
        seed,
        injected_delay_ns: delay_ns,
        recovered_delay_ticks: recovered,
        corner_steps,
        abs_errors,
        max_error,
        resolution: cfg.fmt.resolution(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub degree: u64,
    pub tag_bits: u64,
    pub subtractors: u64,
    pub dividers: u64,
    pub adders: u64,
    pub multipliers: u64,
    pub total_units: u64,
    pub memory_bits: u64,
}

/// Unit counts for a direct `n`-node Lagrange datapath and its memory footprint.
pub fn cost_model(degree: u64, tag_bits: u64) -> Result<CostReport> {
    if degree < 2 {
        return Err(DfcError::out_of_range("cost model degree", degree));
    }
    let n = degree;
    let subtractors = 2 * (n - 1);
    let dividers = n * (n - 1);
    let adders = n * (n - 1);
    let multipliers = 2 * n * (n - 1);
    let total_units = subtractors + dividers + adders + multipliers;
    Ok(CostReport {
        degree: n,
        tag_bits,
        subtractors,
        dividers,
        adders,
        multipliers,
        total_units,
        memory_bits: frame_memory_bits(n, tag_bits) + 64 * total_units,
    })
}

/// Bits to hold `n` time tags of `tag_bits` each.
pub fn frame_memory_bits(n: u64, tag_bits: u64) -> u64 {
    n * tag_bits
}
