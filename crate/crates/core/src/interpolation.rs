// SPDX-License-Identifier: Apache-2.0

//! Windowed Lagrange reconstruction and re-framing of measured data.
//!
//! The measured frame lags the line signal by `Δt`, so the actual value at
//! step `k` is the measured waveform evaluated at `k + Δt`. That waveform is
//! reconstructed from `degree + 1` consecutive samples around the evaluation
//! point using the product form of the Lagrange basis.
//!
//! Two arithmetic paths exist. The float path evaluates
//! `prod (x - x_m) / (x_i - x_m)` directly and serves as the oracle. The
//! fixed-point path never divides: each basis coefficient is a balanced
//! multiplier tree over sub-coefficients `Z_m = ((x + Δt) - x_m) * W[i][m]`,
//! where `W` is the precomputed reciprocal table.
//!
//! Window coordinates are local: the node nearest the window start is 0, so
//! one weight table for nodes `0..=degree` serves every window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{DfcError, Result};
use crate::fixed_point::{Fx, FxFormat, MAX_FRAC_BITS};
use crate::signal_model::{MeasuredFrame, SAMPLES_PER_FRAME};
use crate::weight_matrix::{delay_ticks_to_steps, StepTime, WeightMatrix};

/// Fraction bits of the multiplier/adder datapath under register-boundary quantization.
pub const DATAPATH_FRAC_BITS: u8 = MAX_FRAC_BITS;

const LAST_STEP: i64 = SAMPLES_PER_FRAME as i64 - 1;

type Scratch<T> = SmallVec<[T; 32]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    FloatReference,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Treat the frame as one period of a periodic signal.
    WrapPeriodic,
    /// Read past the frame end from the following frame; clamp when there is none.
    HoldNextFrame,
}

/// Where the register format's fraction count is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantization {
    /// Measured samples, the `x + Δt` time-tag register and the output hold
    /// `fmt` fraction bits; the weight ROM and arithmetic units run at
    /// [`DATAPATH_FRAC_BITS`].
    RegisterBoundary,
    /// Everything, including `W` and every multiplier output, is truncated to `fmt`.
    EveryOperation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationConfig {
    pub degree: usize,
    pub fmt: FxFormat,
    pub arithmetic: Arithmetic,
    pub boundary_policy: BoundaryPolicy,
    pub quantization: Quantization,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        InterpolationConfig {
            degree: 16,
            fmt: FxFormat::default(),
            arithmetic: Arithmetic::FixedPoint,
            boundary_policy: BoundaryPolicy::WrapPeriodic,
            quantization: Quantization::RegisterBoundary,
        }
    }
}

impl InterpolationConfig {
    pub fn float(degree: usize) -> Self {
        InterpolationConfig {
            degree,
            arithmetic: Arithmetic::FloatReference,
            ..Default::default()
        }
    }

    pub fn fixed(degree: usize, fmt: FxFormat) -> Self {
        InterpolationConfig {
            degree,
            fmt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 2 || self.degree + 1 > SAMPLES_PER_FRAME {
            return Err(DfcError::out_of_range("interpolation degree", self.degree));
        }
        Ok(())
    }

    /// Format of the weight table and the arithmetic units.
    pub fn datapath_format(&self) -> FxFormat {
        match self.quantization {
            Quantization::RegisterBoundary => {
                FxFormat::with_rounding(DATAPATH_FRAC_BITS, self.fmt.rounding())
                    .expect("valid width")
            }
            Quantization::EveryOperation => self.fmt,
        }
    }

    /// The weight table matching this configuration.
    pub fn weights(&self) -> Result<WeightMatrix> {
        self.validate()?;
        WeightMatrix::for_degree(self.degree, self.datapath_format())
    }

    fn check_weights(&self, wm: &WeightMatrix) -> Result<()> {
        self.validate()?;
        if wm.degree() != self.degree
            || wm.nodes()[0] != 0
            || !wm.nodes().windows(2).all(|p| p[1] == p[0] + 1)
        {
            return Err(DfcError::InvalidParams(format!(
                "weight matrix must cover local nodes 0..={}",
                self.degree
            )));
        }
        if self.arithmetic == Arithmetic::FixedPoint && wm.format() != self.datapath_format() {
            return Err(DfcError::FormatMismatch {
                lhs: wm.format(),
                rhs: self.datapath_format(),
            });
        }
        Ok(())
    }
}

/// Basis values for one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Absolute node positions; may lie outside `[0, 255]` for wrapped windows.
    pub window: Vec<i64>,
    pub ell: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedFrame {
    pub samples: Vec<f64>,
    pub source_delay_ticks: i64,
    pub delay: StepTime,
    pub config: InterpolationConfig,
    /// Set where the window wrapped around the frame or read past its end.
    pub boundary_flags: Vec<bool>,
}

/// `degree + 1` consecutive node indices centered on the nearest step and
/// clamped into `[0, 255]`.
pub fn select_window(x: StepTime, degree: usize) -> std::ops::Range<usize> {
    let start = clamped_start(x, degree, LAST_STEP);
    start as usize..start as usize + degree + 1
}

fn centered_start(x: StepTime, degree: usize) -> i64 {
    x.nearest_step() - (degree / 2) as i64
}

fn clamped_start(x: StepTime, degree: usize, last: i64) -> i64 {
    centered_start(x, degree).clamp(0, last - degree as i64)
}

/// Samples feeding one evaluation, with the evaluation point in local coordinates.
struct Resolved {
    start: i64,
    local: StepTime,
    values: Scratch<f64>,
    boundary: bool,
}

fn resolve(
    frame: &MeasuredFrame,
    next: Option<&MeasuredFrame>,
    x: StepTime,
    degree: usize,
    policy: BoundaryPolicy,
) -> Resolved {
    let past_end = x > StepTime::from_steps(LAST_STEP);
    let n = SAMPLES_PER_FRAME as i64;
    match policy {
        BoundaryPolicy::WrapPeriodic => {
            let xr = x.wrap_period();
            let start = centered_start(xr, degree);
            let ys = frame.samples();
            let values = (start..=start + degree as i64)
                .map(|p| ys[p.rem_euclid(n) as usize])
                .collect();
            Resolved {
                start,
                local: xr.offset_steps(-start),
                values,
                boundary: past_end || start < 0 || start + degree as i64 > LAST_STEP,
            }
        }
        BoundaryPolicy::HoldNextFrame => {
            let last = if next.is_some() { 2 * n - 1 } else { LAST_STEP };
            let start = clamped_start(x, degree, last);
            let values = (start..=start + degree as i64)
                .map(|p| match (p < n, next) {
                    (true, _) => frame.samples()[p as usize],
                    (false, Some(nf)) => nf.samples()[(p - n) as usize],
                    (false, None) => unreachable!("window clamped into the frame"),
                })
                .collect();
            Resolved {
                start,
                local: x.offset_steps(-start),
                values,
                boundary: past_end || start + degree as i64 > LAST_STEP,
            }
        }
    }
}

fn float_basis(u: f64, n: usize, i: usize) -> f64 {
    let xi = i as f64;
    let mut l = 1.0;
    for m in 0..n {
        if m != i {
            let xm = m as f64;
            l *= (u - xm) / (xi - xm);
        }
    }
    l
}

fn lagrange_float(local: StepTime, values: &[f64]) -> f64 {
    let u = local.to_f64();
    let n = values.len();
    let mut acc = 0.0;
    for (i, &y) in values.iter().enumerate() {
        acc += y * float_basis(u, n, i);
    }
    acc
}

/// Multiplies the factors pairwise left to right, layer by layer; an odd
/// trailing factor passes through to the next layer unchanged.
pub fn balanced_product(factors: &[Fx]) -> Result<Fx> {
    let Some(first) = factors.first() else {
        return Err(DfcError::InvalidParams("empty product".into()));
    };
    let mut layer: Scratch<Fx> = factors.iter().copied().collect();
    while layer.len() > 1 {
        let mut next: Scratch<Fx> = SmallVec::with_capacity(layer.len().div_ceil(2));
        for pair in layer.chunks(2) {
            next.push(match pair {
                [a, b] => a.checked_mul(*b)?,
                [a] => *a,
                _ => unreachable!(),
            });
        }
        layer = next;
    }
    Ok(layer.first().copied().unwrap_or(*first))
}

fn sub_coefficient_at(position: Fx, x_m: i64, w_im: Fx) -> Result<Fx> {
    position
        .checked_sub(Fx::from_int(x_m, position.format())?)?
        .checked_mul(w_im)
}

fn coefficient_at(position: Fx, i: usize, wm: &WeightMatrix) -> Result<Fx> {
    let n = wm.len();
    if i >= n {
        return Err(DfcError::out_of_range("coefficient index", i));
    }
    let mut z: Scratch<Fx> = SmallVec::with_capacity(n - 1);
    for (m, &x_m) in wm.nodes().iter().enumerate() {
        if m != i {
            z.push(sub_coefficient_at(
                position,
                x_m,
                wm.get(i, m).expect("off-diagonal"),
            )?);
        }
    }
    balanced_product(&z)
}

/// `Z = ((x + Δt) - x_m) * W[i][m]`: the sum is quantized into `w_im`'s format,
/// then one subtraction and one multiplication.
pub fn sub_coefficient(x: StepTime, delta: StepTime, x_m: i64, w_im: Fx) -> Result<Fx> {
    sub_coefficient_at((x + delta).to_fx(w_im.format())?, x_m, w_im)
}

/// `ℓ_i(x + Δt)` as the balanced product of its sub-coefficients over every
/// node of `wm` except `i`, in `wm`'s format.
pub fn coefficient(x: StepTime, delta: StepTime, i: usize, wm: &WeightMatrix) -> Result<Fx> {
    coefficient_at((x + delta).to_fx(wm.format())?, i, wm)
}

/// All basis coefficients of the fixed datapath for a local position.
pub fn coefficients_fixed(position: Fx, wm: &WeightMatrix) -> Result<Vec<Fx>> {
    (0..wm.len())
        .map(|i| coefficient_at(position, i, wm))
        .collect()
}

/// In-place layer-by-layer product, pairing exactly as [`balanced_product`].
fn product_raw(layer: &mut Scratch<i64>, dp: FxFormat) -> Result<i64> {
    while layer.len() > 1 {
        let len = layer.len();
        let half = len.div_ceil(2);
        for k in 0..half {
            layer[k] = if 2 * k + 1 < len {
                dp.mul_raw(layer[2 * k], layer[2 * k + 1])?
            } else {
                layer[2 * k]
            };
        }
        layer.truncate(half);
    }
    Ok(layer[0])
}

/// Same operations as [`coefficient_at`] summed against the samples, on raw
/// integers. The position differences are formed once and shared by every basis.
fn lagrange_fixed(
    local: StepTime,
    values: &[f64],
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<f64> {
    let reg = cfg.fmt;
    let dp = wm.format();
    let position = local.to_fx(reg)?.rescale(dp)?;
    let diffs: Scratch<i64> = wm
        .nodes()
        .iter()
        .map(|&x_m| Ok(position.checked_sub(Fx::from_int(x_m, dp)?)?.raw()))
        .collect::<Result<_>>()?;
    let mut acc: i64 = 0;
    let mut z: Scratch<i64> = SmallVec::with_capacity(diffs.len());
    for (i, &y) in values.iter().enumerate() {
        z.clear();
        for (m, &d) in diffs.iter().enumerate() {
            if m != i {
                z.push(dp.mul_raw(d, wm.get(i, m).expect("off-diagonal").raw())?);
            }
        }
        let ell = product_raw(&mut z, dp)?;
        let y = Fx::from_real(y, reg)?.rescale(dp)?.raw();
        acc = acc
            .checked_add(dp.mul_raw(y, ell)?)
            .ok_or(DfcError::Overflow { op: "add" })?;
    }
    Ok(Fx::from_raw(acc, dp).rescale(reg)?.to_f64())
}

fn evaluate(resolved: &Resolved, cfg: &InterpolationConfig, wm: &WeightMatrix) -> Result<f64> {
    match cfg.arithmetic {
        Arithmetic::FloatReference => Ok(lagrange_float(resolved.local, &resolved.values)),
        Arithmetic::FixedPoint => lagrange_fixed(resolved.local, &resolved.values, cfg, wm),
    }
}

/// `L(x) = Σ y_i ℓ_i(x)` over the window chosen for `x`.
pub fn interpolate(
    frame: &MeasuredFrame,
    x: StepTime,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<f64> {
    interpolate_with_next(frame, None, x, cfg, wm)
}

pub fn interpolate_with_next(
    frame: &MeasuredFrame,
    next: Option<&MeasuredFrame>,
    x: StepTime,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<f64> {
    cfg.check_weights(wm)?;
    evaluate(
        &resolve(frame, next, x, cfg.degree, cfg.boundary_policy),
        cfg,
        wm,
    )
}

/// Basis values at `x` as the configured arithmetic computes them.
pub fn coefficient_set(
    frame: &MeasuredFrame,
    x: StepTime,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<CoefficientSet> {
    cfg.check_weights(wm)?;
    let r = resolve(frame, None, x, cfg.degree, cfg.boundary_policy);
    let n = cfg.degree + 1;
    let ell = match cfg.arithmetic {
        Arithmetic::FloatReference => {
            let u = r.local.to_f64();
            (0..n).map(|i| float_basis(u, n, i)).collect()
        }
        Arithmetic::FixedPoint => {
            let position = r.local.to_fx(cfg.fmt)?.rescale(wm.format())?;
            coefficients_fixed(position, wm)?
                .into_iter()
                .map(Fx::to_f64)
                .collect()
        }
    };
    Ok(CoefficientSet {
        window: (r.start..r.start + n as i64).collect(),
        ell,
    })
}

/// Re-frames `frame` by the measured delay: `out[k] = L(k + Δt)`.
pub fn correct_frame(
    frame: &MeasuredFrame,
    delay_ticks: i64,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<CorrectedFrame> {
    let delta = delay_ticks_to_steps(delay_ticks)?;
    correct_frame_by(frame, None, delta, cfg, wm, false)
}

/// As [`correct_frame`], reading past the frame end from `next`.
pub fn correct_frame_with_next(
    frame: &MeasuredFrame,
    next: &MeasuredFrame,
    delay_ticks: i64,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<CorrectedFrame> {
    let delta = delay_ticks_to_steps(delay_ticks)?;
    correct_frame_by(frame, Some(next), delta, cfg, wm, false)
}

/// As [`correct_frame`], evaluating the 256 output samples on the rayon pool.
pub fn correct_frame_parallel(
    frame: &MeasuredFrame,
    delay_ticks: i64,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<CorrectedFrame> {
    let delta = delay_ticks_to_steps(delay_ticks)?;
    correct_frame_by(frame, None, delta, cfg, wm, true)
}

/// Re-frames by an arbitrary step shift, which need not be a tick multiple.
pub fn correct_frame_by_steps(
    frame: &MeasuredFrame,
    next: Option<&MeasuredFrame>,
    delta: StepTime,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
) -> Result<CorrectedFrame> {
    correct_frame_by(frame, next, delta, cfg, wm, false)
}

fn correct_frame_by(
    frame: &MeasuredFrame,
    next: Option<&MeasuredFrame>,
    delta: StepTime,
    cfg: &InterpolationConfig,
    wm: &WeightMatrix,
    parallel: bool,
) -> Result<CorrectedFrame> {
    cfg.check_weights(wm)?;
    if delta < StepTime::ZERO || delta >= StepTime::from_steps(SAMPLES_PER_FRAME as i64) {
        return Err(DfcError::out_of_range("delay (steps)", delta.to_f64()));
    }
    let one = |k: usize| -> Result<(f64, bool)> {
        let r = resolve(
            frame,
            next,
            StepTime::from_steps(k as i64) + delta,
            cfg.degree,
            cfg.boundary_policy,
        );
        Ok((evaluate(&r, cfg, wm)?, r.boundary))
    };
    let out: Vec<(f64, bool)> = if parallel {
        (0..SAMPLES_PER_FRAME)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?
    } else {
        (0..SAMPLES_PER_FRAME).map(one).collect::<Result<_>>()?
    };
    let (samples, boundary_flags) = out.into_iter().unzip();
    Ok(CorrectedFrame {
        samples,
        source_delay_ticks: delta.ns() / crate::signal_model::TICK_NS,
        delay: delta,
        config: *cfg,
        boundary_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{sample_frame, tl_amplitude, TlSignalParams, PERIOD_NS};
    use crate::weight_matrix::build_weights;
    use proptest::prelude::*;

    fn q12() -> FxFormat {
        FxFormat::new(12).unwrap()
    }

    fn sine_frame() -> MeasuredFrame {
        sample_frame(&TlSignalParams::unit_sine(), 0).unwrap()
    }

    fn hold_float(degree: usize) -> InterpolationConfig {
        InterpolationConfig {
            boundary_policy: BoundaryPolicy::HoldNextFrame,
            ..InterpolationConfig::float(degree)
        }
    }

    #[test]
    fn window_examples() {
        assert_eq!(
            select_window(StepTime::from_ps(128_300 * 78_125), 16),
            120..137
        );
        assert_eq!(select_window(StepTime::from_steps(2), 16), 0..17);
        assert_eq!(
            select_window(StepTime::from_ps(254_900 * 78_125), 16),
            239..256
        );
        assert_eq!(select_window(StepTime::from_steps(256), 16), 239..256);
        assert_eq!(select_window(StepTime::from_steps(100), 3), 99..103);
    }

    #[test]
    fn sub_coefficient_examples() {
        let w = WeightMatrix::for_degree(16, q12()).unwrap();
        let x = StepTime::from_steps(7);
        assert_eq!(
            sub_coefficient(x, StepTime::ZERO, 7, w.get(3, 7).unwrap())
                .unwrap()
                .raw(),
            0
        );
        // evaluating at node i: (x_i - x_m) / (x_i - x_m)
        let z = sub_coefficient(
            StepTime::from_steps(3),
            StepTime::ZERO,
            7,
            w.get(3, 7).unwrap(),
        )
        .unwrap();
        assert_eq!(z.raw(), 4096);
        let z = sub_coefficient(
            StepTime::from_steps(3),
            StepTime::ZERO,
            0,
            w.get(3, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(z.raw(), 4095);

        // x + Δt = 3.5, x_m = 2, w = 1/(4 - 2)
        let half = StepTime::from_ps(39_062_500);
        let z = sub_coefficient(StepTime::from_steps(3), half, 2, w.get(4, 2).unwrap()).unwrap();
        assert_eq!(z.raw(), 3072);
    }

    #[test]
    fn coefficient_examples() {
        let w = WeightMatrix::for_degree(16, q12()).unwrap();
        for i in 0..17 {
            let at_i = coefficient(StepTime::from_steps(i as i64), StepTime::ZERO, i, &w).unwrap();
            // each factor (i - m) * floor(1 / (i - m)) loses up to |i - m| LSBs
            let slack: usize = (0..17).map(|m| i.abs_diff(m)).sum::<usize>() + 16;
            assert!((at_i.to_f64() - 1.0).abs() <= slack as f64 * q12().resolution());
            for j in (0..17).filter(|&j| j != i) {
                let at_j =
                    coefficient(StepTime::from_steps(j as i64), StepTime::ZERO, i, &w).unwrap();
                assert_eq!(at_j.raw(), 0);
            }
        }
        // (0.5-1)(0.5-2) / ((0-1)(0-2)) = 0.375
        let w = build_weights(&[0, 1, 2], q12()).unwrap();
        let l0 = coefficient(StepTime::ZERO, StepTime::from_ps(39_062_500), 0, &w).unwrap();
        assert_eq!(l0.to_f64(), 0.375);
        assert_eq!(float_basis(0.5, 3, 0), 0.375);
    }

    #[test]
    fn raw_kernel_matches_fx_reference() {
        for (bits, q) in [
            (12, Quantization::RegisterBoundary),
            (12, Quantization::EveryOperation),
            (5, Quantization::RegisterBoundary),
        ] {
            let cfg = InterpolationConfig {
                quantization: q,
                ..InterpolationConfig::fixed(16, FxFormat::new(bits).unwrap())
            };
            let wm = cfg.weights().unwrap();
            let values: Vec<f64> = (0..17).map(|k| (0.37 * k as f64).sin()).collect();
            for ns in [0, 1_230, 39_063, 612_345, 1_249_990] {
                let local = StepTime::from_ns(ns);
                let pos = local.to_fx(cfg.fmt).unwrap().rescale(wm.format()).unwrap();
                let mut acc = Fx::zero(wm.format());
                for (i, ell) in coefficients_fixed(pos, &wm)
                    .unwrap()
                    .into_iter()
                    .enumerate()
                {
                    let y = Fx::from_real(values[i], cfg.fmt)
                        .unwrap()
                        .rescale(wm.format())
                        .unwrap();
                    acc = acc.checked_add(y.checked_mul(ell).unwrap()).unwrap();
                }
                let reference = acc.rescale(cfg.fmt).unwrap().to_f64();
                assert_eq!(
                    lagrange_fixed(local, &values, &cfg, &wm).unwrap(),
                    reference
                );
            }
        }
    }

    #[test]
    fn coefficient_order_does_not_matter() {
        let w = WeightMatrix::for_degree(16, FxFormat::new(32).unwrap()).unwrap();
        let pos = StepTime::from_ns(8 * 78_125 + 31_170)
            .to_fx(q12())
            .unwrap()
            .rescale(w.format())
            .unwrap();
        let forward = coefficients_fixed(pos, &w).unwrap();
        let mut backward: Vec<Fx> = (0..17)
            .rev()
            .map(|i| coefficient_at(pos, i, &w).unwrap())
            .collect();
        backward.reverse();
        assert_eq!(forward, backward);
        let parallel: Vec<Fx> = (0..17usize)
            .into_par_iter()
            .map(|i| coefficient_at(pos, i, &w).unwrap())
            .collect();
        assert_eq!(forward, parallel);
    }

    #[test]
    fn balanced_tree_shape() {
        let f = q12();
        let v: Vec<Fx> = [1.5, 0.75, 1.25, -0.5, 2.0]
            .iter()
            .map(|&x| Fx::from_real(x, f).unwrap())
            .collect();
        let ab = v[0].checked_mul(v[1]).unwrap();
        let cd = v[2].checked_mul(v[3]).unwrap();
        let expect = ab.checked_mul(cd).unwrap().checked_mul(v[4]).unwrap();
        assert_eq!(balanced_product(&v).unwrap(), expect);
        assert!(balanced_product(&[]).is_err());
    }

    #[test]
    fn float_nodes_are_exact() {
        let frame = sine_frame();
        for policy in [BoundaryPolicy::WrapPeriodic, BoundaryPolicy::HoldNextFrame] {
            let cfg = InterpolationConfig {
                boundary_policy: policy,
                ..InterpolationConfig::float(16)
            };
            let wm = cfg.weights().unwrap();
            for k in 0..256 {
                let v = interpolate(&frame, StepTime::from_steps(k), &cfg, &wm).unwrap();
                assert_eq!(v.to_bits(), frame.samples()[k as usize].to_bits());
            }
        }
    }

    #[test]
    fn fixed_nodes_within_quantization() {
        let frame = sine_frame();
        let cfg = InterpolationConfig::fixed(16, q12());
        let wm = cfg.weights().unwrap();
        for k in 0..256 {
            let v = interpolate(&frame, StepTime::from_steps(k), &cfg, &wm).unwrap();
            assert!((v - frame.samples()[k as usize]).abs() <= 17.0 * q12().resolution());
        }
    }

    #[test]
    fn partition_of_unity_float() {
        let frame = sine_frame();
        let cfg = InterpolationConfig::float(16);
        let wm = cfg.weights().unwrap();
        for ns in (0..PERIOD_NS).step_by(9_973) {
            let set = coefficient_set(&frame, StepTime::from_ns(ns), &cfg, &wm).unwrap();
            assert_eq!(set.window.len(), 17);
            assert!((set.ell.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_is_reproduced() {
        let p = |x: f64| 0.3 - 0.2 * (x / 255.0) + 0.9 * (x / 255.0).powi(3);
        let frame =
            MeasuredFrame::from_samples((0..256).map(|i| p(i as f64)).collect(), 0).unwrap();
        let cfg = hold_float(3);
        let wm = cfg.weights().unwrap();
        for ns in (0..PERIOD_NS).step_by(123_457) {
            let x = StepTime::from_ns(ns);
            let v = interpolate(&frame, x, &cfg, &wm).unwrap();
            assert!((v - p(x.to_f64())).abs() < 1e-9);
        }
    }

    #[test]
    fn sine_grid_error_float_degree_16() {
        let params = TlSignalParams::unit_sine();
        let frame = sine_frame();
        let cfg = InterpolationConfig::float(16);
        let wm = cfg.weights().unwrap();
        let worst = (0..PERIOD_NS)
            .step_by(1_010)
            .map(|ns| {
                (interpolate(&frame, StepTime::from_ns(ns), &cfg, &wm).unwrap()
                    - tl_amplitude(&params, ns))
                .abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.001, "{worst}");
    }

    #[test]
    fn wrong_weights_are_rejected() {
        let frame = sine_frame();
        let cfg = InterpolationConfig::fixed(16, q12());
        let wrong_fmt = WeightMatrix::for_degree(16, q12()).unwrap();
        assert!(matches!(
            interpolate(&frame, StepTime::ZERO, &cfg, &wrong_fmt),
            Err(DfcError::FormatMismatch { .. })
        ));
        let wrong_deg = InterpolationConfig::fixed(8, q12()).weights().unwrap();
        assert!(interpolate(&frame, StepTime::ZERO, &cfg, &wrong_deg).is_err());
        let shifted = build_weights(&(5..22).collect::<Vec<_>>(), cfg.datapath_format()).unwrap();
        assert!(interpolate(&frame, StepTime::ZERO, &cfg, &shifted).is_err());
        assert!(InterpolationConfig::float(1).validate().is_err());
        assert!(InterpolationConfig::float(256).validate().is_err());
    }

    #[test]
    fn zero_delay_is_identity_in_float() {
        let frame = sample_frame(&TlSignalParams::new(0.8, 50.0, 0.3).unwrap(), 12_340).unwrap();
        let cfg = InterpolationConfig::float(16);
        let wm = cfg.weights().unwrap();
        let out = correct_frame(&frame, 0, &cfg, &wm).unwrap();
        assert_eq!(out.samples, frame.samples());
        assert_eq!(out.source_delay_ticks, 0);
    }

    #[test]
    fn whole_step_shift() {
        let frame = sample_frame(&TlSignalParams::new(1.0, 50.0, 1.1).unwrap(), 0).unwrap();
        let cfg = InterpolationConfig::float(16);
        let wm = cfg.weights().unwrap();
        let out = correct_frame_by_steps(&frame, None, StepTime::from_steps(1), &cfg, &wm).unwrap();
        for k in 0..255 {
            assert_eq!(out.samples[k], frame.samples()[k + 1]);
        }
        assert!(out.boundary_flags[255]);
        // wraps to sample 0
        assert_eq!(out.samples[255], frame.samples()[0]);
    }

    #[test]
    fn delay_is_removed() {
        let params = TlSignalParams::new(1.0, 50.0, 0.7).unwrap();
        let truth = sample_frame(&params, 0).unwrap();
        let delayed = sample_frame(&params, 734_560).unwrap();
        for cfg in [
            InterpolationConfig::float(16),
            InterpolationConfig::default(),
        ] {
            let wm = cfg.weights().unwrap();
            let out = correct_frame(&delayed, 73_456, &cfg, &wm).unwrap();
            for k in 0..256 {
                if !out.boundary_flags[k] {
                    assert!((out.samples[k] - truth.samples()[k]).abs() < 0.001);
                }
            }
        }
    }

    #[test]
    fn hold_next_frame_reads_the_following_frame() {
        let params = TlSignalParams::new(1.0, 50.0, 0.2).unwrap();
        let delayed = sample_frame(&params, 500_000).unwrap();
        let cfg = hold_float(16);
        let wm = cfg.weights().unwrap();
        // a periodic signal's next frame equals this one
        let out = correct_frame_with_next(&delayed, &delayed, 50_000, &cfg, &wm).unwrap();
        let truth = sample_frame(&params, 0).unwrap();
        for k in 0..256 {
            assert!((out.samples[k] - truth.samples()[k]).abs() < 1e-9);
        }
        assert!(out.boundary_flags[255] && !out.boundary_flags[100]);
        let alone = correct_frame(&delayed, 50_000, &cfg, &wm).unwrap();
        assert!(alone.boundary_flags[250]);
    }

    #[test]
    fn parallel_matches_sequential() {
        let frame = sample_frame(&TlSignalParams::new(1.0, 50.0, -0.4).unwrap(), 333_330).unwrap();
        let cfg = InterpolationConfig::default();
        let wm = cfg.weights().unwrap();
        let a = correct_frame(&frame, 33_333, &cfg, &wm).unwrap();
        let b = correct_frame_parallel(&frame, 33_333, &cfg, &wm).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delay_range_checked() {
        let frame = sine_frame();
        let cfg = InterpolationConfig::float(16);
        let wm = cfg.weights().unwrap();
        assert!(correct_frame(&frame, 2_000_000, &cfg, &wm).is_err());
        assert!(correct_frame(&frame, -1, &cfg, &wm).is_err());
    }

    proptest! {
        #[test]
        fn fixed_tracks_float(ns in 0i64..PERIOD_NS) {
            let frame = sine_frame();
            let fc = InterpolationConfig::float(16);
            let xc = InterpolationConfig::fixed(16, q12());
            let (fw, xw) = (fc.weights().unwrap(), xc.weights().unwrap());
            let x = StepTime::from_ns(ns);
            let a = interpolate(&frame, x, &fc, &fw).unwrap();
            let b = interpolate(&frame, x, &xc, &xw).unwrap();
            prop_assert!((a - b).abs() < q12().resolution() * 18.0);
        }
    }
}
