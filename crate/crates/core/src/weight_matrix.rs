// SPDX-License-Identifier: Apache-2.0

//! Step-unit time tags and the precomputed reciprocal node-difference table.
//!
//! A time tag in nanoseconds maps to steps by dividing by the 78,125 ns
//! sampling period, so `[0, 20 ms]` covers `[0, 256]` steps. [`StepTime`] keeps
//! an integer numerator, which makes the mapping exact and linear.
//!
//! The weight table holds `1 / (x_i - x_m)` for every ordered node pair. It is
//! the only place the interpolator needs a division, and it is built once.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{DfcError, Result};
use crate::fixed_point::{Fx, FxFormat};
use crate::signal_model::{PERIOD_NS, SAMPLE_PERIOD_NS, TICK_NS};

/// Ticks per 20 ms period at 100 MHz.
pub const TICKS_PER_PERIOD: i64 = PERIOD_NS / TICK_NS;

/// Picoseconds per step. Picoseconds keep half and quarter steps exact.
const STEP_PS: i64 = SAMPLE_PERIOD_NS * 1000;

/// A position in step units, stored as the exact rational `ps / 78,125,000`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct StepTime {
    ps: i64,
}

impl StepTime {
    pub const ZERO: StepTime = StepTime { ps: 0 };

    pub fn from_ns(ns: i64) -> Self {
        StepTime { ps: ns * 1000 }
    }

    pub fn from_ps(ps: i64) -> Self {
        StepTime { ps }
    }

    /// Whole steps; also the hook for synthetic shifts that are not tick multiples.
    pub fn from_steps(steps: i64) -> Self {
        StepTime {
            ps: steps * STEP_PS,
        }
    }

    pub fn ps(self) -> i64 {
        self.ps
    }

    /// Nanoseconds, truncated toward zero.
    pub fn ns(self) -> i64 {
        self.ps / 1000
    }

    pub fn to_f64(self) -> f64 {
        self.ps as f64 / STEP_PS as f64
    }

    /// Quantizes into a fixed-point register, rounding per `format`.
    pub fn to_fx(self, format: FxFormat) -> Result<Fx> {
        Fx::from_ratio(self.ps as i128, STEP_PS as i128, format)
    }

    /// Nearest whole step, halves rounding up.
    pub fn nearest_step(self) -> i64 {
        (2 * self.ps + STEP_PS).div_euclid(2 * STEP_PS)
    }

    pub fn is_whole_step(self) -> bool {
        self.ps.rem_euclid(STEP_PS) == 0
    }

    /// Shifts by a whole number of steps.
    pub fn offset_steps(self, steps: i64) -> Self {
        StepTime {
            ps: self.ps + steps * STEP_PS,
        }
    }

    /// Reduces into one period, `[0, 256)` steps.
    pub fn wrap_period(self) -> Self {
        StepTime {
            ps: self.ps.rem_euclid(PERIOD_NS * 1000),
        }
    }
}

impl Add for StepTime {
    type Output = StepTime;

    fn add(self, rhs: StepTime) -> StepTime {
        StepTime {
            ps: self.ps + rhs.ps,
        }
    }
}

/// Maps a time tag in `[0, 20,000,000]` ns onto `[0, 256]` steps.
pub fn map_time_tag(t_ns: i64) -> Result<StepTime> {
    if !(0..=PERIOD_NS).contains(&t_ns) {
        return Err(DfcError::out_of_range("time tag (ns)", t_ns));
    }
    Ok(StepTime::from_ns(t_ns))
}

/// Converts a measured delay in 10 ns clock ticks to steps.
pub fn delay_ticks_to_steps(ticks: i64) -> Result<StepTime> {
    if !(0..TICKS_PER_PERIOD).contains(&ticks) {
        return Err(DfcError::out_of_range("delay ticks", ticks));
    }
    Ok(StepTime::from_ns(ticks * TICK_NS))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    nodes: Vec<i64>,
    w: Vec<Fx>,
    format: FxFormat,
}

/// Builds `W[i][m] = 1/(x_i - x_m)` from the exact rational, quantized once.
pub fn build_weights(nodes: &[i64], format: FxFormat) -> Result<WeightMatrix> {
    if nodes.len() < 2 {
        return Err(DfcError::InvalidParams(
            "at least two interpolation nodes are required".into(),
        ));
    }
    if let Some(bad) = nodes.windows(2).position(|p| p[1] <= p[0]) {
        return Err(DfcError::DuplicateNode { index: bad + 1 });
    }
    let n = nodes.len();
    let mut w = Vec::with_capacity(n * n);
    for &xi in nodes {
        for &xm in nodes {
            w.push(if xi == xm {
                Fx::zero(format)
            } else {
                Fx::from_ratio(1, (xi - xm) as i128, format)?
            });
        }
    }
    Ok(WeightMatrix {
        nodes: nodes.to_vec(),
        w,
        format,
    })
}

impl WeightMatrix {
    /// Nodes `0..=degree`, the local window coordinates used by the interpolator.
    pub fn for_degree(degree: usize, format: FxFormat) -> Result<Self> {
        let nodes: Vec<i64> = (0..=degree as i64).collect();
        build_weights(&nodes, format)
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn format(&self) -> FxFormat {
        self.format
    }

    /// `None` on the diagonal, which has no meaning.
    pub fn get(&self, i: usize, m: usize) -> Option<Fx> {
        let n = self.nodes.len();
        if i == m || i >= n || m >= n {
            return None;
        }
        Some(self.w[i * n + m])
    }

    /// Off-diagonal entries in row-major order as `(i, m, w)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Fx)> + '_ {
        let n = self.nodes.len();
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&m| m != i)
                .map(move |m| (i, m, self.w[i * n + m]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q12() -> FxFormat {
        FxFormat::new(12).unwrap()
    }

    #[test]
    fn time_tag_examples() {
        assert_eq!(map_time_tag(0).unwrap().to_f64(), 0.0);
        assert_eq!(map_time_tag(78_125).unwrap().to_f64(), 1.0);
        assert_eq!(map_time_tag(20_000_000).unwrap().to_f64(), 256.0);
        assert!(map_time_tag(-1).is_err());
        assert!(map_time_tag(20_000_001).is_err());
    }

    #[test]
    fn tick_examples() {
        assert_eq!(delay_ticks_to_steps(0).unwrap(), StepTime::ZERO);
        let s = delay_ticks_to_steps(7812).unwrap();
        assert_eq!(s.ns(), 78_120);
        assert_eq!(s.to_f64(), 78_120.0 / 78_125.0);
        assert!((s.to_f64() - 0.99994).abs() < 1e-5);
        assert_eq!(
            delay_ticks_to_steps(1_000_000).unwrap(),
            StepTime::from_steps(128)
        );
        assert!(delay_ticks_to_steps(2_000_000).is_err());
        assert!(delay_ticks_to_steps(-1).is_err());
    }

    #[test]
    fn rounding_to_nearest_step() {
        assert_eq!(StepTime::from_ns(128 * 78_125 + 23_437).nearest_step(), 128);
        assert_eq!(StepTime::from_ns(39_062).nearest_step(), 0);
        assert_eq!(StepTime::from_ns(39_063).nearest_step(), 1);
        assert_eq!(StepTime::from_ns(-39_063).nearest_step(), -1);
        assert_eq!(StepTime::from_ps(39_062_500).nearest_step(), 1);
        assert_eq!(
            StepTime::from_steps(300).wrap_period(),
            StepTime::from_steps(44)
        );
    }

    #[test]
    fn step_register_quantization() {
        // 39,063 ns is just past half a step; 7812 ticks is just short of one
        assert_eq!(StepTime::from_ns(39_063).to_fx(q12()).unwrap().raw(), 2048);
        assert_eq!(
            delay_ticks_to_steps(7812)
                .unwrap()
                .to_fx(q12())
                .unwrap()
                .raw(),
            4095
        );
    }

    #[test]
    fn weight_examples() {
        let w = build_weights(&[0, 1], FxFormat::new(0).unwrap()).unwrap();
        assert_eq!(w.get(0, 1).unwrap().to_f64(), -1.0);
        assert_eq!(w.get(1, 0).unwrap().to_f64(), 1.0);
        assert!(w.get(0, 0).is_none());

        let w = build_weights(&[0, 1, 2], q12()).unwrap();
        assert_eq!(w.get(0, 2).unwrap().to_f64(), -0.5);

        let w = WeightMatrix::for_degree(16, q12()).unwrap();
        assert_eq!(w.get(0, 16).unwrap().raw(), -256);
        assert_eq!(w.entries().count(), 17 * 16);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        assert!(matches!(
            build_weights(&[0, 1, 1], q12()),
            Err(DfcError::DuplicateNode { index: 2 })
        ));
        assert!(build_weights(&[3, 2], q12()).is_err());
        assert!(build_weights(&[3], q12()).is_err());
    }

    proptest! {
        #[test]
        fn antisymmetry_skew_bound(start in -300i64..300, gaps in proptest::collection::vec(1i64..7, 1..17), bits in 0u8..=32) {
            let mut nodes = vec![start];
            for g in gaps { nodes.push(nodes.last().unwrap() + g); }
            let f = FxFormat::new(bits).unwrap();
            let w = build_weights(&nodes, f).unwrap();
            for (i, m, wim) in w.entries() {
                let skew = wim.checked_add(w.get(m, i).unwrap()).unwrap();
                prop_assert!(skew.to_f64().abs() <= f.resolution());
            }
        }

        #[test]
        fn translation_invariance(shift in -1000i64..1000, degree in 1usize..24) {
            let base: Vec<i64> = (0..=degree as i64).collect();
            let moved: Vec<i64> = base.iter().map(|x| x + shift).collect();
            let a = build_weights(&base, q12()).unwrap();
            let b = build_weights(&moved, q12()).unwrap();
            prop_assert!(a.entries().zip(b.entries()).all(|(p, q)| p == q));
        }

        #[test]
        fn time_tag_mapping_is_linear(a in 0i64..=10_000_000, b in 0i64..=10_000_000) {
            let sum = map_time_tag(a).unwrap() + map_time_tag(b).unwrap();
            prop_assert_eq!(sum, map_time_tag(a + b).unwrap());
            prop_assert!(map_time_tag(a).unwrap() <= map_time_tag(a.max(b)).unwrap());
        }
    }
}
