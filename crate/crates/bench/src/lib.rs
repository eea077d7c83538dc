// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use dfc_core::signal_model::{draw_delay, sample_frame};
use dfc_core::{DelayDistribution, MeasuredFrame, Result, TlSignalParams};

/// Frames with seeded delays of up to 1 ms, paired with the delay in ticks.
pub fn delayed_frames(count: usize) -> Result<Vec<(MeasuredFrame, i64)>> {
    let dist = DelayDistribution {
        mean_ns: 500_000.0,
        sigma_ns: 200_000.0,
        clip_ns: 1_000_000,
    };
    (0..count as u64)
        .map(|seed| {
            let delay_ns = draw_delay(&dist, seed)?;
            Ok((
                sample_frame(&TlSignalParams::unit_sine(), delay_ns)?,
                delay_ns / 10,
            ))
        })
        .collect()
}
