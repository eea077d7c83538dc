// SPDX-License-Identifier: Apache-2.0

//! Cycle-level model of the measurement-delay computation datapath.
//!
//! One call to [`mdc_step`] is one rising clock edge. Within an edge the
//! blocks are evaluated in a fixed order:
//!
//! 1. 1PPS: the sync flip-flop samples `sync_counter == sp_per_second` and the
//!    counter resets.
//! 2. Primary counter: counts while the latch is set. Reaching a full period
//!    raises the carry (data lost), clears the latch and resets the counter.
//! 3. Sampling-checkpoint generator: counts edges and fires SP every
//!    `ticks_per_period`. SP closes the running period, sets the latch, resets
//!    the primary counter and bumps the sync counter.
//! 4. DRDY: while the latch is set, captures the primary counter into the
//!    delay register, clears the latch and resets the counter.
//!
//! A DRDY on the SP edge therefore measures 0, and one `d` edges later measures `d`.

use serde::{Deserialize, Serialize};

use crate::error::{DfcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub freq_hz: u64,
    pub tick_ns: u64,
    pub ticks_per_period: u64,
    pub sp_per_second: u64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            freq_hz: 100_000_000,
            tick_ns: 10,
            ticks_per_period: 2_000_000,
            sp_per_second: 50,
        }
    }
}

impl ClockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ticks_per_period < 2 || self.sp_per_second == 0 {
            return Err(DfcError::InvalidParams(
                "clock needs a period of at least two ticks".into(),
            ));
        }
        if self.tick_ns * self.ticks_per_period != 20_000_000 {
            return Err(DfcError::InvalidParams(
                "tick_ns * ticks_per_period must be 20 ms".into(),
            ));
        }
        if self.sp_per_second * self.ticks_per_period != self.freq_hz {
            return Err(DfcError::InvalidParams(
                "sp_per_second * ticks_per_period must equal freq_hz".into(),
            ));
        }
        Ok(())
    }

    pub fn ticks_per_second(&self) -> u64 {
        self.freq_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MdcState {
    pub scg_counter: u64,
    pub primary_counter: u64,
    pub latch_q: bool,
    /// Saturates one past `sp_per_second`, so a surplus SP stays visible.
    pub sync_counter: u64,
    pub delay_register: u64,
    pub delay_captured: bool,
    pub data_lost_ff: bool,
    pub sync_status_ff: bool,
    pub tick_index: u64,
}

impl MdcState {
    /// Power-on state; the first SP fires on tick 0.
    pub fn new(clk: &ClockConfig) -> Self {
        MdcState {
            scg_counter: clk.ticks_per_period - 1,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MdcInputs {
    pub drdy: bool,
    pub pps: bool,
    /// Fault injection: emit an SP on this edge without disturbing the SCG count.
    pub extra_sp: bool,
    /// Fault injection: swallow the SP the SCG would fire on this edge.
    pub suppress_sp: bool,
}

/// On an SP edge the delay and data-lost fields describe the period that just closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MdcOutputs {
    pub measurement_delay_ticks: u64,
    pub delay_valid: bool,
    pub data_lost: bool,
    pub sync_status_ok: bool,
    pub sp_fired: bool,
}

pub fn mdc_step(state: MdcState, inputs: MdcInputs, clk: &ClockConfig) -> (MdcState, MdcOutputs) {
    let mut s = state;
    s.tick_index += 1;

    if inputs.pps {
        s.sync_status_ff = s.sync_counter == clk.sp_per_second;
        s.sync_counter = 0;
    }

    if s.latch_q {
        s.primary_counter += 1;
        if s.primary_counter >= clk.ticks_per_period {
            s.data_lost_ff = true;
            s.latch_q = false;
            s.primary_counter = 0;
        }
    }

    s.scg_counter += 1;
    let natural = s.scg_counter >= clk.ticks_per_period;
    if natural {
        s.scg_counter = 0;
    }
    let sp = (natural && !inputs.suppress_sp) || inputs.extra_sp;

    let mut out = MdcOutputs {
        measurement_delay_ticks: s.delay_register,
        delay_valid: s.delay_captured,
        data_lost: s.data_lost_ff,
        sync_status_ok: s.sync_status_ff,
        sp_fired: sp,
    };

    if sp {
        s.data_lost_ff = false;
        s.delay_captured = false;
        s.latch_q = true;
        s.primary_counter = 0;
        s.sync_counter = (s.sync_counter + 1).min(clk.sp_per_second + 1);
    }

    if inputs.drdy && s.latch_q {
        s.delay_register = s.primary_counter;
        s.delay_captured = true;
        s.latch_q = false;
        s.primary_counter = 0;
    }

    if !sp {
        out.measurement_delay_ticks = s.delay_register;
        out.delay_valid = s.delay_captured;
        out.data_lost = s.data_lost_ff;
    }
    (s, out)
}

/// Tick schedules for a replay. All lists must be strictly increasing and below `n_ticks`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub drdy_ticks: Vec<u64>,
    pub pps_ticks: Vec<u64>,
    pub n_ticks: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_sp_ticks: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suppressed_sp_ticks: Vec<u64>,
    #[serde(default)]
    pub clock: ClockConfig,
}

impl Scenario {
    /// One DRDY per period at the given offset after that period's SP.
    pub fn periodic(offsets: &[Option<u64>], clock: ClockConfig) -> Self {
        let t = clock.ticks_per_period;
        Scenario {
            drdy_ticks: offsets
                .iter()
                .enumerate()
                .filter_map(|(p, d)| d.map(|d| p as u64 * t + d))
                .collect(),
            n_ticks: offsets.len() as u64 * t,
            clock,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.clock.validate()?;
        for (name, list) in [
            ("drdy_ticks", &self.drdy_ticks),
            ("pps_ticks", &self.pps_ticks),
            ("extra_sp_ticks", &self.extra_sp_ticks),
            ("suppressed_sp_ticks", &self.suppressed_sp_ticks),
        ] {
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(DfcError::Schedule(format!(
                    "{name} must be strictly increasing"
                )));
            }
            if let Some(&last) = list.last() {
                if last >= self.n_ticks {
                    return Err(DfcError::Schedule(format!(
                        "{name} entry {last} lies beyond n_ticks = {}",
                        self.n_ticks
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of one SP-to-SP period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: u64,
    /// `None` when no DRDY was captured in the period.
    pub delay_ticks: Option<u64>,
    pub data_lost: bool,
    pub sync_ok: bool,
}

struct Cursor<'a> {
    ticks: &'a [u64],
    at: usize,
}

impl Cursor<'_> {
    fn hit(&mut self, tick: u64) -> bool {
        if self.ticks.get(self.at) == Some(&tick) {
            self.at += 1;
            true
        } else {
            false
        }
    }
}

/// Replays the schedules and returns one record per completed period.
///
/// A period closes on the next SP. When the run ends exactly where the SCG
/// would fire next, one quiet edge is simulated so the last period closes too.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<PeriodRecord>> {
    scenario.validate()?;
    let clk = &scenario.clock;
    let mut drdy = Cursor {
        ticks: &scenario.drdy_ticks,
        at: 0,
    };
    let mut pps = Cursor {
        ticks: &scenario.pps_ticks,
        at: 0,
    };
    let mut extra = Cursor {
        ticks: &scenario.extra_sp_ticks,
        at: 0,
    };
    let mut suppress = Cursor {
        ticks: &scenario.suppressed_sp_ticks,
        at: 0,
    };

    let mut state = MdcState::new(clk);
    let mut records = Vec::new();
    let mut opened = false;
    let mut record = |out: &MdcOutputs, opened: &mut bool| {
        if out.sp_fired {
            if *opened {
                records.push(PeriodRecord {
                    period: records.len() as u64,
                    delay_ticks: out.delay_valid.then_some(out.measurement_delay_ticks),
                    data_lost: out.data_lost,
                    sync_ok: out.sync_status_ok,
                });
            }
            *opened = true;
        }
    };

    for tick in 0..scenario.n_ticks {
        let inputs = MdcInputs {
            drdy: drdy.hit(tick),
            pps: pps.hit(tick),
            extra_sp: extra.hit(tick),
            suppress_sp: suppress.hit(tick),
        };
        let (next, out) = mdc_step(state, inputs, clk);
        state = next;
        record(&out, &mut opened);
    }
    if state.scg_counter == clk.ticks_per_period - 1 {
        let (_, out) = mdc_step(state, MdcInputs::default(), clk);
        record(&out, &mut opened);
    }
    Ok(records)
}

/// Closed loop for a single period: DRDY `delay_ticks` after SP, returns the captured delay.
pub fn recover_delay(delay_ticks: u64, clk: ClockConfig) -> Result<Option<u64>> {
    if delay_ticks >= clk.ticks_per_period {
        return Err(DfcError::out_of_range("delay ticks", delay_ticks));
    }
    let records = run_scenario(&Scenario::periodic(&[Some(delay_ticks)], clk))?;
    Ok(records.first().and_then(|r| r.delay_ticks))
}
