// SPDX-License-Identifier: Apache-2.0

//! Data-frame correction for merging units.
//!
//! A merging unit samples a line signal 256 times per 20 ms frame, but the
//! samples lag the line by a measurement delay. This crate measures that
//! delay with a cycle-level counter model ([`mdc_sim`]) and removes it by
//! re-evaluating the frame with windowed Lagrange interpolation, in float or
//! in a division-free fixed-point datapath ([`interpolation`]).

pub mod characterization;
pub mod error;
pub mod fixed_point;
pub mod interpolation;
pub mod io;
pub mod mdc_sim;
pub mod signal_model;
pub mod weight_matrix;

pub use characterization::{CornerReport, CornerScenario, CostReport, SweepAxis, SweepReport};
pub use error::{DfcError, Result};
pub use fixed_point::{Fx, FxFormat, Rounding};
pub use interpolation::{
    correct_frame, Arithmetic, BoundaryPolicy, CorrectedFrame, InterpolationConfig, Quantization,
};
pub use mdc_sim::{
    mdc_step, run_scenario, ClockConfig, MdcInputs, MdcOutputs, MdcState, PeriodRecord, Scenario,
};
pub use signal_model::{DelayDistribution, MeasuredFrame, PdParams, TlSignalParams};
pub use weight_matrix::{build_weights, StepTime, WeightMatrix};
