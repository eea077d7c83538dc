// SPDX-License-Identifier: Apache-2.0

//! Two's-complement fixed-point scalars in a 64-bit container.
//!
//! A value is `raw / 2^frac_bits`. Multiplication goes through a 128-bit
//! product and a right shift by the format's fraction count; there is no
//! division anywhere in the arithmetic. Every operation checks for container
//! overflow and refuses to mix formats.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DfcError, Result};

/// Width of the two's-complement container.
pub const CONTAINER_BITS: u32 = 64;

/// Largest supported fraction count.
pub const MAX_FRAC_BITS: u8 = 32;

/// How low bits are discarded when a result is narrowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Truncate toward negative infinity (drop the low bits).
    #[default]
    Floor,
    /// Round half up.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxFormat {
    frac_bits: u8,
    #[serde(default)]
    rounding: Rounding,
}

impl FxFormat {
    pub fn new(frac_bits: u8) -> Result<Self> {
        Self::with_rounding(frac_bits, Rounding::Floor)
    }

    pub fn with_rounding(frac_bits: u8, rounding: Rounding) -> Result<Self> {
        if frac_bits > MAX_FRAC_BITS {
            return Err(DfcError::out_of_range("frac_bits", frac_bits));
        }
        Ok(FxFormat {
            frac_bits,
            rounding,
        })
    }

    pub fn frac_bits(self) -> u8 {
        self.frac_bits
    }

    pub fn rounding(self) -> Rounding {
        self.rounding
    }

    /// Weight of one least significant bit, `2^-frac_bits`.
    pub fn resolution(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    fn scale(self) -> f64 {
        (self.frac_bits as f64).exp2()
    }

    /// Raw-level product with the same rounding and overflow rules as [`Fx::checked_mul`].
    pub(crate) fn mul_raw(self, a: i64, b: i64) -> Result<i64> {
        to_container(
            self.narrow(a as i128 * b as i128, self.frac_bits as u32),
            "mul",
        )
    }

    /// Narrows `value` (carrying `shift` extra fraction bits) by `shift` bits.
    fn narrow(self, value: i128, shift: u32) -> i128 {
        if shift == 0 {
            return value;
        }
        match self.rounding {
            Rounding::Floor => value >> shift,
            Rounding::Nearest => (value + (1i128 << (shift - 1))) >> shift,
        }
    }
}

impl Default for FxFormat {
    /// Twelve fraction bits, truncating.
    fn default() -> Self {
        FxFormat {
            frac_bits: 12,
            rounding: Rounding::Floor,
        }
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.rounding {
            Rounding::Floor => "floor",
            Rounding::Nearest => "nearest",
        };
        write!(
            f,
            "Q{}.{} ({mode})",
            CONTAINER_BITS - self.frac_bits as u32,
            self.frac_bits
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fx {
    raw: i64,
    format: FxFormat,
}

fn to_container(value: i128, op: &'static str) -> Result<i64> {
    i64::try_from(value).map_err(|_| DfcError::Overflow { op })
}

impl Fx {
    pub fn from_raw(raw: i64, format: FxFormat) -> Self {
        Fx { raw, format }
    }

    pub fn zero(format: FxFormat) -> Self {
        Fx { raw: 0, format }
    }

    pub fn one(format: FxFormat) -> Self {
        Fx {
            raw: 1i64 << format.frac_bits,
            format,
        }
    }

    pub fn from_int(value: i64, format: FxFormat) -> Result<Self> {
        let raw = (value as i128) << format.frac_bits;
        Ok(Fx {
            raw: to_container(raw, "from_int")?,
            format,
        })
    }

    /// Quantizes a real. Under `Floor` the error lies in `[0, 2^-frac_bits)`.
    pub fn from_real(value: f64, format: FxFormat) -> Result<Self> {
        if !value.is_finite() {
            return Err(DfcError::Overflow { op: "from_real" });
        }
        // Scaling by a power of two is exact, so only the final rounding matters.
        let scaled = value * format.scale();
        let q = match format.rounding {
            Rounding::Floor => scaled.floor(),
            Rounding::Nearest => (scaled + 0.5).floor(),
        };
        // 2^63 is exactly representable; anything at or past it does not fit.
        const LIMIT: f64 = 9_223_372_036_854_775_808.0;
        if !(-LIMIT..LIMIT).contains(&q) {
            return Err(DfcError::Overflow { op: "from_real" });
        }
        Ok(Fx {
            raw: q as i64,
            format,
        })
    }

    /// Quantizes the exact rational `num / den`.
    ///
    /// This is the only place a division by a non-constant happens, and it is
    /// meant for build-time tables (weights, time-tag registers), never for the
    /// interpolation datapath.
    pub fn from_ratio(num: i128, den: i128, format: FxFormat) -> Result<Self> {
        if den == 0 {
            return Err(DfcError::InvalidParams("zero denominator".into()));
        }
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let scaled = num
            .checked_mul(1i128 << format.frac_bits)
            .ok_or(DfcError::Overflow { op: "from_ratio" })?;
        let q = match format.rounding {
            Rounding::Floor => scaled.div_euclid(den),
            Rounding::Nearest => (2 * scaled + den).div_euclid(2 * den),
        };
        Ok(Fx {
            raw: to_container(q, "from_ratio")?,
            format,
        })
    }

    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn format(self) -> FxFormat {
        self.format
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / self.format.scale()
    }

    fn check(self, other: Fx) -> Result<()> {
        if self.format != other.format {
            return Err(DfcError::FormatMismatch {
                lhs: self.format,
                rhs: other.format,
            });
        }
        Ok(())
    }

    pub fn checked_add(self, rhs: Fx) -> Result<Fx> {
        self.check(rhs)?;
        let raw = self
            .raw
            .checked_add(rhs.raw)
            .ok_or(DfcError::Overflow { op: "add" })?;
        Ok(Fx { raw, ..self })
    }

    pub fn checked_sub(self, rhs: Fx) -> Result<Fx> {
        self.check(rhs)?;
        let raw = self
            .raw
            .checked_sub(rhs.raw)
            .ok_or(DfcError::Overflow { op: "sub" })?;
        Ok(Fx { raw, ..self })
    }

    /// `floor(a * b / 2^frac_bits)` (or half-up under `Nearest`) via a 128-bit product.
    pub fn checked_mul(self, rhs: Fx) -> Result<Fx> {
        self.check(rhs)?;
        let raw = self.format.mul_raw(self.raw, rhs.raw)?;
        Ok(Fx { raw, ..self })
    }

    pub fn checked_neg(self) -> Result<Fx> {
        let raw = self
            .raw
            .checked_neg()
            .ok_or(DfcError::Overflow { op: "neg" })?;
        Ok(Fx { raw, ..self })
    }

    /// Moves the value into another format. Widening is exact; narrowing
    /// discards low bits using the target format's rounding.
    pub fn rescale(self, target: FxFormat) -> Result<Fx> {
        let from = self.format.frac_bits as u32;
        let to = target.frac_bits as u32;
        let raw = if to >= from {
            to_container((self.raw as i128) << (to - from), "rescale")?
        } else {
            to_container(target.narrow(self.raw as i128, from - to), "rescale")?
        };
        Ok(Fx {
            raw,
            format: target,
        })
    }
}

impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
