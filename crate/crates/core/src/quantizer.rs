//! Uniform scalar quantization with odd step sizes.

use crate::error::{Error, Result};

/// Largest step representable by the rate table and the one-byte side channel.
pub const MAX_STEP: u16 = 511;

/// An odd quantization step `Q` in `[1, 511]`; `delta = (Q - 1) / 2` is the
/// per-sample error bound and the rate-table column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepSize(u16);

impl StepSize {
    pub const LOSSLESS: StepSize = StepSize(1);

    pub fn new(q: u16) -> Result<Self> {
        if q % 2 == 1 && q <= MAX_STEP {
            Ok(StepSize(q))
        } else {
            Err(Error::InvalidArgument(format!(
                "step size must be odd and in [1, {MAX_STEP}], got {q}"
            )))
        }
    }

    pub fn from_delta(delta: u8) -> Self {
        StepSize(2 * delta as u16 + 1)
    }

    #[inline]
    pub fn get(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn delta(self) -> u8 {
        ((self.0 - 1) / 2) as u8
    }

    /// Next larger step; callers guard against exceeding their cap.
    #[inline]
    pub(crate) fn up(self) -> Self {
        debug_assert!(self.0 + 2 <= MAX_STEP);
        StepSize(self.0 + 2)
    }

    #[inline]
    pub(crate) fn down(self) -> Self {
        debug_assert!(self.0 >= 3);
        StepSize(self.0 - 2)
    }
}

/// `sgn(r) * floor((|r| + delta) / Q)`.
#[inline]
pub fn quantize(residual: i32, step: StepSize) -> i32 {
    let q = step.0 as i32;
    let mag = (residual.abs() + (q - 1) / 2) / q;
    if residual < 0 {
        -mag
    } else {
        mag
    }
}

#[inline]
pub fn dequantize(index: i32, step: StepSize) -> i32 {
    index * step.0 as i32
}
