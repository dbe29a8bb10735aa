//! Adaptive binary range coder for quantizer indices.
//!
//! Indices are binarized as a zero flag, a sign bit and the Exp-Golomb
//! (k = 0) code of `|q| - 1`. The zero flag, the sign and every unary
//! prefix bin have their own adaptive probability; Exp-Golomb suffix bits
//! are sent with equal probability. The coder itself is the carry-less
//! LZMA-style scheme: 32-bit range, 33-bit low with a cached byte and a
//! run of pending `0xFF` bytes.

use crate::error::{Error, Result};

const PROB_BITS: u32 = 15;
const PROB_ONE: u32 = 1 << PROB_BITS;
const TOP: u32 = 1 << 24;

/// Adaptation shift schedule: fast while a context is young, settling at
/// `MAX_SHIFT` once it has seen enough decisions.
const MIN_SHIFT: u32 = 4;
const MAX_SHIFT: u32 = 7;

/// Unary prefix bins with their own context; longer prefixes share the last.
pub const PREFIX_CONTEXTS: usize = 24;
/// Longest prefix accepted by the decoder.
const MAX_PREFIX: u32 = 31;

/// Probability that the next bit is 0, in units of `2^-15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitContext {
    p0: u16,
    seen: u16,
}

impl Default for BitContext {
    fn default() -> Self {
        BitContext {
            p0: (PROB_ONE / 2) as u16,
            seen: 0,
        }
    }
}

impl BitContext {
    #[inline]
    fn shift(&self) -> u32 {
        match self.seen {
            0..=15 => MIN_SHIFT,
            16..=63 => MIN_SHIFT + 1,
            64..=255 => MIN_SHIFT + 2,
            _ => MAX_SHIFT,
        }
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        let s = self.shift();
        let p = self.p0 as u32;
        let p = if bit {
            p - (p >> s)
        } else {
            p + ((PROB_ONE - p) >> s)
        };
        // keep both symbols representable
        self.p0 = p.clamp(1 << 5, PROB_ONE - (1 << 5)) as u16;
        self.seen = self.seen.saturating_add(1);
    }

    pub fn probability_of_zero(&self) -> f64 {
        self.p0 as f64 / PROB_ONE as f64
    }
}

/// Per-band adaptive state.
#[derive(Debug, Clone, Default)]
pub struct BandModel {
    zero: BitContext,
    sign: BitContext,
    prefix: [BitContext; PREFIX_CONTEXTS],
}

impl BandModel {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Signed-to-unsigned fold: `0, -1, 1, -2, 2, ...` → `0, 1, 2, 3, 4, ...`.
#[inline]
pub fn map_index(q: i32) -> u32 {
    if q >= 0 {
        (q as u32) << 1
    } else {
        ((-(q as i64)) as u32) * 2 - 1
    }
}

#[inline]
pub fn unmap_index(u: u32) -> i32 {
    if u & 1 == 0 {
        (u >> 1) as i32
    } else {
        -(((u >> 1) + 1) as i64) as i32
    }
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    pub fn encode_bit(&mut self, ctx: &mut BitContext, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.p0 as u32;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Equiprobable bits, most significant first.
    pub fn encode_bypass(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            self.range >>= 1;
            if (value >> i) & 1 == 1 {
                self.low += self.range as u64;
            }
            while self.range < TOP {
                self.range <<= 8;
                self.shift_low();
            }
        }
    }

    pub fn encode_index(&mut self, model: &mut BandModel, q: i32) {
        self.encode_bit(&mut model.zero, q == 0);
        if q == 0 {
            return;
        }
        self.encode_bit(&mut model.sign, q < 0);
        // Exp-Golomb k=0 of |q| - 1, i.e. binary of |q| behind a unary length
        let value = q.unsigned_abs();
        let n = 31 - value.leading_zeros();
        for i in 0..n {
            self.encode_bit(
                &mut model.prefix[(i as usize).min(PREFIX_CONTEXTS - 1)],
                true,
            );
        }
        self.encode_bit(
            &mut model.prefix[(n as usize).min(PREFIX_CONTEXTS - 1)],
            false,
        );
        self.encode_bypass(value & ((1 << n) - 1), n);
    }

    /// Information written so far, in whole bits.
    pub fn bits_written(&self) -> u64 {
        8 * (self.out.len() as u64 + self.cache_size - 1) + self.range.leading_zeros() as u64
    }

    /// Terminates the stream. Consumes the encoder, so it cannot be flushed twice.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        let mut d = RangeDecoder {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        if d.next_byte()? != 0 {
            return Err(Error::Corrupt(
                "range coder stream must start with 0".into(),
            ));
        }
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte()? as u32;
        }
        Ok(d)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| Error::Corrupt("payload ended prematurely".into()))?;
        self.pos += 1;
        Ok(b)
    }

    #[inline]
    fn normalize(&mut self) -> Result<()> {
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(())
    }

    #[inline]
    pub fn decode_bit(&mut self, ctx: &mut BitContext) -> Result<bool> {
        let bound = (self.range >> PROB_BITS) * ctx.p0 as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        self.normalize()?;
        Ok(bit)
    }

    pub fn decode_bypass(&mut self, bits: u32) -> Result<u32> {
        let mut value = 0u32;
        for _ in 0..bits {
            self.range >>= 1;
            let bit = if self.code >= self.range {
                self.code -= self.range;
                1
            } else {
                0
            };
            value = (value << 1) | bit;
            self.normalize()?;
        }
        Ok(value)
    }

    pub fn decode_index(&mut self, model: &mut BandModel) -> Result<i32> {
        if self.decode_bit(&mut model.zero)? {
            return Ok(0);
        }
        let negative = self.decode_bit(&mut model.sign)?;
        let mut n = 0u32;
        while self.decode_bit(&mut model.prefix[(n as usize).min(PREFIX_CONTEXTS - 1)])? {
            n += 1;
            if n > MAX_PREFIX - 1 {
                return Err(Error::Corrupt("Exp-Golomb prefix too long".into()));
            }
        }
        let value = (1u32 << n) | self.decode_bypass(n)?;
        if value > i32::MAX as u32 {
            return Err(Error::Corrupt("index out of range".into()));
        }
        Ok(if negative {
            -(value as i32)
        } else {
            value as i32
        })
    }

    /// Bytes consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }
}
