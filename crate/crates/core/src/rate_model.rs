//! Entropy of a uniformly quantized Laplacian source and its rate table.
//!
//! With scale `m` (so `Λ = 1/m`) and step `Q`, the entropy in bits per
//! sample of the midtread-quantized source is
//!
//! ```text
//! R(m, Q) = -(1 - a) log2(1 - a)
//!           - a / ln 2 * [ ln((1 - a²) / 2) + Q/(2m) - Q / (m (1 - a²)) ]
//! ```
//!
//! where `a = exp(-Q / 2m)`. The table stores `round(1000 R)` as `u16`
//! indexed by `m ∈ [0, 1023]` and `δ = (Q - 1) / 2 ∈ [0, 255]`, so the coding
//! loop never touches floating point.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::quantizer::StepSize;

pub const LUT_MEDIANS: usize = 1024;
pub const LUT_DELTAS: usize = 256;
/// Size of the flat little-endian table blob in bytes.
pub const LUT_BLOB_LEN: usize = LUT_MEDIANS * LUT_DELTAS * 2;

/// Rate of the quantized Laplacian source in bits per sample.
pub fn eval_rate(m: f64, q: f64) -> Result<f64> {
    if !(m > 0.0 && q > 0.0 && m.is_finite() && q.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate model needs positive finite m and Q, got m={m}, Q={q}"
        )));
    }
    let half = q / (2.0 * m);
    let full = q / m;
    let a = (-half).exp();
    // 1 - e^{-x} without cancellation
    let one_minus_a = -(-half).exp_m1();
    let one_minus_b = -(-full).exp_m1();

    let zero_bin = if one_minus_a > 0.0 {
        -one_minus_a * one_minus_a.log2()
    } else {
        0.0
    };
    let tails = if a > 0.0 {
        -a / std::f64::consts::LN_2 * ((one_minus_b / 2.0).ln() + half - full / one_minus_b)
    } else {
        0.0
    };
    Ok((zero_bin + tails).max(0.0))
}

#[derive(Debug)]
pub struct RateLut {
    table: Box<[u16]>,
    lookups: AtomicU64,
}

impl Clone for RateLut {
    fn clone(&self) -> Self {
        RateLut {
            table: self.table.clone(),
            lookups: AtomicU64::new(self.lookup_count()),
        }
    }
}

impl RateLut {
    /// Full 1024 x 256 table; row `m = 0` is all zeros (a zero-scale source
    /// is a point mass).
    pub fn build() -> Self {
        let mut table = vec![0u16; LUT_MEDIANS * LUT_DELTAS].into_boxed_slice();
        for m in 1..LUT_MEDIANS {
            for delta in 0..LUT_DELTAS {
                let q = (2 * delta + 1) as f64;
                let r = eval_rate(m as f64, q).expect("positive arguments");
                table[m * LUT_DELTAS + delta] = (1000.0 * r).round().min(u16::MAX as f64) as u16;
            }
        }
        RateLut {
            table,
            lookups: AtomicU64::new(0),
        }
    }

    /// Uses the blob at `$HYPERRATE_LUT_PATH` when set, otherwise builds.
    pub fn from_env_or_build() -> Result<Self> {
        match std::env::var_os("HYPERRATE_LUT_PATH") {
            Some(p) if !p.is_empty() => RateLut::load(p),
            _ => Ok(RateLut::build()),
        }
    }

    /// Millibits per sample at `(m, Q)`; counts the lookup.
    #[inline]
    pub fn lookup(&self, m: u32, step: StepSize) -> u32 {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        self.entry(m as usize, step.delta() as usize) as u32
    }

    /// Direct table read without counting.
    #[inline]
    pub fn entry(&self, m: usize, delta: usize) -> u16 {
        debug_assert!(m < LUT_MEDIANS && delta < LUT_DELTAS);
        self.table[m * LUT_DELTAS + delta]
    }

    pub fn lookup_count(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }

    pub fn reset_lookup_count(&self) {
        self.lookups.store(0, Ordering::Relaxed);
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.table
    }

    /// Row-major by `m`, little-endian `u16`.
    pub fn to_blob(&self) -> Vec<u8> {
        self.table.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_blob(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != LUT_BLOB_LEN {
            return Err(Error::SizeMismatch {
                expected: LUT_BLOB_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let table = bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok(RateLut {
            table,
            lookups: AtomicU64::new(0),
        })
    }

    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_blob())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RateLut::from_blob(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn lut() -> &'static RateLut {
        static LUT: OnceLock<RateLut> = OnceLock::new();
        LUT.get_or_init(RateLut::build)
    }

    #[test]
    fn fine_quantization_matches_differential_entropy() {
        let r = eval_rate(10.0, 1.0).unwrap();
        let h = (2.0 * std::f64::consts::E * 10.0).log2();
        assert!((r - 5.7652).abs() < 5e-4, "{r}");
        assert!((r - h).abs() < 0.002);
    }

    #[test]
    fn rate_vanishes_for_coarse_steps() {
        let mut prev = f64::INFINITY;
        for q in [1.0, 11.0, 101.0, 1001.0, 1e4, 1e6] {
            let r = eval_rate(10.0, q).unwrap();
            assert!(r >= 0.0 && r <= prev);
            prev = r;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn rejects_non_positive_arguments() {
        assert!(eval_rate(0.0, 1.0).is_err());
        assert!(eval_rate(1.0, -1.0).is_err());
        assert!(eval_rate(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn table_entries_and_counter() {
        let lut = RateLut::build();
        assert_eq!(lut.entry(10, 0), 5765);
        assert!((0..LUT_DELTAS).all(|d| lut.entry(0, d) == 0));
        assert_eq!(lut.lookup_count(), 0);
        assert_eq!(lut.lookup(10, StepSize::LOSSLESS), 5765);
        assert_eq!(lut.lookup(0, StepSize::new(511).unwrap()), 0);
        assert_eq!(lut.lookup_count(), 2);
        lut.reset_lookup_count();
        assert_eq!(lut.lookup_count(), 0);
    }

    #[test]
    fn table_is_monotone() {
        let lut = lut();
        for m in 0..LUT_MEDIANS {
            for d in 0..LUT_DELTAS {
                if d + 1 < LUT_DELTAS {
                    assert!(lut.entry(m, d + 1) <= lut.entry(m, d), "m={m} d={d}");
                }
                if m + 1 < LUT_MEDIANS {
                    assert!(lut.entry(m + 1, d) >= lut.entry(m, d), "m={m} d={d}");
                }
            }
        }
        let max = *lut.as_slice().iter().max().unwrap();
        assert!(max < 16384, "{max}");
    }

    #[test]
    fn table_agrees_with_closed_form() {
        let lut = lut();
        for m in 1..LUT_MEDIANS {
            for d in 0..LUT_DELTAS {
                let r = eval_rate(m as f64, (2 * d + 1) as f64).unwrap();
                assert!((lut.entry(m, d) as f64 / 1000.0 - r).abs() <= 0.0005 + 1e-9);
            }
        }
    }

    #[test]
    fn blob_round_trip() {
        let lut = lut();
        let blob = lut.to_blob();
        assert_eq!(blob.len(), LUT_BLOB_LEN);
        assert_eq!(&blob[..2], &[0, 0]);
        let back = RateLut::from_blob(&blob).unwrap();
        assert_eq!(back.as_slice(), lut.as_slice());
        assert!(RateLut::from_blob(&blob[1..]).is_err());
    }
}
