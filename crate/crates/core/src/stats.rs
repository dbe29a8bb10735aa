//! Streaming median-of-medians scale estimation.
//!
//! Each band keeps one [`LineStatistics`]. Residual magnitudes are buffered
//! in subsets of `L` contiguous samples; every full subset is reduced to its
//! median, and at the end of the line the median of the subset medians is
//! the band's scale estimate `m_z`.

use crate::error::{Error, Result};

/// Largest scale the rate table is indexed by; larger medians are clamped.
pub const MAX_MEDIAN: u32 = 1023;

/// Exact median of a small list, taking the lower middle element for even
/// lengths. Returns `None` for an empty list. Reorders `values`.
pub fn median_small(values: &mut [u32]) -> Option<u32> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[(values.len() - 1) / 2])
}

/// Lower median by selection, for the longer list of subset medians.
fn median_select(values: &mut [u32]) -> Option<u32> {
    if values.is_empty() {
        return None;
    }
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable(k);
    Some(*m)
}

#[derive(Debug, Clone)]
pub struct LineStatistics {
    subset_len: usize,
    max_median: u32,
    subset: Vec<u32>,
    medians: Vec<u32>,
    last: Option<u32>,
}

impl LineStatistics {
    /// `subset_len` is `L`; `n_cols` sizes the medians buffer.
    pub fn new(subset_len: usize, n_cols: usize) -> Self {
        assert!(subset_len >= 1, "subset length must be positive");
        LineStatistics {
            subset_len,
            max_median: MAX_MEDIAN,
            subset: Vec::with_capacity(subset_len),
            medians: Vec::with_capacity(n_cols.div_ceil(subset_len)),
            last: None,
        }
    }

    pub fn with_max_median(mut self, max_median: u32) -> Self {
        self.max_median = max_median;
        self
    }

    pub fn subset_len(&self) -> usize {
        self.subset_len
    }

    /// Buffers `|r|`. When the subset fills up its median is moved to the
    /// medians buffer and returned.
    pub fn push_residual(&mut self, residual: i32) -> Option<u32> {
        self.subset.push(residual.unsigned_abs());
        if self.subset.len() == self.subset_len {
            let m = median_small(&mut self.subset).expect("subset is full");
            self.medians.push(m);
            self.subset.clear();
            Some(m)
        } else {
            None
        }
    }

    /// Subset medians collected so far on this line.
    pub fn subset_medians(&self) -> &[u32] {
        &self.medians
    }

    /// Closes the line: reduces any partial subset, takes the median of
    /// medians, clamps it to `[0, max_median]` and resets the buffers.
    pub fn finalize_line(&mut self) -> Result<u32> {
        if !self.subset.is_empty() {
            let m = median_small(&mut self.subset).expect("non-empty");
            self.medians.push(m);
            self.subset.clear();
        }
        let m = median_select(&mut self.medians).ok_or(Error::EmptyLine)?;
        self.medians.clear();
        let m = m.min(self.max_median);
        self.last = Some(m);
        Ok(m)
    }

    /// The most recently finalized `m_z`.
    pub fn last_median(&self) -> Option<u32> {
        self.last
    }
}
