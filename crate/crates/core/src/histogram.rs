//! Fixed-width 1D histograms with bins centred on multiples of the width.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HistogramError {
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
    #[error("histogram range is empty: [{0}, {1}]")]
    EmptyRange(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// Lower edge of the first bin.
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    /// Bins of `width` centred on `first_center, first_center + width, ...`
    /// up to and including `last_center`.
    pub fn centered(first_center: f64, last_center: f64, width: f64) -> Result<Self, HistogramError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(HistogramError::InvalidBinWidth(width));
        }
        if !(last_center >= first_center) {
            return Err(HistogramError::EmptyRange(first_center, last_center));
        }
        let n = ((last_center - first_center) / width).round() as usize + 1;
        Ok(Histogram {
            lo: first_center - 0.5 * width,
            bin_width: width,
            counts: vec![0; n],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn fill(&mut self, x: f64) {
        if !(x >= self.lo) {
            self.underflow += 1;
            return;
        }
        let idx = ((x - self.lo) / self.bin_width).floor() as usize;
        match self.counts.get_mut(idx) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width
    }

    /// Bin edges, `n_bins + 1` values.
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + i as f64 * self.bin_width)
            .collect()
    }

    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        let lo = self.lo + i as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    /// Everything filled, including under/overflow.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Index of the fullest bin (first one on ties); `None` if all empty.
    pub fn argmax(&self) -> Option<usize> {
        let (idx, &max) = self
            .counts
            .iter()
            .enumerate()
            .fold((0, &0u64), |best, cur| if cur.1 > best.1 { cur } else { best });
        (max > 0).then_some(idx)
    }

    /// `(bin_center, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.center(i), c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_centred_on_multiples() {
        let mut h = Histogram::centered(100.0, 200.0, 1.0).unwrap();
        assert_eq!(h.n_bins(), 101);
        assert_eq!(h.center(70), 170.0);
        h.fill(170.3);
        h.fill(169.6);
        h.fill(99.0);
        h.fill(500.0);
        assert_eq!(h.counts[70], 2);
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 1);
        assert_eq!(h.total(), 4);
        assert_eq!(h.argmax(), Some(70));
        let (lo, hi) = h.bin_range(70);
        assert!(lo <= 170.0 && 170.0 < hi);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(Histogram::centered(0.0, 1.0, 0.0).is_err());
        assert!(Histogram::centered(0.0, 1.0, f64::NAN).is_err());
        assert!(Histogram::centered(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_has_no_argmax() {
        let h = Histogram::centered(0.0, 10.0, 1.0).unwrap();
        assert_eq!(h.argmax(), None);
        assert_eq!(h.edges().len(), 12);
    }
}
