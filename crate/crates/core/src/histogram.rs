//! Rank histograms and their summary statistics.

use crate::error::{Error, Result};

/// Histogram of observation ranks `1..=m` aggregated over verification cases.
///
/// One bin per rank; no rebinning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankHistogram {
    m: usize,
    counts: Vec<u64>,
    n_cases: u64,
}

/// Descriptive statistics of an empirical rank distribution.
///
/// The chi-square statistic is measured against the uniform distribution on
/// `1..=m` (m − 1 degrees of freedom). It is reported as a descriptive
/// diagnostic only; no significance test is attached because verification
/// cases are typically serially dependent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramSummary {
    pub mean_rank: f64,
    pub rank_variance: f64,
    pub chi_square: f64,
}

impl RankHistogram {
    /// Empty histogram over ranks `1..=m`.
    pub fn empty(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("histogram needs m >= 1".into()));
        }
        Ok(Self {
            m,
            counts: vec![0; m],
            n_cases: 0,
        })
    }

    /// Record one observation rank.
    pub fn record(&mut self, rank: u32) -> Result<()> {
        if rank == 0 || rank as usize > self.m {
            return Err(Error::RankOutOfRange { rank, m: self.m });
        }
        self.counts[rank as usize - 1] += 1;
        self.n_cases += 1;
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Bin counts indexed by rank − 1.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_cases(&self) -> u64 {
        self.n_cases
    }

    /// Expected count per bin under uniform ranks.
    pub fn uniform_expectation(&self) -> f64 {
        self.n_cases as f64 / self.m as f64
    }

    /// Mean, variance and chi-square of the empirical rank distribution.
    pub fn summary(&self) -> Result<HistogramSummary> {
        if self.n_cases == 0 {
            return Err(Error::EmptyHistogram);
        }
        let n = self.n_cases as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (i, &count) in self.counts.iter().enumerate() {
            let rank = (i + 1) as f64;
            let c = count as f64;
            sum += rank * c;
            sum_sq += rank * rank * c;
        }
        let mean_rank = sum / n;
        let rank_variance = sum_sq / n - mean_rank * mean_rank;
        let expected = self.uniform_expectation();
        let chi_square = self
            .counts
            .iter()
            .map(|&count| {
                let diff = count as f64 - expected;
                diff * diff / expected
            })
            .sum();
        Ok(HistogramSummary {
            mean_rank,
            rank_variance,
            chi_square,
        })
    }
}

/// Build a histogram from a sequence of ranks, each in `1..=m`.
pub fn accumulate_histogram(ranks: impl IntoIterator<Item = u32>, m: usize) -> Result<RankHistogram> {
    let mut histogram = RankHistogram::empty(m)?;
    for rank in ranks {
        histogram.record(rank)?;
    }
    Ok(histogram)
}
