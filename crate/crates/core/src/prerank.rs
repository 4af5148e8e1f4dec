//! Pre-rank functions.
//!
//! A pre-rank function maps every element of a case's set (members plus
//! observation) to a scalar, reducing the multivariate ranking problem to a
//! univariate one. Four functions are provided:
//!
//! - [`prerank_multivariate`] — the number of elements componentwise
//!   dominated by the point (including itself);
//! - [`prerank_band_depth`] — the average over components of the number of
//!   element pairs whose band contains the point, a centrality score;
//! - [`prerank_average`] — the average of the point's univariate ranks;
//! - [`prerank_mst`] — the spanning-tree length of the remaining points,
//!   small for outliers whose removal shortens the tree most.
//!
//! The first three are purely rank-based and therefore invariant under
//! strictly increasing componentwise transformations; the spanning-tree
//! pre-rank works on raw distances and offers optional standardization.

use crate::case::{ForecastCase, PreRankVector};
use crate::error::Result;
use crate::mst::{mst_length_all_removals, DistanceCache};
use crate::rng::StreamPurpose;

/// Univariate ranks and tie counts of every element in every component.
///
/// `rank(i, k)` counts elements with `x_{jk} <= x_{ik}` (weak inequality, so
/// tied values share the maximal rank of their group); `tie_count(i, k)`
/// counts elements with `x_{jk} == x_{ik}`, the element itself included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariateRankTable {
    m: usize,
    d: usize,
    ranks: Vec<u32>,
    tie_counts: Vec<u32>,
}

impl UnivariateRankTable {
    pub fn set_size(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Rank of element `i` in component `k`, in `1..=m`.
    pub fn rank(&self, i: usize, k: usize) -> u32 {
        self.ranks[i * self.d + k]
    }

    /// Number of elements tied with element `i` in component `k`, at least 1.
    pub fn tie_count(&self, i: usize, k: usize) -> u32 {
        self.tie_counts[i * self.d + k]
    }

    /// Whether any component holds tied values.
    pub fn has_ties(&self) -> bool {
        self.tie_counts.iter().any(|&t| t > 1)
    }
}

/// Componentwise weak ranks of all elements of the case's set.
pub fn univariate_ranks(case: &ForecastCase) -> UnivariateRankTable {
    let m = case.set_size();
    let d = case.dim();
    let mut ranks = vec![0u32; m * d];
    let mut tie_counts = vec![0u32; m * d];
    let mut order: Vec<usize> = Vec::with_capacity(m);
    for k in 0..d {
        order.clear();
        order.extend(0..m);
        order.sort_unstable_by(|&a, &b| {
            case.element(a)[k]
                .partial_cmp(&case.element(b)[k])
                .expect("finite values by case invariant")
        });
        let mut start = 0;
        while start < m {
            let value = case.element(order[start])[k];
            let mut end = start + 1;
            while end < m && case.element(order[end])[k] == value {
                end += 1;
            }
            // Tied group shares the maximal weak rank and its size.
            for &element in &order[start..end] {
                ranks[element * d + k] = end as u32;
                tie_counts[element * d + k] = (end - start) as u32;
            }
            start = end;
        }
    }
    UnivariateRankTable {
        m,
        d,
        ranks,
        tie_counts,
    }
}

/// Multivariate pre-rank: for each element, the number of elements of the set
/// it componentwise dominates (itself included, so every value is >= 1).
pub fn prerank_multivariate(case: &ForecastCase) -> PreRankVector {
    let m = case.set_size();
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let x = case.element(i);
        let mut count = 0u32;
        'candidates: for j in 0..m {
            let y = case.element(j);
            for (yk, xk) in y.iter().zip(x) {
                if yk > xk {
                    continue 'candidates;
                }
            }
            count += 1;
        }
        values.push(f64::from(count));
    }
    PreRankVector::new(values).expect("counts are positive")
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Band depth pre-rank: per component, the number of element pairs whose
/// band (the closed interval they span) contains the point, averaged over
/// components.
///
/// A pair misses the point only when both its values fall strictly on the
/// same side, so the count per component is `C(m,2) − C(below,2) − C(above,2)`.
/// On tie-free data this reduces to `(m − rank)(rank − 1) + (m − 1)`, which is
/// used as a fast path; both paths accumulate an exact integer per element
/// and divide by `d` once, so they agree bit for bit whenever no component
/// holds tied values.
pub fn prerank_band_depth(case: &ForecastCase) -> PreRankVector {
    let table = univariate_ranks(case);
    band_depth_from_table(&table)
}

/// Band depth pre-rank computed from an existing rank table.
pub fn band_depth_from_table(table: &UnivariateRankTable) -> PreRankVector {
    let values = if table.has_ties() {
        band_depth_general(table)
    } else {
        band_depth_tie_free(table)
    };
    PreRankVector::new(values).expect("pair counts are nonnegative")
}

/// General band containment count, valid with or without ties.
///
/// Exposed so the simplified path can be cross-checked against it; prefer
/// [`band_depth_from_table`], which dispatches automatically.
pub fn band_depth_general(table: &UnivariateRankTable) -> Vec<f64> {
    let m = table.set_size() as u64;
    let d = table.dim();
    let all_pairs = pairs(m);
    (0..table.set_size())
        .map(|i| {
            let mut containing_pairs = 0u64;
            for k in 0..d {
                let rank = u64::from(table.rank(i, k));
                let ties = u64::from(table.tie_count(i, k));
                let below = rank - ties;
                let above = m - rank;
                containing_pairs += all_pairs - pairs(below) - pairs(above);
            }
            containing_pairs as f64 / d as f64
        })
        .collect()
}

/// Simplified count valid only when every component is tie-free.
///
/// Exposed for cross-checking against [`band_depth_general`]; prefer
/// [`band_depth_from_table`], which dispatches automatically.
pub fn band_depth_tie_free(table: &UnivariateRankTable) -> Vec<f64> {
    let m = table.set_size() as u64;
    let d = table.dim();
    (0..table.set_size())
        .map(|i| {
            let mut sum = d as u64 * (m - 1);
            for k in 0..d {
                let rank = u64::from(table.rank(i, k));
                sum += (m - rank) * (rank - 1);
            }
            sum as f64 / d as f64
        })
        .collect()
}

/// Average pre-rank: the mean of the element's univariate ranks.
pub fn prerank_average(case: &ForecastCase) -> PreRankVector {
    let table = univariate_ranks(case);
    average_from_table(&table)
}

/// Average pre-rank computed from an existing rank table.
pub fn average_from_table(table: &UnivariateRankTable) -> PreRankVector {
    let d = table.dim();
    let values = (0..table.set_size())
        .map(|i| {
            let sum: u64 = (0..d).map(|k| u64::from(table.rank(i, k))).sum();
            sum as f64 / d as f64
        })
        .collect();
    PreRankVector::new(values).expect("ranks are positive")
}

/// Spanning-tree pre-rank: for each element, the Euclidean MST length of the
/// set with that element removed.
///
/// With `standardize` set, each component is first centered and scaled by its
/// sample mean and standard deviation over the whole set; a zero-variance
/// component is centered only. Requires `m >= 3`.
pub fn prerank_mst(case: &ForecastCase, standardize: bool) -> Result<PreRankVector> {
    let cache = if standardize {
        let rows = standardized_rows(case);
        DistanceCache::from_points(&rows)?
    } else {
        let rows: Vec<&[f64]> = case.elements().collect();
        DistanceCache::from_points(&rows)?
    };
    mst_length_all_removals(&cache)
}

fn standardized_rows(case: &ForecastCase) -> Vec<Vec<f64>> {
    let m = case.set_size();
    let d = case.dim();
    let mut mean = vec![0.0; d];
    for element in case.elements() {
        for k in 0..d {
            mean[k] += element[k];
        }
    }
    for value in mean.iter_mut() {
        *value /= m as f64;
    }
    let mut scale = vec![0.0; d];
    for element in case.elements() {
        for k in 0..d {
            let diff = element[k] - mean[k];
            scale[k] += diff * diff;
        }
    }
    for value in scale.iter_mut() {
        let sd = (*value / (m - 1) as f64).sqrt();
        *value = if sd > 0.0 { sd } else { 1.0 };
    }
    case.elements()
        .map(|element| {
            (0..d)
                .map(|k| (element[k] - mean[k]) / scale[k])
                .collect()
        })
        .collect()
}

/// The pre-rank functions addressable by name, with their parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreRankMethod {
    Multivariate,
    BandDepth,
    Average,
    Mst { standardize: bool },
}

impl PreRankMethod {
    /// All four methods with default parameters.
    pub const ALL: [PreRankMethod; 4] = [
        PreRankMethod::Multivariate,
        PreRankMethod::BandDepth,
        PreRankMethod::Average,
        PreRankMethod::Mst { standardize: false },
    ];

    /// Compute this method's pre-rank vector for a case.
    pub fn compute(&self, case: &ForecastCase) -> Result<PreRankVector> {
        match *self {
            PreRankMethod::Multivariate => Ok(prerank_multivariate(case)),
            PreRankMethod::BandDepth => Ok(prerank_band_depth(case)),
            PreRankMethod::Average => Ok(prerank_average(case)),
            PreRankMethod::Mst { standardize } => prerank_mst(case, standardize),
        }
    }

    /// Substream purpose used to resolve rank ties for this method, so each
    /// method's ranks are reproducible independently of which other methods
    /// run alongside it.
    pub fn tie_purpose(&self) -> StreamPurpose {
        match self {
            PreRankMethod::Multivariate => StreamPurpose::TieMultivariate,
            PreRankMethod::BandDepth => StreamPurpose::TieBandDepth,
            PreRankMethod::Average => StreamPurpose::TieAverage,
            PreRankMethod::Mst { .. } => StreamPurpose::TieMst,
        }
    }

    /// Short label used in file names and summaries.
    pub fn label(&self) -> &'static str {
        match self {
            PreRankMethod::Multivariate => "mv",
            PreRankMethod::BandDepth => "bd",
            PreRankMethod::Average => "avg",
            PreRankMethod::Mst { .. } => "mst",
        }
    }
}

impl std::fmt::Display for PreRankMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
