//! Two-step ranking of a case: pre-rank every element, then rank the
//! observation's pre-rank within the set, resolving ties at random.

use rand::Rng;

use crate::case::{ForecastCase, PreRankVector};
use crate::error::{Error, Result};
use crate::prerank::PreRankMethod;
use crate::rng::RandomSource;

/// Rank of `values[index]` within `values`, ties resolved at random.
///
/// If `t` entries share the value, the rank is drawn uniformly from the `t`
/// consecutive tied positions. The draw is consumed from `tie_rng` only when
/// `t > 1`, so tie-free inputs leave the stream untouched.
pub fn rank_within(values: &[f64], index: usize, tie_rng: &mut impl Rng) -> u32 {
    let value = values[index];
    let mut below = 0u32;
    let mut tied = 0u32;
    for &v in values {
        if v < value {
            below += 1;
        } else if v == value {
            tied += 1;
        }
    }
    // tied >= 1: the element matches itself.
    let offset = if tied > 1 {
        tie_rng.random_range(0..tied)
    } else {
        0
    };
    below + 1 + offset
}

/// Rank of element `index` within the pre-rank values.
pub fn rank_of_element(
    preranks: &PreRankVector,
    index: usize,
    tie_rng: &mut impl Rng,
) -> u32 {
    rank_within(preranks.values(), index, tie_rng)
}

/// Rank of the observation (last element) of `case` within `preranks`.
pub fn rank_of_observation(
    case: &ForecastCase,
    preranks: &PreRankVector,
    tie_rng: &mut impl Rng,
) -> Result<u32> {
    if preranks.len() != case.set_size() {
        return Err(Error::PreRankLengthMismatch {
            got: preranks.len(),
            expected: case.set_size(),
        });
    }
    Ok(rank_of_element(preranks, case.set_size() - 1, tie_rng))
}

/// Full two-step ranking driver: compute pre-ranks under `method`, then rank
/// the observation with ties resolved from the case's dedicated substream.
pub fn rank_case(case: &ForecastCase, method: PreRankMethod, source: &RandomSource) -> Result<u32> {
    let preranks = method.compute(case)?;
    let mut tie_rng = source.substream(case.case_id().stream_key(), method.tie_purpose());
    rank_of_observation(case, &preranks, &mut tie_rng)
}
