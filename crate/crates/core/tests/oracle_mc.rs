//! Monte Carlo cross-checks of the closed-form pre-rank moments.

use rand::Rng;
use rankcal::oracle;
use rankcal::prerank::{average_from_table, band_depth_from_table, univariate_ranks};
use rankcal::simulate::{appendix_regime_case, ScenarioSampler};
use rankcal::{RandomSource, StreamPurpose};

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, variance)
}

#[test]
fn expected_preranks_match_iid_simulation() {
    let m = 20;
    let d = 5;
    let n_cases = 30_000u64;
    let config = rankcal::simulate::ScenarioConfig::new(
        rankcal::simulate::GaussianModel::iid(0.0, 1.0, d).unwrap(),
        rankcal::simulate::GaussianModel::iid(0.0, 1.0, d).unwrap(),
        m,
        n_cases,
        41,
    )
    .unwrap();
    let sampler = ScenarioSampler::new(&config).unwrap();
    let source = RandomSource::new(41);
    let mut avg_values = Vec::with_capacity(n_cases as usize);
    let mut bd_values = Vec::with_capacity(n_cases as usize);
    for case_index in 0..n_cases {
        let case = sampler.sample_case(case_index, &source);
        let table = univariate_ranks(&case);
        avg_values.push(average_from_table(&table).observation_prerank());
        bd_values.push(band_depth_from_table(&table).observation_prerank());
    }
    let (expected_avg, expected_bd) = oracle::expected_preranks(m as u64).unwrap();
    for (values, expected) in [(avg_values, expected_avg), (bd_values, expected_bd)] {
        let (mean, variance) = mean_and_variance(&values);
        let standard_error = (variance / values.len() as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * standard_error,
            "mean {mean} vs {expected} (se {standard_error})"
        );
    }
}

/// In the fully-dependent-observation regime, the Monte Carlo pre-rank
/// moments reproduce the derivation-consistent formulas: the average-rank
/// variances, the power-sum band depth variances (member and observation,
/// the latter assembled from the higher rank moments) and the
/// cross-component rank covariance.
#[test]
fn appendix_regime_simulation_matches_derived_moments() {
    let m = 20usize;
    let d = 5usize;
    let n_cases = 30_000u64;
    let source = RandomSource::new(43);

    let mut member_avg = Vec::new();
    let mut member_bd = Vec::new();
    let mut obs_avg = Vec::new();
    let mut obs_bd = Vec::new();
    let mut obs_ranks = Vec::new();
    for case_index in 0..n_cases {
        let case = appendix_regime_case(m, d, case_index, &source).unwrap();
        let table = univariate_ranks(&case);
        let avg = average_from_table(&table);
        let bd = band_depth_from_table(&table);
        let member = source
            .substream(case_index, StreamPurpose::MemberPick)
            .random_range(0..m - 1);
        member_avg.push(avg.values()[member]);
        member_bd.push(bd.values()[member]);
        obs_avg.push(avg.observation_prerank());
        obs_bd.push(bd.observation_prerank());
        obs_ranks.push((f64::from(table.rank(m - 1, 0)), f64::from(table.rank(m - 1, 1))));
    }

    let derived = oracle::prerank_variances_derived(m as u64, d as u64).unwrap();
    let via_moments = oracle::bd_obs_variance_via_rank_moments(m as u64, d as u64).unwrap();
    let within = |measured: f64, expected: f64, label: &str| {
        let gap = (measured - expected).abs() / expected;
        assert!(gap <= 0.05, "{label}: {measured:.2} vs {expected:.2}");
    };
    within(mean_and_variance(&member_avg).1, derived.avg_member, "member avg");
    within(mean_and_variance(&obs_avg).1, derived.avg_obs, "obs avg");
    within(mean_and_variance(&member_bd).1, derived.bd_member, "member bd");
    within(mean_and_variance(&obs_bd).1, derived.bd_obs, "obs bd");
    within(mean_and_variance(&obs_bd).1, via_moments, "obs bd via moments");

    let n = obs_ranks.len() as f64;
    let mean_0 = obs_ranks.iter().map(|r| r.0).sum::<f64>() / n;
    let mean_1 = obs_ranks.iter().map(|r| r.1).sum::<f64>() / n;
    let covariance = obs_ranks
        .iter()
        .map(|r| (r.0 - mean_0) * (r.1 - mean_1))
        .sum::<f64>()
        / (n - 1.0);
    within(covariance, oracle::rank_covariance(m as u64).unwrap(), "rank covariance");
}
