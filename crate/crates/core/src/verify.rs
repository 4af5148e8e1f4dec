//! Reference experiment suites with frozen tolerances.
//!
//! Each suite reruns a catalog experiment with pinned seeds, set sizes and
//! case counts, and checks the outcome against reference values and shape
//! diagnostics. The suites are exposed through the CLI (`verify --suite ...`)
//! and drive the acceptance tests.

use std::time::Instant;

use crate::error::Result;
use crate::histogram::RankHistogram;
use crate::oracle;
use crate::prerank::{average_from_table, band_depth_from_table, univariate_ranks, PreRankMethod};
use crate::rng::{RandomSource, StreamPurpose};
use crate::simulate::{
    appendix_regime_case, run_scenario_multi, CovarianceKind, GaussianModel, MethodRanks,
    ScenarioConfig,
};

use rand::Rng;
use rayon::prelude::*;

/// 0.999 quantile of the chi-square distribution with 19 degrees of freedom,
/// the uniformity gate for 20-bin histograms.
pub const CHI_SQUARE_19_DOF_999: f64 = 43.82;

/// Fixed suite seeds. Arbitrary but frozen: the Monte Carlo tolerances below
/// carry sampling noise of the same order as the reference values' own noise,
/// so the suites pin one reproducible draw.
const UNIFORMITY_SEEDS: std::ops::Range<u64> = 0..100;
const SHAPE_SEED: u64 = 2103;
const SENSITIVITY_SEED: u64 = 2102;
const TABLES_SEED: u64 = 2106;
const APPENDIX_SEED: u64 = 2104;

/// Named verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Figures,
    Tables,
    Appendix,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "figures" => Some(Suite::Figures),
            "tables" => Some(Suite::Tables),
            "appendix" => Some(Suite::Appendix),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Suite::Figures => "figures",
            Suite::Tables => "tables",
            Suite::Appendix => "appendix",
        }
    }
}

/// Outcome of one verification criterion.
#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub details: String,
}

/// Collector for a criterion's sub-checks.
#[derive(Default)]
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, detail: String) {
        if !ok {
            self.passed = false;
        }
        self.details
            .push(format!("{} {detail}", if ok { "ok:" } else { "FAIL:" }));
    }

    /// Informational line that does not gate the criterion.
    fn note(&mut self, detail: String) {
        self.details.push(format!("note: {detail}"));
    }

    fn into_result(self, id: &'static str, description: &'static str) -> CriterionResult {
        CriterionResult {
            id,
            description,
            passed: self.passed,
            details: self.details.join("; "),
        }
    }
}

/// Run every criterion of a suite.
pub fn run_suite(suite: Suite) -> Result<Vec<CriterionResult>> {
    match suite {
        Suite::Figures => Ok(vec![
            criterion_uniform_calibration()?,
            criterion_shape_diagnostics()?,
            criterion_method_sensitivity()?,
        ]),
        Suite::Tables => {
            let (means, variances) = criteria_reference_tables()?;
            Ok(vec![means, variances])
        }
        Suite::Appendix => Ok(vec![criterion_appendix_regime()?]),
    }
}

fn chi_square(ranks: &MethodRanks, m: usize) -> Result<f64> {
    Ok(ranks.observation_histogram(m)?.summary()?.chi_square)
}

/// Uniformity under calibration: iid standard Gaussian observations and
/// members, d = 3, m = 20, 10000 cases; every method's 20-bin chi-square
/// stays under the 0.999 quantile in at least 99 of 100 seeded runs.
pub fn criterion_uniform_calibration() -> Result<CriterionResult> {
    let start = Instant::now();
    let m = 20;
    let methods = PreRankMethod::ALL;
    let mut pass_counts = [0u32; 4];
    for seed in UNIFORMITY_SEEDS {
        let config = ScenarioConfig::new(
            GaussianModel::iid(0.0, 1.0, 3)?,
            GaussianModel::iid(0.0, 1.0, 3)?,
            m,
            10_000,
            seed,
        )?;
        let runs = run_scenario_multi(&config, &methods)?;
        for (count, ranks) in pass_counts.iter_mut().zip(runs.iter()) {
            if chi_square(ranks, m)? < CHI_SQUARE_19_DOF_999 {
                *count += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let mut checks = Checks::new();
    for (count, method) in pass_counts.iter().zip(methods.iter()) {
        checks.require(
            *count >= 99,
            format!("{method}: {count}/100 runs under {CHI_SQUARE_19_DOF_999}"),
        );
    }
    checks.require(
        elapsed.as_secs_f64() < 60.0,
        format!("runtime {:.1}s < 60s", elapsed.as_secs_f64()),
    );
    Ok(checks.into_result(
        "uniform-calibration",
        "calibrated ensembles give uniform histograms for all four methods",
    ))
}

fn decile_masses(histogram: &RankHistogram) -> (u64, u64) {
    let bins = histogram.m().div_ceil(10).max(1);
    let counts = histogram.counts();
    let bottom: u64 = counts[..bins].iter().sum();
    let top: u64 = counts[counts.len() - bins..].iter().sum();
    (bottom, top)
}

/// Dispersion-error shapes across dimensions: underdispersed forecasts push
/// average ranks to the ends and band depth mass to the bottom decile;
/// overdispersed forecasts mirror both; at d = 15 the multivariate rank
/// histogram stays far flatter than the band depth histogram on the same
/// data.
pub fn criterion_shape_diagnostics() -> Result<CriterionResult> {
    let m = 20;
    let methods = [
        PreRankMethod::Multivariate,
        PreRankMethod::BandDepth,
        PreRankMethod::Average,
    ];
    let mut checks = Checks::new();
    for underdispersed in [true, false] {
        let sigma = if underdispersed { 0.5 } else { 2.0 };
        for d in [3usize, 5, 15] {
            let config = ScenarioConfig::new(
                GaussianModel::iid(0.0, 1.0, d)?,
                GaussianModel::iid(0.0, sigma, d)?,
                m,
                10_000,
                SHAPE_SEED,
            )?;
            let runs = run_scenario_multi(&config, &methods)?;
            let mv_hist = runs[0].observation_histogram(m)?;
            let bd_hist = runs[1].observation_histogram(m)?;
            let avg_hist = runs[2].observation_histogram(m)?;

            let expected = avg_hist.uniform_expectation();
            let low = avg_hist.counts()[0] as f64;
            let high = avg_hist.counts()[m - 1] as f64;
            let (bd_bottom, bd_top) = decile_masses(&bd_hist);
            if underdispersed {
                checks.require(
                    low > 2.0 * expected && high > 2.0 * expected,
                    format!("sigma {sigma} d {d}: avg end bins {low}/{high} > 2x{expected}"),
                );
                if d == 15 {
                    // Long-run end-bin frequency at this setting measures
                    // 0.0988 over one million cases, below the 0.1000 gate;
                    // the check above cannot hold in expectation.
                    checks.note(format!(
                        "sigma {sigma} d {d}: true end-bin frequency ~0.0988 sits under the 2x gate"
                    ));
                }
                checks.require(
                    bd_bottom as f64 > 2.0 * bd_top as f64,
                    format!("sigma {sigma} d {d}: bd decile mass {bd_bottom} > 2x{bd_top}"),
                );
            } else {
                checks.require(
                    low < 0.5 * expected && high < 0.5 * expected,
                    format!("sigma {sigma} d {d}: avg end bins {low}/{high} < 0.5x{expected}"),
                );
                checks.require(
                    bd_top as f64 > 2.0 * bd_bottom as f64,
                    format!("sigma {sigma} d {d}: bd decile mass {bd_top} > 2x{bd_bottom}"),
                );
            }
            if d == 15 {
                let mv_chi = mv_hist.summary()?.chi_square;
                let bd_chi = bd_hist.summary()?.chi_square;
                checks.require(
                    mv_chi < bd_chi / 3.0,
                    format!(
                        "sigma {sigma} d {d}: multivariate chi-square {mv_chi:.1} < band depth {bd_chi:.1} / 3"
                    ),
                );
            }
        }
    }
    Ok(checks.into_result(
        "shape-diagnostics",
        "dispersion errors produce the documented histogram shapes",
    ))
}

/// Sensitivity ordering under the complex correlation models at d = 15:
/// against the damped-cosine truth the average ranks stay flat while the
/// spanning-tree ranks flag the mismatch; against the long-range truth the
/// average ranks give the clearest signal of all four methods.
pub fn criterion_method_sensitivity() -> Result<CriterionResult> {
    let m = 20;
    let d = 15;
    let methods = PreRankMethod::ALL;
    let mut checks = Checks::new();

    let damped = ScenarioConfig::new(
        GaussianModel::correlation(CovarianceKind::DampedCosine, d)?,
        GaussianModel::ar1(3.0, d)?,
        m,
        10_000,
        SENSITIVITY_SEED,
    )?;
    let runs = run_scenario_multi(&damped, &methods)?;
    let avg_chi = chi_square(&runs[2], m)?;
    let mst_chi = chi_square(&runs[3], m)?;
    checks.require(
        avg_chi < CHI_SQUARE_19_DOF_999,
        format!("damped cosine: average chi-square {avg_chi:.1} stays under the gate"),
    );
    checks.require(
        mst_chi > CHI_SQUARE_19_DOF_999,
        format!("damped cosine: spanning tree chi-square {mst_chi:.1} exceeds the gate"),
    );

    let long_range = ScenarioConfig::new(
        GaussianModel::correlation(CovarianceKind::LongRange, d)?,
        GaussianModel::ar1(3.0, d)?,
        m,
        10_000,
        SENSITIVITY_SEED,
    )?;
    let runs = run_scenario_multi(&long_range, &methods)?;
    let chis: Vec<f64> = runs
        .iter()
        .map(|ranks| chi_square(ranks, m))
        .collect::<Result<_>>()?;
    let avg_chi = chis[2];
    let rest_max = chis[0].max(chis[1]).max(chis[3]);
    checks.require(
        avg_chi > rest_max,
        format!("long range: average chi-square {avg_chi:.1} largest (others up to {rest_max:.1})"),
    );
    Ok(checks.into_result(
        "method-sensitivity",
        "correlation-shape mismatches are flagged by the documented methods",
    ))
}

/// Reference mean ranks and rank variances for the exponential-decay
/// mismatch experiment (observation decay 3, forecast decay 2, d = 5,
/// 30000 repetitions), for set sizes 20 and 100.
struct TableCell {
    m: usize,
    obs_mean: (f64, f64),
    member_mean: (f64, f64),
    obs_var: (f64, f64),
    member_var: (f64, f64),
}

/// Frozen reference cells: (average, band depth) per quantity.
const TABLE_CELLS: [TableCell; 2] = [
    TableCell {
        m: 20,
        obs_mean: (10.5, 10.7),
        member_mean: (10.5, 10.5),
        obs_var: (37.0, 37.0),
        member_var: (33.0, 33.0),
    },
    TableCell {
        m: 100,
        obs_mean: (50.4, 51.7),
        member_mean: (50.7, 50.6),
        obs_var: (940.0, 946.0),
        member_var: (830.0, 835.0),
    },
];

const MEAN_TOLERANCE: f64 = 0.2;

fn variance_tolerance(m: usize, observation: bool) -> f64 {
    match (m, observation) {
        (20, _) => 3.0,
        (100, true) => 60.0,
        (100, false) => 55.0,
        _ => unreachable!("no reference cells beyond m in {{20, 100}}"),
    }
}

fn criteria_reference_tables() -> Result<(CriterionResult, CriterionResult)> {
    let start = Instant::now();
    let d = 5;
    let methods = [PreRankMethod::Average, PreRankMethod::BandDepth];
    let mut mean_checks = Checks::new();
    let mut var_checks = Checks::new();
    for cell in &TABLE_CELLS {
        let config = ScenarioConfig::new(
            GaussianModel::ar1(3.0, d)?,
            GaussianModel::ar1(2.0, d)?,
            cell.m,
            30_000,
            TABLES_SEED,
        )?;
        let runs = run_scenario_multi(&config, &methods)?;
        for (which, ranks) in runs.iter().enumerate() {
            let label = ranks.method.label();
            let obs = ranks.observation_histogram(cell.m)?.summary()?;
            let member = ranks.member_histogram(cell.m)?.summary()?;
            let pick = |pair: (f64, f64)| if which == 0 { pair.0 } else { pair.1 };

            let expected = pick(cell.obs_mean);
            mean_checks.require(
                (obs.mean_rank - expected).abs() <= MEAN_TOLERANCE,
                format!("m {} {label} obs mean {:.2} vs {expected}", cell.m, obs.mean_rank),
            );
            let expected = pick(cell.member_mean);
            mean_checks.require(
                (member.mean_rank - expected).abs() <= MEAN_TOLERANCE,
                format!(
                    "m {} {label} member mean {:.2} vs {expected}",
                    cell.m, member.mean_rank
                ),
            );

            let expected = pick(cell.obs_var);
            let tolerance = variance_tolerance(cell.m, true);
            var_checks.require(
                (obs.rank_variance - expected).abs() <= tolerance,
                format!(
                    "m {} {label} obs variance {:.1} vs {expected} +- {tolerance}",
                    cell.m, obs.rank_variance
                ),
            );
            let expected = pick(cell.member_var);
            let tolerance = variance_tolerance(cell.m, false);
            var_checks.require(
                (member.rank_variance - expected).abs() <= tolerance,
                format!(
                    "m {} {label} member variance {:.1} vs {expected} +- {tolerance}",
                    cell.m, member.rank_variance
                ),
            );
        }
    }
    let elapsed = start.elapsed();
    mean_checks.require(
        elapsed.as_secs_f64() < 120.0,
        format!("runtime {:.1}s < 120s", elapsed.as_secs_f64()),
    );
    Ok((
        mean_checks.into_result(
            "table-mean-ranks",
            "mean observation and member ranks match the reference cells",
        ),
        var_checks.into_result(
            "table-rank-variances",
            "observation and member rank variances match the reference cells",
        ),
    ))
}

/// Monte Carlo agreement with the closed-form pre-rank moments in the
/// fully-dependent-observation regime (m = 20, d = 5, 30000 cases): the four
/// pre-rank variances and the cross-component rank covariance land within 5%
/// of their formulas.
pub fn criterion_appendix_regime() -> Result<CriterionResult> {
    let m = 20;
    let d = 5;
    let n_cases = 30_000u64;
    let source = RandomSource::new(APPENDIX_SEED);

    struct CaseStats {
        member_avg: f64,
        member_bd: f64,
        obs_avg: f64,
        obs_bd: f64,
        obs_rank_0: f64,
        obs_rank_1: f64,
    }

    let stats: Vec<CaseStats> = (0..n_cases)
        .into_par_iter()
        .map(|case_index| {
            let case = appendix_regime_case(m, d, case_index, &source)?;
            let table = univariate_ranks(&case);
            let avg = average_from_table(&table);
            let bd = band_depth_from_table(&table);
            let member = source
                .substream(case_index, StreamPurpose::MemberPick)
                .random_range(0..m - 1);
            Ok(CaseStats {
                member_avg: avg.values()[member],
                member_bd: bd.values()[member],
                obs_avg: avg.observation_prerank(),
                obs_bd: bd.observation_prerank(),
                obs_rank_0: f64::from(table.rank(m - 1, 0)),
                obs_rank_1: f64::from(table.rank(m - 1, 1)),
            })
        })
        .collect::<Result<_>>()?;

    let n = stats.len() as f64;
    let variance = |values: &dyn Fn(&CaseStats) -> f64| {
        let mean = stats.iter().map(values).sum::<f64>() / n;
        stats
            .iter()
            .map(|s| (values(s) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    };
    let mean_0 = stats.iter().map(|s| s.obs_rank_0).sum::<f64>() / n;
    let mean_1 = stats.iter().map(|s| s.obs_rank_1).sum::<f64>() / n;
    let covariance = stats
        .iter()
        .map(|s| (s.obs_rank_0 - mean_0) * (s.obs_rank_1 - mean_1))
        .sum::<f64>()
        / (n - 1.0);

    let reference = oracle::prerank_variances(m as u64, d as u64)?;
    let derived = oracle::prerank_variances_derived(m as u64, d as u64)?;
    let reference_cov = oracle::rank_covariance(m as u64)?;
    let mut checks = Checks::new();
    let relative_gap = |measured: f64, expected: f64| (measured - expected).abs() / expected;
    let within = |checks: &mut Checks, name: &str, measured: f64, expected: f64| {
        let relative = relative_gap(measured, expected);
        checks.require(
            relative <= 0.05,
            format!("{name}: {measured:.2} vs {expected:.2} ({:.1}%)", relative * 100.0),
        );
    };
    let member_bd = variance(&|s| s.member_bd);
    let obs_bd = variance(&|s| s.obs_bd);
    within(&mut checks, "member avg variance", variance(&|s| s.member_avg), reference.avg_member);
    within(&mut checks, "obs avg variance", variance(&|s| s.obs_avg), reference.avg_obs);
    within(&mut checks, "member bd variance", member_bd, reference.bd_member);
    within(&mut checks, "obs bd variance", obs_bd, reference.bd_obs);
    within(&mut checks, "rank covariance", covariance, reference_cov);
    // The stated band depth variances do not follow from the power-sum
    // derivation; report how the same measurements compare to the
    // derivation-consistent values.
    checks.note(format!(
        "derivation-consistent member bd variance {:.2}: measured off by {:.1}%",
        derived.bd_member,
        relative_gap(member_bd, derived.bd_member) * 100.0
    ));
    checks.note(format!(
        "derivation-consistent obs bd variance {:.2}: measured off by {:.1}%",
        derived.bd_obs,
        relative_gap(obs_bd, derived.bd_obs) * 100.0
    ));
    Ok(checks.into_result(
        "appendix-regime",
        "Monte Carlo pre-rank moments match the closed forms within 5%",
    ))
}
