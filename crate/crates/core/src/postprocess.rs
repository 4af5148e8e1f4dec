//! Statistical postprocessing of forecast trajectory series.
//!
//! For each verification day, a rolling training window of the preceding
//! days supplies a per-lead-time linear bias correction of the ensemble
//! mean; a new ensemble is then built by dressing the corrected prediction
//! with the training errors. Dependence between lead times is modeled by
//! one of three strategies:
//!
//! - **independent** — errors are shuffled independently per lead time, so
//!   the dressed ensemble carries no cross-lead dependence;
//! - **ecc** — the dressed samples are reordered per lead time to follow the
//!   raw ensemble's rank patterns (empirical copula coupling);
//! - **mvn** — errors are drawn from a zero-mean multivariate normal with
//!   the empirical covariance of the training error vectors.
//!
//! Error dressing uses each of the training window's errors exactly once
//! per lead time (a permutation rather than a bootstrap), which fixes the
//! postprocessed ensemble size at `window` members and makes it directly
//! compatible with an equally sized raw template for the ecc strategy.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::case::ForecastCase;
use crate::error::{Error, Result};
use crate::histogram::RankHistogram;
use crate::prerank::PreRankMethod;
use crate::ranking::rank_within;
use crate::rng::{RandomSource, StreamPurpose, SubstreamRng};
use crate::simulate::cholesky_with_jitter;

/// One day of a series: the raw ensemble (`m_raw × d`) and the observed
/// trajectory (`d` lead times).
#[derive(Clone, Debug, PartialEq)]
pub struct DayRecord {
    pub day: i64,
    pub raw_members: Vec<Vec<f64>>,
    pub observation: Vec<f64>,
}

impl DayRecord {
    /// Mean of the raw members at lead time `lead`.
    fn raw_mean(&self, lead: usize) -> f64 {
        let sum: f64 = self.raw_members.iter().map(|member| member[lead]).sum();
        sum / self.raw_members.len() as f64
    }
}

/// An ordered sequence of forecast days with consistent shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastSeries {
    days: Vec<DayRecord>,
    d: usize,
    m_raw: usize,
}

impl ForecastSeries {
    pub fn new(days: Vec<DayRecord>) -> Result<Self> {
        let first = days
            .first()
            .ok_or_else(|| Error::InvalidSeries("series holds no days".into()))?;
        let d = first.observation.len();
        let m_raw = first.raw_members.len();
        if d == 0 {
            return Err(Error::InvalidSeries("zero lead times".into()));
        }
        if m_raw == 0 {
            return Err(Error::InvalidSeries("zero raw members".into()));
        }
        let mut previous_day = None;
        for record in &days {
            if record.observation.len() != d || record.raw_members.len() != m_raw {
                return Err(Error::InvalidSeries(format!(
                    "day {}: inconsistent shape (expected {m_raw} members x {d} lead times)",
                    record.day
                )));
            }
            for member in &record.raw_members {
                if member.len() != d {
                    return Err(Error::InvalidSeries(format!(
                        "day {}: member of length {} (expected {d})",
                        record.day,
                        member.len()
                    )));
                }
                if member.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSeries(format!(
                        "day {}: non-finite member value",
                        record.day
                    )));
                }
            }
            if record.observation.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSeries(format!(
                    "day {}: non-finite observation",
                    record.day
                )));
            }
            if let Some(previous) = previous_day {
                if record.day <= previous {
                    return Err(Error::InvalidSeries(format!(
                        "days not strictly increasing at {}",
                        record.day
                    )));
                }
            }
            previous_day = Some(record.day);
        }
        Ok(Self { days, d, m_raw })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn raw_members(&self) -> usize {
        self.m_raw
    }

    pub fn day(&self, index: usize) -> &DayRecord {
        &self.days[index]
    }

    pub fn days(&self) -> impl Iterator<Item = &DayRecord> {
        self.days.iter()
    }
}

/// Dependence model applied to the dressed ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DependenceStrategy {
    Independent,
    Ecc,
    Mvn,
}

impl DependenceStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            DependenceStrategy::Independent => "independent",
            DependenceStrategy::Ecc => "ecc",
            DependenceStrategy::Mvn => "mvn",
        }
    }
}

impl std::fmt::Display for DependenceStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Pipeline configuration: training-window length, dependence strategy and
/// the inflation switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PostprocessConfig {
    pub window: usize,
    pub strategy: DependenceStrategy,
    pub inflate: bool,
}

impl PostprocessConfig {
    pub fn new(window: usize, strategy: DependenceStrategy, inflate: bool) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidParameter(
                "training window must hold at least 2 days".into(),
            ));
        }
        Ok(Self {
            window,
            strategy,
            inflate,
        })
    }
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            window: 50,
            strategy: DependenceStrategy::Independent,
            inflate: true,
        }
    }
}

/// Ordinary least squares fit of observation on ensemble mean for one lead
/// time, with the sufficient statistics needed for prediction intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeadFit {
    pub intercept: f64,
    pub slope: f64,
    pub residual_sum_squares: f64,
    pub n: usize,
    pub predictor_mean: f64,
    pub predictor_sum_squares: f64,
}

impl LeadFit {
    pub fn predict(&self, predictor: f64) -> f64 {
        self.intercept + self.slope * predictor
    }

    /// Standard-error multiplier for a prediction at `predictor`:
    /// `sqrt(1 + 1/n + (x − x̄)^2 / Sxx)`. With a degenerate predictor
    /// (`Sxx == 0`) the regression term is absent.
    pub fn inflation_factor(&self, predictor: f64) -> f64 {
        let base = 1.0 + 1.0 / self.n as f64;
        if self.predictor_sum_squares > 0.0 {
            let diff = predictor - self.predictor_mean;
            (base + diff * diff / self.predictor_sum_squares).sqrt()
        } else {
            base.sqrt()
        }
    }
}

/// Per-lead-time regression fits for one verification day.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    leads: Vec<LeadFit>,
}

impl RegressionFit {
    pub fn lead(&self, lead: usize) -> &LeadFit {
        &self.leads[lead]
    }

    pub fn leads(&self) -> &[LeadFit] {
        &self.leads
    }
}

fn training_range(series: &ForecastSeries, day_index: usize, window: usize) -> Result<std::ops::Range<usize>> {
    if day_index < window || day_index >= series.len() {
        return Err(Error::InsufficientHistory {
            day: day_index,
            window,
        });
    }
    Ok(day_index - window..day_index)
}

/// Fit the per-lead-time bias correction from the `window` days preceding
/// `day_index`. Days without enough history signal a skip.
pub fn fit_bias_correction(
    series: &ForecastSeries,
    day_index: usize,
    config: &PostprocessConfig,
) -> Result<RegressionFit> {
    let range = training_range(series, day_index, config.window)?;
    let n = config.window as f64;
    let leads = (0..series.dim())
        .map(|lead| {
            let mut sum_x = 0.0;
            let mut sum_y = 0.0;
            for t in range.clone() {
                let record = series.day(t);
                sum_x += record.raw_mean(lead);
                sum_y += record.observation[lead];
            }
            let mean_x = sum_x / n;
            let mean_y = sum_y / n;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for t in range.clone() {
                let record = series.day(t);
                let dx = record.raw_mean(lead) - mean_x;
                let dy = record.observation[lead] - mean_y;
                sxx += dx * dx;
                sxy += dx * dy;
            }
            // A constant predictor leaves the slope undefined; fall back to
            // the training-mean forecast.
            let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let intercept = mean_y - slope * mean_x;
            let residual_sum_squares = range
                .clone()
                .map(|t| {
                    let record = series.day(t);
                    let residual =
                        record.observation[lead] - (intercept + slope * record.raw_mean(lead));
                    residual * residual
                })
                .sum();
            LeadFit {
                intercept,
                slope,
                residual_sum_squares,
                n: config.window,
                predictor_mean: mean_x,
                predictor_sum_squares: sxx,
            }
        })
        .collect();
    Ok(RegressionFit { leads })
}

/// Bias-corrected training errors, one row per training day (`window × d`).
fn training_errors(
    series: &ForecastSeries,
    day_index: usize,
    fit: &RegressionFit,
    window: usize,
) -> Result<Vec<Vec<f64>>> {
    let range = training_range(series, day_index, window)?;
    Ok(range
        .map(|t| {
            let record = series.day(t);
            (0..series.dim())
                .map(|lead| record.observation[lead] - fit.lead(lead).predict(record.raw_mean(lead)))
                .collect()
        })
        .collect())
}

/// Corrected ensemble-mean prediction and per-lead inflation factors for the
/// verification day.
fn corrected_prediction(
    series: &ForecastSeries,
    day_index: usize,
    fit: &RegressionFit,
    inflate: bool,
) -> (Vec<f64>, Vec<f64>) {
    let record = series.day(day_index);
    let mut mu = Vec::with_capacity(series.dim());
    let mut factors = Vec::with_capacity(series.dim());
    for lead in 0..series.dim() {
        let predictor = record.raw_mean(lead);
        let lead_fit = fit.lead(lead);
        mu.push(lead_fit.predict(predictor));
        factors.push(if inflate {
            lead_fit.inflation_factor(predictor)
        } else {
            1.0
        });
    }
    (mu, factors)
}

/// Dress the corrected prediction with the training errors.
///
/// Member `j` at lead `i` is `mu_i + c_i · e_{i,p_i(j)}` where `p_i` is an
/// independent random permutation per lead time, so every training error is
/// used exactly once per lead and the dressed ensemble carries no cross-lead
/// dependence. Returns `window` members.
pub fn error_dressing(
    series: &ForecastSeries,
    day_index: usize,
    fit: &RegressionFit,
    config: &PostprocessConfig,
    rng: &mut SubstreamRng,
) -> Result<Vec<Vec<f64>>> {
    let errors = training_errors(series, day_index, fit, config.window)?;
    let (mu, factors) = corrected_prediction(series, day_index, fit, config.inflate);
    let window = config.window;
    let mut members = vec![vec![0.0; series.dim()]; window];
    let mut order: Vec<usize> = (0..window).collect();
    for lead in 0..series.dim() {
        order.shuffle(rng);
        for (member, &pick) in members.iter_mut().zip(order.iter()) {
            member[lead] = mu[lead] + factors[lead] * errors[pick][lead];
        }
    }
    Ok(members)
}

/// Reorder `samples` per lead time to follow the rank patterns of `template`.
///
/// At each lead time the sorted sample values are assigned to members in the
/// order of the template's ranks (template ties broken by member index), so
/// per-lead multisets are preserved exactly while the cross-lead rank
/// dependence becomes the template's.
pub fn ecc_reorder(template: &[Vec<f64>], samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if template.len() != samples.len() {
        return Err(Error::EnsembleShapeMismatch {
            template: template.len(),
            samples: samples.len(),
        });
    }
    let n = template.len();
    let d = template.first().map_or(0, Vec::len);
    if samples.iter().chain(template.iter()).any(|row| row.len() != d) {
        return Err(Error::InvalidSeries(
            "template and samples must share lead-time count".into(),
        ));
    }
    let mut reordered = vec![vec![0.0; d]; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut sorted_values: Vec<f64> = Vec::with_capacity(n);
    for lead in 0..d {
        order.clear();
        order.extend(0..n);
        // Stable sort: template ties resolve by member index.
        order.sort_by(|&a, &b| {
            template[a][lead]
                .partial_cmp(&template[b][lead])
                .expect("finite ensemble values")
        });
        sorted_values.clear();
        sorted_values.extend(samples.iter().map(|row| row[lead]));
        sorted_values.sort_by(|a, b| a.partial_cmp(b).expect("finite ensemble values"));
        for (position, &member) in order.iter().enumerate() {
            reordered[member][lead] = sorted_values[position];
        }
    }
    Ok(reordered)
}

/// Draw the dressed ensemble from a zero-mean multivariate normal with the
/// empirical covariance of the training error vectors.
///
/// The per-lead inflation factors scale the drawn error components, which
/// inflates variances by `c_i^2` while preserving the error correlation.
/// Returns `window` members.
pub fn mvn_error_sampling(
    series: &ForecastSeries,
    day_index: usize,
    fit: &RegressionFit,
    config: &PostprocessConfig,
    rng: &mut SubstreamRng,
) -> Result<Vec<Vec<f64>>> {
    let errors = training_errors(series, day_index, fit, config.window)?;
    let (mu, factors) = corrected_prediction(series, day_index, fit, config.inflate);
    let d = series.dim();
    let n = config.window;

    // Error rows have zero mean per lead by the least-squares construction.
    let mut covariance = nalgebra::DMatrix::zeros(d, d);
    for row in &errors {
        for i in 0..d {
            for j in i..d {
                covariance[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let value = covariance[(i, j)] / (n as f64 - 1.0);
            covariance[(i, j)] = value;
            covariance[(j, i)] = value;
        }
    }

    let zero_errors = covariance.iter().all(|&v| v == 0.0);
    let lower = if zero_errors {
        nalgebra::DMatrix::zeros(d, d)
    } else {
        cholesky_with_jitter(covariance)?
    };

    let mut members = vec![vec![0.0; d]; n];
    let mut z = vec![0.0; d];
    for member in members.iter_mut() {
        for value in z.iter_mut() {
            *value = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += lower[(i, j)] * z[j];
            }
            member[i] = mu[i] + factors[i] * acc;
        }
    }
    Ok(members)
}

/// Postprocessed ensemble for one verification day under the configured
/// dependence strategy.
pub fn postprocess_day(
    series: &ForecastSeries,
    day_index: usize,
    config: &PostprocessConfig,
    source: &RandomSource,
) -> Result<Vec<Vec<f64>>> {
    let fit = fit_bias_correction(series, day_index, config)?;
    let key = day_index as u64;
    match config.strategy {
        DependenceStrategy::Independent => {
            let mut rng = source.substream(key, StreamPurpose::DressingShuffle);
            error_dressing(series, day_index, &fit, config, &mut rng)
        }
        DependenceStrategy::Ecc => {
            let mut rng = source.substream(key, StreamPurpose::DressingShuffle);
            let dressed = error_dressing(series, day_index, &fit, config, &mut rng)?;
            ecc_reorder(&series.day(day_index).raw_members, &dressed)
        }
        DependenceStrategy::Mvn => {
            let mut rng = source.substream(key, StreamPurpose::MvnDraw);
            mvn_error_sampling(series, day_index, &fit, config, &mut rng)
        }
    }
}

/// Verification artifacts of a full pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// Multivariate rank histogram per requested method (`m = window + 1`).
    pub multivariate: Vec<(PreRankMethod, RankHistogram)>,
    /// Univariate rank histogram per lead time (`m = window + 1`).
    pub univariate: Vec<RankHistogram>,
    /// Number of verification days (all days with a full training window).
    pub n_verification_days: usize,
}

/// Run the rolling pipeline over every day with a full training window.
pub fn run_pipeline(
    series: &ForecastSeries,
    config: &PostprocessConfig,
    methods: &[PreRankMethod],
    source: &RandomSource,
) -> Result<PipelineResult> {
    if series.len() <= config.window {
        return Err(Error::InvalidSeries(format!(
            "series has {} days; the pipeline needs at least {} (window {} plus one verification day)",
            series.len(),
            config.window + 1,
            config.window
        )));
    }
    if config.strategy == DependenceStrategy::Ecc && series.raw_members() != config.window {
        return Err(Error::InvalidSeries(format!(
            "ecc needs a raw template with exactly window = {} members, series has {}",
            config.window,
            series.raw_members()
        )));
    }
    let d = series.dim();
    let rank_count = config.window + 1;
    let mut multivariate: Vec<(PreRankMethod, RankHistogram)> = methods
        .iter()
        .map(|&method| Ok((method, RankHistogram::empty(rank_count)?)))
        .collect::<Result<_>>()?;
    let mut univariate: Vec<RankHistogram> = (0..d)
        .map(|_| RankHistogram::empty(rank_count))
        .collect::<Result<_>>()?;

    let mut column = vec![0.0; rank_count];
    for day_index in config.window..series.len() {
        let members = postprocess_day(series, day_index, config, source)?;
        let key = day_index as u64;
        let observation = &series.day(day_index).observation;

        let mut univariate_rng = source.substream(key, StreamPurpose::TieUnivariate);
        for lead in 0..d {
            for (slot, member) in column.iter_mut().zip(members.iter()) {
                *slot = member[lead];
            }
            column[rank_count - 1] = observation[lead];
            let rank = rank_within(&column, rank_count - 1, &mut univariate_rng);
            univariate[lead].record(rank)?;
        }

        let case = ForecastCase::new(key, &members, observation)?;
        for (method, histogram) in multivariate.iter_mut() {
            let preranks = method.compute(&case)?;
            let mut tie_rng = source.substream(key, method.tie_purpose());
            let rank = rank_within(preranks.values(), rank_count - 1, &mut tie_rng);
            histogram.record(rank)?;
        }
    }
    Ok(PipelineResult {
        multivariate,
        univariate,
        n_verification_days: series.len() - config.window,
    })
}

/// Parameters of the synthetic series generator.
///
/// The truth trajectory is a zero-mean Gaussian process with exponential
/// correlation decay (`tau`) and unit marginals. A share `skill` of its
/// variance comes from a predictable daily signal; raw members see the
/// signal but distort the forecast with an additive `bias`, a multiplicative
/// `spread` factor and member noise whose correlation decays with
/// `tau + tau_offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSeriesSpec {
    pub days: usize,
    pub d: usize,
    pub m_raw: usize,
    pub tau: f64,
    pub skill: f64,
    pub bias: f64,
    pub spread: f64,
    pub tau_offset: f64,
    pub seed: u64,
}

impl Default for SyntheticSeriesSpec {
    /// Desk-scale defaults: 12 lead times, 50 raw members, 873 days (823
    /// verification days with the default window of 50), a biased and
    /// underdispersed raw ensemble over a persistent truth.
    fn default() -> Self {
        Self {
            days: 873,
            d: 12,
            m_raw: 50,
            tau: 3.0,
            skill: 0.5,
            bias: 1.0,
            spread: 0.7,
            tau_offset: 0.0,
            seed: 0,
        }
    }
}

/// Generate a synthetic forecast/observation series.
pub fn synthetic_series(spec: &SyntheticSeriesSpec) -> Result<ForecastSeries> {
    if spec.days == 0 || spec.d == 0 || spec.m_raw == 0 {
        return Err(Error::InvalidParameter(
            "synthetic series needs days >= 1, d >= 1 and members >= 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&spec.skill) {
        return Err(Error::InvalidParameter(format!(
            "skill must lie in [0, 1), got {}",
            spec.skill
        )));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(spec.spread) || !positive(spec.tau) || !positive(spec.tau + spec.tau_offset) {
        return Err(Error::InvalidParameter(
            "spread, tau and tau + tau_offset must be positive".into(),
        ));
    }
    let truth_cov = crate::simulate::CovarianceModel::new(
        crate::simulate::CovarianceKind::Ar1Exponential { tau: spec.tau },
        spec.d,
    )?;
    let noise_cov = crate::simulate::CovarianceModel::new(
        crate::simulate::CovarianceKind::Ar1Exponential {
            tau: spec.tau + spec.tau_offset,
        },
        spec.d,
    )?;
    let truth_lower = cholesky_with_jitter(truth_cov.matrix())?;
    let noise_lower = cholesky_with_jitter(noise_cov.matrix())?;
    let signal_scale = spec.skill.sqrt();
    let noise_scale = (1.0 - spec.skill).sqrt();
    let d = spec.d;

    let source = RandomSource::new(spec.seed);
    let mut z = vec![0.0; d];
    let mut correlated = vec![0.0; d];
    let draw_correlated = |rng: &mut SubstreamRng,
                               lower: &nalgebra::DMatrix<f64>,
                               z: &mut [f64],
                               out: &mut [f64]| {
        for value in z.iter_mut() {
            *value = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += lower[(i, j)] * z[j];
            }
            out[i] = acc;
        }
    };

    let days = (0..spec.days)
        .map(|day| {
            let mut rng = source.substream(day as u64, StreamPurpose::SeriesDraw);
            let mut signal = vec![0.0; d];
            draw_correlated(&mut rng, &truth_lower, &mut z, &mut correlated);
            for (s, c) in signal.iter_mut().zip(correlated.iter()) {
                *s = signal_scale * c;
            }
            draw_correlated(&mut rng, &truth_lower, &mut z, &mut correlated);
            let observation: Vec<f64> = signal
                .iter()
                .zip(correlated.iter())
                .map(|(s, c)| s + noise_scale * c)
                .collect();
            let raw_members: Vec<Vec<f64>> = (0..spec.m_raw)
                .map(|_| {
                    draw_correlated(&mut rng, &noise_lower, &mut z, &mut correlated);
                    signal
                        .iter()
                        .zip(correlated.iter())
                        .map(|(s, c)| spec.bias + spec.spread * (s + noise_scale * c))
                        .collect()
                })
                .collect();
            DayRecord {
                day: day as i64,
                raw_members,
                observation,
            }
        })
        .collect();
    ForecastSeries::new(days)
}
