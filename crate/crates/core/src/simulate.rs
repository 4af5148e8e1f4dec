//! Gaussian scenario generators for calibration experiments.
//!
//! A scenario draws, for each case, one observation vector from an
//! observation model and `m − 1` member vectors from a forecast model, then
//! ranks the observation under one or more pre-rank methods. Covariance
//! kinds cover the experiment catalog: scaled identity (bias/dispersion
//! studies), exponential autoregressive decay, and three fixed correlation
//! shapes (damped cosine, long range, truncated linear) that deviate from
//! the exponential model at short or long lags.
//!
//! Sampling is reproducible: case `i` consumes only substreams keyed by `i`,
//! with the observation drawn first and members in order, so histograms are
//! identical regardless of parallel scheduling.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::case::ForecastCase;
use crate::error::{Error, Result};
use crate::histogram::{accumulate_histogram, RankHistogram};
use crate::prerank::PreRankMethod;
use crate::ranking::rank_of_element;
use crate::rng::{RandomSource, StreamPurpose, SubstreamRng};

/// Diagonal jitter added once if the factorization of a valid but
/// numerically semi-definite covariance fails.
const CHOLESKY_JITTER: f64 = 1e-10;

/// Supported covariance shapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovarianceKind {
    /// `sigma^2 · I`: independent components with common scale.
    IdentityScaled { sigma: f64 },
    /// `exp(−|i − j| / tau)`: exponential decay in the lag, `tau > 0`.
    Ar1Exponential { tau: f64 },
    /// `exp(−|i − j| / 4.5) · (0.75 + 0.25 cos(π |i − j| / 2))`: a damped
    /// cosine oscillating around the exponential decay.
    DampedCosine,
    /// `(1 + |i − j| / 2.5)^−1`: much stronger correlation at large lags.
    LongRange,
    /// `max(0, 1 − |i − j| / 5)`: zero correlation beyond lag 5.
    TruncatedLinear,
}

/// A symmetric positive semi-definite `d × d` covariance specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceModel {
    kind: CovarianceKind,
    d: usize,
}

impl CovarianceModel {
    pub fn new(kind: CovarianceKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        match kind {
            CovarianceKind::IdentityScaled { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "identity scale sigma must be positive, got {sigma}"
                )));
            }
            CovarianceKind::Ar1Exponential { tau } if !(tau > 0.0 && tau.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "decay scale tau must be positive, got {tau}"
                )));
            }
            _ => {}
        }
        Ok(Self { kind, d })
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Covariance between components `i` and `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lag = i.abs_diff(j) as f64;
        match self.kind {
            CovarianceKind::IdentityScaled { sigma } => {
                if i == j {
                    sigma * sigma
                } else {
                    0.0
                }
            }
            CovarianceKind::Ar1Exponential { tau } => (-lag / tau).exp(),
            CovarianceKind::DampedCosine => {
                (-lag / 4.5).exp() * (0.75 + 0.25 * (PI * lag / 2.0).cos())
            }
            CovarianceKind::LongRange => 1.0 / (1.0 + lag / 2.5),
            CovarianceKind::TruncatedLinear => {
                if lag <= 5.0 {
                    1.0 - lag / 5.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Dense covariance matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self.entry(i, j))
    }
}

/// Lower-triangular factorization with a single jitter retry.
pub(crate) fn cholesky_with_jitter(matrix: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = matrix.nrows();
    match Cholesky::new(matrix.clone()) {
        Some(chol) => Ok(chol.unpack()),
        None => {
            let jittered = matrix + DMatrix::identity(d, d) * CHOLESKY_JITTER;
            Cholesky::new(jittered)
                .map(|chol| chol.unpack())
                .ok_or(Error::NotPositiveDefinite)
        }
    }
}

/// A Gaussian distribution for one side of a scenario (observation or
/// forecast): mean vector plus covariance model.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianModel {
    mean: Vec<f64>,
    cov: CovarianceModel,
}

impl GaussianModel {
    pub fn new(mean: Vec<f64>, cov: CovarianceModel) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::InvalidParameter(format!(
                "mean of length {} for covariance dimension {}",
                mean.len(),
                cov.dim()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean".into()));
        }
        Ok(Self { mean, cov })
    }

    /// Independent components with common mean and standard deviation.
    pub fn iid(mu: f64, sigma: f64, d: usize) -> Result<Self> {
        Self::new(
            vec![mu; d],
            CovarianceModel::new(CovarianceKind::IdentityScaled { sigma }, d)?,
        )
    }

    /// Zero-mean process with exponential correlation decay and unit marginals.
    pub fn ar1(tau: f64, d: usize) -> Result<Self> {
        Self::new(
            vec![0.0; d],
            CovarianceModel::new(CovarianceKind::Ar1Exponential { tau }, d)?,
        )
    }

    /// Zero-mean process with one of the fixed correlation shapes.
    pub fn correlation(kind: CovarianceKind, d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], CovarianceModel::new(kind, d)?)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &CovarianceModel {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }
}

/// Parse a scenario catalog name: `iid:<mu>:<sigma>`, `ar1:<tau>`,
/// `corr-a`, `corr-b` or `corr-c`.
pub fn parse_scenario(name: &str, d: usize) -> Result<GaussianModel> {
    let bad = |msg: String| Error::InvalidParameter(msg);
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    let parse_f64 = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(format!("scenario `{name}`: cannot parse {what} `{s}`")))
    };
    match (head, args.as_slice()) {
        ("iid", [mu, sigma]) => GaussianModel::iid(
            parse_f64(mu, "mean")?,
            parse_f64(sigma, "standard deviation")?,
            d,
        ),
        ("ar1", [tau]) => GaussianModel::ar1(parse_f64(tau, "decay scale")?, d),
        ("corr-a", []) => GaussianModel::correlation(CovarianceKind::DampedCosine, d),
        ("corr-b", []) => GaussianModel::correlation(CovarianceKind::LongRange, d),
        ("corr-c", []) => GaussianModel::correlation(CovarianceKind::TruncatedLinear, d),
        _ => Err(bad(format!(
            "unknown scenario `{name}` (expected iid:<mu>:<sigma>, ar1:<tau>, corr-a, corr-b or corr-c)"
        ))),
    }
}

/// Full description of one simulation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    obs: GaussianModel,
    fcst: GaussianModel,
    set_size: usize,
    n_cases: u64,
    seed: u64,
}

impl ScenarioConfig {
    pub fn new(
        obs: GaussianModel,
        fcst: GaussianModel,
        set_size: usize,
        n_cases: u64,
        seed: u64,
    ) -> Result<Self> {
        if obs.dim() != fcst.dim() {
            return Err(Error::InvalidParameter(format!(
                "observation dimension {} differs from forecast dimension {}",
                obs.dim(),
                fcst.dim()
            )));
        }
        if set_size < 2 {
            return Err(Error::InvalidParameter(
                "set size m must be at least 2".into(),
            ));
        }
        if n_cases == 0 {
            return Err(Error::InvalidParameter(
                "scenario needs at least one case".into(),
            ));
        }
        Ok(Self {
            obs,
            fcst,
            set_size,
            n_cases,
            seed,
        })
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn dim(&self) -> usize {
        self.obs.dim()
    }

    pub fn n_cases(&self) -> u64 {
        self.n_cases
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Flattened lower-triangular factor for fast repeated sampling.
struct FlatFactor {
    d: usize,
    lower: Vec<f64>,
    mean: Vec<f64>,
}

impl FlatFactor {
    fn new(model: &GaussianModel) -> Result<Self> {
        let lower_matrix = cholesky_with_jitter(model.covariance().matrix())?;
        let d = model.dim();
        let mut lower = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                lower[i * d + j] = lower_matrix[(i, j)];
            }
        }
        Ok(Self {
            d,
            lower,
            mean: model.mean().to_vec(),
        })
    }

    /// Draw one vector into `out`, consuming `d` standard normals.
    fn sample_into(&self, rng: &mut SubstreamRng, z: &mut [f64], out: &mut [f64]) {
        for value in z.iter_mut() {
            *value = rng.sample(StandardNormal);
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.lower[i * self.d..i * self.d + i + 1];
            let mut acc = self.mean[i];
            for (l, zj) in row.iter().zip(z.iter()) {
                acc += l * zj;
            }
            *slot = acc;
        }
    }
}

/// Sampler with precomputed factors, reusable across all cases of a scenario.
pub struct ScenarioSampler {
    obs: FlatFactor,
    fcst: FlatFactor,
    set_size: usize,
    d: usize,
}

impl ScenarioSampler {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        Ok(Self {
            obs: FlatFactor::new(&config.obs)?,
            fcst: FlatFactor::new(&config.fcst)?,
            set_size: config.set_size,
            d: config.dim(),
        })
    }

    /// Sample case `case_index`: the observation is drawn first, then the
    /// members in order, all from the case's sampling substream.
    pub fn sample_case(&self, case_index: u64, source: &RandomSource) -> ForecastCase {
        let mut rng = source.substream(case_index, StreamPurpose::Sample);
        let (m, d) = (self.set_size, self.d);
        let mut values = vec![0.0; m * d];
        let mut z = vec![0.0; d];
        let (member_rows, obs_row) = values.split_at_mut((m - 1) * d);
        self.obs.sample_into(&mut rng, &mut z, obs_row);
        for row in member_rows.chunks_exact_mut(d) {
            self.fcst.sample_into(&mut rng, &mut z, row);
        }
        ForecastCase::from_flat(case_index, values, d).expect("sampler output is valid")
    }
}

/// Draw one case from a scenario without retaining the sampler.
pub fn sample_gaussian_case(
    config: &ScenarioConfig,
    case_index: u64,
    source: &RandomSource,
) -> Result<ForecastCase> {
    Ok(ScenarioSampler::new(config)?.sample_case(case_index, source))
}

/// One case of the analytically tractable regime: the observation's
/// components are all equal to a single standard normal draw while members
/// have independent standard normal components.
pub fn appendix_regime_case(
    m: usize,
    d: usize,
    case_index: u64,
    source: &RandomSource,
) -> Result<ForecastCase> {
    if m < 2 || d == 0 {
        return Err(Error::InvalidParameter(
            "regime case needs m >= 2 and d >= 1".into(),
        ));
    }
    let mut rng = source.substream(case_index, StreamPurpose::Sample);
    let mut values = vec![0.0; m * d];
    let (member_rows, obs_row) = values.split_at_mut((m - 1) * d);
    let shared: f64 = rng.sample(StandardNormal);
    obs_row.fill(shared);
    for value in member_rows.iter_mut() {
        *value = rng.sample(StandardNormal);
    }
    ForecastCase::from_flat(case_index, values, d)
}

/// Observation and tracked-member ranks of every case, for one method.
#[derive(Clone, Debug)]
pub struct MethodRanks {
    pub method: PreRankMethod,
    /// Rank of the observation, one entry per case.
    pub observation: Vec<u32>,
    /// Rank of a randomly selected member, one entry per case; the selected
    /// member is shared across methods within a case.
    pub member: Vec<u32>,
}

impl MethodRanks {
    pub fn observation_histogram(&self, m: usize) -> Result<RankHistogram> {
        accumulate_histogram(self.observation.iter().copied(), m)
    }

    pub fn member_histogram(&self, m: usize) -> Result<RankHistogram> {
        accumulate_histogram(self.member.iter().copied(), m)
    }
}

/// Run a scenario under several pre-rank methods over shared samples.
///
/// Each method resolves ties from its own substream, so the ranks produced
/// for a method are identical whether it runs alone or alongside others.
pub fn run_scenario_multi(
    config: &ScenarioConfig,
    methods: &[PreRankMethod],
) -> Result<Vec<MethodRanks>> {
    let sampler = ScenarioSampler::new(config)?;
    let source = RandomSource::new(config.seed);
    let per_case: Vec<Vec<(u32, u32)>> = (0..config.n_cases)
        .into_par_iter()
        .map(|case_index| {
            rank_one_case(&sampler.sample_case(case_index, &source), methods, &source)
                .map_err(|e| e.for_case(case_index))
        })
        .collect::<Result<_>>()?;
    Ok(collect_method_ranks(methods, per_case))
}

/// Rank one case's observation and one randomly selected member under each
/// method. The member pick is drawn first from its own substream; each
/// method's tie substream then resolves the observation rank before the
/// member rank.
pub(crate) fn rank_one_case(
    case: &ForecastCase,
    methods: &[PreRankMethod],
    source: &RandomSource,
) -> Result<Vec<(u32, u32)>> {
    let m = case.set_size();
    let key = case.case_id().stream_key();
    let member_index = source
        .substream(key, StreamPurpose::MemberPick)
        .random_range(0..m - 1);
    // The rank table feeds both rank-based pre-ranks; build it once.
    let table = methods
        .iter()
        .any(|m| matches!(m, PreRankMethod::BandDepth | PreRankMethod::Average))
        .then(|| crate::prerank::univariate_ranks(case));
    methods
        .iter()
        .map(|method| {
            let preranks = match (method, &table) {
                (PreRankMethod::BandDepth, Some(table)) => {
                    crate::prerank::band_depth_from_table(table)
                }
                (PreRankMethod::Average, Some(table)) => {
                    crate::prerank::average_from_table(table)
                }
                _ => method.compute(case)?,
            };
            let mut tie_rng = source.substream(key, method.tie_purpose());
            let obs_rank = rank_of_element(&preranks, m - 1, &mut tie_rng);
            let member_rank = rank_of_element(&preranks, member_index, &mut tie_rng);
            Ok((obs_rank, member_rank))
        })
        .collect()
}

pub(crate) fn collect_method_ranks(
    methods: &[PreRankMethod],
    per_case: Vec<Vec<(u32, u32)>>,
) -> Vec<MethodRanks> {
    methods
        .iter()
        .enumerate()
        .map(|(pos, &method)| MethodRanks {
            method,
            observation: per_case.iter().map(|ranks| ranks[pos].0).collect(),
            member: per_case.iter().map(|ranks| ranks[pos].1).collect(),
        })
        .collect()
}

/// Run a scenario under one method and histogram the observation ranks.
pub fn run_scenario(config: &ScenarioConfig, method: PreRankMethod) -> Result<RankHistogram> {
    let runs = run_scenario_multi(config, &[method])?;
    runs[0].observation_histogram(config.set_size)
}
