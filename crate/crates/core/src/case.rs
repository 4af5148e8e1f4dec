//! Forecast cases and pre-rank vectors.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::label_stream_key;

/// Opaque identifier of a verification case.
///
/// Simulated cases carry their case index; cases read from files carry the
/// label found in the input. Either form maps to a stream key for
/// reproducible tie resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    Index(u64),
    Label(String),
}

impl CaseId {
    /// Key used to derive this case's random substreams.
    ///
    /// Labels that are plain unsigned integers map to the same key as the
    /// corresponding index, so ranks computed from a dumped case file match
    /// the ranks computed when the cases were simulated.
    pub fn stream_key(&self) -> u64 {
        match self {
            CaseId::Index(i) => *i,
            CaseId::Label(s) => s.parse::<u64>().unwrap_or_else(|_| label_stream_key(s)),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseId::Index(i) => write!(f, "{i}"),
            CaseId::Label(s) => f.write_str(s),
        }
    }
}

impl From<u64> for CaseId {
    fn from(i: u64) -> Self {
        CaseId::Index(i)
    }
}

impl From<&str> for CaseId {
    fn from(s: &str) -> Self {
        CaseId::Label(s.to_owned())
    }
}

/// One verification instance: `m − 1` ensemble member vectors plus the
/// observation vector, all of dimension `d`.
///
/// The `m` vectors form the set over which pre-ranks are computed; the
/// observation is stored last and enters every pre-rank function exactly
/// like a member. Values are kept in one row-major buffer (`m × d`).
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastCase {
    values: Vec<f64>,
    m: usize,
    d: usize,
    case_id: CaseId,
}

impl ForecastCase {
    /// Build a case from member vectors and the observation vector.
    ///
    /// Requires at least one member, a common dimension `d ≥ 1` and finite
    /// entries throughout.
    pub fn new(
        case_id: impl Into<CaseId>,
        members: &[Vec<f64>],
        observation: &[f64],
    ) -> Result<Self> {
        let d = observation.len();
        let mut values = Vec::with_capacity((members.len() + 1) * d);
        for member in members {
            if member.len() != d {
                return Err(Error::InvalidCase(format!(
                    "member has dimension {}, observation has {d}",
                    member.len()
                )));
            }
            values.extend_from_slice(member);
        }
        values.extend_from_slice(observation);
        Self::from_flat(case_id, values, d)
    }

    /// Build a case from a row-major `m × d` buffer with the observation in
    /// the last row.
    pub fn from_flat(case_id: impl Into<CaseId>, values: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidCase("dimension must be at least 1".into()));
        }
        if !values.len().is_multiple_of(d) {
            return Err(Error::InvalidCase(format!(
                "buffer of {} values is not a multiple of dimension {d}",
                values.len()
            )));
        }
        let m = values.len() / d;
        if m < 2 {
            return Err(Error::InvalidCase(
                "need at least one member besides the observation (m >= 2)".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCase("non-finite value".into()));
        }
        Ok(Self {
            values,
            m,
            d,
            case_id: case_id.into(),
        })
    }

    /// Set size `m` (members plus observation).
    pub fn set_size(&self) -> usize {
        self.m
    }

    /// Dimension `d` of every vector.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn case_id(&self) -> &CaseId {
        &self.case_id
    }

    /// Element `i` of the set, `0..m`; the observation is element `m − 1`.
    pub fn element(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// The observation vector (last element of the set).
    pub fn observation(&self) -> &[f64] {
        self.element(self.m - 1)
    }

    /// The `m − 1` member vectors.
    pub fn members(&self) -> impl Iterator<Item = &[f64]> {
        self.values[..(self.m - 1) * self.d].chunks_exact(self.d)
    }

    /// All `m` elements, observation last.
    pub fn elements(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Copy of this case with its members permuted; the observation stays last.
    pub fn with_permuted_members(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.m - 1 {
            return Err(Error::InvalidCase(format!(
                "permutation of length {} for {} members",
                order.len(),
                self.m - 1
            )));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.element(i));
        }
        values.extend_from_slice(self.observation());
        Self::from_flat(self.case_id.clone(), values, self.d)
    }
}

/// Pre-rank of every element of a case's set, observation last.
#[derive(Clone, Debug, PartialEq)]
pub struct PreRankVector {
    values: Vec<f64>,
}

impl PreRankVector {
    /// Wrap raw pre-rank values; all must be finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPreRank("empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPreRank(
                "values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pre-rank of the observation (last entry).
    pub fn observation_prerank(&self) -> f64 {
        *self.values.last().expect("non-empty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_case() -> ForecastCase {
        ForecastCase::new(0, &[vec![1.0, 4.0], vec![2.0, 2.0]], &[3.0, 3.0]).unwrap()
    }

    #[test]
    fn layout_and_accessors() {
        let case = example_case();
        assert_eq!(case.set_size(), 3);
        assert_eq!(case.dim(), 2);
        assert_eq!(case.element(0), &[1.0, 4.0]);
        assert_eq!(case.observation(), &[3.0, 3.0]);
        assert_eq!(case.members().count(), 2);
        assert_eq!(case.elements().last().unwrap(), case.observation());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = ForecastCase::new(0, &[vec![1.0]], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidCase(_)));
    }

    #[test]
    fn rejects_missing_members_and_nan() {
        assert!(ForecastCase::new(0, &[], &[1.0]).is_err());
        assert!(ForecastCase::new(0, &[vec![f64::NAN]], &[1.0]).is_err());
        assert!(ForecastCase::new(0, &[vec![1.0]], &[f64::INFINITY]).is_err());
    }

    #[test]
    fn numeric_labels_share_the_index_stream_key() {
        assert_eq!(CaseId::Label("17".into()).stream_key(), 17);
        assert_eq!(CaseId::Index(17).stream_key(), 17);
        assert_ne!(
            CaseId::Label("a".into()).stream_key(),
            CaseId::Label("b".into()).stream_key()
        );
    }

    #[test]
    fn permutation_keeps_observation_last() {
        let case = example_case();
        let permuted = case.with_permuted_members(&[1, 0]).unwrap();
        assert_eq!(permuted.element(0), &[2.0, 2.0]);
        assert_eq!(permuted.observation(), case.observation());
    }

    #[test]
    fn prerank_vector_validation() {
        assert!(PreRankVector::new(vec![]).is_err());
        assert!(PreRankVector::new(vec![-0.5]).is_err());
        assert!(PreRankVector::new(vec![f64::NAN]).is_err());
        let v = PreRankVector::new(vec![1.0, 2.5]).unwrap();
        assert_eq!(v.observation_prerank(), 2.5);
    }
}
