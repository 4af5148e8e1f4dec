//! Closed-form reference moments for the pre-ranks.
//!
//! These formulas hold in an analytically tractable extreme regime: the
//! observation's components are fully dependent (identical almost surely)
//! while every forecast member has independent components, and all curves
//! are mutually independent with continuous marginals. Each univariate rank
//! is then uniform on `1..=m`, and the average and band depth pre-rank
//! moments follow in closed form. The member variances neglect the
//! observation's deviant dependence and are therefore approximations for
//! large `m`; the observation formulas are exact in the regime.
//!
//! All quantities are exact rationals with integer numerators; they are
//! evaluated in 128-bit integer arithmetic and converted to `f64` once, so
//! the floating result is within two roundings of the exact value for
//! `m <= 1000` (larger set sizes are rejected).

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest set size for which the integer arithmetic is guaranteed exact.
pub const MAX_SET_SIZE: u64 = 1000;

fn check_m(m: u64) -> Result<()> {
    if !(2..=MAX_SET_SIZE).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "set size m must be in 2..={MAX_SET_SIZE}, got {m}"
        )));
    }
    Ok(())
}

fn check_d(d: u64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
    }
    Ok(())
}

/// Sums of the first four powers of `1..=m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PowerSums {
    pub s1: u64,
    pub s2: u64,
    pub s3: u64,
    pub s4: u64,
}

/// Closed-form power sums `s_p = sum_{i=1..m} i^p` for `p = 1..4`.
pub fn faulhaber_power_sums(m: u64) -> Result<PowerSums> {
    if !(1..=MAX_SET_SIZE).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "power sums need m in 1..={MAX_SET_SIZE}, got {m}"
        )));
    }
    let m = m as u128;
    let s1 = m * (m + 1) / 2;
    let s2 = m * (m + 1) * (2 * m + 1) / 6;
    let s3 = m * m * (m + 1) * (m + 1) / 4;
    let s4 = m * (m + 1) * (2 * m + 1) * (3 * m * m + 3 * m - 1) / 30;
    Ok(PowerSums {
        s1: s1 as u64,
        s2: s2 as u64,
        s3: s3 as u64,
        s4: s4 as u64,
    })
}

/// Expected average and band depth pre-ranks of any element of the set.
///
/// Both hold whenever the univariate ranks are uniform, in particular for
/// exchangeable sets: `(m + 1) / 2` and `(m^2 + 3m − 4) / 6`.
pub fn expected_preranks(m: u64) -> Result<(f64, f64)> {
    check_m(m)?;
    let mf = m as f64;
    let avg = (mf + 1.0) / 2.0;
    let bd = (mf * mf + 3.0 * mf - 4.0) / 6.0;
    Ok((avg, bd))
}

/// Pre-rank variances in the fully-dependent-observation regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrerankVariances {
    pub avg_member: f64,
    pub avg_obs: f64,
    pub bd_member: f64,
    pub bd_obs: f64,
}

/// Variances of the average and band depth pre-ranks for a forecast member
/// (independent components, approximate) and for the observation (identical
/// components, exact in the regime).
pub fn prerank_variances(m: u64, d: u64) -> Result<PrerankVariances> {
    check_m(m)?;
    check_d(d)?;
    let m128 = m as u128;
    let d128 = d as u128;
    let df = d as f64;

    // (m^2 − 1) / (12 d)
    let avg_member = ((m128 * m128 - 1) as f64) / (12.0 * df);
    // + (m − 1)^2 (d − 1) / (12 d)
    let avg_obs = avg_member + ((m128 - 1).pow(2) * (d128 - 1)) as f64 / (12.0 * df);

    // (m + 1)(m − 1)(7 m^2 + 8 m + 12) / (60 d)
    let bd_member =
        ((m128 + 1) * (m128 - 1) * (7 * m128 * m128 + 8 * m128 + 12)) as f64 / (60.0 * df);
    // + (m^4 − 6 m^3 + 13 m^2 − 12 m + 4)(d − 1) / (180 d); the quartic
    // factors as ((m − 1)(m − 2))^2.
    let bd_extra_numerator = ((m128 - 1) * (m128 - 2)).pow(2);
    let bd_obs = bd_member + (bd_extra_numerator * (d128 - 1)) as f64 / (180.0 * df);

    Ok(PrerankVariances {
        avg_member,
        avg_obs,
        bd_member,
        bd_obs,
    })
}

/// Pre-rank variances recomputed from the power-sum derivation.
///
/// The average-rank values coincide with [`prerank_variances`]. For band
/// depth the derivation disagrees with the stated reference: the
/// single-component variance of the quadratic score `(m + 1) R − R^2` with
/// `R` uniform on `1..=m` evaluates via the power sums to
/// `(m^2 − 1)(m^2 − 4) / 180`, not to the `(7 m^2 + 8 m + 12)` polynomial
/// carried by [`prerank_variances`]. Regime simulations reproduce this
/// derivation (see the verification suites); both sets are exposed so the
/// discrepancy stays visible rather than silently patched.
pub fn prerank_variances_derived(m: u64, d: u64) -> Result<PrerankVariances> {
    let stated = prerank_variances(m, d)?;
    let m128 = m as u128;
    let d128 = d as u128;
    let df = d as f64;
    // Var((m + 1) R − R^2) = (m^2 − 1)(m^2 − 4) / 180.
    let bd_member =
        ((m128 * m128 - 1) * (m128 * m128 - 4)) as f64 / (180.0 * df);
    let bd_extra_numerator = ((m128 - 1) * (m128 - 2)).pow(2);
    let bd_obs = bd_member + (bd_extra_numerator * (d128 - 1)) as f64 / (180.0 * df);
    Ok(PrerankVariances {
        avg_member: stated.avg_member,
        avg_obs: stated.avg_obs,
        bd_member,
        bd_obs,
    })
}

/// Covariance between the observation's univariate ranks in two distinct
/// components under the regime: `(m − 1)^2 / 12`.
pub fn rank_covariance(m: u64) -> Result<f64> {
    check_m(m)?;
    let m128 = m as u128;
    Ok(((m128 - 1) * (m128 - 1)) as f64 / 12.0)
}

/// `E(rank_k · rank_k')` for two distinct components of the observation.
pub fn rank_product_moment(m: u64) -> Result<f64> {
    check_m(m)?;
    let m128 = m as u128;
    Ok(m as f64 + ((m128 - 1) * (m128 - 1)) as f64 / 3.0)
}

/// `E(rank_k · rank_k'^2)` for two distinct components of the observation.
pub fn rank_product_square_moment(m: u64) -> Result<f64> {
    check_m(m)?;
    let m128 = m as u128;
    Ok((3 * m128.pow(3) + 4 * m128 * m128 + 3 * m128 + 2) as f64 / 12.0)
}

/// `E(rank_k^2 · rank_k'^2)` for two distinct components of the observation.
pub fn rank_square_product_moment(m: u64) -> Result<f64> {
    check_m(m)?;
    let m128 = m as u128;
    Ok((6 * m128.pow(4) + 9 * m128.pow(3) + 8 * m128 * m128 + 3 * m128 + 4) as f64 / 30.0)
}

/// Observation band depth variance assembled from the cross-component rank
/// moments instead of the closed form.
///
/// The tie-free band depth pre-rank is `(1/d) Σ_k g(R_k)` with
/// `g(R) = (m + 1) R − R^2 − 1`, so its variance decomposes into `d` equal
/// single-component variances plus `d (d − 1)` equal cross-component
/// covariances of `g`. Agreement with [`prerank_variances_derived`]
/// validates the higher rank moments end to end.
pub fn bd_obs_variance_via_rank_moments(m: u64, d: u64) -> Result<f64> {
    check_m(m)?;
    check_d(d)?;
    let single = prerank_variances_derived(m, 1)?.bd_member;
    let mf = m as f64;
    // Covariances are shift invariant, so work with h(R) = (m + 1) R − R^2.
    let mean_h = (mf + 1.0) * (mf + 2.0) / 6.0;
    let cov_h = (mf + 1.0) * (mf + 1.0) * rank_product_moment(m)?
        - 2.0 * (mf + 1.0) * rank_product_square_moment(m)?
        + rank_square_product_moment(m)?
        - mean_h * mean_h;
    let df = d as f64;
    Ok(single / df + cov_h * (df - 1.0) / df)
}

/// All closed-form reference values for one `(m, d)` configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub m: u64,
    pub d: u64,
    pub expected_prerank_avg: f64,
    pub expected_prerank_bd: f64,
    pub var_avg_member: f64,
    pub var_avg_obs: f64,
    pub var_bd_member: f64,
    pub var_bd_obs: f64,
    pub rank_covariance: f64,
}

pub fn oracle_report(m: u64, d: u64) -> Result<OracleReport> {
    let (expected_prerank_avg, expected_prerank_bd) = expected_preranks(m)?;
    let variances = prerank_variances(m, d)?;
    Ok(OracleReport {
        m,
        d,
        expected_prerank_avg,
        expected_prerank_bd,
        var_avg_member: variances.avg_member,
        var_avg_obs: variances.avg_obs,
        var_bd_member: variances.bd_member,
        var_bd_obs: variances.bd_obs,
        rank_covariance: rank_covariance(m)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn ratio(num: i128, den: i128) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn close_to_rational(value: f64, exact: &BigRational) {
        let approx_exact = exact.numer().to_string().parse::<f64>().unwrap()
            / exact.denom().to_string().parse::<f64>().unwrap();
        assert_relative_eq!(value, approx_exact, max_relative = 1e-12);
    }

    #[test]
    fn expected_preranks_by_substitution() {
        assert_eq!(expected_preranks(20).unwrap(), (10.5, 76.0));
        assert_eq!(expected_preranks(2).unwrap(), (1.5, 1.0));
        assert!(expected_preranks(1).is_err());
    }

    #[test]
    fn variances_by_substitution() {
        let v = prerank_variances(20, 5).unwrap();
        assert_relative_eq!(v.avg_member, 6.65, max_relative = 1e-12);
        assert_relative_eq!(v.avg_obs, 30.716666666666665, max_relative = 1e-12);
        assert_relative_eq!(v.bd_member, 3952.76, max_relative = 1e-12);
        assert_relative_eq!(v.bd_obs, 4472.6, max_relative = 1e-12);
        assert!(prerank_variances(20, 0).is_err());
        assert!(prerank_variances(1001, 5).is_err());
    }

    #[test]
    fn observation_variance_dominates_member_variance() {
        for m in [2u64, 5, 20, 100, 1000] {
            for d in [2u64, 3, 10, 500] {
                let v = prerank_variances(m, d).unwrap();
                assert!(v.avg_obs >= v.avg_member);
                assert!(v.bd_obs >= v.bd_member);
            }
        }
    }

    #[test]
    fn rank_covariance_by_substitution() {
        assert_relative_eq!(rank_covariance(20).unwrap(), 361.0 / 12.0, max_relative = 1e-15);
        assert_relative_eq!(rank_covariance(2).unwrap(), 1.0 / 12.0, max_relative = 1e-15);
    }

    #[test]
    fn power_sums_by_substitution() {
        assert_eq!(
            faulhaber_power_sums(3).unwrap(),
            PowerSums { s1: 6, s2: 14, s3: 36, s4: 98 }
        );
        assert_eq!(
            faulhaber_power_sums(1).unwrap(),
            PowerSums { s1: 1, s2: 1, s3: 1, s4: 1 }
        );
        assert!(faulhaber_power_sums(0).is_err());
        assert!(faulhaber_power_sums(1001).is_err());
    }

    #[test]
    fn power_sums_match_direct_summation() {
        let mut s = (0u128, 0u128, 0u128, 0u128);
        for i in 1..=1000u128 {
            s.0 += i;
            s.1 += i * i;
            s.2 += i * i * i;
            s.3 += i * i * i * i;
            let sums = faulhaber_power_sums(i as u64).unwrap();
            assert_eq!(u128::from(sums.s1), s.0);
            assert_eq!(u128::from(sums.s2), s.1);
            assert_eq!(u128::from(sums.s3), s.2);
            assert_eq!(u128::from(sums.s4), s.3);
        }
    }

    #[test]
    fn average_variance_gap_equals_scaled_rank_covariance() {
        for m in [2u64, 3, 10, 20, 137, 1000] {
            for d in [1u64, 2, 5, 12, 100] {
                let v = prerank_variances(m, d).unwrap();
                let gap = v.avg_obs - v.avg_member;
                let expected = (d as f64 - 1.0) * rank_covariance(m).unwrap() / d as f64;
                assert_relative_eq!(gap, expected, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn moment_route_reproduces_derived_observation_band_depth_variance() {
        for m in [3u64, 10, 20, 137, 1000] {
            for d in [1u64, 2, 5, 12, 100] {
                let via_moments = bd_obs_variance_via_rank_moments(m, d).unwrap();
                let derived = prerank_variances_derived(m, d).unwrap().bd_obs;
                assert_relative_eq!(via_moments, derived, max_relative = 1e-12);
            }
        }
        // m = 2 is fully degenerate: the quadratic score is constant.
        assert_relative_eq!(
            bd_obs_variance_via_rank_moments(2, 3).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn derived_band_depth_variance_matches_direct_enumeration() {
        for m in [2u64, 3, 5, 20, 100, 1000] {
            let mf = m as f64;
            let score = |r: f64| (mf + 1.0) * r - r * r;
            let mean = (1..=m).map(|r| score(r as f64)).sum::<f64>() / mf;
            let variance =
                (1..=m).map(|r| (score(r as f64) - mean).powi(2)).sum::<f64>() / mf;
            for d in [1u64, 4, 9] {
                let derived = prerank_variances_derived(m, d).unwrap();
                assert_relative_eq!(derived.bd_member, variance / d as f64, max_relative = 1e-12, epsilon = 1e-12);
                // Average-rank values are shared with the stated formulas.
                let stated = prerank_variances(m, d).unwrap();
                assert_eq!(derived.avg_member, stated.avg_member);
                assert_eq!(derived.avg_obs, stated.avg_obs);
            }
        }
    }

    #[test]
    fn floating_evaluation_matches_exact_rationals() {
        for m in [2i128, 3, 10, 137, 1000] {
            for d in [1i128, 2, 5, 100] {
                let v = prerank_variances(m as u64, d as u64).unwrap();
                close_to_rational(v.avg_member, &ratio(m * m - 1, 12 * d));
                close_to_rational(
                    v.avg_obs,
                    &(ratio(m * m - 1, 12 * d) + ratio((m - 1) * (m - 1) * (d - 1), 12 * d)),
                );
                close_to_rational(
                    v.bd_member,
                    &ratio((m + 1) * (m - 1) * (7 * m * m + 8 * m + 12), 60 * d),
                );
                close_to_rational(
                    v.bd_obs,
                    &(ratio((m + 1) * (m - 1) * (7 * m * m + 8 * m + 12), 60 * d)
                        + ratio(
                            (m * m * m * m - 6 * m * m * m + 13 * m * m - 12 * m + 4) * (d - 1),
                            180 * d,
                        )),
                );
                let (avg, bd) = expected_preranks(m as u64).unwrap();
                close_to_rational(avg, &ratio(m + 1, 2));
                close_to_rational(bd, &ratio(m * m + 3 * m - 4, 6));
                close_to_rational(rank_covariance(m as u64).unwrap(), &ratio((m - 1) * (m - 1), 12));
            }
        }
    }

    #[test]
    fn report_serializes_expected_fields() {
        let report = oracle_report(20, 5).unwrap();
        let json = serde_json::to_value(report).unwrap();
        assert_eq!(json["m"], 20);
        assert_relative_eq!(json["var_avg_obs"].as_f64().unwrap(), 30.716666666666665);
        assert_relative_eq!(json["rank_covariance"].as_f64().unwrap(), 361.0 / 12.0);
    }
}
