//! Panjer cardinality model.
//!
//! A Panjer law with parameters `(alpha, beta)` covers the negative binomial
//! (`alpha, beta > 0`), the binomial (`alpha` a negative integer, `beta < 0`)
//! and, as the limit `alpha, beta -> inf` with `alpha / beta = lambda`, the
//! Poisson distribution. The limit is carried as an explicit variant so that
//! callers never have to push huge parameters through the formulas.
//!
//! All pmf and rising-factorial arithmetic is done on signed logarithms.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Relative tolerance under which `var` and `mean` are treated as equal.
pub const POISSON_TOLERANCE: f64 = 1e-9;

/// A real number stored as `sign * exp(ln_abs)`.
///
/// `sign` is one of `-1, 0, 1`; a zero has `ln_abs = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog { sign: 1, ln_abs: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    /// Builds a positive value from its logarithm (`-inf` maps to zero).
    pub fn from_ln(ln_abs: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: 1, ln_abs }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: SignedLog) -> SignedLog {
        if self.sign == 0 || other.sign == 0 {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }

    /// Division; `None` when dividing by zero.
    #[allow(clippy::should_implement_trait)]
    pub fn div(self, other: SignedLog) -> Option<SignedLog> {
        if other.sign == 0 {
            return None;
        }
        if self.sign == 0 {
            return Some(Self::ZERO);
        }
        Some(SignedLog {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs - other.ln_abs,
        })
    }

    /// Multiplies by `exp(ln_factor)`.
    pub fn scale_ln(self, ln_factor: f64) -> SignedLog {
        if self.sign == 0 || ln_factor == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign,
            ln_abs: self.ln_abs + ln_factor,
        }
    }
}

/// Sums signed-log terms without leaving the log domain for the magnitude.
pub fn signed_log_sum<I: IntoIterator<Item = SignedLog>>(terms: I) -> SignedLog {
    let terms: Vec<SignedLog> = terms.into_iter().filter(|t| t.sign != 0).collect();
    let Some(max) = terms.iter().map(|t| t.ln_abs).max_by(|a, b| a.total_cmp(b)) else {
        return SignedLog::ZERO;
    };
    if max == f64::INFINITY {
        let sign = terms.iter().find(|t| t.ln_abs == max).map_or(1, |t| t.sign);
        return SignedLog {
            sign,
            ln_abs: f64::INFINITY,
        };
    }
    let acc: f64 = terms.iter().map(|t| f64::from(t.sign) * (t.ln_abs - max).exp()).sum();
    let scaled = SignedLog::from_f64(acc);
    scaled.scale_ln(max)
}

/// `ln(sum exp(x_i))` over finite or `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Rising factorial `(zeta)_n = zeta (zeta + 1) ... (zeta + n - 1)`, `(zeta)_0 = 1`.
pub fn pochhammer_log(zeta: f64, n: usize) -> SignedLog {
    let mut acc = SignedLog::ONE;
    for i in 0..n {
        acc = acc.mul(SignedLog::from_f64(zeta + i as f64));
        if acc.is_zero() {
            break;
        }
    }
    acc
}

/// `[(zeta)_0, (zeta)_1, ..., (zeta)_n_max]`.
pub fn pochhammer_log_table(zeta: f64, n_max: usize) -> Vec<SignedLog> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = SignedLog::ONE;
    out.push(acc);
    for i in 0..n_max {
        acc = acc.mul(SignedLog::from_f64(zeta + i as f64));
        out.push(acc);
    }
    out
}

/// Mean and variance of a target count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CardinalityStats {
    pub mean: f64,
    pub variance: f64,
}

impl CardinalityStats {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::Domain(format!(
                "cardinality mean {mean} must be finite and >= 0"
            )));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::Domain(format!(
                "cardinality variance {variance} must be finite and >= 0"
            )));
        }
        Ok(Self { mean, variance })
    }
}

/// The two representable shapes of a Panjer law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PanjerForm {
    Panjer { alpha: f64, beta: f64 },
    PoissonLimit { lambda: f64 },
}

/// Validated Panjer parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanjerParams {
    form: PanjerForm,
}

impl PanjerParams {
    /// Negative binomial (`alpha, beta > 0`) or binomial (`alpha` a negative
    /// integer, `beta < 0`) parameters.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let finite = alpha.is_finite() && beta.is_finite();
        let negative_binomial = alpha > 0.0 && beta > 0.0;
        let binomial = alpha < 0.0 && alpha.fract() == 0.0 && beta < 0.0;
        if !finite || !(negative_binomial || binomial) {
            return Err(Error::Domain(format!(
                "({alpha}, {beta}) is not a valid Panjer parameter pair"
            )));
        }
        Ok(Self {
            form: PanjerForm::Panjer { alpha, beta },
        })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Domain(format!("Poisson rate {lambda} must be finite and >= 0")));
        }
        Ok(Self {
            form: PanjerForm::PoissonLimit { lambda },
        })
    }

    pub fn form(&self) -> PanjerForm {
        self.form
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self.form, PanjerForm::PoissonLimit { .. })
    }

    pub fn mean(&self) -> f64 {
        panjer_stats(self).mean
    }
}

/// What to do when the requested variance is below the mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnderdispersionPolicy {
    /// Replace by a Poisson law with the same mean.
    #[default]
    ClampToPoisson,
    /// Round `alpha` to the nearest negative integer and set `beta = alpha / mean`.
    Binomial,
}

/// Result of a moment conversion, with a flag raised when the policy fired.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conversion {
    pub params: PanjerParams,
    pub clamped: bool,
}

/// Moment-matched Panjer parameters under the default underdispersion policy.
pub fn panjer_from_moments(stats: CardinalityStats) -> Result<PanjerParams> {
    panjer_from_moments_with(stats, UnderdispersionPolicy::default()).map(|c| c.params)
}

pub fn panjer_from_moments_with(stats: CardinalityStats, policy: UnderdispersionPolicy) -> Result<Conversion> {
    let CardinalityStats { mean, variance } = stats;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Domain(format!(
            "cannot fit a Panjer law to an empty target process (mean = {mean})"
        )));
    }
    let excess = variance - mean;
    if excess.abs() <= POISSON_TOLERANCE * mean {
        return Ok(Conversion {
            params: PanjerParams::poisson(mean)?,
            clamped: false,
        });
    }
    if excess > 0.0 {
        let params = PanjerParams::new(mean * mean / excess, mean / excess)?;
        return Ok(Conversion { params, clamped: false });
    }
    let params = match policy {
        UnderdispersionPolicy::ClampToPoisson => PanjerParams::poisson(mean)?,
        UnderdispersionPolicy::Binomial => {
            let alpha = (mean * mean / excess).round().min(-1.0);
            PanjerParams::new(alpha, alpha / mean)?
        }
    };
    Ok(Conversion { params, clamped: true })
}

pub fn panjer_stats(params: &PanjerParams) -> CardinalityStats {
    match params.form {
        PanjerForm::Panjer { alpha, beta } => {
            let mean = alpha / beta;
            CardinalityStats {
                mean,
                variance: mean * (1.0 + 1.0 / beta),
            }
        }
        PanjerForm::PoissonLimit { lambda } => CardinalityStats {
            mean: lambda,
            variance: lambda,
        },
    }
}

/// Natural log of the cardinality pmf; `-inf` where the probability is zero.
pub fn panjer_ln_pmf(params: &PanjerParams, n: usize) -> f64 {
    let nf = n as f64;
    match params.form {
        PanjerForm::Panjer { alpha, beta } => {
            // binom(-alpha, n) (-1)^n = (alpha)_n / n!, and (beta + 1)^n carries the
            // matching sign in the binomial branch.
            let rising = pochhammer_log(alpha, n);
            if rising.is_zero() {
                return f64::NEG_INFINITY;
            }
            rising.ln_abs - ln_gamma(nf + 1.0) - alpha * (1.0 / beta).ln_1p() - nf * (beta + 1.0).abs().ln()
        }
        PanjerForm::PoissonLimit { lambda } => {
            if lambda == 0.0 {
                return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
            }
            nf * lambda.ln() - lambda - ln_gamma(nf + 1.0)
        }
    }
}

pub fn panjer_pmf(params: &PanjerParams, n: usize) -> f64 {
    panjer_ln_pmf(params, n).exp()
}

/// `ln(n! pmf(n))` for `n = 0..=n_max`: the derivatives of the pgf at zero.
pub(crate) fn ln_factorial_pmf_table(params: &PanjerParams, n_max: usize) -> Vec<f64> {
    (0..=n_max)
        .map(|n| panjer_ln_pmf(params, n) + ln_gamma(n as f64 + 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer_log(5.0, 0), SignedLog::ONE);
        assert_relative_eq!(pochhammer_log(3.0, 2).to_f64(), 12.0, max_relative = 1e-14);
        assert_relative_eq!(pochhammer_log(0.5, 3).to_f64(), 0.5 * 1.5 * 2.5, max_relative = 1e-14);
        assert!(pochhammer_log(-2.0, 3).is_zero());
        assert_relative_eq!(pochhammer_log(-3.0, 2).to_f64(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(pochhammer_log(-3.0, 3).to_f64(), -6.0, max_relative = 1e-14);
        let table = pochhammer_log_table(0.5, 3);
        assert_relative_eq!(table[3].to_f64(), 1.875, max_relative = 1e-14);
    }

    #[test]
    fn moments_to_params() {
        let p = panjer_from_moments(CardinalityStats::new(25.0, 100.0).unwrap()).unwrap();
        match p.form() {
            PanjerForm::Panjer { alpha, beta } => {
                assert_relative_eq!(alpha, 625.0 / 75.0, max_relative = 1e-14);
                assert_relative_eq!(beta, 1.0 / 3.0, max_relative = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = panjer_from_moments(CardinalityStats::new(7.0, 7.0).unwrap()).unwrap();
        assert_eq!(p.form(), PanjerForm::PoissonLimit { lambda: 7.0 });
        let p = panjer_from_moments(CardinalityStats::new(1.0, 100.0).unwrap()).unwrap();
        match p.form() {
            PanjerForm::Panjer { alpha, beta } => {
                assert_relative_eq!(alpha, 1.0 / 99.0, max_relative = 1e-14);
                assert_relative_eq!(beta, 1.0 / 99.0, max_relative = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_process_is_rejected() {
        let err = panjer_from_moments(CardinalityStats::new(0.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn underdispersion_policies() {
        let stats = CardinalityStats::new(10.0, 4.0).unwrap();
        let c = panjer_from_moments_with(stats, UnderdispersionPolicy::ClampToPoisson).unwrap();
        assert!(c.clamped);
        assert_eq!(c.params.form(), PanjerForm::PoissonLimit { lambda: 10.0 });

        let c = panjer_from_moments_with(stats, UnderdispersionPolicy::Binomial).unwrap();
        assert!(c.clamped);
        match c.params.form() {
            PanjerForm::Panjer { alpha, beta } => {
                // 100 / -6 = -16.67 rounds to -17
                assert_eq!(alpha, -17.0);
                assert_relative_eq!(beta, -1.7, max_relative = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        let s = panjer_stats(&c.params);
        assert!(s.variance < s.mean);
    }

    #[test]
    fn stats_examples() {
        let p = PanjerParams::new(625.0 / 75.0, 1.0 / 3.0).unwrap();
        let s = panjer_stats(&p);
        assert_relative_eq!(s.mean, 25.0, max_relative = 1e-14);
        assert_relative_eq!(s.variance, 100.0, max_relative = 1e-14);
        let s = panjer_stats(&PanjerParams::poisson(5.0).unwrap());
        assert_eq!((s.mean, s.variance), (5.0, 5.0));
        let s = panjer_stats(&PanjerParams::new(1.0, 1.0).unwrap());
        assert_eq!((s.mean, s.variance), (1.0, 2.0));
    }

    #[test]
    fn invalid_pairs_are_unrepresentable() {
        assert!(PanjerParams::new(-1.5, -2.0).is_err());
        assert!(PanjerParams::new(1.0, -2.0).is_err());
        assert!(PanjerParams::new(-2.0, 1.0).is_err());
        assert!(PanjerParams::new(0.0, 1.0).is_err());
        assert!(PanjerParams::new(f64::INFINITY, 1.0).is_err());
        assert!(PanjerParams::poisson(-1.0).is_err());
        assert!(PanjerParams::new(-3.0, -1.5).is_ok());
    }

    #[test]
    fn pmf_examples() {
        let p = PanjerParams::new(2.5, 0.7).unwrap();
        assert_relative_eq!(panjer_pmf(&p, 0), (1.0f64 + 1.0 / 0.7).powf(-2.5), max_relative = 1e-13);
        let geo = PanjerParams::new(1.0, 1.0).unwrap();
        for n in 0..4 {
            assert_relative_eq!(panjer_pmf(&geo, n), 0.5f64.powi(n as i32 + 1), max_relative = 1e-13);
        }
        let poi = PanjerParams::poisson(2.0).unwrap();
        assert_relative_eq!(panjer_pmf(&poi, 1), 2.0 * (-2.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn heavy_tail_sums_to_one_with_long_truncation() {
        // Geometric decay 0.99^n: the tail past n = 401 still holds ~4e-5.
        let p = PanjerParams::new(1.0 / 99.0, 1.0 / 99.0).unwrap();
        let stats = panjer_stats(&p);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for n in 0..=4000 {
            let q = panjer_pmf(&p, n);
            s0 += q;
            s1 += n as f64 * q;
            s2 += (n * n) as f64 * q;
        }
        assert!((1.0 - s0).abs() < 1e-12);
        assert_relative_eq!(s1, stats.mean, max_relative = 1e-9);
        assert_relative_eq!(s2 - s1 * s1, stats.variance, max_relative = 1e-9);
    }

    #[test]
    fn binomial_branch_matches_binomial_pmf() {
        // alpha = -4, beta = alpha / mean with mean = 4 p, p = 0.3
        let p_success: f64 = 0.3;
        let trials = 4;
        let alpha = -(trials as f64);
        let beta = alpha / (trials as f64 * p_success);
        let params = PanjerParams::new(alpha, beta).unwrap();
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (n, c) in binom.iter().enumerate() {
            let expected = c * p_success.powi(n as i32) * (1.0 - p_success).powi((trials - n) as i32);
            assert_relative_eq!(panjer_pmf(&params, n), expected, max_relative = 1e-12);
        }
        assert_eq!(panjer_pmf(&params, trials + 1), 0.0);
    }

    #[test]
    fn signed_log_sum_mixed_signs() {
        let s = signed_log_sum([SignedLog::from_f64(3.0), SignedLog::from_f64(-5.0), SignedLog::ZERO]);
        assert_relative_eq!(s.to_f64(), -2.0, max_relative = 1e-14);
        assert!(signed_log_sum(std::iter::empty()).is_zero());
    }
}
