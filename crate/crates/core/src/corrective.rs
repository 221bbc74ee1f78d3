//! Elementary symmetric functions and the corrective terms of the update.
//!
//! The update of both the second-order PHD filter and the CPHD filter weighs
//! the missed-detection and the per-measurement contributions with ratios of
//! sums
//!
//! ```text
//! Y_u(Z) = sum_j T(j + u) C(|Z| - j) e_j(Z)
//! ```
//!
//! where `e_j` are the elementary symmetric functions of the measurement
//! terms `t_z = mu^z(X) / s_c(z)`, `T` depends on the predicted target
//! cardinality and `C` on the clutter cardinality. For a Panjer target law
//! `T(n) = (alpha)_n / (beta F_d)^n` and for a Panjer clutter law
//! `C(m) = (alpha_c)_m / (beta_c + 1)^m`.
//!
//! `Y_0` and `Y_2` routinely differ by hundreds of orders of magnitude, so
//! everything is evaluated on signed logarithms and ratios are only
//! exponentiated at the end.

use crate::cardinality::{pochhammer_log_table, signed_log_sum, PanjerForm, PanjerParams, SignedLog};
use crate::error::{Error, Result};

/// Elementary symmetric functions `e_0 ..= e_up_to` of `values`.
///
/// Expands `prod_i (x - v_i)` and reads the coefficients back with the
/// alternating sign removed.
pub fn esf_vieta(values: &[f64], up_to: usize) -> Vec<f64> {
    assert!(up_to <= values.len(), "up_to exceeds the number of values");
    let m = values.len();
    // coeffs[k] multiplies x^(m_so_far - k)
    let mut coeffs = vec![0.0; m + 1];
    coeffs[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            coeffs[k] -= v * coeffs[k - 1];
        }
    }
    coeffs
        .iter()
        .take(up_to + 1)
        .enumerate()
        .map(|(j, c)| if j % 2 == 0 { *c } else { -*c })
        .collect()
}

/// Elementary symmetric functions stored as `e_j = coeffs[j] * exp(j * ln_scale)`.
#[derive(Clone, Debug)]
pub struct ScaledEsf {
    pub coeffs: Vec<f64>,
    pub ln_scale: f64,
}

impl ScaledEsf {
    pub fn new(values: &[f64]) -> Self {
        let mut out = ScaledEsf {
            coeffs: Vec::new(),
            ln_scale: 0.0,
        };
        let mut scratch = Vec::new();
        out.recompute(values, &mut scratch);
        out
    }

    /// Recomputes in place, reusing allocations.
    fn recompute(&mut self, values: &[f64], scratch: &mut Vec<f64>) {
        let max = values.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { max } else { 1.0 };
        self.ln_scale = scale.ln();
        scratch.clear();
        scratch.extend(values.iter().map(|v| v / scale));
        let m = scratch.len();
        self.coeffs.clear();
        self.coeffs.resize(m + 1, 0.0);
        self.coeffs[0] = 1.0;
        // Same recurrence as `esf_vieta`, written with the signs already removed.
        for (i, &v) in scratch.iter().enumerate() {
            for k in (1..=i + 1).rev() {
                self.coeffs[k] += v * self.coeffs[k - 1];
            }
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ln_e(&self, j: usize) -> f64 {
        let c = self.coeffs[j];
        if c > 0.0 {
            c.ln() + j as f64 * self.ln_scale
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Per-update scalars feeding the corrective terms.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTermTable {
    /// `t_z = mu^z(X) / s_c(z)` in measurement order.
    pub terms: Vec<f64>,
    /// `F_d = integral of (1 + p_d / beta) over the predicted intensity`.
    pub fd: f64,
    /// Expected number of missed targets `mu^phi(X)`.
    pub missed_mass: f64,
}

impl MeasurementTermTable {
    /// Table for uniform detection probability `p_d` over a predicted
    /// intensity of total mass `predicted_mass`.
    pub fn new(terms: Vec<f64>, predicted_mass: f64, p_d: f64, target: &PanjerParams) -> Result<Self> {
        let fd = match target.form() {
            PanjerForm::Panjer { beta, .. } => (1.0 + p_d / beta) * predicted_mass,
            PanjerForm::PoissonLimit { .. } => predicted_mass,
        };
        Self::from_parts(terms, fd, (1.0 - p_d) * predicted_mass)
    }

    pub fn from_parts(terms: Vec<f64>, fd: f64, missed_mass: f64) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Numeric(format!("measurement term {bad} is not finite and >= 0")));
        }
        Ok(Self { terms, fd, missed_mass })
    }

    /// The same table with the measurements at `drop` removed.
    pub fn without(&self, drop: &[usize]) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, t)| *t)
                .collect(),
            fd: self.fd,
            missed_mass: self.missed_mass,
        }
    }
}

/// Cardinality weights `T(n)` (target) and `C(m)` (clutter) of the `Y_u` sums.
#[derive(Clone, Debug)]
pub struct CardinalityFactors {
    pub target: Vec<SignedLog>,
    pub clutter: Vec<SignedLog>,
}

impl CardinalityFactors {
    /// Factors for a Panjer (or Poisson-limit) target and clutter law, valid
    /// for up to `max_measurements` measurements.
    pub fn panjer(target: &PanjerParams, clutter: &PanjerParams, fd: f64, max_measurements: usize) -> Result<Self> {
        if !(fd > 0.0) || !fd.is_finite() {
            return Err(Error::Numeric(format!(
                "F_d = {fd} must be positive; check beta and the predicted intensity mass"
            )));
        }
        let n_target = max_measurements + 2;
        let target = match target.form() {
            PanjerForm::Panjer { alpha, beta } => {
                let ln_step = SignedLog::from_f64(beta * fd);
                pochhammer_log_table(alpha, n_target)
                    .into_iter()
                    .enumerate()
                    .map(|(n, p)| {
                        let denom = SignedLog {
                            sign: if ln_step.sign < 0 && n % 2 == 1 { -1 } else { 1 },
                            ln_abs: n as f64 * ln_step.ln_abs,
                        };
                        p.div(denom).unwrap_or(SignedLog::ZERO)
                    })
                    .collect()
            }
            PanjerForm::PoissonLimit { lambda } => power_table(lambda / fd, n_target),
        };
        let clutter = match clutter.form() {
            PanjerForm::Panjer { alpha, beta } => {
                let ln_step = (beta + 1.0).abs().ln();
                let negative = beta + 1.0 < 0.0;
                pochhammer_log_table(alpha, max_measurements)
                    .into_iter()
                    .enumerate()
                    .map(|(m, p)| {
                        let denom = SignedLog {
                            sign: if negative && m % 2 == 1 { -1 } else { 1 },
                            ln_abs: m as f64 * ln_step,
                        };
                        p.div(denom).unwrap_or(SignedLog::ZERO)
                    })
                    .collect()
            }
            PanjerForm::PoissonLimit { lambda } => power_table(lambda, max_measurements),
        };
        Ok(Self { target, clutter })
    }

    fn check_capacity(&self, subset_len: usize, u: usize) -> Result<()> {
        if self.clutter.len() <= subset_len || self.target.len() <= subset_len + u {
            return Err(Error::Usage(format!(
                "cardinality factors sized for {} measurements, asked for {subset_len}",
                self.clutter.len().saturating_sub(1)
            )));
        }
        Ok(())
    }
}

fn power_table(base: f64, n_max: usize) -> Vec<SignedLog> {
    let step = SignedLog::from_f64(base);
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = SignedLog::ONE;
    out.push(acc);
    for _ in 0..n_max {
        acc = acc.mul(step);
        out.push(acc);
    }
    out
}

/// `Y_u(W)` for the set whose elementary symmetric functions are `esf`.
fn upsilon_from_esf(u: usize, esf: &ScaledEsf, factors: &CardinalityFactors) -> SignedLog {
    let s = esf.len();
    let mut max = f64::NEG_INFINITY;
    let mut buf: Vec<(i8, f64)> = Vec::with_capacity(s + 1);
    for j in 0..=s {
        let t = factors.target[j + u];
        let c = factors.clutter[s - j];
        let ln_e = esf.ln_e(j);
        let sign = t.sign * c.sign;
        if sign == 0 || ln_e == f64::NEG_INFINITY {
            continue;
        }
        let ln = t.ln_abs + c.ln_abs + ln_e;
        max = max.max(ln);
        buf.push((sign, ln));
    }
    if buf.is_empty() {
        return SignedLog::ZERO;
    }
    let acc: f64 = buf.iter().map(|(sign, ln)| f64::from(*sign) * (ln - max).exp()).sum();
    SignedLog::from_f64(acc).scale_ln(max)
}

/// `Y_u(Z)` for the measurement set held in `table`.
pub fn upsilon(
    u: usize,
    table: &MeasurementTermTable,
    target: &PanjerParams,
    clutter: &PanjerParams,
) -> Result<SignedLog> {
    let factors = CardinalityFactors::panjer(target, clutter, table.fd, table.terms.len())?;
    factors.check_capacity(table.terms.len(), u)?;
    Ok(upsilon_from_esf(u, &ScaledEsf::new(&table.terms), &factors))
}

/// `l_2^{!=}(z, z')` for all unordered measurement pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    n: usize,
    data: Vec<f64>,
}

impl PairTable {
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Symmetric lookup; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.data[self.index(i, j)],
            std::cmp::Ordering::Greater => self.data[self.index(j, i)],
        }
    }

    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                data.push(f(i, j)?);
            }
        }
        Ok(Self { n, data })
    }
}

/// The `l_1`, `l_2` and `l_2^{!=}` ratios of one update.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectiveTerms {
    pub missed_l1: f64,
    pub missed_l2: f64,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    /// Only needed for regional covariances; `None` when skipped.
    pub pairs: Option<PairTable>,
    /// `sum_{z != z'} t_z t_z' l_2^{!=}(z, z')` over ordered pairs.
    pub pair_total: f64,
    /// Set for the PHD limit, where `l_2^{!=}(z, z') = l_1(z) l_1(z')`.
    pub product_form: bool,
}

impl CorrectiveTerms {
    /// Terms of the classic PHD update (Poisson target and clutter), where
    /// `l_1(phi) = l_2(phi) = 1`, `l_2(z) = l_1(z) = 1 / (lambda_c + t_z)` and
    /// `l_2^{!=}(z, z') = l_1(z) l_1(z')`.
    pub fn poisson_limit(terms: &[f64], clutter_rate: f64) -> Result<Self> {
        let l1 = terms
            .iter()
            .map(|t| {
                let d = clutter_rate + t;
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::Numeric("PHD update denominator is zero".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let weighted: f64 = terms.iter().zip(&l1).map(|(t, l)| t * l).sum();
        let diagonal: f64 = terms.iter().zip(&l1).map(|(t, l)| (t * l).powi(2)).sum();
        Ok(Self {
            missed_l1: 1.0,
            missed_l2: 1.0,
            l2: l1.clone(),
            pairs: None,
            pair_total: weighted * weighted - diagonal,
            product_form: true,
            l1,
        })
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<f64> {
        if self.product_form {
            return Some(if i == j { 0.0 } else { self.l1[i] * self.l1[j] });
        }
        self.pairs.as_ref().map(|p| p.get(i, j))
    }

    /// `sum_{z != z'} a_z b_z' l_2^{!=}(z, z')`, or `None` when the pair table
    /// was not computed.
    pub fn pair_quadratic(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        if self.product_form {
            let sa: f64 = a.iter().zip(&self.l1).map(|(x, l)| x * l).sum();
            let sb: f64 = b.iter().zip(&self.l1).map(|(x, l)| x * l).sum();
            let diag: f64 = a.iter().zip(b).zip(&self.l1).map(|((x, y), l)| x * y * l * l).sum();
            return Some(sa * sb - diag);
        }
        let pairs = self.pairs.as_ref()?;
        let n = a.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                total += (a[i] * b[j] + a[j] * b[i]) * pairs.get(i, j);
            }
        }
        Some(total)
    }
}

fn ratio(num: SignedLog, den: SignedLog) -> Result<f64> {
    num.div(den)
        .map(SignedLog::to_f64)
        .ok_or_else(|| Error::Numeric("Y_0(Z) vanished; corrective terms are undefined".into()))
}

/// Corrective terms for Panjer target and clutter laws, including the pair table.
pub fn corrective_terms(
    table: &MeasurementTermTable,
    target: &PanjerParams,
    clutter: &PanjerParams,
) -> Result<CorrectiveTerms> {
    corrective_terms_with(table, target, clutter, true)
}

pub fn corrective_terms_with(
    table: &MeasurementTermTable,
    target: &PanjerParams,
    clutter: &PanjerParams,
    with_pairs: bool,
) -> Result<CorrectiveTerms> {
    let factors = CardinalityFactors::panjer(target, clutter, table.fd, table.terms.len())?;
    corrective_terms_from_factors(&table.terms, &factors, with_pairs)
}

/// Corrective terms for arbitrary cardinality factors.
///
/// Every reduced set `Z \ {z}` and `Z \ {z, z'}` gets its own Vieta expansion.
pub fn corrective_terms_from_factors(
    terms: &[f64],
    factors: &CardinalityFactors,
    with_pairs: bool,
) -> Result<CorrectiveTerms> {
    let m = terms.len();
    factors.check_capacity(m, 2)?;
    let full = ScaledEsf::new(terms);
    let y0 = upsilon_from_esf(0, &full, factors);
    let missed_l1 = ratio(upsilon_from_esf(1, &full, factors), y0)?;
    let missed_l2 = ratio(upsilon_from_esf(2, &full, factors), y0)?;
    let pair_total = ratio(pair_total_upsilon(&full, factors), y0)?;

    let mut reduced = Vec::with_capacity(m);
    let mut esf = ScaledEsf {
        coeffs: Vec::with_capacity(m + 1),
        ln_scale: 0.0,
    };
    let mut scratch = Vec::with_capacity(m);
    let mut l1 = Vec::with_capacity(m);
    let mut l2 = Vec::with_capacity(m);
    for i in 0..m {
        reduced.clear();
        reduced.extend(terms.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, t)| *t));
        esf.recompute(&reduced, &mut scratch);
        l1.push(ratio(upsilon_from_esf(1, &esf, factors), y0)?);
        l2.push(ratio(upsilon_from_esf(2, &esf, factors), y0)?);
    }

    let pairs = if with_pairs {
        Some(PairTable::from_fn(m, |i, j| {
            reduced.clear();
            reduced.extend(
                terms
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, t)| *t),
            );
            esf.recompute(&reduced, &mut scratch);
            ratio(upsilon_from_esf(2, &esf, factors), y0)
        })?)
    } else {
        None
    };

    Ok(CorrectiveTerms {
        missed_l1,
        missed_l2,
        l1,
        l2,
        pairs,
        pair_total,
        product_form: false,
    })
}

/// `sum_{z != z'} t_z t_z' Y_2(Z \ {z, z'})`, using
/// `sum_{z != z'} t_z t_z' e_j(Z \ {z, z'}) = (j + 1)(j + 2) e_{j+2}(Z)`.
fn pair_total_upsilon(esf: &ScaledEsf, factors: &CardinalityFactors) -> SignedLog {
    let m = esf.len();
    if m < 2 {
        return SignedLog::ZERO;
    }
    signed_log_sum((0..=m - 2).map(|j| {
        let t = factors.target[j + 2];
        let c = factors.clutter[m - 2 - j];
        let ln_e = esf.ln_e(j + 2);
        if ln_e == f64::NEG_INFINITY {
            return SignedLog::ZERO;
        }
        t.mul(c).scale_ln(ln_e + (((j + 1) * (j + 2)) as f64).ln())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_esf(values: &[f64]) -> Vec<f64> {
        let m = values.len();
        let mut e = vec![0.0; m + 1];
        for mask in 0u32..(1 << m) {
            let prod: f64 = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).product();
            e[mask.count_ones() as usize] += prod;
        }
        e
    }

    #[test]
    fn vieta_small_cases() {
        assert_eq!(esf_vieta(&[], 0), vec![1.0]);
        assert_eq!(esf_vieta(&[2.0, 3.0], 2), vec![1.0, 5.0, 6.0]);
        assert_eq!(esf_vieta(&[2.0, 3.0], 1), vec![1.0, 5.0]);
    }

    #[test]
    fn vieta_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..5.0)).collect();
        let fast = esf_vieta(&values, 6);
        let slow = brute_force_esf(&values);
        for (a, b) in fast.iter().zip(&slow) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        let scaled = ScaledEsf::new(&values);
        for (j, b) in slow.iter().enumerate() {
            assert_relative_eq!(scaled.ln_e(j).exp(), b, max_relative = 1e-12);
        }
    }

    fn naive_upsilon(u: usize, terms: &[f64], alpha: f64, beta: f64, ac: f64, bc: f64, fd: f64) -> f64 {
        let e = brute_force_esf(terms);
        let poch = |z: f64, n: usize| (0..n).map(|i| z + i as f64).product::<f64>();
        let s = terms.len();
        (0..=s)
            .map(|j| {
                poch(alpha, j + u) / beta.powi((j + u) as i32) * poch(ac, s - j) / (bc + 1.0).powi((s - j) as i32)
                    * fd.powi(-((j + u) as i32))
                    * e[j]
            })
            .sum()
    }

    #[test]
    fn upsilon_examples() {
        let target = PanjerParams::new(3.0, 0.5).unwrap();
        let clutter = PanjerParams::new(4.0, 2.0).unwrap();
        let empty = MeasurementTermTable::new(vec![], 6.0, 0.8, &target).unwrap();
        assert_relative_eq!(upsilon(0, &empty, &target, &clutter).unwrap().to_f64(), 1.0);
        let fd = empty.fd;
        assert_relative_eq!(fd, (1.0 + 0.8 / 0.5) * 6.0);
        assert_relative_eq!(
            upsilon(1, &empty, &target, &clutter).unwrap().to_f64(),
            3.0 / (0.5 * fd),
            max_relative = 1e-14
        );

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let terms: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..20.0)).collect();
        let table = MeasurementTermTable::new(terms.clone(), 6.0, 0.8, &target).unwrap();
        let got = upsilon(2, &table, &target, &clutter).unwrap().to_f64();
        let want = naive_upsilon(2, &terms, 3.0, 0.5, 4.0, 2.0, table.fd);
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn nonpositive_fd_is_a_numeric_error() {
        let target = PanjerParams::new(2.0, 1.0).unwrap();
        let clutter = PanjerParams::poisson(1.0).unwrap();
        let table = MeasurementTermTable::from_parts(vec![1.0], 0.0, 0.1).unwrap();
        assert!(matches!(upsilon(0, &table, &target, &clutter), Err(Error::Numeric(_))));
    }

    #[test]
    fn empty_measurement_set() {
        let (alpha, beta) = (3.0, 0.5);
        let target = PanjerParams::new(alpha, beta).unwrap();
        let clutter = PanjerParams::poisson(2.0).unwrap();
        let table = MeasurementTermTable::new(vec![], 6.0, 0.9, &target).unwrap();
        let c = corrective_terms(&table, &target, &clutter).unwrap();
        let x = beta * table.fd;
        assert_relative_eq!(c.missed_l1, alpha / x, max_relative = 1e-14);
        assert_relative_eq!(c.missed_l2, alpha * (alpha + 1.0) / (x * x), max_relative = 1e-14);
        assert!(c.l1.is_empty());
        assert!(c.pairs.unwrap().is_empty());
    }

    #[test]
    fn poisson_limit_of_missed_term() {
        let lambda = 4.0;
        let beta = 1e8;
        let target = PanjerParams::new(lambda * beta, beta).unwrap();
        let clutter = PanjerParams::new(10.0, 2.0).unwrap();
        let table = MeasurementTermTable::new(vec![1.0, 30.0, 0.2], lambda, 0.9, &target).unwrap();
        let c = corrective_terms(&table, &target, &clutter).unwrap();
        assert_relative_eq!(c.missed_l1, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn symmetric_terms_give_equal_l1() {
        let target = PanjerParams::new(3.0, 0.5).unwrap();
        let clutter = PanjerParams::poisson(2.0).unwrap();
        let table = MeasurementTermTable::new(vec![7.0, 7.0], 6.0, 0.9, &target).unwrap();
        let c = corrective_terms(&table, &target, &clutter).unwrap();
        assert_eq!(c.l1[0], c.l1[1]);
    }

    /// Limit forms with a Poisson target and Panjer clutter:
    /// `Y_u(Z) -> sum_j C(|Z| - j) e_j(Z)` for every `u`.
    #[test]
    fn poisson_target_reduction() {
        let clutter_ab = (6.0, 0.75);
        let clutter = PanjerParams::new(clutter_ab.0, clutter_ab.1).unwrap();
        let terms = vec![0.3, 12.0, 4.0, 1.5];
        let lambda = 3.0;
        let limit_y = |t: &[f64]| {
            let e = brute_force_esf(t);
            let s = t.len();
            (0..=s)
                .map(|j| {
                    let poch: f64 = (0..s - j).map(|i| clutter_ab.0 + i as f64).product();
                    poch / (clutter_ab.1 + 1.0).powi((s - j) as i32) * e[j]
                })
                .sum::<f64>()
        };
        let y0 = limit_y(&terms);
        for params in [
            PanjerParams::poisson(lambda).unwrap(),
            PanjerParams::new(lambda * 1e8, 1e8).unwrap(),
        ] {
            let table = MeasurementTermTable::new(terms.clone(), lambda, 0.9, &params).unwrap();
            let c = corrective_terms(&table, &params, &clutter).unwrap();
            assert_relative_eq!(c.missed_l1, 1.0, max_relative = 1e-4);
            assert_relative_eq!(c.missed_l2, 1.0, max_relative = 1e-4);
            for z in 0..terms.len() {
                let reduced: Vec<f64> = terms
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != z)
                    .map(|(_, t)| *t)
                    .collect();
                let want = limit_y(&reduced) / y0;
                assert_relative_eq!(c.l1[z], want, max_relative = 1e-4);
                assert_relative_eq!(c.l2[z], want, max_relative = 1e-4);
                for w in z + 1..terms.len() {
                    let pair: Vec<f64> = terms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != z && *i != w)
                        .map(|(_, t)| *t)
                        .collect();
                    assert_relative_eq!(c.pair(z, w).unwrap(), limit_y(&pair) / y0, max_relative = 1e-4);
                }
            }
        }
    }

    #[test]
    fn phd_terms_match_double_poisson_limit() {
        let terms = vec![0.3, 12.0, 4.0];
        let lambda_c = 2.5;
        let phd = CorrectiveTerms::poisson_limit(&terms, lambda_c).unwrap();
        let target = PanjerParams::poisson(5.0).unwrap();
        let clutter = PanjerParams::poisson(lambda_c).unwrap();
        let table = MeasurementTermTable::new(terms.clone(), 5.0, 0.9, &target).unwrap();
        let c = corrective_terms(&table, &target, &clutter).unwrap();
        for z in 0..3 {
            assert_relative_eq!(c.l1[z], phd.l1[z], max_relative = 1e-12);
            for w in 0..3 {
                if z != w {
                    assert_relative_eq!(c.pair(z, w).unwrap(), phd.l1[z] * phd.l1[w], max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn large_scene_stays_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let terms: Vec<f64> = (0..120).map(|_| rng.random_range(1e-3..1e5)).collect();
        let target = PanjerParams::new(50.0, 0.5).unwrap();
        let clutter = PanjerParams::poisson(40.0).unwrap();
        let table = MeasurementTermTable::new(terms, 100.0, 0.9, &target).unwrap();
        let c = corrective_terms_with(&table, &target, &clutter, false).unwrap();
        assert!(c.missed_l1.is_finite() && c.missed_l1 > 0.0);
        assert!(c.l1.iter().chain(&c.l2).all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn pair_total_matches_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let terms: Vec<f64> = (0..9).map(|_| rng.random_range(0.01..40.0)).collect();
        let target = PanjerParams::new(6.0, 0.4).unwrap();
        let clutter = PanjerParams::new(3.0, 0.2).unwrap();
        let table = MeasurementTermTable::new(terms.clone(), 15.0, 0.8, &target).unwrap();
        let c = corrective_terms(&table, &target, &clutter).unwrap();
        let direct = c.pair_quadratic(&terms, &terms).unwrap();
        assert_relative_eq!(c.pair_total, direct, max_relative = 1e-11);

        let phd = CorrectiveTerms::poisson_limit(&terms, 3.0).unwrap();
        let mut want = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    want += terms[i] * terms[j] * phd.l1[i] * phd.l1[j];
                }
            }
        }
        assert_relative_eq!(phd.pair_total, want, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn exchangeable_and_symmetric(
            terms in prop::collection::vec(0.01f64..50.0, 1..7),
            shift in 0usize..7,
            alpha in 0.2f64..30.0,
            beta in 0.05f64..5.0,
            lambda_c in 0.1f64..20.0,
        ) {
            let target = PanjerParams::new(alpha, beta).unwrap();
            let clutter = PanjerParams::poisson(lambda_c).unwrap();
            let mass = alpha / beta;
            let m = terms.len();
            let perm: Vec<usize> = (0..m).map(|i| (i + shift) % m).collect();
            let permuted: Vec<f64> = perm.iter().map(|&i| terms[i]).collect();
            let a = corrective_terms(&MeasurementTermTable::new(terms.clone(), mass, 0.7, &target).unwrap(), &target, &clutter).unwrap();
            let b = corrective_terms(&MeasurementTermTable::new(permuted, mass, 0.7, &target).unwrap(), &target, &clutter).unwrap();
            prop_assert!((a.missed_l1 - b.missed_l1).abs() <= 1e-12 * a.missed_l1);
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((a.l1[i] - b.l1[k]).abs() <= 1e-10 * a.l1[i]);
                prop_assert!((a.l2[i] - b.l2[k]).abs() <= 1e-10 * a.l2[i]);
                for (k2, &i2) in perm.iter().enumerate() {
                    let (pa, pb) = (a.pair(i, i2).unwrap(), b.pair(k, k2).unwrap());
                    prop_assert!((pa - pb).abs() <= 1e-10 * pa.max(1e-300));
                    prop_assert_eq!(a.pair(i, i2), a.pair(i2, i));
                }
            }
            prop_assert!(a.l1.iter().chain(&a.l2).all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!(a.missed_l2 >= 0.0);
        }
    }
}
