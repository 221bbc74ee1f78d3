//! Gaussian-mixture CPHD filter with a cardinality distribution truncated at
//! `N_max`.
//!
//! The update follows the standard recursion
//!
//! ```text
//! Y^u[W](n) = sum_j (|W| - j)! p_c(|W| - j) P^n_{j+u} q^{n-j-u} / N^{j+u} e_j(W)
//! ```
//!
//! with `q = 1 - p_d`, `N` the predicted intensity mass and `P^n_i = n!/(n-i)!`.
//! The corrective terms are the ratios `<Y^u[W], p> / <Y^0[Z], p>`, so the
//! regional statistics use the same expression as the second-order filter.

use crate::cardinality::{ln_factorial_pmf_table, log_sum_exp, panjer_ln_pmf};
use crate::corrective::{CorrectiveTerms, PairTable, ScaledEsf};
use crate::error::{Error, Result};
use crate::gm::{mixture_predict, GaussianMixture, LinearGaussianModel, Measurement};

use super::{
    finish_audit, measurement_mixtures, BirthModel, ClutterModel, Filter, FilterKind, FilterModels, UpdateAudit,
    UpdateOptions,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CphdState {
    pub intensity: GaussianMixture,
    /// Probabilities of `0..=N_max` targets.
    pub cardinality: Vec<f64>,
}

impl CphdState {
    /// No targets with certainty.
    pub fn empty(n_max: usize) -> Self {
        let mut cardinality = vec![0.0; n_max + 1];
        cardinality[0] = 1.0;
        Self {
            intensity: GaussianMixture::default(),
            cardinality,
        }
    }

    pub fn n_max(&self) -> usize {
        self.cardinality.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.cardinality.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.cardinality
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(2) * p)
            .sum()
    }
}

fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `j ln x` with the convention `0 ln 0 = 0`.
fn ln_pow(ln_x: f64, j: usize) -> f64 {
    if j == 0 {
        0.0
    } else {
        j as f64 * ln_x
    }
}

fn normalize_log(ln_w: &[f64]) -> Result<Vec<f64>> {
    let total = log_sum_exp(ln_w);
    if !total.is_finite() {
        return Err(Error::Numeric("cardinality distribution underflowed".into()));
    }
    Ok(ln_w.iter().map(|w| (w - total).exp()).collect())
}

/// Survival thinning followed by convolution with the birth cardinality,
/// truncated at `N_max` and renormalized.
pub fn cphd_predict(state: &CphdState, model: &LinearGaussianModel, birth: &BirthModel) -> Result<CphdState> {
    let n_max = state.n_max();
    let ln_fact = ln_factorials(n_max);
    let (ln_ps, ln_qs) = (model.p_s.ln(), (1.0 - model.p_s).ln());

    let ln_prior: Vec<f64> = state.cardinality.iter().map(|p| p.ln()).collect();
    let ln_surv: Vec<f64> = (0..=n_max)
        .map(|j| {
            let terms: Vec<f64> = (j..=n_max)
                .filter(|&n| ln_prior[n] > f64::NEG_INFINITY)
                .map(|n| {
                    ln_prior[n] + ln_fact[n] - ln_fact[j] - ln_fact[n - j] + ln_pow(ln_ps, j) + ln_pow(ln_qs, n - j)
                })
                .collect();
            log_sum_exp(&terms)
        })
        .collect();

    let birth_law = birth.cardinality()?;
    let ln_birth: Vec<f64> = (0..=n_max).map(|k| panjer_ln_pmf(&birth_law, k)).collect();
    let ln_pred: Vec<f64> = (0..=n_max)
        .map(|n| {
            let terms: Vec<f64> = (0..=n).map(|j| ln_surv[j] + ln_birth[n - j]).collect();
            log_sum_exp(&terms)
        })
        .collect();

    Ok(CphdState {
        intensity: mixture_predict(&state.intensity, model, &birth.mixture),
        cardinality: normalize_log(&ln_pred)?,
    })
}

/// Per-`n` evaluation of `Y^u` and its inner product with the predicted
/// cardinality distribution.
struct Recursion {
    n_max: usize,
    width: usize,
    ln_fact: Vec<f64>,
    ln_q: f64,
    ln_mass: f64,
    ln_prior: Vec<f64>,
    /// Row-scaled `exp(ln A_u(n, j))` and `row_scale_u(n) + ln p(n)`, for `u = 0, 1, 2`.
    scaled: [Vec<f64>; 3],
    row_weight: [Vec<f64>; 3],
}

impl Recursion {
    fn new(prior: &[f64], predicted_mass: f64, p_d: f64, max_set: usize) -> Self {
        let n_max = prior.len() - 1;
        let width = max_set + 1;
        let mut r = Self {
            n_max,
            width,
            ln_fact: ln_factorials(n_max),
            ln_q: (1.0 - p_d).ln(),
            ln_mass: predicted_mass.ln(),
            ln_prior: prior.iter().map(|p| p.ln()).collect(),
            scaled: Default::default(),
            row_weight: Default::default(),
        };
        for u in 0..3 {
            let mut scaled = vec![0.0; (n_max + 1) * width];
            let mut weight = vec![f64::NEG_INFINITY; n_max + 1];
            for n in 0..=n_max {
                let row: Vec<f64> = (0..width).map(|j| r.ln_a(n, j + u)).collect();
                let scale = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if scale == f64::NEG_INFINITY || r.ln_prior[n] == f64::NEG_INFINITY {
                    continue;
                }
                for (j, v) in row.iter().enumerate() {
                    scaled[n * width + j] = (v - scale).exp();
                }
                weight[n] = scale + r.ln_prior[n];
            }
            r.scaled[u] = scaled;
            r.row_weight[u] = weight;
        }
        r
    }

    /// `ln(P^n_i q^{n-i} / N^i)`.
    fn ln_a(&self, n: usize, i: usize) -> f64 {
        if i > n {
            return f64::NEG_INFINITY;
        }
        self.ln_fact[n] - self.ln_fact[n - i] + ln_pow(self.ln_q, n - i) - i as f64 * self.ln_mass
    }

    /// `ln Y^u[W](n)` for `W` described by `ln_b(j) = ln C(|W| - j) + ln e_j(W)`.
    fn ln_upsilon_at(&self, u: usize, ln_b: &[f64], n: usize) -> f64 {
        let terms: Vec<f64> = ln_b.iter().enumerate().map(|(j, b)| b + self.ln_a(n, j + u)).collect();
        log_sum_exp(&terms)
    }

    /// `ln <Y^u[W], p>`, by scaled dot products with a log-domain fallback.
    fn ln_inner(&self, u: usize, ln_b: &[f64]) -> f64 {
        debug_assert!(ln_b.len() <= self.width);
        let b_max = ln_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if b_max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let b: Vec<f64> = ln_b.iter().map(|v| (v - b_max).exp()).collect();
        let weights = &self.row_weight[u];
        let w_max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if w_max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut acc = 0.0;
        for (n, w) in weights.iter().enumerate() {
            if *w == f64::NEG_INFINITY {
                continue;
            }
            let row = &self.scaled[u][n * self.width..n * self.width + b.len()];
            let dot: f64 = row.iter().zip(&b).map(|(a, x)| a * x).sum();
            acc += (w - w_max).exp() * dot;
        }
        if acc > 1e-250 && acc.is_finite() {
            return b_max + w_max + acc.ln();
        }
        let terms: Vec<f64> = (0..=self.n_max)
            .map(|n| self.ln_prior[n] + self.ln_upsilon_at(u, ln_b, n))
            .collect();
        log_sum_exp(&terms)
    }
}

fn ln_b_of(values: &[f64], ln_clutter: &[f64]) -> Vec<f64> {
    let esf = ScaledEsf::new(values);
    let s = values.len();
    (0..=s).map(|j| ln_clutter[s - j] + esf.ln_e(j)).collect()
}

pub fn cphd_update(
    state: &CphdState,
    measurements: &[Measurement],
    model: &LinearGaussianModel,
    clutter: &ClutterModel,
    options: &UpdateOptions,
) -> Result<(CphdState, UpdateAudit)> {
    let mass = state.intensity.mass();
    if !(mass > 0.0) {
        return Err(Error::Domain(
            "CPHD update needs a positive predicted intensity mass".into(),
        ));
    }
    let (missed, detected) = measurement_mixtures(&state.intensity, measurements, model, clutter.density())?;
    let t: Vec<f64> = detected.iter().map(GaussianMixture::mass).collect();
    let m = t.len();
    let ln_clutter = ln_factorial_pmf_table(&clutter.cardinality, m);
    let rec = Recursion::new(&state.cardinality, mass, model.p_d, m);

    let full = ln_b_of(&t, &ln_clutter);
    let ln_y0 = rec.ln_inner(0, &full);
    if ln_y0 == f64::NEG_INFINITY {
        return Err(Error::Numeric("CPHD normalizing constant vanished".into()));
    }
    let ratio = |ln_num: f64| (ln_num - ln_y0).exp();

    let mut l1 = Vec::with_capacity(m);
    let mut l2 = Vec::with_capacity(m);
    let mut reduced = Vec::with_capacity(m);
    for i in 0..m {
        reduced.clear();
        reduced.extend(t.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v));
        let b = ln_b_of(&reduced, &ln_clutter);
        l1.push(ratio(rec.ln_inner(1, &b)));
        l2.push(ratio(rec.ln_inner(2, &b)));
    }
    let pairs = if options.with_pairs {
        Some(PairTable::from_fn(m, |i, j| {
            let rest: Vec<f64> = t
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, v)| *v)
                .collect();
            Ok(ratio(rec.ln_inner(2, &ln_b_of(&rest, &ln_clutter))))
        })?)
    } else {
        None
    };
    let pair_total = if m >= 2 {
        let esf = ScaledEsf::new(&t);
        let b: Vec<f64> = (0..=m - 2)
            .map(|j| ln_clutter[m - 2 - j] + esf.ln_e(j + 2) + (((j + 1) * (j + 2)) as f64).ln())
            .collect();
        ratio(rec.ln_inner(2, &b))
    } else {
        0.0
    };
    let terms = CorrectiveTerms {
        missed_l1: ratio(rec.ln_inner(1, &full)),
        missed_l2: ratio(rec.ln_inner(2, &full)),
        l1,
        l2,
        pairs,
        pair_total,
        product_form: false,
    };

    let ln_post: Vec<f64> = (0..=rec.n_max)
        .map(|n| rec.ln_prior[n] + rec.ln_upsilon_at(0, &full, n))
        .collect();
    let cardinality = normalize_log(&ln_post)?;

    let audit = finish_audit(FilterKind::Cphd, mass, missed, detected, terms, false);
    Ok((
        CphdState {
            intensity: audit.posterior_intensity(),
            cardinality,
        },
        audit,
    ))
}

#[derive(Clone, Debug)]
pub struct CphdFilter {
    pub models: FilterModels,
    pub n_max: usize,
}

impl Filter for CphdFilter {
    type State = CphdState;

    fn kind(&self) -> FilterKind {
        FilterKind::Cphd
    }

    fn models(&self) -> &FilterModels {
        &self.models
    }

    fn initial_state(&self) -> CphdState {
        CphdState::empty(self.n_max)
    }

    fn predict(&self, state: &CphdState) -> Result<CphdState> {
        cphd_predict(state, &self.models.model, &self.models.birth)
    }

    fn update(
        &self,
        state: &CphdState,
        measurements: &[Measurement],
        options: &UpdateOptions,
    ) -> Result<(CphdState, UpdateAudit)> {
        cphd_update(state, measurements, &self.models.model, &self.models.clutter, options)
    }

    fn intensity<'a>(&self, state: &'a CphdState) -> &'a GaussianMixture {
        &state.intensity
    }

    fn with_intensity(&self, state: CphdState, intensity: GaussianMixture) -> CphdState {
        CphdState { intensity, ..state }
    }

    fn cardinality_moments(&self, state: &CphdState, _audit: &UpdateAudit) -> (f64, f64) {
        (state.mean(), state.variance())
    }
}
