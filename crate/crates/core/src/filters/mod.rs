//! The second-order PHD filter and the PHD and CPHD baselines.
//!
//! Every update returns the unreduced posterior together with an
//! [`UpdateAudit`] from which regional statistics can be evaluated later.

pub mod cphd;
pub mod phd;
pub mod second_order;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cardinality::{panjer_from_moments, CardinalityStats, PanjerParams};
use crate::corrective::CorrectiveTerms;
use crate::error::{Error, Result};
use crate::gm::{
    prune_merge, GaussianComponent, GaussianMixture, LinearGaussianModel, Measurement, ReductionParams, Region,
    UpdateTemplate,
};
use crate::regional::{mean_from_masses, whole_space_variance, RegionMasses};

pub use cphd::{cphd_predict, cphd_update, CphdFilter, CphdState};
pub use phd::{phd_predict, phd_update, PhdFilter, PhdState};
pub use second_order::{sophd_predict, sophd_update, SecondOrderFilter, SecondOrderState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterKind {
    #[serde(rename = "phd")]
    Phd,
    #[serde(rename = "sophd")]
    SecondOrder,
    #[serde(rename = "cphd")]
    Cphd,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Phd, FilterKind::SecondOrder, FilterKind::Cphd];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Phd => "phd",
            FilterKind::SecondOrder => "sophd",
            FilterKind::Cphd => "cphd",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phd" => Ok(FilterKind::Phd),
            "sophd" | "second_order" | "panjer" => Ok(FilterKind::SecondOrder),
            "cphd" => Ok(FilterKind::Cphd),
            other => Err(Error::Usage(format!(
                "unknown filter `{other}` (expected phd, sophd or cphd)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthFamily {
    Poisson,
    NegativeBinomial,
}

/// Birth intensity plus the variance of the number of births.
#[derive(Clone, Debug, PartialEq)]
pub struct BirthModel {
    pub mixture: GaussianMixture,
    pub variance: f64,
    pub family: BirthFamily,
}

impl BirthModel {
    pub fn poisson(mixture: GaussianMixture) -> Self {
        Self {
            variance: mixture.mass(),
            mixture,
            family: BirthFamily::Poisson,
        }
    }

    pub fn negative_binomial(mixture: GaussianMixture, variance: f64) -> Result<Self> {
        let mean = mixture.mass();
        if !(variance.is_finite() && variance >= mean) {
            return Err(Error::Domain(format!(
                "negative binomial birth needs variance >= mean ({variance} < {mean})"
            )));
        }
        Ok(Self {
            mixture,
            variance,
            family: BirthFamily::NegativeBinomial,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mixture.mass()
    }

    /// Panjer law of the number of births.
    pub fn cardinality(&self) -> Result<PanjerParams> {
        match self.family {
            BirthFamily::Poisson => PanjerParams::poisson(self.mean()),
            BirthFamily::NegativeBinomial => panjer_from_moments(CardinalityStats::new(self.mean(), self.variance)?),
        }
    }
}

/// Panjer clutter, spatially uniform over a union of disjoint boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterModel {
    pub cardinality: PanjerParams,
    pub support: Vec<Region>,
}

impl ClutterModel {
    pub fn new(cardinality: PanjerParams, window: Region) -> Result<Self> {
        Self::over(cardinality, vec![window])
    }

    /// Clutter spread uniformly over several boxes with disjoint interiors.
    pub fn over(cardinality: PanjerParams, support: Vec<Region>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Domain("clutter support needs at least one box".into()));
        }
        for (i, r) in support.iter().enumerate() {
            r.validate()?;
            let area = r.area();
            if !(area.is_finite() && area > 0.0) {
                return Err(Error::Domain("clutter boxes must have finite positive area".into()));
            }
            if support[..i]
                .iter()
                .any(|o| o.intersection(r).is_some_and(|x| x.area() > 0.0))
            {
                return Err(Error::Domain("clutter boxes must not overlap".into()));
            }
        }
        Ok(Self { cardinality, support })
    }

    pub fn poisson(rate: f64, window: Region) -> Result<Self> {
        Self::new(PanjerParams::poisson(rate)?, window)
    }

    pub fn rate(&self) -> f64 {
        self.cardinality.mean()
    }

    /// `s_c(z)`; the uniform value is also used for target-originated
    /// measurements that fall outside the support.
    pub fn density(&self) -> f64 {
        1.0 / self.support.iter().map(Region::area).sum::<f64>()
    }
}

/// Everything a filter needs besides its state.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterModels {
    pub model: LinearGaussianModel,
    pub birth: BirthModel,
    pub clutter: ClutterModel,
    pub reduction: ReductionParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateOptions {
    /// Build the `l_2^{!=}` table, needed for regional covariances.
    pub with_pairs: bool,
    pub policy: crate::cardinality::UnderdispersionPolicy,
}

/// Quantities cached by an update for regional statistics after the fact.
#[derive(Clone, Debug)]
pub struct UpdateAudit {
    pub kind: FilterKind,
    pub predicted_mass: f64,
    /// `mu^phi`: predicted intensity thinned by `1 - p_d`.
    pub missed: GaussianMixture,
    /// `mu^z / s_c(z)` for every measurement, with posterior means and covariances.
    pub detected: Vec<GaussianMixture>,
    pub terms: CorrectiveTerms,
    pub updated_mass: f64,
    /// Whole-space variance after clamping at zero.
    pub updated_var: f64,
    pub raw_var: f64,
    /// The predicted moments were underdispersed and replaced by a Poisson law.
    pub poisson_fallback: bool,
}

impl UpdateAudit {
    pub fn region_masses(&self, region: &Region) -> RegionMasses {
        RegionMasses::from_audit(self, region)
    }

    /// `l_1(phi) mu^phi + sum_z l_1(z) mu^z / s_c(z)`.
    pub fn posterior_intensity(&self) -> GaussianMixture {
        let mut components =
            Vec::with_capacity(self.missed.len() + self.detected.iter().map(GaussianMixture::len).sum::<usize>());
        let scale = |mix: &GaussianMixture, f: f64, out: &mut Vec<GaussianComponent>| {
            out.extend(mix.iter().map(|c| GaussianComponent {
                weight: c.weight * f,
                ..c.clone()
            }))
        };
        scale(&self.missed, self.terms.missed_l1, &mut components);
        for (mix, l1) in self.detected.iter().zip(&self.terms.l1) {
            scale(mix, *l1, &mut components);
        }
        GaussianMixture { components }
    }
}

/// Missed-detection and per-measurement mixtures of the predicted intensity.
pub fn measurement_mixtures(
    predicted: &GaussianMixture,
    measurements: &[Measurement],
    model: &LinearGaussianModel,
    clutter_density: f64,
) -> Result<(GaussianMixture, Vec<GaussianMixture>)> {
    let missed = predicted.scaled(1.0 - model.p_d);
    if measurements.is_empty() {
        return Ok((missed, Vec::new()));
    }
    let templates = predicted
        .iter()
        .enumerate()
        .map(|(i, c)| UpdateTemplate::new(i, c, model))
        .collect::<Result<Vec<_>>>()?;
    let detected = measurements
        .iter()
        .map(|z| {
            let components = predicted
                .iter()
                .zip(&templates)
                .filter_map(|(c, t)| {
                    let weight = model.p_d * c.weight * t.ln_likelihood(z).exp() / clutter_density;
                    (weight > 0.0).then(|| GaussianComponent {
                        weight,
                        mean: t.posterior_mean(z),
                        cov: t.cov,
                    })
                })
                .collect();
            GaussianMixture { components }
        })
        .collect();
    Ok((missed, detected))
}

/// Audit assembly shared by the three filters.
pub(crate) fn finish_audit(
    kind: FilterKind,
    predicted_mass: f64,
    missed: GaussianMixture,
    detected: Vec<GaussianMixture>,
    terms: CorrectiveTerms,
    poisson_fallback: bool,
) -> UpdateAudit {
    let whole = RegionMasses {
        missed: missed.mass(),
        detected: detected.iter().map(GaussianMixture::mass).collect(),
    };
    let updated_mass = mean_from_masses(&terms, &whole);
    let raw_var = whole_space_variance(&terms, &whole);
    UpdateAudit {
        kind,
        predicted_mass,
        missed,
        detected,
        terms,
        updated_mass,
        updated_var: raw_var.max(0.0),
        raw_var,
        poisson_fallback,
    }
}

/// Common interface used by the experiment runner.
pub trait Filter: Send + Sync {
    type State: Clone + Send;

    fn kind(&self) -> FilterKind;
    fn models(&self) -> &FilterModels;
    fn initial_state(&self) -> Self::State;
    fn predict(&self, state: &Self::State) -> Result<Self::State>;
    /// Returns the unreduced posterior.
    fn update(
        &self,
        state: &Self::State,
        measurements: &[Measurement],
        options: &UpdateOptions,
    ) -> Result<(Self::State, UpdateAudit)>;
    fn intensity<'a>(&self, state: &'a Self::State) -> &'a GaussianMixture;
    fn with_intensity(&self, state: Self::State, intensity: GaussianMixture) -> Self::State;
    /// Estimated mean and variance of the number of targets.
    fn cardinality_moments(&self, state: &Self::State, audit: &UpdateAudit) -> (f64, f64);

    fn reduce(&self, state: Self::State) -> Self::State {
        let reduced = prune_merge(self.intensity(&state), &self.models().reduction);
        self.with_intensity(state, reduced)
    }
}
