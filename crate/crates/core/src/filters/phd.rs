//! Classic Gaussian-mixture PHD filter.

use crate::corrective::CorrectiveTerms;
use crate::error::Result;
use crate::gm::{mixture_predict, GaussianMixture, LinearGaussianModel, Measurement};

use super::{
    finish_audit, measurement_mixtures, BirthModel, ClutterModel, Filter, FilterKind, FilterModels, UpdateAudit,
    UpdateOptions,
};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhdState {
    pub intensity: GaussianMixture,
}

pub fn phd_predict(state: &PhdState, model: &LinearGaussianModel, birth: &BirthModel) -> PhdState {
    PhdState {
        intensity: mixture_predict(&state.intensity, model, &birth.mixture),
    }
}

/// Detection weights `p_d w N(z) / (lambda_c s_c(z) + mu^z(X))`; the clutter
/// law enters only through its mean.
pub fn phd_update(
    state: &PhdState,
    measurements: &[Measurement],
    model: &LinearGaussianModel,
    clutter: &ClutterModel,
) -> Result<(PhdState, UpdateAudit)> {
    let (missed, detected) = measurement_mixtures(&state.intensity, measurements, model, clutter.density())?;
    let t: Vec<f64> = detected.iter().map(GaussianMixture::mass).collect();
    let terms = CorrectiveTerms::poisson_limit(&t, clutter.rate())?;
    let audit = finish_audit(FilterKind::Phd, state.intensity.mass(), missed, detected, terms, false);
    Ok((
        PhdState {
            intensity: audit.posterior_intensity(),
        },
        audit,
    ))
}

#[derive(Clone, Debug)]
pub struct PhdFilter {
    pub models: FilterModels,
}

impl Filter for PhdFilter {
    type State = PhdState;

    fn kind(&self) -> FilterKind {
        FilterKind::Phd
    }

    fn models(&self) -> &FilterModels {
        &self.models
    }

    fn initial_state(&self) -> PhdState {
        PhdState::default()
    }

    fn predict(&self, state: &PhdState) -> Result<PhdState> {
        Ok(phd_predict(state, &self.models.model, &self.models.birth))
    }

    fn update(
        &self,
        state: &PhdState,
        measurements: &[Measurement],
        _options: &UpdateOptions,
    ) -> Result<(PhdState, UpdateAudit)> {
        phd_update(state, measurements, &self.models.model, &self.models.clutter)
    }

    fn intensity<'a>(&self, state: &'a PhdState) -> &'a GaussianMixture {
        &state.intensity
    }

    fn with_intensity(&self, _state: PhdState, intensity: GaussianMixture) -> PhdState {
        PhdState { intensity }
    }

    /// The variance is the whole-space value of the PHD covariance.
    fn cardinality_moments(&self, state: &PhdState, audit: &UpdateAudit) -> (f64, f64) {
        (state.intensity.mass(), audit.updated_var)
    }
}
