//! Second-order PHD filter with a Panjer predicted target process.

use crate::cardinality::{panjer_from_moments_with, CardinalityStats};
use crate::corrective::{corrective_terms_with, MeasurementTermTable};
use crate::error::Result;
use crate::gm::{mixture_predict, GaussianMixture, LinearGaussianModel, Measurement};

use super::{
    finish_audit, measurement_mixtures, BirthModel, ClutterModel, Filter, FilterKind, FilterModels, UpdateAudit,
    UpdateOptions,
};

/// Intensity plus the variance of the total number of targets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SecondOrderState {
    pub intensity: GaussianMixture,
    pub var_total: f64,
}

/// Intensity prediction and the whole-space variance
/// `var_b + p_s^2 var + p_s (1 - p_s) mu`.
pub fn sophd_predict(state: &SecondOrderState, model: &LinearGaussianModel, birth: &BirthModel) -> SecondOrderState {
    let p_s = model.p_s;
    let mass = state.intensity.mass();
    SecondOrderState {
        intensity: mixture_predict(&state.intensity, model, &birth.mixture),
        var_total: birth.variance + p_s * p_s * state.var_total + p_s * (1.0 - p_s) * mass,
    }
}

pub fn sophd_update(
    state: &SecondOrderState,
    measurements: &[Measurement],
    model: &LinearGaussianModel,
    clutter: &ClutterModel,
    options: &UpdateOptions,
) -> Result<(SecondOrderState, UpdateAudit)> {
    let mass = state.intensity.mass();
    let conversion = panjer_from_moments_with(CardinalityStats::new(mass, state.var_total.max(0.0))?, options.policy)?;
    let target = conversion.params;
    let (missed, detected) = measurement_mixtures(&state.intensity, measurements, model, clutter.density())?;
    let table = MeasurementTermTable::new(
        detected.iter().map(GaussianMixture::mass).collect(),
        mass,
        model.p_d,
        &target,
    )?;
    let terms = corrective_terms_with(&table, &target, &clutter.cardinality, options.with_pairs)?;
    let audit = finish_audit(
        FilterKind::SecondOrder,
        mass,
        missed,
        detected,
        terms,
        conversion.clamped,
    );
    let posterior = SecondOrderState {
        intensity: audit.posterior_intensity(),
        var_total: audit.updated_var,
    };
    Ok((posterior, audit))
}

#[derive(Clone, Debug)]
pub struct SecondOrderFilter {
    pub models: FilterModels,
}

impl Filter for SecondOrderFilter {
    type State = SecondOrderState;

    fn kind(&self) -> FilterKind {
        FilterKind::SecondOrder
    }

    fn models(&self) -> &FilterModels {
        &self.models
    }

    fn initial_state(&self) -> SecondOrderState {
        SecondOrderState::default()
    }

    fn predict(&self, state: &SecondOrderState) -> Result<SecondOrderState> {
        Ok(sophd_predict(state, &self.models.model, &self.models.birth))
    }

    fn update(
        &self,
        state: &SecondOrderState,
        measurements: &[Measurement],
        options: &UpdateOptions,
    ) -> Result<(SecondOrderState, UpdateAudit)> {
        sophd_update(state, measurements, &self.models.model, &self.models.clutter, options)
    }

    fn intensity<'a>(&self, state: &'a SecondOrderState) -> &'a GaussianMixture {
        &state.intensity
    }

    fn with_intensity(&self, state: SecondOrderState, intensity: GaussianMixture) -> SecondOrderState {
        SecondOrderState { intensity, ..state }
    }

    fn cardinality_moments(&self, state: &SecondOrderState, _audit: &UpdateAudit) -> (f64, f64) {
        (state.intensity.mass(), state.var_total)
    }
}
