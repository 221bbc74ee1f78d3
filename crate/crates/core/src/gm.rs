//! Gaussian-mixture intensities on a 2-D nearly-constant-velocity state.
//!
//! States are `[px, py, vx, vy]`, measurements are positions.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type State = Vector4<f64>;
pub type StateCov = Matrix4<f64>;
pub type Measurement = Vector2<f64>;

const JITTER: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: State,
    pub cov: StateCov,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: State, cov: StateCov) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::Domain(format!(
                "component weight {weight} must be finite and >= 0"
            )));
        }
        Ok(Self {
            weight,
            mean,
            cov: sanitize_cov(cov),
        })
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.mean[0], self.mean[1])
    }
}

/// Symmetrizes and, if the Cholesky factorization fails, adds a small jitter.
pub fn sanitize_cov(cov: StateCov) -> StateCov {
    let sym = (cov + cov.transpose()) * 0.5;
    if sym.cholesky().is_some() {
        sym
    } else {
        sym + StateCov::identity() * JITTER
    }
}

/// A weighted sum of Gaussians representing an intensity, not a density.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GaussianComponent> {
        self.components.iter()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| GaussianComponent {
                    weight: c.weight * factor,
                    ..c.clone()
                })
                .collect(),
        }
    }

    /// Expected number of targets whose position lies in `region`.
    pub fn region_mass(&self, region: &Region) -> f64 {
        self.components.iter().map(|c| region_mass(c, region)).sum()
    }
}

/// Linear-Gaussian motion and sensor model with uniform survival and detection.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearGaussianModel {
    pub f: StateCov,
    pub q: StateCov,
    pub h: Matrix2x4<f64>,
    pub r: Matrix2<f64>,
    pub p_s: f64,
    pub p_d: f64,
}

impl LinearGaussianModel {
    pub fn new(f: StateCov, q: StateCov, h: Matrix2x4<f64>, r: Matrix2<f64>, p_s: f64, p_d: f64) -> Result<Self> {
        for (name, p) in [("p_s", p_s), ("p_d", p_d)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} must lie in [0, 1]")));
            }
        }
        if (q - q.transpose()).abs().max() > 1e-12 || (r - r.transpose()).abs().max() > 1e-12 {
            return Err(Error::Domain("Q and R must be symmetric".into()));
        }
        if q.symmetric_eigenvalues().min() < -1e-12 || r.symmetric_eigenvalues().min() < -1e-12 {
            return Err(Error::Domain("Q and R must be positive semi-definite".into()));
        }
        Ok(Self { f, q, h, r, p_s, p_d })
    }

    /// Nearly-constant-velocity dynamics with white acceleration noise and a
    /// position sensor with isotropic noise.
    pub fn ncv(dt: f64, accel_sigma: f64, noise_sigma: f64, p_s: f64, p_d: f64) -> Result<Self> {
        if !(dt > 0.0) || accel_sigma < 0.0 || noise_sigma < 0.0 {
            return Err(Error::Domain("dt must be > 0 and sigmas >= 0".into()));
        }
        let mut f = StateCov::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let a = accel_sigma * accel_sigma;
        let (q11, q12, q22) = (dt.powi(4) / 4.0 * a, dt.powi(3) / 2.0 * a, dt * dt * a);
        #[rustfmt::skip]
        let q = StateCov::new(
            q11, 0.0, q12, 0.0,
            0.0, q11, 0.0, q12,
            q12, 0.0, q22, 0.0,
            0.0, q12, 0.0, q22,
        );
        #[rustfmt::skip]
        let h = Matrix2x4::new(
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        );
        let r = Matrix2::identity() * noise_sigma * noise_sigma;
        Self::new(f, q, h, r, p_s, p_d)
    }
}

/// Survival thinning and motion of every component, followed by the births.
pub fn mixture_predict(
    mix: &GaussianMixture,
    model: &LinearGaussianModel,
    births: &GaussianMixture,
) -> GaussianMixture {
    let ft = model.f.transpose();
    let mut components = Vec::with_capacity(mix.len() + births.len());
    components.extend(mix.iter().map(|c| GaussianComponent {
        weight: model.p_s * c.weight,
        mean: model.f * c.mean,
        cov: sanitize_cov(model.f * c.cov * ft + model.q),
    }));
    components.extend(births.iter().cloned());
    GaussianMixture { components }
}

/// Per-component Kalman quantities that do not depend on the measurement.
#[derive(Clone, Debug)]
pub struct UpdateTemplate {
    pub predicted_z: Measurement,
    pub gain: Matrix4x2<f64>,
    pub cov: StateCov,
    s_inv: Matrix2<f64>,
    ln_norm: f64,
    mean: State,
}

impl UpdateTemplate {
    /// Fails when the innovation covariance is singular; `index` names the
    /// component in the error.
    pub fn new(index: usize, comp: &GaussianComponent, model: &LinearGaussianModel) -> Result<Self> {
        let ht = model.h.transpose();
        let s = model.h * comp.cov * ht + model.r;
        let s = (s + s.transpose()) * 0.5;
        let det = s.determinant();
        let s_inv = match s.try_inverse() {
            Some(inv) if det > 0.0 && det.is_finite() => inv,
            _ => {
                return Err(Error::Numeric(format!(
                    "singular innovation covariance for component {index} (det S = {det})"
                )))
            }
        };
        let gain = comp.cov * ht * s_inv;
        let ikh = StateCov::identity() - gain * model.h;
        let cov = sanitize_cov(ikh * comp.cov * ikh.transpose() + gain * model.r * gain.transpose());
        Ok(Self {
            predicted_z: model.h * comp.mean,
            gain,
            cov,
            s_inv,
            ln_norm: -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln(),
            mean: comp.mean,
        })
    }

    pub fn ln_likelihood(&self, z: &Measurement) -> f64 {
        let y = z - self.predicted_z;
        self.ln_norm - 0.5 * (y.transpose() * self.s_inv * y)[0]
    }

    pub fn posterior_mean(&self, z: &Measurement) -> State {
        self.mean + self.gain * (z - self.predicted_z)
    }
}

#[derive(Clone, Debug)]
pub struct KalmanTerms {
    /// Posterior component; its weight is the prior weight.
    pub updated: GaussianComponent,
    pub innovation: Measurement,
    pub likelihood: f64,
}

/// Joseph-form Kalman update of one component with one measurement.
pub fn kalman_terms(comp: &GaussianComponent, z: &Measurement, model: &LinearGaussianModel) -> Result<KalmanTerms> {
    let t = UpdateTemplate::new(0, comp, model)?;
    Ok(KalmanTerms {
        updated: GaussianComponent {
            weight: comp.weight,
            mean: t.posterior_mean(z),
            cov: t.cov,
        },
        innovation: z - t.predicted_z,
        likelihood: t.ln_likelihood(z).exp(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionParams {
    pub prune_threshold: f64,
    /// Threshold on the squared Mahalanobis form.
    pub merge_distance: f64,
    pub max_components: usize,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-5,
            merge_distance: 4.0,
            max_components: 300,
        }
    }
}

/// Pruning, greedy moment-matched merging and capping.
pub fn prune_merge(mix: &GaussianMixture, params: &ReductionParams) -> GaussianMixture {
    let mut order: Vec<usize> = (0..mix.len())
        .filter(|&i| mix.components[i].weight > params.prune_threshold)
        .collect();
    order.sort_by(|&a, &b| {
        mix.components[b]
            .weight
            .total_cmp(&mix.components[a].weight)
            .then(a.cmp(&b))
    });

    let mut taken = vec![false; mix.len()];
    let mut out = Vec::new();
    for &lead in &order {
        if taken[lead] {
            continue;
        }
        let leader = &mix.components[lead];
        let inv = leader
            .cov
            .try_inverse()
            .unwrap_or_else(|| (leader.cov + StateCov::identity() * JITTER).try_inverse().unwrap());
        let group: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&j| {
                if taken[j] {
                    return false;
                }
                let d = mix.components[j].mean - leader.mean;
                (d.transpose() * inv * d)[0] <= params.merge_distance
            })
            .collect();
        let weight: f64 = group.iter().map(|&j| mix.components[j].weight).sum();
        let mean = group
            .iter()
            .map(|&j| mix.components[j].mean * mix.components[j].weight)
            .sum::<State>()
            / weight;
        let cov = group
            .iter()
            .map(|&j| {
                let c = &mix.components[j];
                let d = c.mean - mean;
                (c.cov + d * d.transpose()) * c.weight
            })
            .sum::<StateCov>()
            / weight;
        for &j in &group {
            taken[j] = true;
        }
        out.push(GaussianComponent {
            weight,
            mean,
            cov: sanitize_cov(cov),
        });
    }
    // Leaders are visited in decreasing weight, but merging can reorder them.
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    out.truncate(params.max_components);
    GaussianMixture { components: out }
}

/// Means of the heaviest components, one per expected target.
///
/// Components above 0.5 come first; the list is cut or padded to
/// `round(expected_count)` following decreasing weight, ties by index.
pub fn extract_states(mix: &GaussianMixture, expected_count: f64) -> Vec<State> {
    let target = expected_count.max(0.0).round() as usize;
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| {
        mix.components[b]
            .weight
            .total_cmp(&mix.components[a].weight)
            .then(a.cmp(&b))
    });
    let confident = order.iter().take_while(|&&i| mix.components[i].weight > 0.5).count();
    let n = if confident >= target {
        target
    } else {
        target.min(mix.len())
    };
    order.into_iter().take(n).map(|i| mix.components[i].mean).collect()
}

/// Axis-aligned box in position coordinates; bounds may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn whole_plane() -> Self {
        Self {
            x_min: f64::NEG_INFINITY,
            x_max: f64::INFINITY,
            y_min: f64::NEG_INFINITY,
            y_max: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "region {self:?} needs lower < upper on both axes"
            )))
        }
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        let r = Region {
            x_min: self.x_min.max(other.x_min),
            x_max: self.x_max.min(other.x_max),
            y_min: self.y_min.max(other.y_min),
            y_max: self.y_max.min(other.y_max),
        };
        (r.x_min < r.x_max && r.y_min < r.y_max).then_some(r)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

/// Standard normal probability of `[a, b]`, accurate in both tails.
fn normal_interval(a: f64, b: f64) -> f64 {
    use statrs::function::erf::erfc;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a * s) - erfc(b * s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b * s) - erfc(-a * s))
    } else {
        1.0 - 0.5 * (erfc(-a * s) + erfc(b * s))
    }
}

const GL_ORDER: usize = 32;
const TAIL: f64 = 10.0;

fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// `weight * P(position in region)` for one component.
pub fn region_mass(comp: &GaussianComponent, region: &Region) -> f64 {
    if comp.weight == 0.0 {
        return 0.0;
    }
    let (mx, my) = (comp.mean[0], comp.mean[1]);
    let (sxx, sxy, syy) = (comp.cov[(0, 0)], comp.cov[(0, 1)], comp.cov[(1, 1)]);
    let (sx, sy) = (sxx.sqrt(), syy.sqrt());
    let (ax, bx) = ((region.x_min - mx) / sx, (region.x_max - mx) / sx);
    let (ay, by) = ((region.y_min - my) / sy, (region.y_max - my) / sy);
    if ax >= TAIL || bx <= -TAIL || ay >= TAIL || by <= -TAIL {
        return 0.0;
    }
    let inside_x = ax <= -TAIL && bx >= TAIL;
    let inside_y = ay <= -TAIL && by >= TAIL;
    if inside_x && inside_y {
        return comp.weight;
    }
    let rho = (sxy / (sx * sy)).clamp(-1.0, 1.0);
    if rho.abs() < 1e-14 || inside_x || inside_y {
        return comp.weight * normal_interval(ax, bx) * normal_interval(ay, by);
    }

    // Integrate the x-marginal against the conditional y-interval probability.
    let lo = ax.max(-TAIL);
    let hi = bx.min(TAIL);
    let cond_sd = (1.0 - rho * rho).sqrt();
    let panels = ((hi - lo) / 2.0).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let nodes = gauss_legendre();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for &(x, w) in nodes {
            let u = mid + 0.5 * width * x;
            let pdf = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let py = if cond_sd > 0.0 {
                normal_interval((ay - rho * u) / cond_sd, (by - rho * u) / cond_sd)
            } else if (ay..=by).contains(&(rho * u)) {
                1.0
            } else {
                0.0
            };
            total += w * pdf * py;
        }
    }
    comp.weight * (total * 0.5 * width).clamp(0.0, 1.0)
}
