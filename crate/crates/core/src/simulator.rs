//! Ground truth and measurements for the benchmark scenarios.
//!
//! Each Monte-Carlo trial draws from its own ChaCha stream derived from
//! `(seed, trial)`, so trials can run in any order.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::cardinality::PanjerParams;
use crate::error::{Error, Result};
use crate::filters::{BirthModel, ClutterModel, FilterModels};
use crate::gm::{
    GaussianComponent, GaussianMixture, LinearGaussianModel, Measurement, ReductionParams, Region, State, StateCov,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Motion {
    pub accel_sigma: f64,
    pub init_velocity_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub p_d: f64,
    pub noise_sigma: f64,
}

/// Named area with its own clutter and a centred spawn box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub name: String,
    pub bounds: Region,
    /// Expected clutter points per step, uniform over the area.
    pub clutter_rate: f64,
    /// Side of the spawn box as a fraction of the area side; 0.5 gives the
    /// central quarter of the area.
    #[serde(default = "default_spawn_fraction")]
    pub spawn_fraction: f64,
}

fn default_spawn_fraction() -> f64 {
    0.5
}

impl Area {
    pub fn spawn_box(&self) -> Region {
        let b = &self.bounds;
        let (cx, cy) = ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0);
        let (hx, hy) = (
            (b.x_max - b.x_min) * self.spawn_fraction / 2.0,
            (b.y_max - b.y_min) * self.spawn_fraction / 2.0,
        );
        Region {
            x_min: cx - hx,
            x_max: cx + hx,
            y_min: cy - hy,
            y_max: cy + hy,
        }
    }
}

/// Births (`count > 0`) or deaths (`count < 0`) at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub step: usize,
    pub count: i64,
    /// Area for births; deaths pick uniformly among all live targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<String>,
}

/// Every target in `area` goes undetected at steps divisible by `period`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedMisses {
    pub period: usize,
    pub area: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthKind {
    Poisson,
    NegativeBinomial,
}

/// Model parameters handed to the filters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    pub p_s: f64,
    pub birth: BirthKind,
    pub birth_mean: f64,
    /// Ignored for Poisson births.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_variance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Steps are numbered `1..=duration`.
    pub duration: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub mc_runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub motion: Motion,
    pub sensor: Sensor,
    pub filter: FilterParams,
    pub areas: Vec<Area>,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_misses: Option<ForcedMisses>,
    /// Boxes for regional statistics.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
}

fn default_dt() -> f64 {
    1.0
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scn: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("scenario `{}`: {msg}", self.name)));
        if self.duration == 0 || self.mc_runs == 0 {
            return bad("duration and mc_runs must be >= 1".into());
        }
        if !(self.dt > 0.0) {
            return bad("dt must be > 0".into());
        }
        for (name, v) in [
            ("accel_sigma", self.motion.accel_sigma),
            ("init_velocity_sigma", self.motion.init_velocity_sigma),
            ("noise_sigma", self.sensor.noise_sigma),
        ] {
            if !(v >= 0.0) {
                return bad(format!("{name} must be >= 0"));
            }
        }
        for (name, p) in [("p_d", self.sensor.p_d), ("p_s", self.filter.p_s)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.filter.birth_mean > 0.0) {
            return bad("birth_mean must be > 0".into());
        }
        if self.filter.birth == BirthKind::NegativeBinomial
            && !self.filter.birth_variance.is_some_and(|v| v >= self.filter.birth_mean)
        {
            return bad("negative binomial births need birth_variance >= birth_mean".into());
        }
        if self.areas.is_empty() {
            return bad("at least one area is required".into());
        }
        for (i, a) in self.areas.iter().enumerate() {
            a.bounds.validate()?;
            if !a.bounds.area().is_finite()
                || !(a.clutter_rate >= 0.0)
                || !(a.spawn_fraction > 0.0 && a.spawn_fraction <= 1.0)
            {
                return bad(format!(
                    "area `{}` needs finite bounds, clutter_rate >= 0, spawn_fraction in (0, 1]",
                    a.name
                ));
            }
            if self.areas[..i].iter().any(|b| b.name == a.name) {
                return bad(format!("duplicate area `{}`", a.name));
            }
        }
        for e in &self.events {
            if e.step == 0 || e.step > self.duration {
                return bad(format!("event at step {} lies outside 1..={}", e.step, self.duration));
            }
            if let Some(name) = &e.area {
                self.area(name)?;
            }
        }
        if let Some(f) = &self.forced_misses {
            if f.period == 0 {
                return bad("forced-miss period must be >= 1".into());
            }
            self.area(&f.area)?;
        }
        for r in &self.regions {
            r.validate()?;
        }
        self.clutter_model()?;
        let mut alive: i64 = 0;
        for step in 1..=self.duration {
            alive += self
                .events
                .iter()
                .filter(|e| e.step == step)
                .map(|e| e.count)
                .sum::<i64>();
            if alive < 0 {
                return bad(format!("schedule removes more targets than exist at step {step}"));
            }
        }
        Ok(())
    }

    pub fn area(&self, name: &str) -> Result<&Area> {
        self.areas
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("scenario `{}` has no area `{name}`", self.name)))
    }

    /// Bounding box of all areas.
    pub fn window(&self) -> Region {
        self.areas.iter().skip(1).fold(self.areas[0].bounds, |acc, a| Region {
            x_min: acc.x_min.min(a.bounds.x_min),
            x_max: acc.x_max.max(a.bounds.x_max),
            y_min: acc.y_min.min(a.bounds.y_min),
            y_max: acc.y_max.max(a.bounds.y_max),
        })
    }

    /// True number of targets after the events of each step.
    pub fn cardinality_schedule(&self) -> Vec<usize> {
        let mut alive: i64 = 0;
        (1..=self.duration)
            .map(|step| {
                alive += self
                    .events
                    .iter()
                    .filter(|e| e.step == step)
                    .map(|e| e.count)
                    .sum::<i64>();
                alive as usize
            })
            .collect()
    }

    pub fn motion_model(&self) -> Result<LinearGaussianModel> {
        LinearGaussianModel::ncv(
            self.dt,
            self.motion.accel_sigma,
            self.sensor.noise_sigma,
            self.filter.p_s,
            self.sensor.p_d,
        )
    }

    /// One Gaussian per area centred on its spawn box, the birth mean split
    /// equally between areas.
    pub fn birth_mixture(&self) -> Result<GaussianMixture> {
        let weight = self.filter.birth_mean / self.areas.len() as f64;
        let v = self.motion.init_velocity_sigma.powi(2);
        self.areas
            .iter()
            .map(|a| {
                let s = a.spawn_box();
                let var_x = (s.x_max - s.x_min).powi(2) / 12.0;
                let var_y = (s.y_max - s.y_min).powi(2) / 12.0;
                let mean = State::new((s.x_min + s.x_max) / 2.0, (s.y_min + s.y_max) / 2.0, 0.0, 0.0);
                let cov = StateCov::from_diagonal(&State::new(var_x, var_y, v.max(1e-6), v.max(1e-6)));
                GaussianComponent::new(weight, mean, cov)
            })
            .collect::<Result<Vec<_>>>()
            .map(GaussianMixture::new)
    }

    pub fn birth_model(&self) -> Result<BirthModel> {
        let mixture = self.birth_mixture()?;
        match self.filter.birth {
            BirthKind::Poisson => Ok(BirthModel::poisson(mixture)),
            BirthKind::NegativeBinomial => {
                BirthModel::negative_binomial(mixture, self.filter.birth_variance.unwrap_or(self.filter.birth_mean))
            }
        }
    }

    /// Poisson clutter with the total rate, uniform over the union of areas.
    pub fn clutter_model(&self) -> Result<ClutterModel> {
        let rate = self.areas.iter().map(|a| a.clutter_rate).sum();
        ClutterModel::over(
            PanjerParams::poisson(rate)?,
            self.areas.iter().map(|a| a.bounds).collect(),
        )
    }

    pub fn filter_models(&self, reduction: ReductionParams) -> Result<FilterModels> {
        Ok(FilterModels {
            model: self.motion_model()?,
            birth: self.birth_model()?,
            clutter: self.clutter_model()?,
            reduction,
        })
    }

    pub fn is_forced_miss_step(&self, step: usize) -> bool {
        self.forced_misses
            .as_ref()
            .is_some_and(|f| step.is_multiple_of(f.period))
    }
}

/// Live targets at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthStep {
    pub ids: Vec<usize>,
    pub states: Vec<State>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    /// Index `k - 1` holds step `k`.
    pub steps: Vec<TruthStep>,
}

impl Truth {
    pub fn cardinality_trace(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.states.len()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementStep {
    pub points: Vec<Measurement>,
    /// Target id for target-originated points, `None` for clutter.
    pub origins: Vec<Option<usize>>,
}

/// Seed of one Monte-Carlo trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // SplitMix64 finalizer over the pair.
    let mut z = seed ^ (trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_in(rng: &mut ChaCha8Rng, r: &Region) -> (f64, f64) {
    (rng.random_range(r.x_min..r.x_max), rng.random_range(r.y_min..r.y_max))
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated >= 0")
}

/// Nearly-constant-velocity trajectories following the birth/death schedule.
pub fn generate_truth(scn: &Scenario, seed: u64) -> Result<Truth> {
    scn.validate()?;
    let mut rng = rng_for(seed, 0);
    let model = scn.motion_model()?;
    let accel = normal(scn.motion.accel_sigma);
    let vel = normal(scn.motion.init_velocity_sigma);
    let dt = scn.dt;
    let mut events: BTreeMap<usize, Vec<&Event>> = BTreeMap::new();
    for e in &scn.events {
        events.entry(e.step).or_default().push(e);
    }

    let mut live: Vec<(usize, State)> = Vec::new();
    let mut next_id = 0;
    let mut steps = Vec::with_capacity(scn.duration);
    for step in 1..=scn.duration {
        for (_, x) in live.iter_mut() {
            let (ax, ay) = (accel.sample(&mut rng), accel.sample(&mut rng));
            let noise = State::new(0.5 * dt * dt * ax, 0.5 * dt * dt * ay, dt * ax, dt * ay);
            *x = model.f * *x + noise;
        }
        for e in events.get(&step).into_iter().flatten() {
            if e.count >= 0 {
                let area = match &e.area {
                    Some(name) => scn.area(name)?,
                    None => &scn.areas[0],
                };
                let spawn = area.spawn_box();
                for _ in 0..e.count {
                    let (x, y) = uniform_in(&mut rng, &spawn);
                    live.push((next_id, State::new(x, y, vel.sample(&mut rng), vel.sample(&mut rng))));
                    next_id += 1;
                }
            } else {
                let k = (-e.count) as usize;
                let mut doomed = sample(&mut rng, live.len(), k).into_vec();
                doomed.sort_unstable_by(|a, b| b.cmp(a));
                for i in doomed {
                    live.remove(i);
                }
            }
        }
        steps.push(TruthStep {
            ids: live.iter().map(|(id, _)| *id).collect(),
            states: live.iter().map(|(_, x)| *x).collect(),
        });
    }
    Ok(Truth { steps })
}

/// Noisy detections plus per-area Poisson clutter.
pub fn generate_measurements(truth: &Truth, scn: &Scenario, seed: u64) -> Result<Vec<MeasurementStep>> {
    scn.validate()?;
    let mut rng = rng_for(seed, 1);
    let noise = normal(scn.sensor.noise_sigma);
    let clutter: Vec<Option<Poisson<f64>>> = scn
        .areas
        .iter()
        .map(|a| (a.clutter_rate > 0.0).then(|| Poisson::new(a.clutter_rate).expect("rate validated > 0")))
        .collect();
    let forced_area = match &scn.forced_misses {
        Some(f) => Some(scn.area(&f.area)?.bounds),
        None => None,
    };
    Ok(truth
        .steps
        .iter()
        .enumerate()
        .map(|(i, ts)| {
            let step = i + 1;
            let blind = if scn.is_forced_miss_step(step) {
                forced_area
            } else {
                None
            };
            let mut points = Vec::new();
            let mut origins = Vec::new();
            for (id, x) in ts.ids.iter().zip(&ts.states) {
                let detected = rng.random::<f64>() < scn.sensor.p_d;
                if !detected || blind.is_some_and(|b| b.contains(x[0], x[1])) {
                    continue;
                }
                points.push(Measurement::new(
                    x[0] + noise.sample(&mut rng),
                    x[1] + noise.sample(&mut rng),
                ));
                origins.push(Some(*id));
            }
            for (area, dist) in scn.areas.iter().zip(&clutter) {
                let n = dist.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
                for _ in 0..n {
                    let (x, y) = uniform_in(&mut rng, &area.bounds);
                    points.push(Measurement::new(x, y));
                    origins.push(None);
                }
            }
            MeasurementStep { points, origins }
        })
        .collect())
}

fn square(name: &str, x_min: f64, x_max: f64, clutter_rate: f64) -> Area {
    Area {
        name: name.into(),
        bounds: Region {
            x_min,
            x_max,
            y_min: 0.0,
            y_max: 50.0,
        },
        clutter_rate,
        spawn_fraction: default_spawn_fraction(),
    }
}

fn births(step: usize, count: i64) -> Event {
    Event {
        step,
        count,
        area: None,
    }
}

fn scenario1(name: &str, clutter: f64, filter: FilterParams, events: Vec<Event>) -> Scenario {
    Scenario {
        name: name.into(),
        duration: 30,
        dt: 1.0,
        mc_runs: 20,
        seed: 0,
        motion: Motion {
            accel_sigma: 0.3,
            init_velocity_sigma: 0.5,
        },
        sensor: Sensor {
            p_d: 0.9,
            noise_sigma: 0.2,
        },
        filter,
        areas: vec![square("scene", 0.0, 50.0, clutter)],
        events,
        forced_misses: None,
        regions: Vec::new(),
    }
}

fn scenario2(name: &str, p_d: f64) -> Scenario {
    let mut events = vec![births(1, 5)];
    for (i, n) in [10, 15, 20, 25].into_iter().enumerate() {
        events.push(births(10 * (i + 1), n));
    }
    for (i, n) in [25, 20, 15, 10].into_iter().enumerate() {
        events.push(births(50 + 10 * i, -n));
    }
    Scenario {
        name: name.into(),
        duration: 100,
        dt: 1.0,
        mc_runs: 100,
        seed: 0,
        motion: Motion {
            accel_sigma: 0.1,
            init_velocity_sigma: 0.3,
        },
        sensor: Sensor { p_d, noise_sigma: 0.2 },
        filter: FilterParams {
            p_s: 0.98,
            birth: BirthKind::NegativeBinomial,
            birth_mean: 1.0,
            birth_variance: Some(100.0),
        },
        areas: vec![square("scene", 0.0, 50.0, 15.0)],
        events,
        forced_misses: None,
        regions: Vec::new(),
    }
}

fn scenario3() -> Scenario {
    let a = square("A", 0.0, 50.0, 20.0);
    let b = square("B", 150.0, 200.0, 20.0);
    let regions = vec![a.bounds, b.bounds];
    Scenario {
        name: "scenario3".into(),
        duration: 100,
        dt: 1.0,
        mc_runs: 20,
        seed: 0,
        motion: Motion {
            accel_sigma: 0.1,
            init_velocity_sigma: 0.3,
        },
        sensor: Sensor {
            p_d: 0.9,
            noise_sigma: 0.2,
        },
        filter: FilterParams {
            p_s: 0.98,
            birth: BirthKind::NegativeBinomial,
            birth_mean: 1.0,
            birth_variance: Some(100.0),
        },
        areas: vec![a, b],
        events: vec![
            Event {
                step: 1,
                count: 10,
                area: Some("A".into()),
            },
            Event {
                step: 1,
                count: 10,
                area: Some("B".into()),
            },
        ],
        forced_misses: Some(ForcedMisses {
            period: 10,
            area: "B".into(),
        }),
        regions,
    }
}

/// The six benchmark scenarios.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let poisson25 = FilterParams {
        p_s: 0.99,
        birth: BirthKind::Poisson,
        birth_mean: 25.0,
        birth_variance: None,
    };
    let nb = |mean: f64| FilterParams {
        p_s: 0.99,
        birth: BirthKind::NegativeBinomial,
        birth_mean: mean,
        birth_variance: Some(100.0),
    };
    let drop = vec![births(1, 50), births(15, -25)];
    vec![
        scenario1("scenario1_1", 5.0, poisson25, drop.clone()),
        scenario1("scenario1_2", 5.0, nb(25.0), drop),
        scenario1("scenario1_3", 20.0, nb(1.0), vec![births(1, 1), births(15, 50)]),
        scenario2("scenario2_1", 0.95),
        scenario2("scenario2_2", 0.6),
        scenario3(),
    ]
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.into()))
}
