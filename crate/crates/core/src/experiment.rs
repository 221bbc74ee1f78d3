//! Monte-Carlo experiment loop and its CSV/JSON artifacts.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{CphdFilter, Filter, FilterKind, PhdFilter, SecondOrderFilter, UpdateOptions};
use crate::gm::{extract_states, ReductionParams, Region, State};
use crate::metrics::{ospa, OspaConfig};
use crate::regional;
use crate::simulator::{
    builtin_scenario, generate_measurements, generate_truth, trial_seed, MeasurementStep, Scenario, Truth,
};

fn all_filters() -> Vec<FilterKind> {
    FilterKind::ALL.to_vec()
}

fn default_n_max() -> usize {
    150
}

/// Filter-side settings of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default = "all_filters")]
    pub filters: Vec<FilterKind>,
    /// Cardinality truncation of the CPHD filter.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub reduction: ReductionParams,
    #[serde(default)]
    pub ospa: OspaConfig,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            filters: all_filters(),
            n_max: default_n_max(),
            reduction: ReductionParams::default(),
            ospa: OspaConfig::default(),
        }
    }
}

/// A scenario plus run settings; this is the config-file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub scenario: Scenario,
    #[serde(default)]
    pub run: RunSettings,
}

impl Experiment {
    pub fn builtin(name: &str) -> Result<Self> {
        Ok(Self {
            scenario: builtin_scenario(name)?,
            run: RunSettings::default(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let exp: Experiment = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.run.filters.is_empty() {
            return Err(Error::Config("at least one filter is required".into()));
        }
        if self.run.n_max == 0 {
            return Err(Error::Config("n_max must be >= 1".into()));
        }
        if self.scenario.regions.len() > 2 {
            return Err(Error::Config("at most two regions are supported".into()));
        }
        OspaConfig::new(self.run.ospa.order, self.run.ospa.cutoff)?;
        Ok(())
    }
}

/// Regional statistics of one posterior.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionStep {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Present with two regions whose variances are both positive.
    pub correlation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepEstimate {
    pub step: usize,
    pub est_mean: f64,
    pub est_var: f64,
    pub ospa: f64,
    pub predict_ms: f64,
    pub update_ms: f64,
    pub states: Vec<State>,
    pub regions: Option<RegionStep>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterRun {
    pub kind: FilterKind,
    pub steps: Vec<StepEstimate>,
}

/// Everything produced by one Monte-Carlo trial.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub trial: usize,
    pub truth: Truth,
    pub measurements: Vec<MeasurementStep>,
    pub runs: Vec<FilterRun>,
}

fn region_step(audit: &crate::filters::UpdateAudit, regions: &[Region]) -> Result<Option<RegionStep>> {
    Ok(match regions {
        [] => None,
        [r] => {
            let rep = regional::report(audit, r, r, audit.kind)?;
            Some(RegionStep {
                mean: vec![rep.mean[0]],
                variance: vec![rep.variance[0]],
                correlation: None,
            })
        }
        [a, b, ..] => {
            let rep = regional::report(audit, a, b, audit.kind)?;
            Some(RegionStep {
                mean: rep.mean.to_vec(),
                variance: rep.variance.to_vec(),
                correlation: rep.correlation,
            })
        }
    })
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs one filter over a measurement sequence.
pub fn run_filter<F: Filter>(
    filter: &F,
    trial: usize,
    truth: &Truth,
    measurements: &[MeasurementStep],
    regions: &[Region],
    ospa_cfg: &OspaConfig,
) -> Result<FilterRun> {
    let options = UpdateOptions {
        with_pairs: regions.len() >= 2,
        ..UpdateOptions::default()
    };
    let mut state = filter.initial_state();
    let mut steps = Vec::with_capacity(measurements.len());
    for (i, (ts, zs)) in truth.steps.iter().zip(measurements).enumerate() {
        let step = i + 1;
        let ctx = |e: Error| Error::Run {
            trial,
            step,
            filter: filter.kind().to_string(),
            source: Box::new(e),
        };
        let t0 = Instant::now();
        let predicted = filter.predict(&state).map_err(ctx)?;
        let predict_ms = millis(t0);
        let t1 = Instant::now();
        let (posterior, audit) = filter.update(&predicted, &zs.points, &options).map_err(ctx)?;
        let posterior = filter.reduce(posterior);
        let update_ms = millis(t1);

        let (est_mean, est_var) = filter.cardinality_moments(&posterior, &audit);
        let regions = region_step(&audit, regions).map_err(ctx)?;
        let states = extract_states(filter.intensity(&posterior), est_mean);
        let truth_pos: Vec<_> = ts.states.iter().map(|x| x.fixed_rows::<2>(0).into_owned()).collect();
        let est_pos: Vec<_> = states.iter().map(|x| x.fixed_rows::<2>(0).into_owned()).collect();
        steps.push(StepEstimate {
            step,
            est_mean,
            est_var,
            ospa: ospa(&truth_pos, &est_pos, ospa_cfg),
            predict_ms,
            update_ms,
            states,
            regions,
        });
        state = posterior;
    }
    Ok(FilterRun {
        kind: filter.kind(),
        steps,
    })
}

/// Simulates trial `trial` and runs every configured filter on it.
pub fn run_trial(exp: &Experiment, trial: usize) -> Result<RunRecord> {
    let scn = &exp.scenario;
    let seed = trial_seed(scn.seed, trial);
    let truth = generate_truth(scn, seed)?;
    let measurements = generate_measurements(&truth, scn, seed)?;
    let models = scn.filter_models(exp.run.reduction)?;
    let runs = exp
        .run
        .filters
        .iter()
        .map(|kind| {
            let (regions, ospa_cfg) = (&scn.regions, &exp.run.ospa);
            match kind {
                FilterKind::Phd => {
                    let f = PhdFilter { models: models.clone() };
                    run_filter(&f, trial, &truth, &measurements, regions, ospa_cfg)
                }
                FilterKind::SecondOrder => {
                    let f = SecondOrderFilter { models: models.clone() };
                    run_filter(&f, trial, &truth, &measurements, regions, ospa_cfg)
                }
                FilterKind::Cphd => {
                    let f = CphdFilter {
                        models: models.clone(),
                        n_max: exp.run.n_max,
                    };
                    run_filter(&f, trial, &truth, &measurements, regions, ospa_cfg)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunRecord {
        trial,
        truth,
        measurements,
        runs,
    })
}

/// All Monte-Carlo trials on a pool of `workers` threads, ordered by trial.
pub fn run_trials(exp: &Experiment, workers: Option<usize>) -> Result<Vec<RunRecord>> {
    exp.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        (0..exp.scenario.mc_runs)
            .into_par_iter()
            .map(|trial| run_trial(exp, trial))
            .collect()
    })
}

/// Nine significant digits, plain notation for moderate magnitudes.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..9).contains(&exp) {
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (8 - exp) as usize;
    let plain = format!(
        "{:.*}",
        decimals,
        mantissa.parse::<f64>().expect("mantissa") * 10f64.powi(exp)
    );
    trim(&plain)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, sig9)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn region_headers(n: usize) -> Vec<String> {
    let mut h = Vec::new();
    for r in 0..n {
        h.push(format!("region{r}_mean"));
        h.push(format!("region{r}_var"));
    }
    if n == 2 {
        h.push("corr".into());
    }
    h
}

/// One row per (trial, step, filter).
pub fn write_steps_csv(path: &Path, exp: &Experiment, records: &[RunRecord]) -> Result<()> {
    let n_regions = exp.scenario.regions.len();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = [
        "step",
        "trial",
        "filter",
        "est_mean",
        "est_var",
        "ospa",
        "predict_ms",
        "update_ms",
    ]
    .map(String::from)
    .to_vec();
    header.extend(region_headers(n_regions));
    w.write_record(&header)?;
    for rec in records {
        for i in 0..exp.scenario.duration {
            for run in &rec.runs {
                let s = &run.steps[i];
                let mut row = vec![
                    s.step.to_string(),
                    rec.trial.to_string(),
                    run.kind.to_string(),
                    sig9(s.est_mean),
                    sig9(s.est_var),
                    sig9(s.ospa),
                    sig9(s.predict_ms),
                    sig9(s.update_ms),
                ];
                if let Some(r) = &s.regions {
                    for (m, v) in r.mean.iter().zip(&r.variance) {
                        row.push(sig9(*m));
                        row.push(sig9(*v));
                    }
                    if n_regions == 2 {
                        row.push(opt(r.correlation));
                    }
                }
                w.write_record(&row)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Monte-Carlo averages of one filter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterSummary {
    pub filter: FilterKind,
    pub est_mean: Vec<f64>,
    pub est_var: Vec<f64>,
    pub ospa: Vec<f64>,
    pub abs_cardinality_error: Vec<f64>,
    /// Per region, per step.
    pub region_mean: Vec<Vec<f64>>,
    pub region_var: Vec<Vec<f64>>,
    /// Average over trials where the correlation is defined.
    pub correlation: Vec<Option<f64>>,
    pub predict_ms_mean: f64,
    pub update_ms_mean: f64,
    /// Mean total time of one run, in seconds.
    pub predict_s_per_run: f64,
    pub update_s_per_run: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub mc_runs: usize,
    pub duration: usize,
    pub n_max: usize,
    pub regions: Vec<Region>,
    pub true_count: Vec<f64>,
    pub filters: Vec<FilterSummary>,
}

impl Summary {
    pub fn new(exp: &Experiment, records: &[RunRecord]) -> Self {
        let scn = &exp.scenario;
        let duration = scn.duration;
        let n_regions = scn.regions.len();
        let per_step = |f: &dyn Fn(&RunRecord, usize) -> f64| -> Vec<f64> {
            (0..duration)
                .map(|i| mean(records.iter().map(|r| f(r, i))).unwrap_or(f64::NAN))
                .collect()
        };
        let true_count = per_step(&|r, i| r.truth.steps[i].states.len() as f64);
        let filters =
            exp.run
                .filters
                .iter()
                .enumerate()
                .map(|(k, &kind)| {
                    let step = |r: &RunRecord, i: usize| r.runs[k].steps[i].clone();
                    let region = |j: usize, var: bool| -> Vec<f64> {
                        per_step(&|r, i| {
                            let reg = r.runs[k].steps[i].regions.as_ref().expect("regions configured");
                            if var {
                                reg.variance[j]
                            } else {
                                reg.mean[j]
                            }
                        })
                    };
                    let correlation =
                        (0..duration)
                            .map(|i| {
                                mean(records.iter().filter_map(|r| {
                                    r.runs[k].steps[i].regions.as_ref().and_then(|reg| reg.correlation)
                                }))
                            })
                            .collect();
                    let runs = records.len().max(1) as f64;
                    let total = |f: &dyn Fn(&StepEstimate) -> f64| -> f64 {
                        records.iter().flat_map(|r| r.runs[k].steps.iter().map(f)).sum::<f64>()
                    };
                    let n_steps = (records.len() * duration).max(1) as f64;
                    FilterSummary {
                        filter: kind,
                        est_mean: per_step(&|r, i| step(r, i).est_mean),
                        est_var: per_step(&|r, i| step(r, i).est_var),
                        ospa: per_step(&|r, i| step(r, i).ospa),
                        abs_cardinality_error: per_step(&|r, i| {
                            (r.runs[k].steps[i].est_mean - r.truth.steps[i].states.len() as f64).abs()
                        }),
                        region_mean: (0..n_regions).map(|j| region(j, false)).collect(),
                        region_var: (0..n_regions).map(|j| region(j, true)).collect(),
                        correlation,
                        predict_ms_mean: total(&|s| s.predict_ms) / n_steps,
                        update_ms_mean: total(&|s| s.update_ms) / n_steps,
                        predict_s_per_run: total(&|s| s.predict_ms) / runs / 1e3,
                        update_s_per_run: total(&|s| s.update_ms) / runs / 1e3,
                    }
                })
                .collect();
        Self {
            scenario: scn.name.clone(),
            seed: scn.seed,
            mc_runs: records.len(),
            duration,
            n_max: exp.run.n_max,
            regions: scn.regions.clone(),
            true_count,
            filters,
        }
    }

    pub fn filter(&self, kind: FilterKind) -> Option<&FilterSummary> {
        self.filters.iter().find(|f| f.filter == kind)
    }

    /// Runtime table: one row per filter with mean per-run seconds.
    pub fn timing_table(&self) -> String {
        let mut out = format!("{:<8} {:>14} {:>14}\n", "filter", "predict [s]", "update [s]");
        for f in &self.filters {
            out.push_str(&format!(
                "{:<8} {:>14.6} {:>14.6}\n",
                f.filter.as_str(),
                f.predict_s_per_run,
                f.update_s_per_run
            ));
        }
        out
    }
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Long-format table of the Monte-Carlo averages, one row per (filter, step).
pub fn write_aggregate_csv(path: &Path, summary: &Summary) -> Result<()> {
    let n_regions = summary.regions.len();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = [
        "step",
        "filter",
        "true_count",
        "est_mean",
        "est_var",
        "ospa",
        "abs_card_err",
    ]
    .map(String::from)
    .to_vec();
    header.extend(region_headers(n_regions));
    w.write_record(&header)?;
    for f in &summary.filters {
        for i in 0..summary.duration {
            let mut row = vec![
                (i + 1).to_string(),
                f.filter.to_string(),
                sig9(summary.true_count[i]),
                sig9(f.est_mean[i]),
                sig9(f.est_var[i]),
                sig9(f.ospa[i]),
                sig9(f.abs_cardinality_error[i]),
            ];
            for j in 0..n_regions {
                row.push(sig9(f.region_mean[j][i]));
                row.push(sig9(f.region_var[j][i]));
            }
            if n_regions == 2 {
                row.push(opt(f.correlation[i]));
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Paths of the files written by [`write_artifacts`].
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub steps: PathBuf,
    pub summary: PathBuf,
    pub aggregate: PathBuf,
}

/// Writes `steps.csv`, `summary.json` and `aggregate.csv` under
/// `out/<scenario>/`.
pub fn write_artifacts(out: &Path, exp: &Experiment, records: &[RunRecord], summary: &Summary) -> Result<Artifacts> {
    let dir = out.join(&exp.scenario.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let art = Artifacts {
        steps: dir.join("steps.csv"),
        summary: dir.join("summary.json"),
        aggregate: dir.join("aggregate.csv"),
        dir,
    };
    write_steps_csv(&art.steps, exp, records)?;
    write_summary_json(&art.summary, summary)?;
    write_aggregate_csv(&art.aggregate, summary)?;
    Ok(art)
}
