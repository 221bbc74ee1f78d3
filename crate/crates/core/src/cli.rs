//! Command-line driver: `run` executes an experiment, `validate` echoes a
//! resolved config without running filters.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{run_trials, write_artifacts, Artifacts, Experiment, Summary};
use crate::filters::FilterKind;
use crate::gm::Region;

#[derive(Debug, Parser)]
#[command(
    name = "panjer-track",
    version,
    about = "Second-order PHD, PHD and CPHD tracking experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Monte-Carlo trials and write steps.csv, summary.json and aggregate.csv.
    Run(RunArgs),
    /// Parse a config and print it with every default filled in.
    Validate(SourceArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in scenario name (scenario1_1 ... scenario3).
    #[arg(long)]
    pub scenario: Option<String>,
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated subset of phd, sophd, cphd.
    #[arg(long, value_delimiter = ',')]
    pub filters: Option<Vec<FilterKind>>,
    /// Monte-Carlo runs.
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; results go to `<out>/<scenario>/`.
    #[arg(long, env = "PANJER_TRACK_OUT", default_value = "out")]
    pub out: PathBuf,
    /// CPHD cardinality truncation.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Regions as `x_min,x_max,y_min,y_max`, separated by `;`.
    #[arg(long, value_delimiter = ';', value_parser = parse_region)]
    pub regions: Option<Vec<Region>>,
}

fn parse_region(s: &str) -> std::result::Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x0, x1, y0, y1] => Region::new(x0, x1, y0, y1).map_err(|e| e.to_string()),
        _ => Err(format!("region `{s}` needs four numbers")),
    }
}

/// Where the scenario comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSource {
    Builtin(String),
    File(PathBuf),
}

impl ScenarioSource {
    fn from_args(args: &SourceArgs) -> Self {
        match (&args.config, &args.scenario) {
            (Some(path), _) => Self::File(path.clone()),
            (None, Some(name)) => Self::Builtin(name.clone()),
            (None, None) => unreachable!("clap requires one source"),
        }
    }

    pub fn load(&self) -> Result<Experiment> {
        match self {
            Self::Builtin(name) => Experiment::builtin(name),
            Self::File(path) => Experiment::from_file(path),
        }
    }
}

/// A `run` invocation; unset fields keep the config values.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub filters: Option<Vec<FilterKind>>,
    pub mc_runs: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub n_max: Option<usize>,
    pub workers: Option<usize>,
    pub regions: Option<Vec<Region>>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Self {
        Self {
            source: ScenarioSource::from_args(&args.source),
            filters: args.filters.clone(),
            mc_runs: args.mc,
            seed: args.seed,
            out_dir: args.out.clone(),
            n_max: args.nmax,
            workers: args.workers,
            regions: args.regions.clone(),
        }
    }

    pub fn resolve(&self) -> Result<Experiment> {
        let mut exp = self.source.load()?;
        if let Some(f) = &self.filters {
            exp.run.filters = f.clone();
        }
        if let Some(n) = self.mc_runs {
            exp.scenario.mc_runs = n;
        }
        if let Some(s) = self.seed {
            exp.scenario.seed = s;
        }
        if let Some(n) = self.n_max {
            exp.run.n_max = n;
        }
        if let Some(r) = &self.regions {
            exp.scenario.regions = r.clone();
        }
        exp.validate()?;
        Ok(exp)
    }
}

pub fn run(cfg: &RunConfig) -> Result<(Artifacts, Summary)> {
    let exp = cfg.resolve()?;
    let records = run_trials(&exp, cfg.workers)?;
    let summary = Summary::new(&exp, &records);
    let artifacts = write_artifacts(&cfg.out_dir, &exp, &records, &summary)?;
    Ok((artifacts, summary))
}

/// Resolved config as TOML.
pub fn validate(source: &ScenarioSource) -> Result<String> {
    source.load()?.to_toml()
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config(_) | Error::UnknownScenario(_) | Error::Io { .. } | Error::Usage(_) => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

pub fn execute(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run(args) => run(&RunConfig::from_args(&args)).map(|(art, summary)| {
            print!("{}", summary.timing_table());
            println!("wrote {}", display(&art.steps));
            println!("wrote {}", display(&art.summary));
            println!("wrote {}", display(&art.aggregate));
        }),
        Command::Validate(args) => validate(&ScenarioSource::from_args(&args)).map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
