//! Monte-Carlo experiment through the library, writing the CSV/JSON outputs.

use panjer_track::experiment::{run_trials, write_artifacts, Experiment, Summary};

fn main() -> panjer_track::Result<()> {
    let mut exp = Experiment::builtin("scenario1_2")?;
    exp.scenario.mc_runs = 3;
    exp.scenario.seed = 42;
    let records = run_trials(&exp, None)?;
    let summary = Summary::new(&exp, &records);
    print!("{}", summary.timing_table());
    for f in &summary.filters {
        let ospa = f.ospa.iter().sum::<f64>() / f.ospa.len() as f64;
        println!(
            "{:<6} mean OSPA {ospa:.2}, final mean count {:.2}",
            f.filter.as_str(),
            f.est_mean.last().unwrap()
        );
    }
    let out = std::env::temp_dir().join("panjer-track-example");
    let art = write_artifacts(&out, &exp, &records, &summary)?;
    println!("artifacts in {}", art.dir.display());
    Ok(())
}
