//! Mean, variance and correlation of target counts in two regions.

use panjer_track::filters::{CphdFilter, Filter, PhdFilter, SecondOrderFilter, UpdateOptions};
use panjer_track::gm::ReductionParams;
use panjer_track::regional::report;
use panjer_track::simulator::{
    builtin_scenario, generate_measurements, generate_truth, trial_seed, MeasurementStep, Scenario,
};

fn run<F: Filter>(filter: &F, z: &[MeasurementStep], scn: &Scenario) -> panjer_track::Result<()> {
    let (a, b) = (scn.regions[0], scn.regions[1]);
    let opts = UpdateOptions {
        with_pairs: true,
        ..UpdateOptions::default()
    };
    let mut state = filter.initial_state();
    for (k, zs) in z.iter().enumerate().take(30) {
        let (post, audit) = filter.update(&filter.predict(&state)?, &zs.points, &opts)?;
        state = filter.reduce(post);
        if scn.is_forced_miss_step(k + 1) || k + 1 == 25 {
            let r = report(&audit, &a, &b, filter.kind())?;
            println!(
                "{:>6} step {:2}: mean A {:5.2} B {:5.2}, var A {:5.2} B {:5.2}, corr {}",
                filter.kind().as_str(),
                k + 1,
                r.mean[0],
                r.mean[1],
                r.variance[0],
                r.variance[1],
                r.correlation.map_or("n/a".into(), |c| format!("{c:+.3}"))
            );
        }
    }
    Ok(())
}

fn main() -> panjer_track::Result<()> {
    let scn = builtin_scenario("scenario3")?;
    let seed = trial_seed(7, 0);
    let truth = generate_truth(&scn, seed)?;
    let z = generate_measurements(&truth, &scn, seed)?;
    let models = scn.filter_models(ReductionParams::default())?;
    run(&PhdFilter { models: models.clone() }, &z, &scn)?;
    run(&SecondOrderFilter { models: models.clone() }, &z, &scn)?;
    run(&CphdFilter { models, n_max: 150 }, &z, &scn)?;
    Ok(())
}
