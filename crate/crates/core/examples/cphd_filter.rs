//! CPHD filter with its cardinality distribution, next to the PHD filter.

use panjer_track::filters::{CphdFilter, Filter, PhdFilter, UpdateOptions};
use panjer_track::gm::ReductionParams;
use panjer_track::simulator::{builtin_scenario, generate_measurements, generate_truth, trial_seed};

fn main() -> panjer_track::Result<()> {
    let scn = builtin_scenario("scenario1_3")?;
    let seed = trial_seed(3, 0);
    let truth = generate_truth(&scn, seed)?;
    let z = generate_measurements(&truth, &scn, seed)?;
    let models = scn.filter_models(ReductionParams::default())?;
    let cphd = CphdFilter {
        models: models.clone(),
        n_max: 150,
    };
    let phd = PhdFilter { models };

    let (mut c, mut p) = (cphd.initial_state(), phd.initial_state());
    let opts = UpdateOptions::default();
    for (k, zs) in z.iter().enumerate() {
        let (post, _) = cphd.update(&cphd.predict(&c)?, &zs.points, &opts)?;
        c = cphd.reduce(post);
        let (post, _) = phd.update(&phd.predict(&p)?, &zs.points, &opts)?;
        p = phd.reduce(post);
        let mode = c
            .cardinality
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(n, _)| n);
        println!(
            "step {:2}: truth {:2}, cphd mean {:6.2} (mode {mode:2}, sd {:5.2}), phd mass {:6.2}",
            k + 1,
            truth.steps[k].states.len(),
            c.mean(),
            c.variance().sqrt(),
            p.intensity.mass()
        );
    }
    Ok(())
}
