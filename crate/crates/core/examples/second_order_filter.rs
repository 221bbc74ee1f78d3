//! Second-order PHD filter tracking a simulated scenario, step by step.

use panjer_track::filters::{Filter, SecondOrderFilter, UpdateOptions};
use panjer_track::gm::{extract_states, ReductionParams};
use panjer_track::simulator::{builtin_scenario, generate_measurements, generate_truth, trial_seed};

fn main() -> panjer_track::Result<()> {
    let scn = builtin_scenario("scenario2_1")?;
    let seed = trial_seed(1, 0);
    let truth = generate_truth(&scn, seed)?;
    let z = generate_measurements(&truth, &scn, seed)?;
    let filter = SecondOrderFilter {
        models: scn.filter_models(ReductionParams::default())?,
    };

    let mut state = filter.initial_state();
    for (k, (ts, zs)) in truth.steps.iter().zip(&z).enumerate() {
        let predicted = filter.predict(&state)?;
        let (posterior, audit) = filter.update(&predicted, &zs.points, &UpdateOptions::default())?;
        state = filter.reduce(posterior);
        let (mean, var) = filter.cardinality_moments(&state, &audit);
        if (k + 1) % 10 == 0 {
            let est = extract_states(&state.intensity, mean);
            println!(
                "step {:3}: truth {:3}, |Z| {:3}, mean {mean:6.2}, sd {:5.2}, extracted {}",
                k + 1,
                ts.states.len(),
                zs.points.len(),
                var.sqrt(),
                est.len()
            );
        }
    }
    Ok(())
}
