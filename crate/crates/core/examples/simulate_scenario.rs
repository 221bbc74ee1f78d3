//! Ground truth and measurements of a built-in scenario.

use panjer_track::simulator::{builtin_scenarios, generate_measurements, generate_truth, trial_seed};

fn main() -> panjer_track::Result<()> {
    for scn in builtin_scenarios() {
        let seed = trial_seed(scn.seed, 0);
        let truth = generate_truth(&scn, seed)?;
        let z = generate_measurements(&truth, &scn, seed)?;
        let clutter: usize = z.iter().map(|m| m.origins.iter().filter(|o| o.is_none()).count()).sum();
        let detections: usize = z.iter().map(|m| m.origins.iter().filter(|o| o.is_some()).count()).sum();
        let trace = truth.cardinality_trace();
        println!(
            "{:<12} {} steps, targets first/max/last {}/{}/{}, detections {detections}, clutter {clutter}",
            scn.name,
            scn.duration,
            trace[0],
            trace.iter().max().unwrap(),
            trace.last().unwrap()
        );
    }
    Ok(())
}
