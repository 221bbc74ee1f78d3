//! Gaussian-mixture prediction, Kalman terms, reduction and box masses.

use panjer_track::gm::{
    kalman_terms, mixture_predict, prune_merge, GaussianComponent, GaussianMixture, LinearGaussianModel, Measurement,
    ReductionParams, Region, State, StateCov,
};

fn main() -> panjer_track::Result<()> {
    let model = LinearGaussianModel::ncv(1.0, 0.1, 0.2, 0.98, 0.9)?;
    let comp = |w, x, y| GaussianComponent::new(w, State::new(x, y, 0.3, 0.0), StateCov::identity());
    let prior = GaussianMixture::new(vec![
        comp(0.9, 10.0, 10.0)?,
        comp(0.4, 10.5, 10.2)?,
        comp(1e-7, 40.0, 40.0)?,
    ]);
    let birth = GaussianMixture::new(vec![comp(0.1, 25.0, 25.0)?]);

    let predicted = mixture_predict(&prior, &model, &birth);
    println!(
        "predicted mass {:.4} over {} components",
        predicted.mass(),
        predicted.len()
    );

    let z = Measurement::new(10.4, 10.1);
    let k = kalman_terms(&predicted.components[0], &z, &model)?;
    println!(
        "likelihood {:.4e}, updated position ({:.3}, {:.3})",
        k.likelihood, k.updated.mean[0], k.updated.mean[1]
    );

    let reduced = prune_merge(&predicted, &ReductionParams::default());
    println!(
        "after prune/merge: {} components, mass {:.4}",
        reduced.len(),
        reduced.mass()
    );

    let left = Region::new(0.0, 10.3, 0.0, 50.0)?;
    println!("mass in x < 10.3: {:.4}", reduced.region_mass(&left));
    Ok(())
}
