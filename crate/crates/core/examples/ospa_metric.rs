//! OSPA distance and the optimal assignment behind it.

use nalgebra::Vector2;
use panjer_track::metrics::{optimal_assignment, ospa, OspaConfig};

fn main() -> panjer_track::Result<()> {
    let truth = vec![Vector2::new(0.0, 0.0), Vector2::new(10.0, 0.0), Vector2::new(20.0, 5.0)];
    let estimate = vec![Vector2::new(10.5, 0.2), Vector2::new(0.3, -0.4)];
    let cfg = OspaConfig::default();
    println!("OSPA (p = 2, c = 100): {:.4}", ospa(&truth, &estimate, &cfg));
    println!(
        "OSPA (p = 1, c = 10): {:.4}",
        ospa(&truth, &estimate, &OspaConfig::new(1.0, 10.0)?)
    );

    let cost: Vec<Vec<f64>> = estimate
        .iter()
        .map(|e| truth.iter().map(|t| (e - t).norm()).collect())
        .collect();
    println!("estimate -> truth assignment: {:?}", optimal_assignment(&cost));
    Ok(())
}
