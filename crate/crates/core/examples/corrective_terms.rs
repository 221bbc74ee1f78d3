//! Elementary symmetric functions and the corrective terms of an update.

use panjer_track::cardinality::PanjerParams;
use panjer_track::corrective::{corrective_terms, esf_vieta, MeasurementTermTable, ScaledEsf};

fn main() -> panjer_track::Result<()> {
    let terms = vec![0.8, 2.5, 0.1, 1.7];
    println!("e_j = {:?}", esf_vieta(&terms, terms.len()));

    // Hundreds of large terms overflow plain Vieta; the scaled form keeps logs.
    let big = vec![50.0; 400];
    let scaled = ScaledEsf::new(&big);
    println!("ln e_200 of 400 x 50.0 = {:.3}", scaled.ln_e(200));

    let target = PanjerParams::new(8.0, 0.5)?;
    let clutter = PanjerParams::new(10.0, 2.0)?;
    let table = MeasurementTermTable::new(terms, 16.0, 0.9, &target)?;
    let ct = corrective_terms(&table, &target, &clutter)?;
    println!("missed: l1 = {:.4}, l2 = {:.4}", ct.missed_l1, ct.missed_l2);
    for (z, (l1, l2)) in ct.l1.iter().zip(&ct.l2).enumerate() {
        println!("z{z}: l1 = {l1:.4}, l2 = {l2:.4}");
    }
    println!("l2 pair (0, 1) = {:.4}", ct.pair(0, 1).unwrap_or(f64::NAN));
    Ok(())
}
