//! Panjer laws matched to cardinality moments, and their pmfs.

use panjer_track::cardinality::{
    panjer_from_moments, panjer_from_moments_with, panjer_pmf, panjer_stats, CardinalityStats, PanjerForm,
    UnderdispersionPolicy,
};

fn main() -> panjer_track::Result<()> {
    for (mean, var) in [(25.0, 100.0), (1.0, 100.0), (10.0, 10.0)] {
        let p = panjer_from_moments(CardinalityStats::new(mean, var)?)?;
        let back = panjer_stats(&p);
        let form = match p.form() {
            PanjerForm::Panjer { alpha, beta } => format!("alpha = {alpha:.4}, beta = {beta:.4}"),
            PanjerForm::PoissonLimit { lambda } => format!("Poisson({lambda})"),
        };
        let head: Vec<String> = (0..5).map(|n| format!("{:.4}", panjer_pmf(&p, n))).collect();
        println!(
            "mean {mean}, var {var}: {form}; round trip ({}, {}); pmf[0..5] = {}",
            back.mean,
            back.variance,
            head.join(" ")
        );
    }

    let under = CardinalityStats::new(10.0, 4.0)?;
    let clamped = panjer_from_moments_with(under, UnderdispersionPolicy::ClampToPoisson)?;
    let binomial = panjer_from_moments_with(under, UnderdispersionPolicy::Binomial)?;
    println!(
        "underdispersed (10, 4): clamp -> {:?} (clamped = {})",
        clamped.params.form(),
        clamped.clamped
    );
    println!("underdispersed (10, 4): binomial -> {:?}", binomial.params.form());
    Ok(())
}
