//! Mean, variance, covariance and correlation of the number of targets in
//! boxes, evaluated from an [`UpdateAudit`].
//!
//! For boxes `B`, `B'` with missed-detection masses `m = mu^phi(B)`,
//! `m' = mu^phi(B')` and measurement masses `d_z = mu^z(B) / s_c(z)`:
//!
//! ```text
//! cov(B, B') = mu(B n B')
//!            + m m' [l_2(phi) - l_1(phi)^2]
//!            + sum_z (m d'_z + m' d_z) [l_2(z) - l_1(z) l_1(phi)]
//!            + sum_{z, z'} d_z d'_z' [l_2^{!=}(z, z') - l_1(z) l_1(z')]
//! ```
//!
//! with `l_2^{!=}(z, z) = 0`. The PHD and CPHD filters use the same
//! expression with their own corrective terms.

use serde::Serialize;

use crate::corrective::CorrectiveTerms;
use crate::error::{Error, Result};
use crate::filters::{FilterKind, UpdateAudit};
use crate::gm::Region;

/// Audit mixtures integrated over one box.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMasses {
    pub missed: f64,
    pub detected: Vec<f64>,
}

impl RegionMasses {
    pub fn from_audit(audit: &UpdateAudit, region: &Region) -> Self {
        Self {
            missed: audit.missed.region_mass(region),
            detected: audit.detected.iter().map(|m| m.region_mass(region)).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            missed: 0.0,
            detected: vec![0.0; n],
        }
    }
}

pub fn mean_from_masses(terms: &CorrectiveTerms, b: &RegionMasses) -> f64 {
    terms.missed_l1 * b.missed + b.detected.iter().zip(&terms.l1).map(|(d, l)| d * l).sum::<f64>()
}

/// All terms of the covariance except `mu(B n B')` and the pair sum.
fn covariance_core(terms: &CorrectiveTerms, b: &RegionMasses, b2: &RegionMasses) -> f64 {
    let l1p = terms.missed_l1;
    let mut total = b.missed * b2.missed * (terms.missed_l2 - l1p * l1p);
    for (z, (d, d2)) in b.detected.iter().zip(&b2.detected).enumerate() {
        total += (b.missed * d2 + b2.missed * d) * (terms.l2[z] - terms.l1[z] * l1p);
    }
    let s: f64 = b.detected.iter().zip(&terms.l1).map(|(d, l)| d * l).sum();
    let s2: f64 = b2.detected.iter().zip(&terms.l1).map(|(d, l)| d * l).sum();
    total - s * s2
}

/// Covariance from precomputed masses; `intersection` holds the masses of
/// `B n B'` (or `None` when the boxes are disjoint).
pub fn covariance_from_masses(
    terms: &CorrectiveTerms,
    b: &RegionMasses,
    b2: &RegionMasses,
    intersection: Option<&RegionMasses>,
) -> Result<f64> {
    let pairs = terms
        .pair_quadratic(&b.detected, &b2.detected)
        .ok_or_else(|| Error::Usage("regional covariance needs the pair table; update with pairs enabled".into()))?;
    let shared = intersection.map_or(0.0, |i| mean_from_masses(terms, i));
    Ok(shared + covariance_core(terms, b, b2) + pairs)
}

/// Variance of the total number of targets, without the pair table.
pub fn whole_space_variance(terms: &CorrectiveTerms, whole: &RegionMasses) -> f64 {
    mean_from_masses(terms, whole) + covariance_core(terms, whole, whole) + terms.pair_total
}

fn check_kind(audit: &UpdateAudit, kind: FilterKind) -> Result<()> {
    if audit.kind == kind {
        Ok(())
    } else {
        Err(Error::Usage(format!("audit comes from {}, not {kind}", audit.kind)))
    }
}

pub fn regional_mean(audit: &UpdateAudit, region: &Region) -> f64 {
    mean_from_masses(&audit.terms, &RegionMasses::from_audit(audit, region))
}

/// Variance before clamping; negative values signal round-off or truncation.
pub fn regional_variance_raw(audit: &UpdateAudit, region: &Region) -> Result<f64> {
    covariance_unchecked(audit, region, region)
}

/// Variance clamped at zero.
pub fn regional_variance(audit: &UpdateAudit, region: &Region) -> Result<f64> {
    Ok(regional_variance_raw(audit, region)?.max(0.0))
}

fn covariance_unchecked(audit: &UpdateAudit, b: &Region, b2: &Region) -> Result<f64> {
    let mb = RegionMasses::from_audit(audit, b);
    let mb2 = if b == b2 {
        mb.clone()
    } else {
        RegionMasses::from_audit(audit, b2)
    };
    let inter = b.intersection(b2).map(|r| {
        if r == *b {
            mb.clone()
        } else if r == *b2 {
            mb2.clone()
        } else {
            RegionMasses::from_audit(audit, &r)
        }
    });
    covariance_from_masses(&audit.terms, &mb, &mb2, inter.as_ref())
}

pub fn covariance(audit: &UpdateAudit, b: &Region, b2: &Region, kind: FilterKind) -> Result<f64> {
    check_kind(audit, kind)?;
    covariance_unchecked(audit, b, b2)
}

/// `cov / (sd_B sd_B')`, `None` when either variance vanishes.
pub fn correlation(audit: &UpdateAudit, b: &Region, b2: &Region, kind: FilterKind) -> Result<Option<f64>> {
    Ok(report(audit, b, b2, kind)?.correlation)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionalReport {
    pub mean: [f64; 2],
    pub variance: [f64; 2],
    pub covariance: f64,
    /// `None` when either variance is zero.
    pub correlation: Option<f64>,
    /// Pre-clamp variances, kept as a diagnostic.
    pub raw_variance: [f64; 2],
}

/// Statistics of two boxes from one audit, sharing the mass integrals.
pub fn report(audit: &UpdateAudit, b: &Region, b2: &Region, kind: FilterKind) -> Result<RegionalReport> {
    check_kind(audit, kind)?;
    let mb = RegionMasses::from_audit(audit, b);
    let mb2 = RegionMasses::from_audit(audit, b2);
    let inter = b.intersection(b2).map(|r| RegionMasses::from_audit(audit, &r));
    let terms = &audit.terms;
    let raw_variance = [
        covariance_from_masses(terms, &mb, &mb, Some(&mb))?,
        covariance_from_masses(terms, &mb2, &mb2, Some(&mb2))?,
    ];
    let variance = raw_variance.map(|v| v.max(0.0));
    let covariance = covariance_from_masses(terms, &mb, &mb2, inter.as_ref())?;
    let correlation = (variance[0] > 0.0 && variance[1] > 0.0)
        .then(|| (covariance / (variance[0] * variance[1]).sqrt()).clamp(-1.0, 1.0));
    Ok(RegionalReport {
        mean: [mean_from_masses(terms, &mb), mean_from_masses(terms, &mb2)],
        variance,
        covariance,
        correlation,
        raw_variance,
    })
}
