//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use panjer_track::cardinality::{PanjerParams, SignedLog};
use panjer_track::corrective::{
    corrective_terms, corrective_terms_from_factors, CardinalityFactors, CorrectiveTerms, MeasurementTermTable,
};
use panjer_track::regional::{covariance_from_masses, mean_from_masses, RegionMasses};
use rand::Rng;

/// Elementary symmetric functions by enumerating every subset.
pub fn esf_by_subsets(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let prod: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).product();
        e[mask.count_ones() as usize] += prod;
    }
    e
}

/// Minimum assignment cost over all injective row-to-column maps, summed in
/// row order.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], used: &mut Vec<bool>, row: usize, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                go(cost, used, row + 1, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    if cost.is_empty() {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    go(cost, &mut vec![false; cost[0].len()], 0, 0.0, &mut best);
    best
}

/// Truncated polynomial in nilpotent variables (`v_i^2 = 0`); coefficient
/// `c[mask]` multiplies the product of the variables in `mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(vars: usize, x: f64) -> Self {
        let mut c = vec![0.0; 1 << vars];
        c[0] = x;
        Self { c }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn add_var(&mut self, var: usize, coeff: f64) {
        self.c[1 << var] += coeff;
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * k).collect(),
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for a in 0..n {
            if self.c[a] == 0.0 {
                continue;
            }
            // Subsets of the complement of `a`.
            let rest = (n - 1) & !a;
            let mut b = rest;
            loop {
                c[a | b] += self.c[a] * o.c[b];
                if b == 0 {
                    break;
                }
                b = (b - 1) & rest;
            }
        }
        Jet { c }
    }

    /// `f(self)` from the derivatives `f^(k)(self.c[0])`, `k = 0..=vars`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let vars = self.c.len().trailing_zeros() as usize;
        assert!(derivs.len() > vars);
        let mut nil = self.clone();
        nil.c[0] = 0.0;
        let mut out = Jet::constant(vars, derivs[0]);
        let mut power = Jet::constant(vars, 1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1).take(vars) {
            power = power.mul(&nil);
            fact *= k as f64;
            out = out.add(&power.scale(d / fact));
        }
        out
    }
}

/// Cardinality law given through its probability generating function.
#[derive(Clone, Debug)]
pub enum Law {
    Panjer { alpha: f64, beta: f64 },
    Poisson { lambda: f64 },
    Pmf(Vec<f64>),
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn rising(a: f64, k: usize) -> f64 {
    (0..k).map(|i| a + i as f64).product()
}

impl Law {
    pub fn mean(&self) -> f64 {
        match self {
            Law::Panjer { alpha, beta } => alpha / beta,
            Law::Poisson { lambda } => *lambda,
            Law::Pmf(p) => p.iter().enumerate().map(|(n, q)| n as f64 * q).sum(),
        }
    }

    pub fn pgf(&self, x: f64) -> f64 {
        self.derivs(x, 0)[0]
    }

    /// `G^(k)(x)` for `k = 0..=order`.
    pub fn derivs(&self, x: f64, order: usize) -> Vec<f64> {
        (0..=order)
            .map(|k| match self {
                Law::Panjer { alpha, beta } => {
                    rising(*alpha, k) * beta.powi(-(k as i32)) * (1.0 + (1.0 - x) / beta).powf(-alpha - k as f64)
                }
                Law::Poisson { lambda } => lambda.powi(k as i32) * (lambda * (x - 1.0)).exp(),
                Law::Pmf(p) => p
                    .iter()
                    .enumerate()
                    .skip(k)
                    .map(|(n, q)| q * falling(n, k) * x.powi((n - k) as i32))
                    .sum(),
            })
            .collect()
    }

    fn panjer(&self) -> PanjerParams {
        match self {
            Law::Panjer { alpha, beta } => PanjerParams::new(*alpha, *beta).unwrap(),
            Law::Poisson { lambda } => PanjerParams::poisson(*lambda).unwrap(),
            Law::Pmf(_) => panic!("pmf law has no Panjer parameters"),
        }
    }
}

/// Finite state space with i.i.d. target locations and finitely many
/// measurements.
#[derive(Clone, Debug)]
pub struct DiscreteScene {
    pub target: Law,
    /// Spatial distribution of targets, sums to one.
    pub shape: Vec<f64>,
    pub p_d: Vec<f64>,
    /// `lik[z][x]`.
    pub lik: Vec<Vec<f64>>,
    pub clutter: Law,
    pub clutter_density: Vec<f64>,
}

/// Posterior statistics of one or two regions (bit masks over states).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleMoments {
    pub mean_b: f64,
    pub mean_b2: f64,
    /// Second factorial moment `nu^(2)(B x B')`.
    pub nu2: f64,
}

impl DiscreteScene {
    pub fn states(&self) -> usize {
        self.shape.len()
    }

    pub fn measurements(&self) -> usize {
        self.lik.len()
    }

    fn intensity(&self) -> Vec<f64> {
        let m = self.target.mean();
        self.shape.iter().map(|s| s * m).collect()
    }

    /// Joint PGFL with `g = sum_j g_j delta_{z_j}` and
    /// `h = 1 + t 1_B + u 1_B'`, as a jet in `(g_1..g_m, t, u)`.
    pub fn joint_pgfl(&self, b: u32, b2: u32) -> Jet {
        let m = self.measurements();
        let vars = m + 2;
        let (t, u) = (m, m + 1);
        let mut inner = Jet::constant(vars, 0.0);
        for x in 0..self.states() {
            let mut h = Jet::constant(vars, 1.0);
            if b >> x & 1 == 1 {
                h.add_var(t, 1.0);
            }
            if b2 >> x & 1 == 1 {
                h.add_var(u, 1.0);
            }
            let mut gd = Jet::constant(vars, 1.0 - self.p_d[x]);
            for j in 0..m {
                gd.add_var(j, self.p_d[x] * self.lik[j][x]);
            }
            inner = inner.add(&h.mul(&gd).scale(self.shape[x]));
        }
        let targets = inner.compose(&self.target.derivs(inner.c[0], vars));
        let mut g_c = Jet::constant(vars, 0.0);
        for j in 0..m {
            g_c.add_var(j, self.clutter_density[j]);
        }
        let clutter = g_c.compose(&self.clutter.derivs(0.0, vars));
        targets.mul(&clutter)
    }

    /// Same functional evaluated at real arguments.
    pub fn joint_pgfl_scalar(&self, g: &[f64], t: f64, u: f64, b: u32, b2: u32) -> f64 {
        let inner: f64 = (0..self.states())
            .map(|x| {
                let h = 1.0 + if b >> x & 1 == 1 { t } else { 0.0 } + if b2 >> x & 1 == 1 { u } else { 0.0 };
                let gd = 1.0 - self.p_d[x] + self.p_d[x] * (0..g.len()).map(|j| g[j] * self.lik[j][x]).sum::<f64>();
                self.shape[x] * h * gd
            })
            .sum();
        let clutter: f64 = (0..g.len()).map(|j| g[j] * self.clutter_density[j]).sum();
        self.target.pgf(inner) * self.clutter.pgf(clutter)
    }

    /// Posterior moments from the chain derivatives of the joint PGFL.
    pub fn oracle(&self, b: u32, b2: u32) -> OracleMoments {
        let m = self.measurements();
        let jet = self.joint_pgfl(b, b2);
        let all_g = (1usize << m) - 1;
        let (t, u) = (1usize << m, 1usize << (m + 1));
        let norm = jet.c[all_g];
        OracleMoments {
            mean_b: jet.c[all_g | t] / norm,
            mean_b2: jet.c[all_g | u] / norm,
            nu2: jet.c[all_g | t | u] / norm,
        }
    }

    pub fn oracle_covariance(&self, b: u32, b2: u32) -> f64 {
        let o = self.oracle(b, b2);
        o.nu2 + self.oracle(b & b2, 0).mean_b - o.mean_b * o.mean_b2
    }

    pub fn masses(&self, region: u32) -> RegionMasses {
        let mu = self.intensity();
        let inside = |x: usize| region >> x & 1 == 1;
        RegionMasses {
            missed: (0..self.states())
                .filter(|&x| inside(x))
                .map(|x| (1.0 - self.p_d[x]) * mu[x])
                .sum(),
            detected: (0..self.measurements())
                .map(|j| {
                    (0..self.states())
                        .filter(|&x| inside(x))
                        .map(|x| self.p_d[x] * mu[x] * self.lik[j][x])
                        .sum::<f64>()
                        / self.clutter_density[j]
                })
                .collect(),
        }
    }

    fn all_states(&self) -> u32 {
        (1 << self.states()) - 1
    }

    fn table(&self, fd: f64) -> MeasurementTermTable {
        let whole = self.masses(self.all_states());
        MeasurementTermTable::from_parts(whole.detected, fd, whole.missed).unwrap()
    }

    /// Corrective terms from the library, for Panjer, Poisson or pmf laws.
    pub fn library_terms(&self) -> CorrectiveTerms {
        let mu = self.intensity();
        let mass: f64 = mu.iter().sum();
        match &self.target {
            Law::Pmf(_) => {
                let m = self.measurements();
                let missed = self.masses(self.all_states()).missed;
                let q = missed / mass;
                let t = self.target.derivs(q, m + 2);
                let c = self.clutter.derivs(0.0, m);
                let factors = CardinalityFactors {
                    target: t
                        .iter()
                        .enumerate()
                        .map(|(n, d)| SignedLog::from_f64(d / mass.powi(n as i32)))
                        .collect(),
                    clutter: c.iter().map(|d| SignedLog::from_f64(*d)).collect(),
                };
                corrective_terms_from_factors(&self.table(mass).terms, &factors, true).unwrap()
            }
            law => {
                let fd = match law {
                    Law::Panjer { beta, .. } => mu.iter().zip(&self.p_d).map(|(m, p)| (1.0 + p / beta) * m).sum(),
                    _ => mass,
                };
                corrective_terms(&self.table(fd), &law.panjer(), &self.clutter.panjer()).unwrap()
            }
        }
    }

    pub fn library_mean(&self, terms: &CorrectiveTerms, b: u32) -> f64 {
        mean_from_masses(terms, &self.masses(b))
    }

    pub fn library_covariance(&self, terms: &CorrectiveTerms, b: u32, b2: u32) -> f64 {
        let inter = (b & b2 != 0).then(|| self.masses(b & b2));
        covariance_from_masses(terms, &self.masses(b), &self.masses(b2), inter.as_ref()).unwrap()
    }

    pub fn random<R: Rng>(rng: &mut R, target: Law, clutter: Law, states: usize, measurements: usize) -> Self {
        let raw: Vec<f64> = (0..states).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            target,
            shape: raw.iter().map(|r| r / total).collect(),
            p_d: (0..states).map(|_| rng.random_range(0.3..0.95)).collect(),
            lik: (0..measurements)
                .map(|_| (0..states).map(|_| rng.random_range(0.01..2.0)).collect())
                .collect(),
            clutter,
            clutter_density: (0..measurements).map(|_| rng.random_range(0.2..1.5)).collect(),
        }
    }
}

/// Largest absolute gap between the library and the oracle over every pair
/// of state subsets, for means and covariances.
pub fn max_oracle_gap(scene: &DiscreteScene) -> f64 {
    let terms = scene.library_terms();
    let full = 1u32 << scene.states();
    let mut worst: f64 = 0.0;
    for b in 0..full {
        worst = worst.max((scene.library_mean(&terms, b) - scene.oracle(b, 0).mean_b).abs());
        for b2 in 0..full {
            let lib = scene.library_covariance(&terms, b, b2);
            worst = worst.max((lib - scene.oracle_covariance(b, b2)).abs());
        }
    }
    worst
}
