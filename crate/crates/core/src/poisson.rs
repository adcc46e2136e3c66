//! Poisson variates and point configurations on finite weighted spaces.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::cost::WeightedFiniteSpace;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// Means below this use sequential inversion, above it PTRD rejection.
const INVERSION_LIMIT: f64 = 30.0;

fn poisson_inversion(mean: f64, rng: &mut CounterRng) -> u64 {
    let u = rng.uniform();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    while u > cdf && k < 1000 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

/// Hörmann's transformed rejection with decomposition (PTRD).
fn poisson_ptrd(mean: f64, rng: &mut CounterRng) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = -mean + k * ln_mean - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// One Poisson draw with the given mean.
pub fn poisson_variate(mean: f64, rng: &mut CounterRng) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrd(mean, rng)
    }
}

/// Atoms with nonnegative integer multiplicities; zero counts are omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointConfiguration<A: Ord> {
    pub counts: BTreeMap<A, u64>,
}

impl<A: Ord + Clone> PointConfiguration<A> {
    pub fn empty() -> Self {
        PointConfiguration { counts: BTreeMap::new() }
    }

    pub fn from_points<I: IntoIterator<Item = A>>(points: I) -> Self {
        let mut counts = BTreeMap::new();
        for p in points {
            *counts.entry(p).or_insert(0) += 1;
        }
        PointConfiguration { counts }
    }

    pub fn count(&self, atom: &A) -> u64 {
        self.counts.get(atom).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Atoms carrying at least one point.
    pub fn support(&self) -> impl Iterator<Item = &A> {
        self.counts.keys()
    }
}

/// Independent Poisson counts, one per atom, drawn in atom order from
/// `rng`.
pub fn poisson_sample_with<W: Scalar, A: Ord + Clone + std::fmt::Display>(
    space: &WeightedFiniteSpace<W, A>,
    rng: &mut CounterRng,
) -> PointConfiguration<A> {
    let mut counts = BTreeMap::new();
    for (atom, w) in space.iter() {
        let k = poisson_variate(w.to_f64().unwrap_or(0.0), rng);
        if k > 0 {
            counts.insert(atom.clone(), k);
        }
    }
    PointConfiguration { counts }
}

/// Independent Poisson counts with means equal to the atom weights. The
/// result is a function of `(space, seed)` only.
pub fn poisson_sample<W: Scalar, A: Ord + Clone + std::fmt::Display>(space: &WeightedFiniteSpace<W, A>, seed: u64) -> PointConfiguration<A> {
    poisson_sample_with(space, &mut CounterRng::new(seed, 0))
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedProbability {
    pub mass: f64,
    /// `Σ_k pmf(k)²`: the chance that two independent Poisson counts agree.
    pub value: f64,
    /// `⌊mass⌋`.
    pub mode: u64,
    /// `pmf(mode)`, an upper bound on `value`.
    pub mode_bound: f64,
    pub within_bound: bool,
    pub terms: u64,
}

fn pmf(mass: f64, k: u64) -> f64 {
    (-mass + k as f64 * mass.ln() - ln_factorial(k)).exp()
}

/// The probability that two independent Poisson variables with mean `mass`
/// coincide, summed until the tail past the mode drops below `1e-12`.
pub fn poisson_fixed_prob<T: ToPrimitive>(mass: &T) -> Result<FixedProbability> {
    let m = mass.to_f64().ok_or_else(|| Error::Invalid("mass is not representable".into()))?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Invalid(format!("mass must be positive, got {m}")));
    }
    let mode = m.floor() as u64;
    let mut value = 0.0;
    let mut k = 0u64;
    loop {
        let p = pmf(m, k);
        value += p * p;
        if k > mode && p * p < 1e-12 * value.max(f64::MIN_POSITIVE) && p < 1e-12 {
            break;
        }
        k += 1;
    }
    let mode_bound = pmf(m, mode);
    Ok(FixedProbability { mass: m, value, mode, mode_bound, within_bound: value <= mode_bound, terms: k + 1 })
}
