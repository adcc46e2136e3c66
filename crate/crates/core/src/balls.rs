//! Balls, spheres and spherical shells; growth tables and the ratios built
//! from them.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::scalar::ratio_of;

/// Closed ball `B(center, radius)`.
///
/// Elements are listed in canonical order: by distance from the center, then
/// lexicographically by the translated representative.
#[derive(Clone, Debug)]
pub struct BallSet {
    pub center: Element,
    pub radius: u64,
    pub elements: Vec<Element>,
}

impl BallSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.elements.contains(g)
    }
}

pub fn ball(group: &MetricGroup, center: &Element, n: u64) -> Result<BallSet> {
    group.length(center)?;
    let elements = group
        .spheres(n)?
        .into_iter()
        .flatten()
        .map(|g| group.mul(center, &g))
        .collect();
    Ok(BallSet { center: center.clone(), radius: n, elements })
}

/// `SS(n, ε) = {x : n−ε ≤ |x| ≤ n+ε}`; `shell(n, 0)` is the sphere `S(n)`.
pub fn shell(group: &MetricGroup, n: u64, eps: u64) -> Result<Vec<Element>> {
    let lo = n.saturating_sub(eps) as usize;
    Ok(group.spheres(n + eps)?.into_iter().skip(lo).flatten().collect())
}

/// `|S(0)|, …, |S(n)|`.
pub fn sphere_counts(group: &MetricGroup, n: u64) -> Result<Vec<u64>> {
    Ok(group.spheres(n)?.iter().map(|s| s.len() as u64).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTable {
    pub group: String,
    pub ball: Vec<u64>,
    pub sphere: Vec<u64>,
    /// `log|B(n)|/n`, absent at `n = 0`.
    pub log_ratio: Vec<Option<f64>>,
    /// `inf_n (log|B(n)| + C)/n` with `C = 2·log|B(3ε)|`.
    pub fekete_bound: Option<f64>,
}

pub fn growth_table(group: &MetricGroup, n_max: u64) -> Result<GrowthTable> {
    let three_eps = 3 * group.slack();
    let sphere = sphere_counts(group, n_max.max(three_eps))?;
    let ball_all: Vec<u64> = sphere
        .iter()
        .scan(0u64, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let c = 2.0 * (ball_all[three_eps as usize] as f64).ln();
    let n_max = n_max as usize;
    let ball = ball_all[..=n_max].to_vec();
    let sphere = sphere[..=n_max].to_vec();
    let log_ratio: Vec<Option<f64>> = ball
        .iter()
        .enumerate()
        .map(|(n, &b)| (n > 0).then(|| (b as f64).ln() / n as f64))
        .collect();
    let fekete_bound = (1..=n_max)
        .map(|n| ((ball[n] as f64).ln() + c) / n as f64)
        .min_by(|a, b| a.total_cmp(b));
    Ok(GrowthTable { group: group.to_string(), ball, sphere, log_ratio, fekete_bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub n: u64,
    pub m: u64,
    pub eps: u64,
    pub checked: usize,
    /// First element of `S(n+m)` with no factorization, if any.
    pub uncovered: Option<String>,
}

impl SubadditivityReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_none()
    }
}

/// Searches `SS(n,ε)` for `u` with `u⁻¹·target ∈ SS(m,ε)`; returns the
/// lexicographically least such `u`.
pub(crate) fn split_in_shells(
    group: &MetricGroup,
    left_shell: &[Element],
    target: &Element,
    m: u64,
    eps: u64,
) -> Option<Element> {
    let (lo, hi) = (m.saturating_sub(eps), m + eps);
    left_shell
        .iter()
        .find(|u| {
            let r = group.dist(u, target);
            lo <= r && r <= hi
        })
        .cloned()
}

/// Verifies `S(n+m) ⊂ SS(n,ε)·SS(m,ε)` exhaustively.
pub fn check_subadditivity(group: &MetricGroup, n: u64, m: u64, eps: u64) -> Result<SubadditivityReport> {
    if n < eps || m < eps {
        return Err(Error::Invalid(format!("need n, m ≥ ε (n={n}, m={m}, ε={eps})")));
    }
    let layers = group.spheres(n + m + eps)?;
    let mut left: Vec<Element> = layers[(n - eps) as usize..=(n + eps) as usize].concat();
    left.sort();
    let target = &layers[(n + m) as usize];
    let mut uncovered = None;
    for s in target {
        if split_in_shells(group, &left, s, m, eps).is_none() {
            uncovered = Some(s.to_string());
            break;
        }
    }
    Ok(SubadditivityReport { n, m, eps, checked: target.len(), uncovered })
}

/// `|B(Γᵢ, n)| / |B(Γ, n)|` for a factor `Γᵢ` of the product `Γ`.
pub fn balanced_ratio(factor: &MetricGroup, product: &MetricGroup, n: u64) -> Result<BigRational> {
    let (l, r) = product
        .factors()
        .ok_or_else(|| Error::Invalid(format!("{product} is not a product group")))?;
    let name = factor.to_string();
    if name != l.to_string() && name != r.to_string() {
        return Err(Error::Invalid(format!("{factor} is not a factor of {product}")));
    }
    let fb: u64 = sphere_counts(factor, n)?.iter().sum();
    let pb: u64 = sphere_counts(product, n)?.iter().sum();
    Ok(ratio_of(fb, pb))
}

/// Balanced ratio addressed by factor index (1 or 2).
pub fn balanced_ratio_by_index(product: &MetricGroup, index: usize, n: u64) -> Result<BigRational> {
    let (l, r) = product
        .factors()
        .ok_or_else(|| Error::Invalid(format!("{product} is not a product group")))?;
    match index {
        1 => balanced_ratio(l, product, n),
        2 => balanced_ratio(r, product, n),
        _ => Err(Error::Invalid(format!("factor index must be 1 or 2, got {index}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRatio {
    pub n: u64,
    pub m: u64,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub ratio: BigRational,
    /// `−log(ratio)/m`; absent for `m = 0`.
    pub c_na: Option<f64>,
}

/// `|B(n−m)|/|B(n)|` and the non-amenability estimate `−log(ratio)/m`.
pub fn decay_ratio(group: &MetricGroup, n: u64, m: u64) -> Result<DecayRatio> {
    if m > n {
        return Err(Error::Invalid(format!("need m ≤ n (m={m}, n={n})")));
    }
    let counts = sphere_counts(group, n)?;
    let b = |k: u64| counts[..=k as usize].iter().sum::<u64>();
    let ratio = ratio_of(b(n - m), b(n));
    let c_na = (m > 0).then(|| -ratio.to_f64().unwrap_or(f64::NAN).ln() / m as f64);
    Ok(DecayRatio { n, m, ratio, c_na })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Terms do not decay over the computed range.
    Diverging,
    /// Terms decay over the computed range; no claim about the limit.
    Decaying,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidueSums {
    pub residue: u64,
    #[serde(serialize_with = "crate::report::ser_rationals")]
    pub sums1: Vec<BigRational>,
    #[serde(serialize_with = "crate::report::ser_rationals")]
    pub sums2: Vec<BigRational>,
    pub trend1: Trend,
    pub trend2: Trend,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthComparison {
    pub group1: String,
    pub group2: String,
    pub eps: u64,
    /// `f₁(n) = |SS(Γ₂,n,ε)| / |SS(Γ₁,n,ε)|`
    #[serde(serialize_with = "crate::report::ser_rationals")]
    pub f1: Vec<BigRational>,
    /// `f₂(n) = |SS(Γ₁,n,ε)| / |SS(Γ₂,n,ε)|`
    #[serde(serialize_with = "crate::report::ser_rationals")]
    pub f2: Vec<BigRational>,
    pub residues: Vec<ResidueSums>,
}

fn shell_counts(sphere: &[u64], n_max: u64, eps: u64) -> Vec<u64> {
    (0..=n_max)
        .map(|n| sphere[n.saturating_sub(eps) as usize..=(n + eps) as usize].iter().sum())
        .collect()
}

fn trend(terms: &[BigRational]) -> Trend {
    if terms.len() < 2 {
        return Trend::Diverging;
    }
    let half = terms.len() / 2;
    let early_max = terms[..half].iter().max().cloned().unwrap_or_else(BigRational::zero);
    let late_min = terms[half..].iter().min().cloned().unwrap_or_else(BigRational::zero);
    if late_min * BigRational::from_integer(BigInt::from(2)) >= early_max {
        Trend::Diverging
    } else {
        Trend::Decaying
    }
}

/// Per-radius best constants between two shell sequences, and their partial
/// sums along each residue class `2kε + m`.
pub fn comparable_growth_report(g1: &MetricGroup, g2: &MetricGroup, eps: u64, n_max: u64) -> Result<GrowthComparison> {
    let s1 = shell_counts(&sphere_counts(g1, n_max + eps)?, n_max, eps);
    let s2 = shell_counts(&sphere_counts(g2, n_max + eps)?, n_max, eps);
    let f1: Vec<BigRational> = s1.iter().zip(&s2).map(|(&a, &b)| ratio_of(b, a)).collect();
    let f2: Vec<BigRational> = s1.iter().zip(&s2).map(|(&a, &b)| ratio_of(a, b)).collect();
    let step = (2 * eps).max(1);
    let mut residues = Vec::new();
    for residue in 0..step.min(n_max + 1) {
        let idx: Vec<usize> = (residue..=n_max).step_by(step as usize).map(|n| n as usize).collect();
        let terms1: Vec<BigRational> = idx.iter().map(|&i| f1[i].clone()).collect();
        let terms2: Vec<BigRational> = idx.iter().map(|&i| f2[i].clone()).collect();
        let partial = |t: &[BigRational]| {
            t.iter()
                .scan(BigRational::zero(), |acc, x| {
                    *acc += x;
                    Some(acc.clone())
                })
                .collect::<Vec<_>>()
        };
        residues.push(ResidueSums {
            residue,
            sums1: partial(&terms1),
            sums2: partial(&terms2),
            trend1: trend(&terms1),
            trend2: trend(&terms2),
        });
    }
    Ok(GrowthComparison { group1: g1.to_string(), group2: g2.to_string(), eps, f1, f2, residues })
}

/// Greedily picks `size` elements of `B(search_radius)` that are pairwise
/// `F²`-separated: for distinct picks `g, h`, `g⁻¹h ∉ F·F`.
pub fn find_separated_set(group: &MetricGroup, window: &[Element], size: usize, search_radius: u64) -> Result<Vec<Element>> {
    let e = group.identity();
    if !window.contains(&e) {
        return Err(Error::Invalid("F must contain the identity".into()));
    }
    for f in window {
        if !window.contains(&group.invert(f)?) {
            return Err(Error::Invalid(format!("F is not symmetric: {f} lacks its inverse")));
        }
    }
    let square: HashSet<Element> = window
        .iter()
        .flat_map(|f| window.iter().map(move |g| group.mul(f, g)))
        .collect();
    let mut picked: Vec<Element> = Vec::new();
    for g in group.spheres(search_radius)?.into_iter().flatten() {
        if picked.len() == size {
            break;
        }
        let g_inv = group.inv(&g);
        if picked.iter().all(|h| !square.contains(&group.mul(&g_inv, h))) {
            picked.push(g);
        }
    }
    if picked.len() < size {
        return Err(Error::InsufficientRoom { achievable: picked.len() });
    }
    Ok(picked)
}

/// `|B(3ε)|^t`, the bound on `|B(n+t)|/|B(n)|` for `t ≥ 0`.
pub fn growth_step_bound(group: &MetricGroup, t: u64) -> Result<BigInt> {
    let r = 3 * group.slack().max(1);
    let b: u64 = sphere_counts(group, r)?.iter().sum();
    Ok(num_traits::pow(BigInt::from(b), t as usize))
}
