//! The overlapping-neighborhoods statistic
//!
//! ```text
//! #{(x,y) ∈ B(n)² : |B(r) ∩ B(x,n+C) ∩ B(y,n+C)| < m} / |B(n)|²
//! ```
//!
//! computed exactly or by seeded pair sampling, and the product-group witness
//! paths `ρ(t) = (ξ₁(t), ζ₂(t))` that force large overlaps.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::balls::split_in_shells;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum OnpMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct OnpQuery<'a> {
    pub group: &'a MetricGroup,
    pub n: u64,
    pub r: u64,
    pub c: u64,
    pub m: u64,
    pub mode: OnpMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnpResult {
    pub n: u64,
    pub r: u64,
    pub c: u64,
    pub m: u64,
    /// Counted pairs (exact) or sampled hits.
    pub ratio_num: u64,
    /// `|B(n)|²` (exact) or the number of samples.
    pub ratio_den: u64,
    /// 95% confidence half-width; zero in exact mode.
    pub ci: f64,
}

impl OnpResult {
    pub fn ratio(&self) -> f64 {
        self.ratio_num as f64 / self.ratio_den as f64
    }
}

/// Precomputed data shared by every pair at fixed `(n, C)`.
struct Neighborhood<'a> {
    group: &'a MetricGroup,
    reach: u64,
    /// Candidates for the triple intersection, in nondecreasing length.
    candidates: Vec<(Element, u64)>,
}

impl<'a> Neighborhood<'a> {
    fn new(group: &'a MetricGroup, n: u64, c: u64, r_max: u64) -> Result<Self> {
        // B(x, n+C) ⊂ B(2n + C + C_q) whenever |x| ≤ n.
        let radius = r_max.min(2 * n + c + group.quasi_constant());
        let candidates = group
            .spheres(radius)?
            .into_iter()
            .enumerate()
            .flat_map(|(k, s)| s.into_iter().map(move |g| (g, k as u64)))
            .collect();
        Ok(Neighborhood { group, reach: n + c, candidates })
    }

    /// Length of the `m`-th element of `B(x,n+C) ∩ B(y,n+C)` in length
    /// order, or `None` when there are fewer than `m` such elements.
    fn mth_overlap_length(&self, x: &Element, y: &Element, m: u64) -> Option<u64> {
        if m == 0 {
            return Some(0);
        }
        let mut hits = 0;
        for (g, len) in &self.candidates {
            if self.group.dist(x, g) <= self.reach && self.group.dist(y, g) <= self.reach {
                hits += 1;
                if hits == m {
                    return Some(*len);
                }
            }
        }
        None
    }
}

/// Whether a pair is counted: fewer than `m` overlap points inside `B(r)`.
fn counted(mth: Option<u64>, r: u64) -> bool {
    mth.is_none_or(|len| len > r)
}

fn pair_budget_check(group: &MetricGroup, ball_len: usize) -> Result<()> {
    let pairs = ball_len.saturating_mul(ball_len);
    if pairs > group.budget() {
        return Err(Error::PairBudget { budget: group.budget(), pairs });
    }
    Ok(())
}

fn ball_elements(group: &MetricGroup, n: u64) -> Result<Vec<Element>> {
    Ok(group.spheres(n)?.into_iter().flatten().collect())
}

pub fn onp_statistic(query: &OnpQuery<'_>) -> Result<OnpResult> {
    let rows = onp_sweep(query.group, &[query.n], &[query.r], query.c, query.m, query.mode)?;
    Ok(rows.into_iter().next().expect("one row"))
}

/// Ratios over the grid `n_list × r_list`.
pub fn onp_sweep(
    group: &MetricGroup,
    n_list: &[u64],
    r_list: &[u64],
    c: u64,
    m: u64,
    mode: OnpMode,
) -> Result<Vec<OnpResult>> {
    let r_max = r_list.iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    for &n in n_list {
        let ball = ball_elements(group, n)?;
        let hood = Neighborhood::new(group, n, c, r_max)?;
        let mth: Vec<Option<u64>> = match mode {
            OnpMode::Exact => {
                pair_budget_check(group, ball.len())?;
                ball.par_iter()
                    .flat_map_iter(|x| ball.iter().map(|y| hood.mth_overlap_length(x, y, m)).collect::<Vec<_>>())
                    .collect()
            }
            OnpMode::Sampled { samples, seed } => (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = CounterRng::new(seed, i);
                    let x = &ball[rng.gen_range(0..ball.len())];
                    let y = &ball[rng.gen_range(0..ball.len())];
                    hood.mth_overlap_length(x, y, m)
                })
                .collect(),
        };
        for &r in r_list {
            let hits = mth.iter().filter(|&&v| counted(v, r)).count() as u64;
            let den = mth.len() as u64;
            let ci = match mode {
                OnpMode::Exact => 0.0,
                OnpMode::Sampled { .. } => {
                    let p = hits as f64 / den.max(1) as f64;
                    1.96 * (p * (1.0 - p) / den.max(1) as f64).sqrt()
                }
            };
            out.push(OnpResult { n, r, c, m, ratio_num: hits, ratio_den: den, ci });
        }
    }
    Ok(out)
}

/// The pairs counted by the exact statistic.
pub fn counted_pairs(group: &MetricGroup, n: u64, r: u64, c: u64, m: u64) -> Result<Vec<(Element, Element)>> {
    let ball = ball_elements(group, n)?;
    pair_budget_check(group, ball.len())?;
    let hood = Neighborhood::new(group, n, c, r)?;
    let mut out = Vec::new();
    for x in &ball {
        for y in &ball {
            if counted(hood.mth_overlap_length(x, y, m), r) {
                out.push((x.clone(), y.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessBounds {
    pub t: u64,
    pub to_x: u64,
    pub to_y: u64,
    pub to_e: u64,
    pub limit_x: u64,
    pub limit_y: u64,
    pub limit_e: u64,
}

impl WitnessBounds {
    pub fn holds(&self) -> bool {
        self.to_x <= self.limit_x && self.to_y <= self.limit_y && self.to_e <= self.limit_e
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessPath {
    pub x: String,
    pub y: String,
    pub eps: u64,
    pub t_max: u64,
    #[serde(skip)]
    pub points: Vec<Element>,
    pub bounds: Vec<WitnessBounds>,
}

impl WitnessPath {
    pub fn all_hold(&self) -> bool {
        self.bounds.iter().all(WitnessBounds::holds)
    }
}

/// For `t = 0..=|target|`, the lexicographically least `ξ(t) ∈ SS(t,ε)` with
/// `ξ(t)⁻¹·target ∈ SS(|target|−t, ε)`.
fn shell_path(factor: &MetricGroup, target: &Element, t_max: u64, eps: u64) -> Result<Vec<Element>> {
    let len = factor.len(target);
    let layers = factor.spheres(t_max + eps)?;
    (0..=t_max)
        .map(|t| {
            let lo = t.saturating_sub(eps) as usize;
            let mut candidates: Vec<Element> = layers[lo..=(t + eps) as usize].concat();
            candidates.sort();
            split_in_shells(factor, &candidates, target, len - t, eps).ok_or_else(|| Error::NoFactorization {
                element: target.to_string(),
                t,
                length: len,
            })
        })
        .collect()
}

/// Builds `ρ(t) = (ξ₁(t), ζ₂(t))` for `t = 0..=min(|x₁|,|y₂|)` and records
/// the three distances against their limits `|x|+2ε+C_q`, `|y|+2ε+C_q`,
/// `2t+2ε`.
pub fn witness_path(product: &MetricGroup, x: &Element, y: &Element, eps: u64) -> Result<WitnessPath> {
    let (g1, g2) = product
        .factors()
        .ok_or_else(|| Error::Invalid(format!("{product} is not a two-factor product")))?;
    product.length(x)?;
    product.length(y)?;
    let (x1, _) = x.components().expect("checked member of a product");
    let (_, y2) = y.components().expect("checked member of a product");
    let t_max = g1.len(x1).min(g2.len(y2));
    let xi = shell_path(g1, x1, t_max, eps)?;
    let zeta = shell_path(g2, y2, t_max, eps)?;
    let cq = product.quasi_constant();
    let (lx, ly) = (product.len(x), product.len(y));
    let mut points = Vec::new();
    let mut bounds = Vec::new();
    for (t, (a, b)) in xi.into_iter().zip(zeta).enumerate() {
        let rho = Element::pair(a, b);
        let t = t as u64;
        bounds.push(WitnessBounds {
            t,
            to_x: product.dist(x, &rho),
            to_y: product.dist(y, &rho),
            to_e: product.len(&rho),
            limit_x: lx + 2 * eps + cq,
            limit_y: ly + 2 * eps + cq,
            limit_e: 2 * t + 2 * eps,
        });
        points.push(rho);
    }
    Ok(WitnessPath { x: x.to_string(), y: y.to_string(), eps, t_max, points, bounds })
}
