//! Countable groups carrying integer-valued, left-invariant, proper
//! quasi-metrics.
//!
//! Four families are supported: free groups with the word metric, finite
//! groups given by a multiplication table (word metric over a declared
//! generating set), ℓ¹ products of two groups, and ceiling-scaled metrics
//! `⌈α·d⌉` over any base.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::Rng;

use crate::element::{Element, Word};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Default cap on the number of elements a single enumeration may produce.
pub const DEFAULT_BUDGET: usize = 5_000_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "HOROCOST_BUDGET";

pub fn budget_from_env() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Multiplication table of a finite group together with the cached word
/// lengths over its generating set.
#[derive(Clone, Debug)]
pub struct FiniteTable {
    order: usize,
    table: Vec<u32>,
    identity: u32,
    inverse: Vec<u32>,
    generators: Vec<u32>,
    lengths: Vec<u64>,
    label: String,
}

impl FiniteTable {
    /// Builds a table from its rows. `generators` is symmetrized; word
    /// lengths are computed once by breadth-first search.
    ///
    /// Associativity is not checked here, so a corrupted table can still be
    /// constructed and handed to [`MetricGroup::validate_metric_axioms`].
    pub fn new(rows: Vec<Vec<u32>>, generators: &[u32], label: impl Into<String>) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::Invalid("empty multiplication table".into()));
        }
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::Invalid("multiplication table is not square".into()));
        }
        if rows.iter().flatten().any(|&v| v as usize >= order) {
            return Err(Error::Invalid("table entry out of range".into()));
        }
        let table: Vec<u32> = rows.into_iter().flatten().collect();
        let at = |g: usize, h: usize| table[g * order + h];
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| at(e, g) as usize == g && at(g, e) as usize == g))
            .ok_or_else(|| Error::Invalid("table has no identity".into()))? as u32;
        let mut inverse = Vec::with_capacity(order);
        for g in 0..order {
            let h = (0..order)
                .find(|&h| at(g, h) == identity)
                .ok_or_else(|| Error::Invalid(format!("element {g} has no inverse")))?;
            inverse.push(h as u32);
        }
        let mut gens: Vec<u32> = Vec::new();
        for &s in generators {
            if s as usize >= order {
                return Err(Error::Invalid(format!("generator {s} out of range")));
            }
            for t in [s, inverse[s as usize]] {
                if t != identity && !gens.contains(&t) {
                    gens.push(t);
                }
            }
        }
        gens.sort_unstable();

        let mut lengths = vec![u64::MAX; order];
        lengths[identity as usize] = 0;
        let mut queue = VecDeque::from([identity]);
        while let Some(g) = queue.pop_front() {
            for &s in &gens {
                let h = at(g as usize, s as usize);
                if lengths[h as usize] == u64::MAX {
                    lengths[h as usize] = lengths[g as usize] + 1;
                    queue.push_back(h);
                }
            }
        }
        if lengths.contains(&u64::MAX) {
            return Err(Error::Invalid("declared generators do not generate the group".into()));
        }
        Ok(FiniteTable { order, table, identity, inverse, generators: gens, lengths, label: label.into() })
    }

    /// Cyclic group ℤ/n with generator 1.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("cyclic group of order 0".into()));
        }
        let rows = (0..n)
            .map(|g| (0..n).map(|h| ((g + h) % n) as u32).collect())
            .collect();
        Self::new(rows, &[(1 % n) as u32], format!("cyclic({n})"))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn product(&self, g: u32, h: u32) -> u32 {
        self.table[g as usize * self.order + h as usize]
    }

    pub fn inverse(&self, g: u32) -> u32 {
        self.inverse[g as usize]
    }

    pub fn length(&self, g: u32) -> u64 {
        self.lengths[g as usize]
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }
}

#[derive(Clone, Debug)]
enum Family {
    Free { rank: u8 },
    Finite(Arc<FiniteTable>),
    Product(Arc<MetricGroup>, Arc<MetricGroup>),
    Scaled { base: Arc<MetricGroup>, factor: Ratio<u64> },
}

/// A group with an integer quasi-metric `d`, its quasi-triangle constant
/// `C_q` and its sub-additivity slack `ε`.
///
/// Values are immutable once built and cheap to clone.
#[derive(Clone, Debug)]
pub struct MetricGroup {
    family: Family,
    quasi_constant: u64,
    slack: u64,
    budget: usize,
}

impl MetricGroup {
    /// Free group of the given rank (rank 0 is the trivial group).
    pub fn free(rank: u8) -> Result<Self> {
        if rank > 26 {
            return Err(Error::Invalid(format!("free rank {rank} exceeds 26")));
        }
        Ok(MetricGroup { family: Family::Free { rank }, quasi_constant: 0, slack: 1, budget: budget_from_env() })
    }

    pub fn trivial() -> Self {
        MetricGroup::free(0).expect("rank 0 is valid")
    }

    pub fn finite(table: FiniteTable) -> Self {
        MetricGroup {
            family: Family::Finite(Arc::new(table)),
            quasi_constant: 0,
            slack: 1,
            budget: budget_from_env(),
        }
    }

    /// ℓ¹ product `d((x₁,x₂),(y₁,y₂)) = d₁(x₁,y₁) + d₂(x₂,y₂)`.
    ///
    /// The declared constants are the maxima of the factors'. The quasi-triangle
    /// constant is certified by a sampled axiom check and raised to the sum of
    /// the factors' constants when that check finds a violation.
    pub fn product(left: MetricGroup, right: MetricGroup) -> Self {
        let budget = left.budget.max(right.budget);
        let (cq_max, cq_sum) = (
            left.quasi_constant.max(right.quasi_constant),
            left.quasi_constant + right.quasi_constant,
        );
        let slack = left.slack.max(right.slack);
        let mut group = MetricGroup {
            family: Family::Product(Arc::new(left), Arc::new(right)),
            quasi_constant: cq_max,
            slack,
            budget,
        };
        if cq_max != cq_sum {
            let certified = group
                .validate_metric_axioms(200, 2, 0)
                .map(|r| r.violations.is_empty())
                .unwrap_or(false);
            if !certified {
                group.quasi_constant = cq_sum;
            }
        }
        group
    }

    /// Ceiling-scaled metric `⌈α·d⌉`, with constants padded to
    /// `⌈α·C_q⌉ + 1` and `⌈α·ε⌉ + 1`.
    pub fn scaled(base: MetricGroup, factor: Ratio<u64>) -> Result<Self> {
        if *factor.numer() == 0 {
            return Err(Error::Invalid("scale factor α must be positive (α ≤ 0 given)".into()));
        }
        let quasi_constant = ceil_mul(factor, base.quasi_constant) + 1;
        let slack = ceil_mul(factor, base.slack) + 1;
        let budget = base.budget;
        Ok(MetricGroup { family: Family::Scaled { base: Arc::new(base), factor }, quasi_constant, slack, budget })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_slack(mut self, slack: u64) -> Self {
        self.slack = slack;
        self
    }

    pub fn with_quasi_constant(mut self, c: u64) -> Self {
        self.quasi_constant = c;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// The quasi-triangle constant `C_q`.
    pub fn quasi_constant(&self) -> u64 {
        self.quasi_constant
    }

    /// The sub-additivity slack `ε`.
    pub fn slack(&self) -> u64 {
        self.slack
    }

    /// The two factors, for product groups.
    pub fn factors(&self) -> Option<(&MetricGroup, &MetricGroup)> {
        match &self.family {
            Family::Product(l, r) => Some((l, r)),
            _ => None,
        }
    }

    pub fn identity(&self) -> Element {
        match &self.family {
            Family::Free { .. } => Element::Free(Word::identity()),
            Family::Finite(t) => Element::Finite(t.identity()),
            Family::Product(l, r) => Element::pair(l.identity(), r.identity()),
            Family::Scaled { base, .. } => base.identity(),
        }
    }

    pub fn contains(&self, g: &Element) -> bool {
        match (&self.family, g) {
            (Family::Free { rank }, Element::Free(w)) => {
                w.is_reduced() && w.letters().iter().all(|l| l.unsigned_abs() <= *rank)
            }
            (Family::Finite(t), Element::Finite(i)) => (*i as usize) < t.order(),
            (Family::Product(l, r), Element::Pair(a, b)) => l.contains(a) && r.contains(b),
            (Family::Scaled { base, .. }, g) => base.contains(g),
            _ => false,
        }
    }

    fn check(&self, g: &Element) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::Mismatch { element: g.to_string(), group: self.to_string() })
        }
    }

    /// Canonical form of `g·h`.
    pub fn multiply(&self, g: &Element, h: &Element) -> Result<Element> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul(g, h))
    }

    /// Canonical form of `g⁻¹`.
    pub fn invert(&self, g: &Element) -> Result<Element> {
        self.check(g)?;
        Ok(self.inv(g))
    }

    /// `d(g, h) = |g⁻¹h|`.
    pub fn distance(&self, g: &Element, h: &Element) -> Result<u64> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.dist(g, h))
    }

    /// `|g| = d(e, g)`.
    pub fn length(&self, g: &Element) -> Result<u64> {
        self.check(g)?;
        Ok(self.len(g))
    }

    // Unchecked versions for inner loops over elements already known to be
    // members.

    pub(crate) fn mul(&self, g: &Element, h: &Element) -> Element {
        match (&self.family, g, h) {
            (Family::Free { .. }, Element::Free(a), Element::Free(b)) => Element::Free(a.concat(b)),
            (Family::Finite(t), Element::Finite(a), Element::Finite(b)) => Element::Finite(t.product(*a, *b)),
            (Family::Product(l, r), Element::Pair(a1, a2), Element::Pair(b1, b2)) => {
                Element::pair(l.mul(a1, b1), r.mul(a2, b2))
            }
            (Family::Scaled { base, .. }, g, h) => base.mul(g, h),
            _ => unreachable!("mul called on a foreign element"),
        }
    }

    pub(crate) fn inv(&self, g: &Element) -> Element {
        match (&self.family, g) {
            (Family::Free { .. }, Element::Free(a)) => Element::Free(a.inverse()),
            (Family::Finite(t), Element::Finite(a)) => Element::Finite(t.inverse(*a)),
            (Family::Product(l, r), Element::Pair(a, b)) => Element::pair(l.inv(a), r.inv(b)),
            (Family::Scaled { base, .. }, g) => base.inv(g),
            _ => unreachable!("inv called on a foreign element"),
        }
    }

    pub(crate) fn len(&self, g: &Element) -> u64 {
        match (&self.family, g) {
            (Family::Free { .. }, Element::Free(a)) => a.len() as u64,
            (Family::Finite(t), Element::Finite(a)) => t.length(*a),
            (Family::Product(l, r), Element::Pair(a, b)) => l.len(a) + r.len(b),
            (Family::Scaled { base, factor }, g) => ceil_mul(*factor, base.len(g)),
            _ => unreachable!("len called on a foreign element"),
        }
    }

    pub(crate) fn dist(&self, g: &Element, h: &Element) -> u64 {
        match (&self.family, g, h) {
            (Family::Product(l, r), Element::Pair(a1, a2), Element::Pair(b1, b2)) => {
                l.dist(a1, b1) + r.dist(a2, b2)
            }
            (Family::Scaled { base, factor }, g, h) => ceil_mul(*factor, base.dist(g, h)),
            (Family::Free { .. }, Element::Free(a), Element::Free(b)) => {
                // |a⁻¹b| = |a| + |b| − 2·(common prefix)
                let common = a.letters().iter().zip(b.letters()).take_while(|(x, y)| x == y).count();
                (a.len() + b.len() - 2 * common) as u64
            }
            _ => self.len(&self.mul(&self.inv(g), h)),
        }
    }

    /// The generator step set: the elements at distance one in the word
    /// metric of the underlying group.
    pub fn generators(&self) -> Vec<Element> {
        match &self.family {
            Family::Free { rank } => {
                let r = *rank as i8;
                (-r..=r).filter(|&l| l != 0).map(|l| Element::word([l])).collect()
            }
            Family::Finite(t) => t.generators().iter().map(|&g| Element::Finite(g)).collect(),
            Family::Product(l, r) => {
                let mut out: Vec<Element> =
                    l.generators().into_iter().map(|g| Element::pair(g, r.identity())).collect();
                out.extend(r.generators().into_iter().map(|g| Element::pair(l.identity(), g)));
                out.sort();
                out
            }
            Family::Scaled { base, .. } => base.generators(),
        }
    }

    /// Spheres `S(0), …, S(n)` around the identity, each sorted.
    pub fn spheres(&self, n: u64) -> Result<Vec<Vec<Element>>> {
        let mut used = 0usize;
        self.spheres_within(n, &mut used)
    }

    fn spheres_within(&self, n: u64, used: &mut usize) -> Result<Vec<Vec<Element>>> {
        let budget = self.budget;
        let charge = |k: usize, used: &mut usize| -> Result<()> {
            *used += k;
            if *used > budget {
                Err(Error::Budget { budget, reached: *used })
            } else {
                Ok(())
            }
        };
        let n = n as usize;
        let mut layers: Vec<Vec<Element>> = Vec::with_capacity(n + 1);
        match &self.family {
            Family::Free { rank } => {
                let r = *rank as i8;
                let letters: Vec<i8> = (-r..=r).filter(|&l| l != 0).collect();
                let mut words = vec![Word::identity()];
                charge(1, used)?;
                layers.push(vec![Element::Free(Word::identity())]);
                for _ in 1..=n {
                    let mut next = Vec::new();
                    for w in &words {
                        let last = w.letters().last().copied();
                        for &l in &letters {
                            if last == Some(-l) {
                                continue;
                            }
                            let mut v = w.clone();
                            v.push(l);
                            next.push(v);
                        }
                        charge(letters.len(), used)?;
                    }
                    layers.push(next.iter().cloned().map(Element::Free).collect());
                    words = next;
                }
            }
            Family::Finite(t) => {
                layers.resize(n + 1, Vec::new());
                for g in 0..t.order() as u32 {
                    let l = t.length(g) as usize;
                    if l <= n {
                        charge(1, used)?;
                        layers[l].push(Element::Finite(g));
                    }
                }
            }
            Family::Product(l, r) => {
                let left = l.spheres_within(n as u64, used)?;
                let right = r.spheres_within(n as u64, used)?;
                for total in 0..=n {
                    let mut layer = Vec::new();
                    for k in 0..=total {
                        let (a, b) = (&left[k], &right[total - k]);
                        charge(a.len() * b.len(), used)?;
                        for x in a {
                            for y in b {
                                layer.push(Element::pair(x.clone(), y.clone()));
                            }
                        }
                    }
                    layer.sort();
                    layers.push(layer);
                }
            }
            Family::Scaled { base, factor } => {
                // ⌈αk⌉ ≤ n  ⇔  k ≤ ⌊n/α⌋
                let kmax = (n as u64 * factor.denom()) / factor.numer();
                let base_layers = base.spheres_within(kmax, used)?;
                layers.resize(n + 1, Vec::new());
                for (k, layer) in base_layers.into_iter().enumerate() {
                    let j = ceil_mul(*factor, k as u64) as usize;
                    layers[j].extend(layer);
                }
                for layer in &mut layers {
                    layer.sort();
                }
            }
        }
        Ok(layers)
    }

    /// Checks the quasi-metric axioms on `trials` triples drawn uniformly from
    /// `B(radius)`: symmetry, identity of indiscernibles, left-invariance and
    /// the quasi-triangle inequality with the declared `C_q`.
    pub fn validate_metric_axioms(&self, trials: usize, radius: u64, seed: u64) -> Result<MetricReport> {
        if trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        let ball: Vec<Element> = self.spheres(radius)?.into_iter().flatten().collect();
        let mut rng = CounterRng::new(seed, 0);
        let mut violations = Vec::new();
        let cq = self.quasi_constant;
        for _ in 0..trials {
            let g = &ball[rng.gen_range(0..ball.len())];
            let h = &ball[rng.gen_range(0..ball.len())];
            let f = &ball[rng.gen_range(0..ball.len())];
            let triple = || vec![g.to_string(), h.to_string(), f.to_string()];
            let (dgh, dhg) = (self.dist(g, h), self.dist(h, g));
            if dgh != dhg {
                violations.push(Violation { axiom: Axiom::Symmetry, elements: triple(), detail: format!("d(g,h)={dgh}, d(h,g)={dhg}") });
            }
            if (dgh == 0) != (g == h) {
                violations.push(Violation { axiom: Axiom::Identity, elements: triple(), detail: format!("d(g,h)={dgh}") });
            }
            let (lhs, rhs) = (self.dist(&self.mul(g, h), &self.mul(g, f)), self.dist(h, f));
            if lhs != rhs {
                violations.push(Violation {
                    axiom: Axiom::LeftInvariance,
                    elements: triple(),
                    detail: format!("d(gh,gf)={lhs}, d(h,f)={rhs}"),
                });
            }
            let (dgf, dhf) = (self.dist(g, f), self.dist(h, f));
            if dgf > dgh + dhf + cq {
                violations.push(Violation {
                    axiom: Axiom::QuasiTriangle,
                    elements: triple(),
                    detail: format!("d(g,f)={dgf} > d(g,h)+d(h,f)+C_q={}", dgh + dhf + cq),
                });
            }
        }
        Ok(MetricReport { trials, radius, seed, quasi_constant: cq, violations })
    }
}

fn ceil_mul(factor: Ratio<u64>, k: u64) -> u64 {
    (factor.numer() * k).div_ceil(*factor.denom())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Symmetry,
    Identity,
    LeftInvariance,
    QuasiTriangle,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub elements: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MetricReport {
    pub trials: usize,
    pub radius: u64,
    pub seed: u64,
    pub quasi_constant: u64,
    pub violations: Vec<Violation>,
}

impl fmt::Display for MetricGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Free { rank } => write!(f, "free({rank})"),
            Family::Finite(t) => write!(f, "{}", t.label),
            Family::Product(l, r) => write!(f, "product({l}, {r})"),
            Family::Scaled { base, factor } => write!(f, "scaled({base}, {factor})"),
        }
    }
}
