//! Horofunctions restricted to finite windows, the `Expand` shift, the
//! atomic measures `μ_n` and a census of boundary restrictions.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::balls::{growth_step_bound, sphere_counts};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::scalar::ratio_of;

/// Where a window horofunction came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `d_x − level`.
    Distance { base: Element, level: i64 },
    Abstract,
}

/// A horofunction restricted to the window `B(R)`.
///
/// Values are dense, indexed by the canonical order of `B(R)` (by length,
/// then lexicographic).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowHorofunction {
    radius: u64,
    window: Arc<Vec<Element>>,
    values: Vec<i64>,
    provenance: Provenance,
}

impl WindowHorofunction {
    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn window(&self) -> &[Element] {
        &self.window
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Value at `g`, if `g` lies in the window.
    pub fn value(&self, g: &Element) -> Option<i64> {
        self.window.iter().position(|w| w == g).map(|i| self.values[i])
    }

    /// Value at the identity (always the first window element).
    pub fn at_identity(&self) -> i64 {
        self.values[0]
    }

    /// Wraps arbitrary values on a window; used for abstract horofunctions.
    pub fn from_values(group: &MetricGroup, radius: u64, values: Vec<i64>) -> Result<Self> {
        let window: Vec<Element> = group.spheres(radius)?.into_iter().flatten().collect();
        if window.len() != values.len() {
            return Err(Error::Invalid(format!("{} values for a window of {}", values.len(), window.len())));
        }
        Ok(WindowHorofunction { radius, window: Arc::new(window), values, provenance: Provenance::Abstract })
    }

    /// All window pairs violating `|v(g) − v(f)| ≤ d(g,f)`.
    pub fn lipschitz_violations(&self, group: &MetricGroup) -> Vec<(Element, Element)> {
        let mut out = Vec::new();
        for (i, g) in self.window.iter().enumerate() {
            for (j, f) in self.window.iter().enumerate().skip(i + 1) {
                if (self.values[i] - self.values[j]).unsigned_abs() > group.dist(g, f) {
                    out.push((g.clone(), f.clone()));
                }
            }
        }
        out
    }

    pub fn is_lipschitz(&self, group: &MetricGroup) -> bool {
        self.lipschitz_violations(group).is_empty()
    }
}

/// `g ↦ d(x,g) − n` on `B(R)`.
pub fn horofunction_window(group: &MetricGroup, x: &Element, n: i64, radius: u64) -> Result<WindowHorofunction> {
    group.length(x)?;
    let window: Vec<Element> = group.spheres(radius)?.into_iter().flatten().collect();
    let values = window.iter().map(|g| group.dist(x, g) as i64 - n).collect();
    Ok(WindowHorofunction {
        radius,
        window: Arc::new(window),
        values,
        provenance: Provenance::Distance { base: x.clone(), level: n },
    })
}

/// `Expand^k`: every value drops by `k`, the level rises by `k`.
pub fn expand(h: &WindowHorofunction, k: i64) -> WindowHorofunction {
    let provenance = match &h.provenance {
        Provenance::Distance { base, level } => Provenance::Distance { base: base.clone(), level: level + k },
        Provenance::Abstract => Provenance::Abstract,
    };
    WindowHorofunction {
        radius: h.radius,
        window: Arc::clone(&h.window),
        values: h.values.iter().map(|v| v - k).collect(),
        provenance,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MuMass {
    pub n: u64,
    pub t: i64,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub mass: BigRational,
    /// `|B(3ε)|^t` for `t ≥ 0`.
    pub bound: Option<String>,
    pub within_bound: bool,
}

/// `μ_n(H_{≤t}) = |B(n+t)|/|B(n)|` (zero when `n+t < 0`).
pub fn mu_mass(group: &MetricGroup, n: u64, t: i64) -> Result<MuMass> {
    let top = n as i64 + t;
    let mass = if top < 0 {
        BigRational::zero()
    } else {
        let counts = sphere_counts(group, (top as u64).max(n))?;
        let b = |k: usize| counts[..=k].iter().sum::<u64>();
        ratio_of(b(top as usize), b(n as usize))
    };
    let (bound, within_bound) = if t >= 0 {
        let bound = growth_step_bound(group, t as u64)?;
        let ok = mass <= BigRational::from_integer(bound.clone());
        (Some(bound.to_string()), ok)
    } else {
        (None, true)
    };
    Ok(MuMass { n, t, mass, bound, within_bound })
}

/// The window values of `μ_n` itself: one atom `d_x − n` of weight
/// `1/|B(n)|` for each `x` with `d(x, e) ≤ n + t`, i.e. the atoms in `H_{≤t}`.
pub fn mu_atoms_below(group: &MetricGroup, n: u64, t: i64, radius: u64) -> Result<Vec<WindowHorofunction>> {
    let top = n as i64 + t;
    if top < 0 {
        return Ok(Vec::new());
    }
    group
        .spheres(top as u64)?
        .into_iter()
        .flatten()
        .map(|x| horofunction_window(group, &x, n as i64, radius))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusPattern {
    pub values: Vec<i64>,
    pub count: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryCensus {
    pub n: u64,
    pub radius: u64,
    pub window: Vec<String>,
    pub patterns: Vec<CensusPattern>,
}

/// Distinct restrictions of `d_x − |x|` to `B(R)` over `|x| = n`.
pub fn boundary_census(group: &MetricGroup, n: u64, radius: u64) -> Result<BoundaryCensus> {
    if radius > n {
        return Err(Error::Invalid(format!("window radius {radius} exceeds level {n}")));
    }
    let layers = group.spheres(n)?;
    let window: Vec<Element> = layers[..=radius as usize].concat();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    for x in &layers[n as usize] {
        let v: Vec<i64> = window.iter().map(|g| group.dist(x, g) as i64 - n as i64).collect();
        *counts.entry(v).or_default() += 1;
    }
    Ok(BoundaryCensus {
        n,
        radius,
        window: window.iter().map(ToString::to_string).collect(),
        patterns: counts.into_iter().map(|(values, count)| CensusPattern { values, count }).collect(),
    })
}

/// Finds `y` with `h(y) ∈ [−2ε, 0]`, searching `SS(h(e)+ε, ε)` first and then
/// the rest of `B(h(e)+2ε)`.
pub fn section_witness(group: &MetricGroup, h: &WindowHorofunction, eps: u64) -> Result<Element> {
    let Provenance::Distance { base, level } = h.provenance() else {
        return Err(Error::Invalid("section witness needs a horofunction of the form d_x − n".into()));
    };
    let height = group.len(base) as i64 - level;
    if height <= 0 {
        return Err(Error::Invalid(format!("h(e) = {height} is not positive")));
    }
    let reach = height as u64 + 2 * eps;
    if h.radius() < reach {
        return Err(Error::Invalid(format!("window radius {} is below h(e)+2ε = {reach}", h.radius())));
    }
    let eval = |y: &Element| group.dist(base, y) as i64 - level;
    let ok = |v: i64| -(2 * eps as i64) <= v && v <= 0;
    let layers = group.spheres(reach)?;
    // SS(h(e)+ε, ε) spans lengths h(e) ..= h(e)+2ε
    let lo = height as u64;
    let mut shell: Vec<&Element> = layers[lo as usize..=reach as usize].iter().flatten().collect();
    shell.sort();
    if let Some(y) = shell.into_iter().find(|y| ok(eval(y))) {
        return Ok(y.clone());
    }
    let mut rest: Vec<&Element> = layers[..lo as usize].iter().flatten().collect();
    rest.sort();
    rest.into_iter().find(|y| ok(eval(y))).cloned().ok_or(Error::NoWitness { height })
}

/// Exact `|B(n+t+s)|/|B(n)|`, used to state telescoping.
pub fn mass_product(group: &MetricGroup, n: u64, t: i64, s: i64) -> Result<BigRational> {
    let a = mu_mass(group, n, t)?.mass;
    let mid = n as i64 + t;
    if mid < 0 {
        return Ok(BigRational::zero());
    }
    Ok(a * mu_mass(group, mid as u64, s)?.mass)
}
