//! Exact costs of finite measured equivalence relations, Bernoulli
//! percolation on group windows, and the translated graphings `E(x)`,
//! `Ê(Π)` and `E⁰` with their weight and degree accounting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use rayon::prelude::*;
use serde::Serialize;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::poisson::{poisson_sample_with, PointConfiguration};
use crate::rng::CounterRng;
use crate::scalar::Scalar;

/// Finitely many atoms with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFiniteSpace<W, A = String> {
    atoms: Vec<A>,
    weights: Vec<W>,
    total: W,
}

impl<W: Scalar, A: Ord + Clone + Display> WeightedFiniteSpace<W, A> {
    pub fn new<I: IntoIterator<Item = (A, W)>>(atoms: I) -> Result<Self> {
        let (atoms, weights): (Vec<A>, Vec<W>) = atoms.into_iter().unzip();
        let mut seen = BTreeSet::new();
        for (a, w) in atoms.iter().zip(&weights) {
            if !seen.insert(a) {
                return Err(Error::Invalid(format!("duplicate atom {a}")));
            }
            if !w.is_positive() {
                return Err(Error::Invalid(format!("atom {a} has non-positive weight {}", w.render())));
            }
        }
        let total = weights.iter().fold(W::zero(), |acc, w| acc + w.clone());
        Ok(WeightedFiniteSpace { atoms, weights, total })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weight(&self, i: usize) -> &W {
        &self.weights[i]
    }

    pub fn index_of(&self, atom: &A) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    pub fn total(&self) -> &W {
        &self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, &W)> {
        self.atoms.iter().zip(&self.weights)
    }

    /// Mass of a set of atom indices.
    pub fn mass_of(&self, indices: &[usize]) -> W {
        indices.iter().fold(W::zero(), |acc, &i| acc + self.weights[i].clone())
    }
}

/// A partition of atom indices into classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteRelation {
    classes: Vec<Vec<usize>>,
}

impl FiniteRelation {
    /// Builds the relation and checks that it is a partition of
    /// `0..space.len()` with equal weights inside each class.
    pub fn new<W: Scalar, A: Ord + Clone + Display>(
        space: &WeightedFiniteSpace<W, A>,
        classes: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let mut seen = vec![false; space.len()];
        let mut classes: Vec<Vec<usize>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
        for c in &mut classes {
            c.sort_unstable();
            for &i in c.iter() {
                if i >= space.len() || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Invalid(format!("classes are not a partition (atom index {i})")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("atom {} belongs to no class", space.atoms()[i])));
        }
        classes.sort();
        let rel = FiniteRelation { classes };
        rel.check_measure_preserving(space)?;
        Ok(rel)
    }

    /// Orbit relation of a family of bijections of the atom indices.
    pub fn from_action<W: Scalar, A: Ord + Clone + Display>(
        space: &WeightedFiniteSpace<W, A>,
        generators: &[Vec<usize>],
    ) -> Result<Self> {
        let n = space.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for gen in generators {
            let mut image: Vec<usize> = gen.clone();
            image.sort_unstable();
            if gen.len() != n || image != (0..n).collect::<Vec<_>>() {
                return Err(Error::Invalid("generator is not a bijection of the atoms".into()));
            }
            for (i, &j) in gen.iter().enumerate() {
                union(&mut parent, i, j);
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            classes.entry(r).or_default().push(i);
        }
        Self::new(space, classes.into_values().collect())
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn check_measure_preserving<W: Scalar, A: Ord + Clone + Display>(
        &self,
        space: &WeightedFiniteSpace<W, A>,
    ) -> Result<()> {
        for c in &self.classes {
            if c.iter().any(|&i| i >= space.len()) {
                return Err(Error::Invalid("relation refers to atoms outside the space".into()));
            }
            let w = space.weight(c[0]);
            if c.iter().any(|&i| space.weight(i) != w) {
                let names: Vec<String> = c.iter().map(|&i| space.atoms()[i].to_string()).collect();
                return Err(Error::NotMeasurePreserving { class: names.join(",") });
            }
        }
        Ok(())
    }
}

/// Spanning-forest cost `Σ_c w_c·(|c|−1)`.
pub fn finite_cost<W: Scalar, A: Ord + Clone + Display>(
    space: &WeightedFiniteSpace<W, A>,
    rel: &FiniteRelation,
) -> Result<W> {
    rel.check_measure_preserving(space)?;
    Ok(rel.classes.iter().fold(W::zero(), |acc, c| {
        acc + space.weight(c[0]).clone() * W::from_usize(c.len() - 1).expect("class size fits the scalar")
    }))
}

/// `½ Σ_x w(x)·deg(x)` for an undirected graph on atom indices, each edge
/// listed once.
pub fn graphing_cost<W: Scalar, A: Ord + Clone + Display>(
    space: &WeightedFiniteSpace<W, A>,
    edges: &[(usize, usize)],
) -> W {
    let two = W::from_u8(2).expect("2 fits the scalar");
    edges
        .iter()
        .fold(W::zero(), |acc, &(i, j)| acc + space.weight(i).clone() + space.weight(j).clone())
        / two
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizedCost {
    pub full_cost: String,
    pub restricted_cost: String,
    pub section_mass: String,
    pub complement_mass: String,
    pub ncost: String,
    pub gaboriau_holds: bool,
}

/// Exact values behind [`NormalizedCost`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedCostValues<W> {
    pub full_cost: W,
    pub restricted_cost: W,
    pub section_mass: W,
    pub ncost: W,
    pub gaboriau_holds: bool,
}

impl<W: Scalar> NormalizedCostValues<W> {
    pub fn report(&self, total: &W) -> NormalizedCost {
        NormalizedCost {
            full_cost: self.full_cost.render(),
            restricted_cost: self.restricted_cost.render(),
            section_mass: self.section_mass.render(),
            complement_mass: (total.clone() - self.section_mass.clone()).render(),
            ncost: self.ncost.render(),
            gaboriau_holds: self.gaboriau_holds,
        }
    }
}

/// `cost(R|S) + 1 − μ(S)` together with a check of
/// `cost(R) = cost(R|S) + μ(X∖S)`.
pub fn normalized_cost<W: Scalar, A: Ord + Clone + Display>(
    space: &WeightedFiniteSpace<W, A>,
    rel: &FiniteRelation,
    section: &[usize],
) -> Result<NormalizedCostValues<W>> {
    let full_cost = finite_cost(space, rel)?;
    let section: BTreeSet<usize> = section.iter().copied().collect();
    if let Some(&i) = section.iter().find(|&&i| i >= space.len()) {
        return Err(Error::Invalid(format!("section index {i} out of range")));
    }
    let mut restricted_cost = W::zero();
    for c in rel.classes() {
        let hit = c.iter().filter(|i| section.contains(i)).count();
        if hit == 0 {
            let names: Vec<String> = c.iter().map(|&i| space.atoms()[i].to_string()).collect();
            return Err(Error::SectionMissesClass { class: names.join(",") });
        }
        restricted_cost = restricted_cost + space.weight(c[0]).clone() * W::from_usize(hit - 1).expect("fits");
    }
    let section_mass = space.mass_of(&section.iter().copied().collect::<Vec<_>>());
    let complement = space.total().clone() - section_mass.clone();
    let gaboriau_holds = full_cost == restricted_cost.clone() + complement;
    let ncost = restricted_cost.clone() + W::one() - section_mass.clone();
    Ok(NormalizedCostValues { full_cost, restricted_cost, section_mass, ncost, gaboriau_holds })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Ordered pairs, closed under swapping.
pub type EdgeSet = BTreeSet<(Element, Element)>;

fn degree(edges: &EdgeSet, v: &Element) -> usize {
    edges.iter().filter(|(a, _)| a == v).count()
}

fn check_symmetric(edges: &EdgeSet) -> Result<()> {
    for (a, b) in edges {
        if a == b {
            return Err(Error::Invalid(format!("loop at {a}")));
        }
        if !edges.contains(&(b.clone(), a.clone())) {
            return Err(Error::Invalid(format!("edge set is not symmetric: ({a}, {b}) has no reverse")));
        }
    }
    Ok(())
}

/// Symmetrizes a list of undirected edges.
pub fn symmetric_edges<I: IntoIterator<Item = (Element, Element)>>(edges: I) -> EdgeSet {
    edges.into_iter().flat_map(|(a, b)| [(a.clone(), b.clone()), (b, a)]).collect()
}

/// Generating weights `p: Γ → [0,1]` with finite support.
#[derive(Clone, Debug)]
pub struct GeneratingWeights {
    weights: BTreeMap<Element, f64>,
}

impl GeneratingWeights {
    pub fn zero() -> Self {
        GeneratingWeights { weights: BTreeMap::new() }
    }

    /// Checks `p(h) ∈ [0,1]`, `p(e) = 0` and `p(h) = p(h⁻¹)`.
    pub fn new<I: IntoIterator<Item = (Element, f64)>>(group: &MetricGroup, weights: I) -> Result<Self> {
        let weights: BTreeMap<Element, f64> = weights.into_iter().filter(|(_, p)| *p != 0.0).collect();
        for (h, &p) in &weights {
            group.length(h)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("p({h}) = {p} is not a probability")));
            }
            if *h == group.identity() {
                return Err(Error::Invalid("p must vanish at the identity".into()));
            }
            let q = weights.get(&group.inv(h)).copied().unwrap_or(0.0);
            if q != p {
                return Err(Error::Invalid(format!("p is not symmetric: p({h}) = {p}, p({}) = {q}", group.inv(h))));
            }
        }
        Ok(GeneratingWeights { weights })
    }

    /// `p = q` on the generators and their inverses.
    pub fn uniform_on_generators(group: &MetricGroup, q: f64) -> Result<Self> {
        Self::new(group, group.generators().into_iter().map(|g| (g, q)))
    }

    /// `|p| = Σ_h p(h)`.
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn support(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.weights.iter().map(|(h, p)| (h, *p))
    }

    pub fn radius(&self, group: &MetricGroup) -> u64 {
        self.weights.keys().map(|h| group.len(h)).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PercolationGraph {
    pub group: String,
    pub window_radius: u64,
    #[serde(skip)]
    pub window: Vec<Element>,
    #[serde(skip)]
    pub edges: EdgeSet,
    pub p_total: f64,
    pub deg_e: usize,
    pub edge_count: usize,
}

impl PercolationGraph {
    pub fn degree(&self, v: &Element) -> usize {
        degree(&self.edges, v)
    }
}

fn percolation_with(
    group: &MetricGroup,
    p: &GeneratingWeights,
    window_radius: u64,
    rng: &mut CounterRng,
) -> Result<PercolationGraph> {
    if p.radius(group) > window_radius {
        return Err(Error::WindowMismatch(format!(
            "support of p reaches length {} beyond window radius {window_radius}",
            p.radius(group)
        )));
    }
    let window: Vec<Element> = {
        let mut w: Vec<Element> = group.spheres(window_radius)?.into_iter().flatten().collect();
        w.sort();
        w
    };
    let mut candidates: BTreeMap<(Element, Element), f64> = BTreeMap::new();
    for g in &window {
        for (h, q) in p.support() {
            let gh = group.mul(g, h);
            let key = if *g < gh { (g.clone(), gh) } else { (gh, g.clone()) };
            candidates.insert(key, q);
        }
    }
    let mut edges = EdgeSet::new();
    for ((a, b), q) in candidates {
        if rng.uniform() < q {
            edges.insert((a.clone(), b.clone()));
            edges.insert((b, a));
        }
    }
    let deg_e = degree(&edges, &group.identity());
    Ok(PercolationGraph {
        group: group.to_string(),
        window_radius,
        window,
        edge_count: edges.len() / 2,
        edges,
        p_total: p.total(),
        deg_e,
    })
}

/// Samples each unordered edge `{g, gh}` with `g` in the window exactly
/// once, with probability `p(h)`.
pub fn bern_percolation_sample(
    group: &MetricGroup,
    p: &GeneratingWeights,
    window_radius: u64,
    seed: u64,
) -> Result<PercolationGraph> {
    percolation_with(group, p, window_radius, &mut CounterRng::new(seed, 0))
}

/// Validates `G` as a symmetric loop-free pair set over `S`.
fn check_graphing(s_atoms: &BTreeSet<Element>, g_edges: &EdgeSet) -> Result<()> {
    check_symmetric(g_edges)?;
    if let Some((a, b)) = g_edges.iter().find(|(a, b)| !s_atoms.contains(a) || !s_atoms.contains(b)) {
        return Err(Error::Invalid(format!("edge ({a}, {b}) leaves the set S")));
    }
    Ok(())
}

/// The translated graph `E(x) = {(f,g) : (f⁻¹x, g⁻¹x) ∈ G}` together with
/// its vertex set `{g : g⁻¹x ∈ S}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslatedGraph {
    pub support: BTreeSet<Element>,
    pub edges: EdgeSet,
}

impl TranslatedGraph {
    pub fn degree(&self, v: &Element) -> usize {
        degree(&self.edges, v)
    }

    /// `h·E`.
    pub fn translate(&self, group: &MetricGroup, h: &Element) -> TranslatedGraph {
        TranslatedGraph {
            support: self.support.iter().map(|v| group.mul(h, v)).collect(),
            edges: self.edges.iter().map(|(a, b)| (group.mul(h, a), group.mul(h, b))).collect(),
        }
    }
}

#[allow(non_snake_case)]
pub fn build_graphing_E(
    group: &MetricGroup,
    s_atoms: &BTreeSet<Element>,
    g_edges: &EdgeSet,
    x: &Element,
) -> Result<TranslatedGraph> {
    group.length(x)?;
    for s in s_atoms {
        group.length(s)?;
    }
    check_graphing(s_atoms, g_edges)?;
    Ok(translated(group, s_atoms, g_edges, x))
}

fn translated(group: &MetricGroup, s_atoms: &BTreeSet<Element>, g_edges: &EdgeSet, x: &Element) -> TranslatedGraph {
    let back = |s: &Element| group.mul(x, &group.inv(s));
    TranslatedGraph {
        support: s_atoms.iter().map(back).collect(),
        edges: g_edges.iter().map(|(s, t)| (back(s), back(t))).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    /// Vertices of `Ê(Π)`.
    pub support: Vec<String>,
    pub e_in_support: bool,
    pub deg_e_hat: usize,
    /// `Σ_{x∈Π} deg_e(E(x))` over distinct points.
    pub deg_e_sum: usize,
    pub deg_e_percolation: usize,
    pub deg_e_union: usize,
    /// `e` lies in a component of `Ê ∪ Bern` that meets `supp Ê`.
    pub e_in_e0: bool,
    pub deg_e_e0: usize,
    pub components: usize,
    /// Component index per vertex, in sorted vertex order.
    pub membership: Vec<(String, usize)>,
}

impl ComponentReport {
    pub fn subadditive(&self) -> bool {
        self.deg_e_hat <= self.deg_e_sum
    }
}

/// Builds `Ê(Π) ∪ Bern`, labels components with a disjoint-set union and
/// reports the quantities seen from the identity.
pub fn union_component_graph(
    group: &MetricGroup,
    configuration: &PointConfiguration<Element>,
    s_atoms: &BTreeSet<Element>,
    g_edges: &EdgeSet,
    percolation: &PercolationGraph,
) -> Result<ComponentReport> {
    check_graphing(s_atoms, g_edges)?;
    for x in configuration.support() {
        group.length(x)?;
    }
    union_components(group, configuration, s_atoms, g_edges, percolation)
}

fn union_components(
    group: &MetricGroup,
    configuration: &PointConfiguration<Element>,
    s_atoms: &BTreeSet<Element>,
    g_edges: &EdgeSet,
    percolation: &PercolationGraph,
) -> Result<ComponentReport> {
    let e = group.identity();
    let mut support = BTreeSet::new();
    let mut hat = EdgeSet::new();
    let mut deg_e_sum = 0;
    for x in configuration.support() {
        let ex = translated(group, s_atoms, g_edges, x);
        deg_e_sum += ex.degree(&e);
        support.extend(ex.support);
        hat.extend(ex.edges);
    }
    let window: BTreeSet<&Element> = percolation.window.iter().collect();
    if let Some(v) = support.iter().find(|v| !window.contains(v)) {
        return Err(Error::WindowMismatch(format!(
            "vertex {v} of the union graph lies outside the percolation window of radius {}",
            percolation.window_radius
        )));
    }
    let mut union_edges = hat.clone();
    union_edges.extend(percolation.edges.iter().cloned());
    let mut vertices: BTreeSet<Element> = support.clone();
    vertices.extend(percolation.window.iter().cloned());
    vertices.extend(union_edges.iter().map(|(a, _)| a.clone()));
    let vertices: Vec<Element> = vertices.into_iter().collect();
    let index: BTreeMap<&Element, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    for (a, b) in &union_edges {
        union(&mut parent, index[a], index[b]);
    }
    let roots: Vec<usize> = (0..vertices.len()).map(|i| find(&mut parent, i)).collect();
    let mut labels: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in &roots {
        let next = labels.len();
        labels.entry(r).or_insert(next);
    }
    let touching: BTreeSet<usize> = support.iter().map(|v| roots[index[v]]).collect();
    let e_root = index.get(&e).map(|&i| roots[i]);
    let e_in_e0 = e_root.is_some_and(|r| touching.contains(&r));
    let deg_e_union = degree(&union_edges, &e);
    let report = ComponentReport {
        support: support.iter().map(|v| v.to_string()).collect(),
        e_in_support: support.contains(&e),
        deg_e_hat: degree(&hat, &e),
        deg_e_sum,
        deg_e_percolation: percolation.degree(&e),
        deg_e_union,
        e_in_e0,
        deg_e_e0: if e_in_e0 { deg_e_union } else { 0 },
        components: labels.len(),
        membership: vertices.iter().zip(&roots).map(|(v, r)| (v.to_string(), labels[r])).collect(),
    };
    Ok(report)
}

/// `Σ_s (w_s/μ(S))·deg_e(E(s))`: the mean identity degree of `Ê` given a
/// single Poisson point.
pub fn single_point_degree<W: Scalar>(
    group: &MetricGroup,
    s: &WeightedFiniteSpace<W, Element>,
    g_edges: &EdgeSet,
) -> Result<W> {
    let s_atoms: BTreeSet<Element> = s.atoms().iter().cloned().collect();
    check_graphing(&s_atoms, g_edges)?;
    if !s.total().is_positive() {
        return Err(Error::Invalid("S has zero mass".into()));
    }
    let e = group.identity();
    let mut acc = W::zero();
    for (x, w) in s.iter() {
        let deg = translated(group, &s_atoms, g_edges, x).degree(&e);
        acc = acc + w.clone() * W::from_usize(deg).expect("fits");
    }
    Ok(acc / s.total().clone())
}

/// `cost(G) = ½ Σ_s w(s)·deg_G(s)` for a graphing on `S`.
pub fn graphing_cost_on<W: Scalar>(s: &WeightedFiniteSpace<W, Element>, g_edges: &EdgeSet) -> W {
    let two = W::from_u8(2).expect("2 fits the scalar");
    s.iter()
        .fold(W::zero(), |acc, (x, w)| acc + w.clone() * W::from_usize(degree(g_edges, x)).expect("fits"))
        / two
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn of(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Estimate { mean, std_error: (var / n).sqrt() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphingReport {
    pub trials: usize,
    pub seed: u64,
    pub mass_s: f64,
    /// `P(e ∈ supp Ê(Π))`.
    pub weight_hat: Estimate,
    pub weight_expected: f64,
    /// `P(e ∈ E⁰)`.
    pub weight_e0: Estimate,
    pub deg_e_hat: Estimate,
    pub deg_e_percolation: Estimate,
    pub deg_e_e0: Estimate,
    /// Trials with exactly one point and the mean identity degree among them.
    pub single_point_trials: usize,
    pub single_point_deg: Option<f64>,
    pub single_point_exact: f64,
    pub exp_neg_mass: f64,
    pub p_total: f64,
    pub cost_g: String,
    pub bound: f64,
    pub subadditivity_violations: usize,
    pub checks: Vec<Check>,
}

impl GraphingReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Trial {
    e_in_hat: bool,
    e_in_e0: bool,
    deg_hat: usize,
    deg_bern: usize,
    deg_e0: usize,
    points: u64,
    subadditive: bool,
}

/// Monte Carlo over Poisson configurations on `S` and percolation samples.
/// Trial `i` draws from stream `i` of `seed`, so the report does not depend
/// on the thread count.
pub fn cost_bound_estimate<W: Scalar>(
    group: &MetricGroup,
    s: &WeightedFiniteSpace<W, Element>,
    g_edges: &EdgeSet,
    p: &GeneratingWeights,
    trials: usize,
    seed: u64,
) -> Result<GraphingReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    if !s.total().is_positive() {
        return Err(Error::Invalid("S has zero mass".into()));
    }
    let s_atoms: BTreeSet<Element> = s.atoms().iter().cloned().collect();
    for x in &s_atoms {
        group.length(x)?;
    }
    check_graphing(&s_atoms, g_edges)?;
    let reach = s_atoms.iter().map(|x| group.len(x)).max().unwrap_or(0);
    let radius = (2 * reach).max(p.radius(group));
    let mass = s.total().to_f64().unwrap_or(f64::NAN);
    let cost_g = graphing_cost_on(s, g_edges);
    let cost_f = cost_g.to_f64().unwrap_or(f64::NAN);
    let exact_single = single_point_degree(group, s, g_edges)?.to_f64().unwrap_or(f64::NAN);

    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Trial> {
            let mut rng = CounterRng::new(seed, i as u64);
            let config = poisson_sample_with(s, &mut rng);
            let perc = percolation_with(group, p, radius, &mut rng)?;
            let r = union_components(group, &config, &s_atoms, g_edges, &perc)?;
            Ok(Trial {
                e_in_hat: r.e_in_support,
                e_in_e0: r.e_in_e0,
                deg_hat: r.deg_e_hat,
                deg_bern: r.deg_e_percolation,
                deg_e0: r.deg_e_e0,
                points: config.total(),
                subadditive: r.subadditive(),
            })
        })
        .collect::<Result<_>>()?;

    let col = |f: &dyn Fn(&Trial) -> f64| results.iter().map(f).collect::<Vec<f64>>();
    let weight_hat = Estimate::of(&col(&|t| t.e_in_hat as u8 as f64));
    let weight_e0 = Estimate::of(&col(&|t| t.e_in_e0 as u8 as f64));
    let deg_e_hat = Estimate::of(&col(&|t| t.deg_hat as f64));
    let deg_e_percolation = Estimate::of(&col(&|t| t.deg_bern as f64));
    let deg_e_e0 = Estimate::of(&col(&|t| t.deg_e0 as f64));
    let single: Vec<f64> = results.iter().filter(|t| t.points == 1).map(|t| t.deg_hat as f64).collect();
    let single_point_deg = (!single.is_empty()).then(|| single.iter().sum::<f64>() / single.len() as f64);
    let subadditivity_violations = results.iter().filter(|t| !t.subadditive).count();

    let weight_expected = 1.0 - (-mass).exp();
    let weight_sigma = (weight_expected * (1.0 - weight_expected) / trials as f64).sqrt();
    let p_total = p.total();
    let mut checks = Vec::new();
    let mut check = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail })
    };
    check(
        "weight_hat",
        (weight_hat.mean - weight_expected).abs() <= 3.0 * weight_sigma,
        format!("{:.6} vs 1-exp(-mu(S)) = {:.6}, 3 sigma = {:.6}", weight_hat.mean, weight_expected, 3.0 * weight_sigma),
    );
    check(
        "weight_e0",
        weight_e0.mean >= weight_expected - 3.0 * weight_sigma,
        format!("{:.6} >= {:.6} - {:.6}", weight_e0.mean, weight_expected, 3.0 * weight_sigma),
    );
    check(
        "deg_hat",
        deg_e_hat.mean <= 2.0 * cost_f + 3.0 * deg_e_hat.std_error,
        format!("{:.6} <= 2 cost(G) = {:.6} + {:.6}", deg_e_hat.mean, 2.0 * cost_f, 3.0 * deg_e_hat.std_error),
    );
    check(
        "deg_percolation",
        (deg_e_percolation.mean - p_total).abs() <= 3.0 * deg_e_percolation.std_error,
        format!(
            "{:.6} vs |p| = {:.6}, 3 sigma = {:.6}",
            deg_e_percolation.mean,
            p_total,
            3.0 * deg_e_percolation.std_error
        ),
    );
    check("subadditivity", subadditivity_violations == 0, format!("{subadditivity_violations} violating trials"));

    let exp_neg_mass = (-mass).exp();
    Ok(GraphingReport {
        trials,
        seed,
        mass_s: mass,
        weight_hat,
        weight_expected,
        weight_e0,
        deg_e_hat,
        deg_e_percolation,
        deg_e_e0,
        single_point_trials: single.len(),
        single_point_deg,
        single_point_exact: exact_single,
        exp_neg_mass,
        p_total,
        cost_g: cost_g.render(),
        bound: exp_neg_mass + p_total + cost_f,
        subadditivity_violations,
        checks,
    })
}
