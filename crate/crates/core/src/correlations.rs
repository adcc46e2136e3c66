//! Correlation data of labeled actions.
//!
//! For an action `Γ ↷ (X, μ)` and a finitely supported labeling
//! `φ: X → A ∪ {*}`, this module computes the correlation sums
//! `C(a,b,f) = μ{x : φ(x)=a, φ(fx)=b}`, the pushforward of `μ` under
//! `x ↦ (f ↦ φ(f⁻¹x))` on a finite window `F`, and the pseudo-norm distance
//! between two such pushforwards (patterns with `*` at the identity are
//! ignored).
//!
//! Atoms of both action kinds are [`Element`]s: group elements for the
//! regular action, `Element::Finite(i)` for the `i`-th atom of a finite
//! action.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::element::{Element, Word};
use crate::error::{Error, Result};
use crate::group::MetricGroup;
use crate::scalar::Scalar;

/// A label in `A_* = A ∪ {*}`; `None` is the star.
pub type Label = Option<String>;

#[derive(Clone, Debug)]
pub enum AtomicAction<W> {
    /// Left translation on `Γ` with every atom weighted by `weight`.
    Regular { group: MetricGroup, weight: W },
    /// A free group of rank `generators.len()` acting by permutations of
    /// finitely many weighted atoms.
    Finite { weights: Vec<W>, generators: Vec<Vec<usize>> },
}

impl<W: Scalar> AtomicAction<W> {
    pub fn regular(group: MetricGroup, weight: W) -> Result<Self> {
        if weight <= W::zero() {
            return Err(Error::Invalid("atom weight must be positive".into()));
        }
        Ok(AtomicAction::Regular { group, weight })
    }

    /// Checks that every generator is a weight-preserving bijection.
    pub fn finite(weights: Vec<W>, generators: Vec<Vec<usize>>) -> Result<Self> {
        let n = weights.len();
        if weights.iter().any(|w| *w <= W::zero()) {
            return Err(Error::Invalid("atom weights must be positive".into()));
        }
        for (k, perm) in generators.iter().enumerate() {
            let mut seen = vec![false; n];
            if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::Invalid(format!("generator {k} is not a permutation of the atoms")));
            }
            if perm.iter().enumerate().any(|(i, &j)| weights[i] != weights[j]) {
                return Err(Error::Invalid(format!("generator {k} does not preserve weights")));
            }
        }
        Ok(AtomicAction::Finite { weights, generators })
    }

    pub fn weight(&self, x: &Element) -> W {
        match (self, x) {
            (AtomicAction::Regular { weight, .. }, _) => weight.clone(),
            (AtomicAction::Finite { weights, .. }, Element::Finite(i)) => weights[*i as usize].clone(),
            _ => W::zero(),
        }
    }

    fn check_atom(&self, x: &Element) -> Result<()> {
        let ok = match (self, x) {
            (AtomicAction::Regular { group, .. }, x) => group.contains(x),
            (AtomicAction::Finite { weights, .. }, Element::Finite(i)) => (*i as usize) < weights.len(),
            _ => false,
        };
        ok.then_some(()).ok_or_else(|| Error::Invalid(format!("{x} is not an atom of the action")))
    }

    fn check_group_element(&self, f: &Element) -> Result<()> {
        let ok = match (self, f) {
            (AtomicAction::Regular { group, .. }, f) => group.contains(f),
            (AtomicAction::Finite { generators, .. }, Element::Free(w)) => {
                w.letters().iter().all(|l| (l.unsigned_abs() as usize) <= generators.len())
            }
            _ => false,
        };
        ok.then_some(()).ok_or_else(|| Error::Invalid(format!("{f} does not act on this space")))
    }

    /// `f·x`.
    pub fn act(&self, f: &Element, x: &Element) -> Element {
        match (self, f, x) {
            (AtomicAction::Regular { group, .. }, f, x) => group.mul(f, x),
            (AtomicAction::Finite { generators, .. }, Element::Free(w), Element::Finite(i)) => {
                let mut at = *i as usize;
                for &l in w.letters().iter().rev() {
                    let perm = &generators[l.unsigned_abs() as usize - 1];
                    at = if l > 0 { perm[at] } else { perm.iter().position(|&j| j == at).expect("bijection") };
                }
                Element::Finite(at as u32)
            }
            _ => unreachable!("act on foreign element"),
        }
    }

    pub fn inverse(&self, f: &Element) -> Element {
        match (self, f) {
            (AtomicAction::Regular { group, .. }, f) => group.inv(f),
            (AtomicAction::Finite { .. }, Element::Free(w)) => Element::Free(w.inverse()),
            _ => unreachable!("inverse of foreign element"),
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            AtomicAction::Regular { group, .. } => group.identity(),
            AtomicAction::Finite { .. } => Element::Free(Word::identity()),
        }
    }
}

/// A `(μ, A)`-finite labeling: finitely many atoms carry a label, all
/// others are `*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSupportObservable {
    alphabet: BTreeSet<String>,
    labels: BTreeMap<Element, String>,
}

impl FiniteSupportObservable {
    pub fn new<I: IntoIterator<Item = (Element, String)>>(labels: I) -> Self {
        let labels: BTreeMap<Element, String> = labels.into_iter().collect();
        let alphabet = labels.values().cloned().collect();
        FiniteSupportObservable { alphabet, labels }
    }

    /// Widens the alphabet (labels not used by any atom are allowed).
    pub fn with_alphabet<I: IntoIterator<Item = String>>(mut self, extra: I) -> Self {
        self.alphabet.extend(extra);
        self
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn support(&self) -> impl Iterator<Item = &Element> {
        self.labels.keys()
    }

    pub fn label(&self, x: &Element) -> Label {
        self.labels.get(x).cloned()
    }
}

fn canonical_window<W: Scalar>(action: &AtomicAction<W>, window: &[Element]) -> Result<Vec<Element>> {
    let e = action.identity();
    if !window.contains(&e) {
        return Err(Error::Invalid("window must contain the identity".into()));
    }
    for f in window {
        action.check_group_element(f)?;
    }
    let mut w: Vec<Element> = window.to_vec();
    w.sort();
    w.dedup();
    Ok(w)
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationEntry<W: Scalar> {
    pub a: String,
    pub b: Label,
    pub f: String,
    #[serde(serialize_with = "crate::report::ser_scalar")]
    pub value: W,
}

/// `C(a, b, f)` over `A × A_* × F`, zeros included.
#[derive(Clone, Debug)]
pub struct CorrelationTable<W> {
    window: Vec<Element>,
    entries: BTreeMap<(String, Label, Element), W>,
}

impl<W: Scalar> CorrelationTable<W> {
    pub fn get(&self, a: &str, b: &Label, f: &Element) -> Option<&W> {
        self.entries.get(&(a.to_string(), b.clone(), f.clone()))
    }

    pub fn window(&self) -> &[Element] {
        &self.window
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, Label, Element), &W)> {
        self.entries.iter()
    }

    pub fn rows(&self) -> Vec<CorrelationEntry<W>> {
        self.entries
            .iter()
            .map(|((a, b, f), v)| CorrelationEntry { a: a.clone(), b: b.clone(), f: f.to_string(), value: v.clone() })
            .collect()
    }
}

pub fn correlation_table<W: Scalar>(
    action: &AtomicAction<W>,
    phi: &FiniteSupportObservable,
    window: &[Element],
) -> Result<CorrelationTable<W>> {
    let window = canonical_window(action, window)?;
    let mut entries = BTreeMap::new();
    for a in phi.alphabet() {
        for b in std::iter::once(None).chain(phi.alphabet().iter().cloned().map(Some)) {
            for f in &window {
                entries.insert((a.clone(), b.clone(), f.clone()), W::zero());
            }
        }
    }
    for x in phi.support() {
        action.check_atom(x)?;
        let a = phi.label(x).expect("support atom is labeled");
        let w = action.weight(x);
        for f in &window {
            let b = phi.label(&action.act(f, x));
            let slot = entries.get_mut(&(a.clone(), b, f.clone())).expect("alphabet covers labels");
            *slot = slot.clone() + w.clone();
        }
    }
    Ok(CorrelationTable { window, entries })
}

/// A pattern in `A_*^F`, listed along the canonically ordered window.
pub type Pattern = Vec<Label>;

/// `φ^F_*μ` restricted to patterns with a label at the identity, plus the
/// total mass of patterns that are `*` at the identity but not everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternMeasure<W> {
    window: Vec<Element>,
    alphabet: BTreeSet<String>,
    identity_index: usize,
    masses: BTreeMap<Pattern, W>,
    star_mass: W,
}

impl<W: Scalar> PatternMeasure<W> {
    pub fn window(&self) -> &[Element] {
        &self.window
    }

    pub fn masses(&self) -> &BTreeMap<Pattern, W> {
        &self.masses
    }

    pub fn star_mass(&self) -> &W {
        &self.star_mass
    }

    pub fn mass(&self, pattern: &Pattern) -> W {
        self.masses.get(pattern).cloned().unwrap_or_else(W::zero)
    }

    /// Total mass of patterns with a label at the identity.
    pub fn labeled_mass(&self) -> W {
        self.masses.values().cloned().fold(W::zero(), |a, b| a + b)
    }

    /// `Σ { mass(p) : p(e) = a, p(g) = b }`.
    pub fn marginal(&self, a: &str, b: &Label, g: &Element) -> Option<W> {
        let gi = self.window.iter().position(|w| w == g)?;
        Some(
            self.masses
                .iter()
                .filter(|(p, _)| p[self.identity_index].as_deref() == Some(a) && &p[gi] == b)
                .fold(W::zero(), |acc, (_, m)| acc + m.clone()),
        )
    }
}

pub fn pushforward_window<W: Scalar>(
    action: &AtomicAction<W>,
    phi: &FiniteSupportObservable,
    window: &[Element],
) -> Result<PatternMeasure<W>> {
    let window = canonical_window(action, window)?;
    let e = action.identity();
    let identity_index = window.iter().position(|f| *f == e).expect("checked");
    // φ(f⁻¹x) ≠ * requires x ∈ F·supp(φ).
    let mut atoms = BTreeSet::new();
    for s in phi.support() {
        action.check_atom(s)?;
        for f in &window {
            atoms.insert(action.act(f, s));
        }
    }
    let inverses: Vec<Element> = window.iter().map(|f| action.inverse(f)).collect();
    let mut masses: BTreeMap<Pattern, W> = BTreeMap::new();
    let mut star_mass = W::zero();
    for x in &atoms {
        let pattern: Pattern = inverses.iter().map(|fi| phi.label(&action.act(fi, x))).collect();
        let w = action.weight(x);
        if pattern[identity_index].is_some() {
            let slot = masses.entry(pattern).or_insert_with(W::zero);
            *slot = slot.clone() + w;
        } else if pattern.iter().any(Option::is_some) {
            star_mass = star_mass + w;
        }
    }
    Ok(PatternMeasure { window, alphabet: phi.alphabet().clone(), identity_index, masses, star_mass })
}

/// `‖pm1 − pm2‖_F`: the ℓ¹ difference over patterns labeled at the identity.
pub fn wc_distance<W: Scalar>(pm1: &PatternMeasure<W>, pm2: &PatternMeasure<W>) -> Result<W> {
    if pm1.window != pm2.window {
        return Err(Error::WindowMismatch("pattern measures use different windows".into()));
    }
    if pm1.alphabet != pm2.alphabet {
        return Err(Error::WindowMismatch("pattern measures use different alphabets".into()));
    }
    let keys: BTreeSet<&Pattern> = pm1.masses.keys().chain(pm2.masses.keys()).collect();
    Ok(keys
        .into_iter()
        .map(|p| (pm1.mass(p) - pm2.mass(p)).abs())
        .fold(W::zero(), |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_element, parse_elements};
    use crate::scalar::ratio_of;
    use crate::Rational;
    use num_traits::{One, Zero};

    fn f2() -> MetricGroup {
        MetricGroup::free(2).unwrap()
    }

    fn regular(w: u64) -> AtomicAction<Rational> {
        AtomicAction::regular(f2(), ratio_of(w, 1)).unwrap()
    }

    fn singleton() -> FiniteSupportObservable {
        FiniteSupportObservable::new([(f2().identity(), "a".to_string())])
    }

    #[test]
    fn singleton_table() {
        let g = f2();
        let act = regular(1);
        let t = correlation_table(&act, &singleton(), &[g.identity()]).unwrap();
        assert_eq!(t.get("a", &Some("a".into()), &g.identity()), Some(&Rational::one()));
        let b = parse_element(&g, "b").unwrap();
        let t = correlation_table(&act, &singleton(), &[g.identity(), b.clone()]).unwrap();
        assert_eq!(t.get("a", &None, &b), Some(&Rational::one()));
        assert_eq!(t.get("a", &Some("a".into()), &b), Some(&Rational::zero()));
    }

    #[test]
    fn ball_overlap_table() {
        let g = f2();
        let phi = FiniteSupportObservable::new(
            g.spheres(1).unwrap().into_iter().flatten().map(|x| (x, "a".to_string())),
        );
        let a = parse_element(&g, "a").unwrap();
        let window = parse_elements(&g, "e,a,a^-1").unwrap();
        let t = correlation_table(&regular(1), &phi, &window).unwrap();
        assert_eq!(t.get("a", &Some("a".into()), &a), Some(&ratio_of(2, 1)));
        assert_eq!(t.get("a", &None, &a), Some(&ratio_of(3, 1)));
    }

    #[test]
    fn singleton_patterns() {
        let g = f2();
        let pm = pushforward_window(&regular(1), &singleton(), &[g.identity()]).unwrap();
        assert_eq!(pm.mass(&vec![Some("a".into())]), Rational::one());
        let b = parse_element(&g, "b").unwrap();
        let pm = pushforward_window(&regular(1), &singleton(), &[g.identity(), b]).unwrap();
        // window order is (e, b)
        assert_eq!(pm.mass(&vec![Some("a".into()), None]), Rational::one());
        assert_eq!(pm.star_mass(), &Rational::one());
    }

    #[test]
    fn two_color_mass_is_normalized() {
        let g = f2();
        let b = parse_element(&g, "b").unwrap();
        let phi = FiniteSupportObservable::new([(g.identity(), "a".into()), (b.clone(), "c".into())]);
        let act = AtomicAction::regular(f2(), ratio_of(1, 3)).unwrap();
        let pm = pushforward_window(&act, &phi, &parse_elements(&g, "e,a,b,a^-1,b^-1").unwrap()).unwrap();
        assert_eq!(pm.labeled_mass(), ratio_of(2, 3));
    }

    #[test]
    fn distance_examples() {
        let g = f2();
        let window = [g.identity()];
        let p1 = pushforward_window(&regular(1), &singleton(), &window).unwrap();
        let p2 = pushforward_window(&regular(2), &singleton(), &window).unwrap();
        assert_eq!(wc_distance(&p1, &p1).unwrap(), Rational::zero());
        assert_eq!(wc_distance(&p1, &p2).unwrap(), Rational::one());
        let p3 = pushforward_window(&regular(1), &singleton(), &[g.identity(), parse_element(&g, "a").unwrap()]).unwrap();
        assert!(wc_distance(&p1, &p3).is_err());
    }

    fn rotation(n: usize) -> Vec<usize> {
        (0..n).map(|i| (i + 1) % n).collect()
    }

    #[test]
    fn relabeling_is_invisible() {
        // Z/4 rotation, conjugated by a permutation σ of the atoms.
        let w = vec![ratio_of(1, 4); 4];
        let act = AtomicAction::finite(w.clone(), vec![rotation(4)]).unwrap();
        let sigma = [2usize, 0, 3, 1];
        let rot = rotation(4);
        let mut conj = vec![0; 4];
        for i in 0..4 {
            conj[sigma[i]] = sigma[rot[i]];
        }
        let act2 = AtomicAction::finite(w, vec![conj]).unwrap();
        let phi = FiniteSupportObservable::new([(Element::Finite(0), "x".into()), (Element::Finite(1), "y".into())]);
        let phi2 = FiniteSupportObservable::new([
            (Element::Finite(sigma[0] as u32), "x".into()),
            (Element::Finite(sigma[1] as u32), "y".into()),
        ]);
        let window = vec![Element::word([]), Element::word([1]), Element::word([-1])];
        let p1 = pushforward_window(&act, &phi, &window).unwrap();
        let p2 = pushforward_window(&act2, &phi2, &window).unwrap();
        assert_eq!(wc_distance(&p1, &p2).unwrap(), Rational::zero());
    }

    #[test]
    fn factor_map_pullback() {
        // Z/6 → Z/3 by reduction mod 3, both under +1.
        let x = AtomicAction::finite(vec![ratio_of(1, 6); 6], vec![rotation(6)]).unwrap();
        let y = AtomicAction::finite(vec![ratio_of(1, 3); 3], vec![rotation(3)]).unwrap();
        let psi = FiniteSupportObservable::new([(Element::Finite(0), "p".into()), (Element::Finite(2), "q".into())]);
        let phi = FiniteSupportObservable::new(
            (0..6u32).filter_map(|i| psi.label(&Element::Finite(i % 3)).map(|l| (Element::Finite(i), l))),
        );
        let window = vec![Element::word([]), Element::word([1]), Element::word([-1]), Element::word([1, 1])];
        let px = pushforward_window(&x, &phi, &window).unwrap();
        let py = pushforward_window(&y, &psi, &window).unwrap();
        assert_eq!(wc_distance(&px, &py).unwrap(), Rational::zero());
    }

    #[test]
    fn finite_action_validation() {
        let w = vec![ratio_of(1, 2), ratio_of(1, 4), ratio_of(1, 4)];
        assert!(AtomicAction::finite(w.clone(), vec![vec![0, 2, 1]]).is_ok());
        assert!(AtomicAction::finite(w.clone(), vec![vec![1, 0, 2]]).is_err());
        assert!(AtomicAction::finite(w, vec![vec![0, 0, 1]]).is_err());
    }

    #[test]
    fn float_weights_work_too() {
        let g = f2();
        let act: AtomicAction<f64> = AtomicAction::regular(f2(), 0.5).unwrap();
        let pm = pushforward_window(&act, &singleton(), &[g.identity()]).unwrap();
        assert_eq!(pm.labeled_mass(), 0.5);
    }
}
