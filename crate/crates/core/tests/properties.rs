use std::collections::BTreeSet;

use horocost::balls::{ball, sphere_counts};
use horocost::correlations::{pushforward_window, wc_distance, AtomicAction, FiniteSupportObservable};
use horocost::cost::{build_graphing_E, finite_cost, normalized_cost, symmetric_edges, FiniteRelation, WeightedFiniteSpace};
use horocost::horospace::horofunction_window;
use horocost::onp::{onp_sweep, OnpMode};
use horocost::poisson::poisson_sample;
use horocost::{Element, MetricGroup, Rational, Word};
use num_bigint::BigInt;
use proptest::prelude::*;

fn letters(rank: i8, max_len: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec((1..=rank, any::<bool>()).prop_map(|(k, s)| if s { k } else { -k }), 0..=max_len)
}

fn word(rank: i8, max_len: usize) -> impl Strategy<Value = Element> {
    letters(rank, max_len).prop_map(Element::word)
}

fn q(n: u64, d: u64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #[test]
    fn words_reduce_and_invert(ls in letters(3, 12)) {
        let w = Word::from_letters(ls);
        prop_assert!(w.is_reduced());
        prop_assert_eq!(w.concat(&w.inverse()), Word::identity());
        prop_assert_eq!(w.inverse().inverse(), w);
    }

    #[test]
    fn free_metric_axioms(x in word(2, 8), y in word(2, 8), z in word(2, 8)) {
        let g = MetricGroup::free(2).unwrap();
        let d = |a: &Element, b: &Element| g.distance(a, b).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&g.multiply(&z, &x).unwrap(), &g.multiply(&z, &y).unwrap()), d(&x, &y));
        prop_assert_eq!(d(&x, &x), 0);
    }

    #[test]
    fn scaled_metric_is_ceiling(x in word(2, 6), y in word(2, 6), num in 1u64..5, den in 1u64..4) {
        let base = MetricGroup::free(2).unwrap();
        let s = MetricGroup::scaled(base.clone(), num_rational::Ratio::new(num, den)).unwrap();
        let d = base.distance(&x, &y).unwrap();
        prop_assert_eq!(s.distance(&x, &y).unwrap(), (num * d).div_ceil(den));
    }

    #[test]
    fn translated_balls_have_equal_size(x in word(2, 5), n in 0u64..4) {
        let g = MetricGroup::free(2).unwrap();
        prop_assert_eq!(ball(&g, &x, n).unwrap().len(), ball(&g, &g.identity(), n).unwrap().len());
    }

    #[test]
    fn horofunction_windows_are_lipschitz(x in word(2, 7), radius in 0u64..3) {
        let g = MetricGroup::free(2).unwrap();
        let n = g.length(&x).unwrap() as i64;
        let h = horofunction_window(&g, &x, n, radius).unwrap();
        prop_assert!(h.is_lipschitz(&g));
        prop_assert_eq!(h.at_identity(), 0);
    }

    #[test]
    fn translated_graph_is_equivariant(h in word(2, 4), x in word(2, 4)) {
        let g = MetricGroup::free(2).unwrap();
        let (e, a, b) = (g.identity(), Element::word([1]), Element::word([2, -1]));
        let atoms: BTreeSet<Element> = [e.clone(), a.clone(), b.clone()].into();
        let edges = symmetric_edges([(e.clone(), a.clone()), (a, b)]);
        let hx = g.multiply(&h, &x).unwrap();
        let left = build_graphing_E(&g, &atoms, &edges, &hx).unwrap();
        let right = build_graphing_E(&g, &atoms, &edges, &x).unwrap().translate(&g, &h);
        prop_assert_eq!(&left, &right);
        let expected: BTreeSet<Element> =
            atoms.iter().map(|s| g.multiply(&x, &g.invert(s).unwrap()).unwrap()).collect();
        prop_assert_eq!(build_graphing_E(&g, &atoms, &edges, &x).unwrap().support, expected);
    }

    #[test]
    fn gaboriau_identity(sizes in prop::collection::vec((1usize..6, 1u64..7, 1u64..9), 1..5), seed in any::<u64>()) {
        let mut weights = Vec::new();
        let mut classes = Vec::new();
        for (size, n, d) in &sizes {
            classes.push((weights.len()..weights.len() + size).collect::<Vec<_>>());
            weights.extend(std::iter::repeat_n(q(*n, *d), *size));
        }
        let space = WeightedFiniteSpace::new(weights.into_iter().enumerate().map(|(i, w)| (i.to_string(), w))).unwrap();
        let rel = FiniteRelation::new(&space, classes.clone()).unwrap();
        let section: Vec<usize> = classes.iter().map(|c| c[(seed as usize) % c.len()]).collect();
        let nc = normalized_cost(&space, &rel, &section).unwrap();
        prop_assert!(nc.gaboriau_holds);
        prop_assert_eq!(nc.full_cost, finite_cost(&space, &rel).unwrap());
    }

    #[test]
    fn poisson_samples_are_seed_functions(seed in any::<u64>()) {
        let space = WeightedFiniteSpace::new([("a".to_string(), q(2, 1)), ("b".to_string(), q(45, 1))]).unwrap();
        prop_assert_eq!(poisson_sample(&space, seed), poisson_sample(&space, seed));
    }

    #[test]
    fn wc_distance_is_a_pseudometric(l1 in prop::collection::vec(0u8..3, 6), l2 in prop::collection::vec(0u8..3, 6)) {
        let rot: Vec<usize> = (0..6).map(|i| (i + 1) % 6).collect();
        let action = AtomicAction::finite(vec![q(1, 6); 6], vec![rot]).unwrap();
        let obs = |ls: &[u8]| {
            FiniteSupportObservable::new(
                ls.iter().enumerate().filter(|(_, &l)| l > 0).map(|(i, l)| (Element::Finite(i as u32), l.to_string())),
            )
            .with_alphabet(["1".to_string(), "2".to_string()])
        };
        let window = vec![Element::word([]), Element::word([1]), Element::word([-1])];
        let p1 = pushforward_window(&action, &obs(&l1), &window).unwrap();
        let p2 = pushforward_window(&action, &obs(&l2), &window).unwrap();
        prop_assert_eq!(wc_distance(&p1, &p2).unwrap(), wc_distance(&p2, &p1).unwrap());
        prop_assert_eq!(wc_distance(&p1, &p1).unwrap(), q(0, 1));
    }
}

#[test]
fn free_ball_sizes_match_closed_form() {
    for k in 1u8..=3 {
        let g = MetricGroup::free(k).unwrap();
        let spheres = sphere_counts(&g, 5).unwrap();
        let r = 2 * k as u64 - 1;
        for (n, s) in spheres.iter().enumerate().skip(1) {
            assert_eq!(*s, 2 * k as u64 * r.pow(n as u32 - 1));
        }
    }
}

#[test]
fn onp_sweep_monotone_on_free_group() {
    let g = MetricGroup::free(2).unwrap();
    let rs = [0, 2, 4, 6];
    let rows: Vec<Vec<u64>> = (1..=4)
        .map(|m| onp_sweep(&g, &[2], &rs, 1, m, OnpMode::Exact).unwrap().iter().map(|r| r.ratio_num).collect())
        .collect();
    for row in &rows {
        assert!(row.windows(2).all(|w| w[0] >= w[1]));
    }
    for pair in rows.windows(2) {
        assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a <= b));
    }
}
