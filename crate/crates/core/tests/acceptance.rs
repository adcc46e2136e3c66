//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::process::Command;
use std::time::Instant;

use horocost::balls::{balanced_ratio_by_index, check_subadditivity, sphere_counts};
use horocost::correlations::{correlation_table, pushforward_window, wc_distance, AtomicAction, FiniteSupportObservable};
use horocost::cost::{
    cost_bound_estimate, finite_cost, graphing_cost, normalized_cost, symmetric_edges, FiniteRelation,
    GeneratingWeights, WeightedFiniteSpace,
};
use horocost::horospace::{boundary_census, horofunction_window, mass_product, mu_mass, section_witness};
use horocost::onp::{counted_pairs, onp_sweep, witness_path, OnpMode};
use horocost::poisson::{poisson_fixed_prob, poisson_sample};
use horocost::rng::CounterRng;
use horocost::{Element, MetricGroup, Rational};
use num_bigint::BigInt;
use num_traits::Zero;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(n: u64, d: u64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn f(k: u8) -> MetricGroup {
    MetricGroup::free(k).unwrap()
}

fn f2xf2() -> MetricGroup {
    MetricGroup::product(f(2), f(2))
}

/// Closed-form sphere sizes of the rank-2 free group.
fn f2_sphere(k: u64) -> u64 {
    if k == 0 {
        1
    } else {
        4 * 3u64.pow(k as u32 - 1)
    }
}

fn f2_ball(n: u64) -> u64 {
    2 * 3u64.pow(n as u32) - 1
}

fn product_ball(n: u64) -> u64 {
    (0..=n).flat_map(|i| (0..=n - i).map(move |j| f2_sphere(i) * f2_sphere(j))).sum()
}

fn random_word(rng: &mut CounterRng, rank: i8, len: usize) -> Element {
    let mut letters: Vec<i8> = Vec::with_capacity(len);
    while letters.len() < len {
        let k = (rng.uniform() * rank as f64) as i8 + 1;
        let l = if rng.uniform() < 0.5 { k } else { -k };
        if letters.last() != Some(&-l) {
            letters.push(l);
        }
    }
    Element::word(letters)
}

fn ball_size(g: &MetricGroup, n: u64) -> u64 {
    sphere_counts(g, n).unwrap().iter().sum()
}

fn c1_growth() -> Outcome {
    let g = f(2);
    for n in 0..=10 {
        let b = ball_size(&g, n);
        ensure(b == f2_ball(n), || format!("|B(F2,{n})| = {b}, closed form {}", f2_ball(n)))?;
    }
    let p = f2xf2();
    let counts = sphere_counts(&p, 8).map_err(|e| e.to_string())?;
    for n in 0..=8u64 {
        let b: u64 = counts[..=n as usize].iter().sum();
        ensure(b == product_ball(n), || format!("|B(F2xF2,{n})| = {b}, convolution {}", product_ball(n)))?;
    }
    Ok(format!("|B(F2xF2,8)| = {}", product_ball(8)))
}

fn c2_subadditivity() -> Outcome {
    let mut checked = 0;
    for (name, g, eps) in [("F2", f(2), 1), ("F3", f(3), 1), ("F2xF2", f2xf2(), 1), ("F2", f(2), 0)] {
        for n in eps..=6 {
            for m in eps..=6 - n {
                if n + m > 6 || (n == 0 && m == 0) {
                    continue;
                }
                let r = check_subadditivity(&g, n, m, eps).map_err(|e| e.to_string())?;
                ensure(r.passed(), || format!("{name} n={n} m={m} eps={eps}: uncovered {:?}", r.uncovered))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (n, m, eps) cases"))
}

fn c3_balanced() -> Outcome {
    let p = f2xf2();
    let mut prev: Option<Rational> = None;
    for n in 1..=6u64 {
        let r = balanced_ratio_by_index(&p, 1, n).map_err(|e| e.to_string())?;
        let oracle = q(f2_ball(n), product_ball(n));
        ensure(r == oracle, || format!("n={n}: {r} vs oracle {oracle}"))?;
        if let Some(p) = &prev {
            ensure(&r < p, || format!("not strictly decreasing at n={n}"))?;
        }
        prev = Some(r);
    }
    for (n, num, den) in [(1, 5, 9), (2, 17, 49), (3, 53, 217), (6, 1457, 11665)] {
        ensure(balanced_ratio_by_index(&p, 1, n).unwrap() == q(num, den), || format!("ratio({n}) != {num}/{den}"))?;
    }
    ensure(q(1457, 11665) < q(13, 100), || "ratio(6) >= 0.13".into())?;
    Ok("5/9, 17/49, 53/217, ..., 1457/11665".into())
}

fn c4_onp() -> Outcome {
    for g in [f(2), f2xf2()] {
        for c in [0, 1, 2, 3] {
            let rows = onp_sweep(&g, &[1, 2], &[0, 1, 3, 6], c, 1, OnpMode::Exact).map_err(|e| e.to_string())?;
            ensure(rows.iter().all(|r| r.ratio_num == 0), || format!("m=1 nonzero on {g}, C={c}"))?;
        }
    }
    let p = f2xf2();
    let rs: Vec<u64> = (0..=10).collect();
    let mut by_m = Vec::new();
    for m in 1..=6u64 {
        let rows = onp_sweep(&p, &[2], &rs, 2, m, OnpMode::Exact).map_err(|e| e.to_string())?;
        ensure(rows.iter().all(|r| r.ratio_den == 2401), || "expected 2401 pairs".into())?;
        ensure(rows.windows(2).all(|w| w[0].ratio_num >= w[1].ratio_num), || format!("not antitone in r at m={m}"))?;
        by_m.push(rows.iter().map(|r| r.ratio_num).collect::<Vec<_>>());
    }
    for w in by_m.windows(2) {
        ensure(w[0].iter().zip(&w[1]).all(|(a, b)| a <= b), || "not monotone in m".into())?;
    }
    let (m, eps) = (3u64, p.slack());
    let (g1, g2) = p.factors().unwrap();
    let mut counted = 0;
    for r in [2 * m + 2, 2 * m + 4] {
        for (x, y) in counted_pairs(&p, 2, r, 2, m).map_err(|e| e.to_string())? {
            let (x1, _) = x.components().unwrap();
            let (_, y2) = y.components().unwrap();
            let short = g1.length(x1).unwrap().min(g2.length(y2).unwrap());
            ensure(short < m + eps, || format!("counted pair ({x}, {y}) has min length {short}"))?;
            counted += 1;
        }
    }
    let note = if counted == 0 { " (no pair is counted, so the condition holds vacuously)" } else { "" };
    Ok(format!("2401-pair sweep monotone; {counted} counted pairs at m=3, r>=8{note}"))
}

fn c5_witness() -> Outcome {
    let p = f2xf2();
    let mut rng = CounterRng::new(2024, 5);
    let mut checked = 0;
    for eps in [0u64, 1] {
        for _ in 0..1000 {
            let mut comp = || {
                let len = (rng.uniform() * 7.0) as usize;
                random_word(&mut rng, 2, len)
            };
            let x = Element::pair(comp(), comp());
            let y = Element::pair(comp(), comp());
            let w = witness_path(&p, &x, &y, eps).map_err(|e| format!("({x}, {y}), eps={eps}: {e}"))?;
            if let Some(b) = w.bounds.iter().find(|b| !b.holds()) {
                return Err(format!("({x}, {y}), eps={eps}: violated at {b:?}"));
            }
            checked += w.bounds.len();
        }
    }
    Ok(format!("2000 pairs, {checked} path points, 0 violations"))
}

fn c6_mu() -> Outcome {
    let g = f(2);
    for n in 0..=8u64 {
        for t in -3i64..=3 {
            let mm = mu_mass(&g, n, t).map_err(|e| e.to_string())?;
            let top = n as i64 + t;
            let oracle = if top < 0 { Rational::zero() } else { q(f2_ball(top as u64), f2_ball(n)) };
            ensure(mm.mass == oracle, || format!("mu_{n}(t={t}) = {} vs {oracle}", mm.mass))?;
            if t >= 0 {
                let bound = Rational::from_integer(BigInt::from(53u64).pow(t as u32));
                ensure(mm.within_bound && mm.mass <= bound, || format!("bound fails at n={n}, t={t}"))?;
            }
            for s in -3i64..=3 {
                if top < 0 || top + s < 0 || top + s > 11 {
                    continue;
                }
                let lhs = mass_product(&g, n, t, s).map_err(|e| e.to_string())?;
                let rhs = mu_mass(&g, n, t + s).unwrap().mass;
                ensure(lhs == rhs, || format!("telescoping fails at n={n}, t={t}, s={s}"))?;
            }
        }
    }
    ensure(mu_mass(&g, 2, 1).unwrap().mass == q(53, 17), || "mu_2(H<=1) != 53/17".into())?;
    Ok("mu_2(H<=1) = 53/17".into())
}

fn c7_horofunctions() -> Outcome {
    let g = f(2);
    let mut windows = 0;
    for n in 1..=5u64 {
        for x in &g.spheres(n).unwrap()[n as usize] {
            for (level, radius) in [(n as i64, 2), (n as i64 - 1, 3)] {
                let h = horofunction_window(&g, x, level, radius).map_err(|e| e.to_string())?;
                ensure(h.is_lipschitz(&g), || format!("window at {x} is not 1-Lipschitz"))?;
                windows += 1;
            }
        }
    }
    for n in 2..=8 {
        let c = boundary_census(&g, n, 1).map_err(|e| e.to_string())?;
        ensure(c.patterns.len() == 4, || format!("census(n={n}, R=1) = {}", c.patterns.len()))?;
    }
    for n in 4..=8 {
        let c = boundary_census(&g, n, 2).map_err(|e| e.to_string())?;
        ensure(c.patterns.len() == 12, || format!("census(n={n}, R=2) = {}", c.patterns.len()))?;
    }
    let mut rng = CounterRng::new(7, 7);
    for _ in 0..500 {
        let len = 1 + (rng.uniform() * 8.0) as usize;
        let x = random_word(&mut rng, 2, len);
        let height = 1 + (rng.uniform() * len as f64) as i64;
        let height = height.min(len as i64);
        let level = len as i64 - height;
        let eps = (rng.uniform() * 3.0) as u64;
        let h = horofunction_window(&g, &x, level, height as u64 + 2 * eps).map_err(|e| e.to_string())?;
        let y = section_witness(&g, &h, eps).map_err(|e| format!("x={x}, level={level}: {e}"))?;
        let hy = g.distance(&x, &y).unwrap() as i64 - level;
        ensure(-(2 * eps as i64) <= hy && hy <= 0, || format!("h(y) = {hy} outside [-2eps, 0] for x={x}"))?;
    }
    Ok(format!("{windows} windows Lipschitz; census 4 and 12; 500 section witnesses"))
}

/// All set partitions of `0..n`.
fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::<Vec<usize>>::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for p in out {
            for k in 0..p.len() {
                let mut q = p.clone();
                q[k].push(i);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// Minimum of `½Σ w·deg` over edge subsets inside the classes whose
/// components are exactly the classes.
fn brute_cost(space: &WeightedFiniteSpace<Rational>, classes: &[Vec<usize>]) -> Rational {
    let n = space.len();
    let class_of: Vec<usize> = (0..n).map(|i| classes.iter().position(|c| c.contains(&i)).unwrap()).collect();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| class_of[i] == class_of[j]).collect();
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
        let mut comp: Vec<usize> = (0..n).collect();
        for _ in 0..n {
            for &(i, j) in &edges {
                let m = comp[i].min(comp[j]);
                comp[i] = m;
                comp[j] = m;
            }
        }
        let spans = (0..n).all(|i| (0..n).all(|j| (class_of[i] == class_of[j]) == (comp[i] == comp[j])));
        if spans {
            let c = graphing_cost(space, &edges);
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
    }
    best.expect("the complete graph on each class spans it")
}

fn c8_cost() -> Outcome {
    let mut rng = CounterRng::new(8, 8);
    let mut relations = 0;
    for n in 1..=5 {
        for classes in partitions(n) {
            let mut weights = vec![Rational::zero(); n];
            for c in &classes {
                let w = q(1 + (rng.uniform() * 5.0) as u64, 1 + (rng.uniform() * 7.0) as u64);
                for &i in c {
                    weights[i] = w.clone();
                }
            }
            let space = WeightedFiniteSpace::new(weights.into_iter().enumerate().map(|(i, w)| (i.to_string(), w))).unwrap();
            let rel = FiniteRelation::new(&space, classes.clone()).map_err(|e| e.to_string())?;
            let exact = finite_cost(&space, &rel).map_err(|e| e.to_string())?;
            let brute = brute_cost(&space, &classes);
            ensure(exact == brute, || format!("{classes:?}: {exact} vs brute {brute}"))?;
            relations += 1;
        }
    }
    let mut rng = CounterRng::new(88, 0);
    for inst in 0..100 {
        let n_classes = 1 + (rng.uniform() * 5.0) as usize;
        let mut classes = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..n_classes {
            let size = 1 + (rng.uniform() * 8.0) as usize;
            let w = q(1 + (rng.uniform() * 9.0) as u64, 1 + (rng.uniform() * 12.0) as u64);
            classes.push((weights.len()..weights.len() + size).collect::<Vec<_>>());
            weights.extend(std::iter::repeat_n(w, size));
        }
        let space = WeightedFiniteSpace::new(weights.into_iter().enumerate().map(|(i, w)| (i.to_string(), w))).unwrap();
        let rel = FiniteRelation::new(&space, classes.clone()).unwrap();
        let section = |rng: &mut CounterRng| -> Vec<usize> {
            let mut s = Vec::new();
            for c in &classes {
                let keep: Vec<usize> = c.iter().copied().filter(|_| rng.uniform() < 0.5).collect();
                if keep.is_empty() {
                    s.push(c[(rng.uniform() * c.len() as f64) as usize]);
                } else {
                    s.extend(keep);
                }
            }
            s
        };
        let s1 = section(&mut rng);
        let s2 = section(&mut rng);
        let a = normalized_cost(&space, &rel, &s1).map_err(|e| e.to_string())?;
        let b = normalized_cost(&space, &rel, &s2).map_err(|e| e.to_string())?;
        ensure(a.gaboriau_holds && b.gaboriau_holds, || format!("instance {inst}: identity fails"))?;
        let complement = space.total().clone() - a.section_mass.clone();
        ensure(a.full_cost == a.restricted_cost.clone() + complement, || format!("instance {inst}: recomputed identity fails"))?;
        ensure(a.ncost == b.ncost, || format!("instance {inst}: ncost {} vs {}", a.ncost, b.ncost))?;
    }
    Ok(format!("{relations} relations brute-forced; 100 section instances"))
}

fn c9_poisson() -> Outcome {
    let n = 100_000u64;
    let weights = [("u", q(4, 1)), ("v", q(1, 2)), ("w", q(50, 1))];
    let space = WeightedFiniteSpace::new(weights.iter().map(|(a, w)| (a.to_string(), w.clone()))).unwrap();
    let draws: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let c = poisson_sample(&space, s);
            weights.iter().map(|(a, _)| c.count(&a.to_string()) as f64).collect()
        })
        .collect();
    let nf = n as f64;
    let mut means = Vec::new();
    for (k, (name, w)) in weights.iter().enumerate() {
        let mu: f64 = w.numer().to_string().parse::<f64>().unwrap() / w.denom().to_string().parse::<f64>().unwrap();
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / nf;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        ensure((mean - mu).abs() <= 3.0 * (mu / nf).sqrt(), || format!("atom {name}: mean {mean} vs {mu}"))?;
        let var_sd = ((mu + 2.0 * mu * mu) / nf).sqrt();
        ensure((var - mu).abs() <= 3.0 * var_sd, || format!("atom {name}: variance {var} vs {mu}"))?;
        means.push((mean, mu));
    }
    let cov = draws.iter().map(|d| (d[0] - means[0].0) * (d[1] - means[1].0)).sum::<f64>() / (nf - 1.0);
    let cov_sd = (means[0].1 * means[1].1 / nf).sqrt();
    ensure(cov.abs() <= 3.0 * cov_sd, || format!("covariance {cov} outside 3 sigma = {}", 3.0 * cov_sd))?;

    let g = f(2);
    let (e, a, b, ai) = (g.identity(), Element::word([1]), Element::word([2]), Element::word([-1]));
    let instances: Vec<(Vec<(Element, Rational)>, Vec<(Element, Element)>)> = vec![
        (vec![(e.clone(), q(1, 4))], vec![]),
        (
            vec![(e.clone(), q(1, 2)), (a.clone(), q(1, 4)), (b.clone(), q(1, 4))],
            vec![(e.clone(), a.clone()), (e.clone(), b.clone())],
        ),
        (
            vec![(e.clone(), q(1, 1)), (a.clone(), q(1, 1)), (ai.clone(), q(1, 1)), (b.clone(), q(1, 1))],
            vec![(e.clone(), a.clone()), (e.clone(), ai.clone()), (a.clone(), b.clone())],
        ),
    ];
    let p = GeneratingWeights::uniform_on_generators(&g, 0.1).unwrap();
    let mut summary = Vec::new();
    for (k, (atoms, edges)) in instances.into_iter().enumerate() {
        let s = WeightedFiniteSpace::new(atoms).unwrap();
        let edges = symmetric_edges(edges);
        let r = cost_bound_estimate(&g, &s, &edges, &p, 20_000, 900 + k as u64).map_err(|e| e.to_string())?;
        let failed: Vec<String> = r.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
        ensure(failed.is_empty(), || format!("mu(S)={}: {}", r.mass_s, failed.join("; ")))?;
        summary.push(format!("mu(S)={}: W={:.4}", r.mass_s, r.weight_hat.mean));
    }
    Ok(summary.join(", "))
}

fn c10_fixed_prob() -> Outcome {
    // e^{-2m} Σ (m^k/k!)², summed independently of the library.
    let oracle = |m: f64| {
        let mut term = 1.0f64;
        let mut sum = 0.0;
        for k in 0..400 {
            if k > 0 {
                term *= m / k as f64;
            }
            sum += term * term;
        }
        (-2.0 * m).exp() * sum
    };
    let one = poisson_fixed_prob(&1.0).map_err(|e| e.to_string())?;
    ensure((one.value - 0.308508).abs() <= 1e-5, || format!("value(1) = {}", one.value))?;
    ensure((one.value - oracle(1.0)).abs() <= 1e-10, || "series oracle disagrees at 1".into())?;
    ensure(one.value <= (-1f64).exp() && one.within_bound, || "value(1) exceeds 1/e".into())?;
    let v4 = poisson_fixed_prob(&4.0).unwrap().value;
    let v16 = poisson_fixed_prob(&16.0).unwrap().value;
    ensure((v4 - oracle(4.0)).abs() <= 1e-10 && (v16 - oracle(16.0)).abs() <= 1e-10, || "oracle mismatch".into())?;
    ensure(v16 / v4 <= 0.55, || format!("value(16)/value(4) = {}", v16 / v4))?;
    Ok(format!("value(1) = {:.7}, value(16)/value(4) = {:.4}", one.value, v16 / v4))
}

fn random_labels(rng: &mut CounterRng, atoms: &[Element]) -> FiniteSupportObservable {
    let labels: Vec<(Element, String)> = atoms
        .iter()
        .filter_map(|x| {
            let u = rng.uniform();
            (u < 0.7).then(|| (x.clone(), if u < 0.35 { "0".to_string() } else { "1".to_string() }))
        })
        .collect();
    FiniteSupportObservable::new(labels).with_alphabet(["0".to_string(), "1".to_string()])
}

fn c11_correlations() -> Outcome {
    let g = f(2);
    let window: Vec<Element> = g.spheres(1).unwrap().concat();
    let mut rng = CounterRng::new(11, 0);
    let cyclic_action = |n: usize, step: usize| {
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let other: Vec<usize> = (0..n).map(|i| (i + step) % n).collect();
        AtomicAction::finite(vec![q(1, n as u64); n], vec![rot, other]).unwrap()
    };
    let finite_atoms = |n: usize| (0..n as u32).map(Element::Finite).collect::<Vec<_>>();
    let mut measures = Vec::new();
    let mut marginal_checks = 0;
    for k in 0..60 {
        let (action, phi) = if k % 3 == 0 {
            let atoms: Vec<Element> = g.spheres(2).unwrap().concat();
            (AtomicAction::regular(g.clone(), q(1, 1)).unwrap(), random_labels(&mut rng, &atoms))
        } else {
            let n = 3 + (rng.uniform() * 6.0) as usize;
            let step = (rng.uniform() * n as f64) as usize;
            (cyclic_action(n, step), random_labels(&mut rng, &finite_atoms(n)))
        };
        let pm = pushforward_window(&action, &phi, &window).map_err(|e| e.to_string())?;
        let table = correlation_table(&action, &phi, &window).map_err(|e| e.to_string())?;
        for ((a, b, f), v) in table.entries() {
            let finv = action.inverse(f);
            let m = pm.marginal(a, b, &finv).ok_or("window is not symmetric")?;
            ensure(&m == v, || format!("C({a},{b:?},{f}) = {v} vs marginal {m}"))?;
            marginal_checks += 1;
        }
        let self_d = wc_distance(&pm, &pm).map_err(|e| e.to_string())?;
        ensure(self_d.is_zero(), || "self-distance is not zero".into())?;
        measures.push(pm);
    }
    for t in 0..100 {
        let pick = |rng: &mut CounterRng| (rng.uniform() * measures.len() as f64) as usize;
        let (i, j, k) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let dij = wc_distance(&measures[i], &measures[j]).unwrap();
        let djk = wc_distance(&measures[j], &measures[k]).unwrap();
        let dik = wc_distance(&measures[i], &measures[k]).unwrap();
        ensure(dik <= dij.clone() + djk.clone(), || format!("triangle {t}: {dik} > {dij} + {djk}"))?;
    }
    Ok(format!("60 observables, {marginal_checks} marginal identities, 100 triangles"))
}

fn c12_reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_horocost");
    let configs: Vec<Vec<&str>> = vec![
        vec!["growth", "--group", "product(free(2),free(2))", "--nmax", "6", "--format", "csv"],
        vec!["onp-sweep", "--group", "product(free(2),free(2))", "--n-list", "2", "--r-list", "2,4,6", "--m", "3"],
        vec!["onp", "--group", "product(free(2),free(2))", "--n", "3", "--r", "6", "--m", "3", "--samples", "2000", "--seed", "17"],
        vec!["cost-bound", "--group", "free(2)", "--s", "e=1,a=1/2", "--edges", "e-a", "--q", "0.1", "--trials", "3000", "--seed", "5"],
        vec!["poisson-sample", "--weights", "u=3,v=1/2,w=40", "--draws", "50", "--seed", "9", "--format", "csv"],
        vec!["validate", "--group", "product(free(2),free(2))", "--trials", "300", "--seed", "3"],
    ];
    for args in &configs {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "8", "8"] {
            let out = Command::new(bin).args(args).args(["--threads", threads]).output().map_err(|e| e.to_string())?;
            ensure(out.status.success(), || format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)))?;
            outputs.push(out.stdout);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{args:?}: outputs differ"))?;
    }
    Ok(format!("{} configurations x 4 runs byte-identical", configs.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("growth exactness", c1_growth),
        ("sub-additivity", c2_subadditivity),
        ("balanced growth", c3_balanced),
        ("ONP statistic", c4_onp),
        ("witness paths", c5_witness),
        ("mu_n masses", c6_mu),
        ("horofunction structure", c7_horofunctions),
        ("cost exactness", c8_cost),
        ("Poisson statistics", c9_poisson),
        ("fixed-point probability", c10_fixed_prob),
        ("correlations", c11_correlations),
        ("reproducibility", c12_reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
