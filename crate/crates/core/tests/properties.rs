//! Invariants as property tests. Structured instances come from a seeded
//! generator so that failures replay from the reported seed.

mod common;

use cfi_core::apps::{solve_screening, transfer_revenue, DistributionSpec, Menu, ScreeningObjective, SolveOptions};
use cfi_core::cfi::{detect_structure, falsify_extremality, make_majorization_cfi, verify_extreme};
use cfi_core::lp::cfi_lp;
use cfi_core::measure::{leq_cx, leq_dcx, leq_icx, order_tol};
use cfi_core::solve::{build_partition, concavify_solve, verify_optimality, verify_with_partition, AffineBound};
use cfi_core::{Cfi, Grid, GridFunction, Side};
use common::{atomic, random_affine_cfi, random_atoms, random_cfi, random_measure, rng};
use proptest::prelude::*;
use rand::Rng;

fn grid_fn(values: Vec<f64>) -> GridFunction {
    let g = Grid::unit(values.len() - 1).unwrap();
    GridFunction::new(g, values).unwrap()
}

/// A convex grid function: cumulative sums of sorted slopes.
fn convex_from(mut slopes: Vec<f64>, y0: f64) -> GridFunction {
    slopes.sort_by(f64::total_cmp);
    let h = 1.0 / slopes.len() as f64;
    let mut v = vec![y0];
    for s in &slopes {
        v.push(v[v.len() - 1] + s * h);
    }
    grid_fn(v)
}

fn convex_strategy() -> impl Strategy<Value = GridFunction> {
    (prop::collection::vec(-3.0..3.0f64, 4..40), -1.0..1.0f64).prop_map(|(s, y0)| convex_from(s, y0))
}

/// A random member: the lower boundary raised by lines that stay below the upper one.
fn random_member(r: &mut impl Rng, c: &Cfi) -> GridFunction {
    let g = *c.grid();
    let s = c.slopes();
    let mut u = c.lower().clone();
    for _ in 0..r.gen_range(0..4) {
        let sl = r.gen_range(s.s_lo..=s.s_hi);
        let reach = (0..g.n_nodes()).map(|i| c.upper().value(i) - sl * g.node(i)).fold(f64::INFINITY, f64::min);
        let drop = r.gen_range(0.0..0.2);
        u = u.max_with(&GridFunction::from_fn(g, |x| reach - drop + sl * x)).unwrap();
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vex_is_a_convex_idempotent_minorant(v in prop::collection::vec(-2.0..2.0f64, 3..60)) {
        let f = grid_fn(v);
        let e = f.vex();
        for i in 0..f.len() {
            prop_assert!(e.value(i) <= f.value(i) + 1e-12);
        }
        prop_assert!(e.is_convex(1e-12));
        prop_assert!(e.vex().dist_sup(&e).unwrap() <= 1e-12);
    }

    #[test]
    fn vex_is_monotone(v in prop::collection::vec(-2.0..2.0f64, 3..60), bump in prop::collection::vec(0.0..1.0f64, 60)) {
        let f = grid_fn(v);
        let g = GridFunction::new(*f.grid(), f.values().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let (ef, eg) = (f.vex(), g.vex());
        for i in 0..f.len() {
            prop_assert!(ef.value(i) <= eg.value(i) + 1e-12);
        }
    }

    #[test]
    fn cav_is_reflected_vex(v in prop::collection::vec(-2.0..2.0f64, 3..60)) {
        let f = grid_fn(v);
        prop_assert!(f.cav().dist_sup(&f.scale(-1.0).vex().scale(-1.0)).unwrap() == 0.0);
    }

    #[test]
    fn subgradients_tangents_and_chords(u in convex_strategy(), picks in prop::collection::vec(0.0..1.0f64, 2)) {
        let n = u.grid().last();
        for i in 1..n {
            let (l, r) = u.subgradient_range(i).unwrap();
            prop_assert!(l <= r + 1e-12);
        }
        let y = ((picks[0] * n as f64) as usize).min(n);
        for side in [Side::Left, Side::Right] {
            if let Ok(t) = u.tangent(y, side) {
                for i in 0..=n {
                    prop_assert!(t.value(i) <= u.value(i) + 1e-12);
                }
            }
        }
        let (a, b) = (y.min(n - 1), (((picks[1] * n as f64) as usize).max(y.min(n - 1) + 1)).min(n));
        let ch = u.chord(a, b).unwrap();
        for i in a..=b {
            prop_assert!(ch.value(i) >= u.value(i) - 1e-12);
        }
    }

    #[test]
    fn bregman_perturbation_keeps_both_sides_convex(u in convex_strategy(), picks in prop::collection::vec(0.0..1.0f64, 2)) {
        let n = u.grid().last();
        let a = ((picks[0] * n as f64) as usize).min(n - 1);
        let b = (a + 1 + (picks[1] * (n - a) as f64) as usize).min(n);
        let h = u.bregman_perturbation(a, b).unwrap();
        let tol = 1e-10 * (1.0 + u.sup_norm());
        for i in 0..=n {
            prop_assert!(h.value(i) >= 0.0);
            if i <= a || i >= b {
                prop_assert!(h.value(i) == 0.0);
            }
        }
        prop_assert!(u.add(&h).unwrap().is_convex(tol));
        prop_assert!(u.sub(&h).unwrap().is_convex(tol));
    }

    #[test]
    fn bregman_perturbation_vanishes_exactly_up_to_two_kinks(kinks in prop::collection::btree_set(1usize..29, 0..6), seed in any::<u64>()) {
        // slopes change only at the chosen nodes
        let mut r = rng(seed);
        let mut s = r.gen_range(-1.0..0.0);
        let mut v = vec![0.0];
        for j in 0..30 {
            if kinks.contains(&j) {
                s += r.gen_range(0.2..1.0);
            }
            v.push(v[j] + s / 30.0);
        }
        let u = grid_fn(v);
        let h = u.bregman_perturbation(0, 30).unwrap();
        if kinks.len() <= 2 {
            prop_assert!(h.sup_norm() <= 1e-12, "{}", h.sup_norm());
        } else {
            prop_assert!(h.sup_norm() > 1e-6);
        }
    }

    #[test]
    fn hahn_parts_resum(seed in any::<u64>(), n in 4usize..40) {
        let mut r = rng(seed);
        let m = random_measure(&mut r, Grid::unit(n).unwrap());
        let (p, q) = m.hahn_decompose();
        prop_assert!(p.atoms().iter().chain(p.density()).chain(q.atoms()).chain(q.density()).all(|&v| v >= 0.0));
        let back = p.sub(&q).unwrap();
        prop_assert!(back.atoms() == m.atoms() && back.density() == m.density());
    }

    #[test]
    fn convex_order_implies_the_one_sided_orders(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = Grid::unit(30).unwrap();
        let a = random_atoms(&mut r, g, 6);
        // spread every atom symmetrically where the grid allows
        let mut b = vec![0.0; g.n_nodes()];
        for (i, &w) in a.iter().enumerate() {
            let d = r.gen_range(0..4).min(i).min(g.last() - i);
            b[i - d] += 0.5 * w;
            b[i + d] += 0.5 * w;
        }
        let (m, n) = (atomic(g, a), atomic(g, b));
        prop_assert!(leq_cx(&m, &n).unwrap());
        prop_assert!(leq_icx(&m, &n).unwrap() && leq_dcx(&m, &n).unwrap());
        if leq_cx(&n, &m).unwrap() {
            let d = n.sub(&m).unwrap();
            let tol = order_tol(&m, &n);
            prop_assert!(d.mass().abs() <= tol && d.first_moment().abs() <= tol);
            for t in g.nodes() {
                prop_assert!(d.stop_loss(t).abs() <= tol);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn boundaries_are_extreme_and_structure_is_affine(seed in any::<u64>(), n in 6usize..40) {
        let mut r = rng(seed);
        let c = random_cfi(&mut r, n);
        prop_assert!(verify_extreme(&c, c.lower()).extreme);
        prop_assert!(verify_extreme(&c, c.upper()).extreme);
        let (u, _) = cfi_lp(&c, &random_measure(&mut r, *c.grid())).unwrap();
        if let Ok(s) = detect_structure(&c, &u) {
            for w in s.intervals.windows(2) {
                prop_assert!(w[0].b <= w[1].a);
            }
            for p in &s.intervals {
                for i in p.a + 1..p.b {
                    prop_assert!(u.second_diff(i).abs() <= c.kink_tol());
                }
            }
        }
    }

    #[test]
    fn lp_maximizer_is_a_member_and_beats_members(seed in any::<u64>(), n in 6usize..40) {
        let mut r = rng(seed);
        let c = random_cfi(&mut r, n);
        let mu = random_measure(&mut r, *c.grid());
        let (u, obj) = cfi_lp(&c, &mu).unwrap();
        prop_assert!(c.contains(&u));
        for _ in 0..20 {
            let v = random_member(&mut r, &c);
            prop_assert!(c.contains(&v));
            prop_assert!(mu.integrate(&v).unwrap() <= obj + 1e-9 * (1.0 + obj.abs()));
        }
        // generic weights give a vertex
        prop_assert!(verify_extreme(&c, &u).extreme, "{}", verify_extreme(&c, &u));
    }

    #[test]
    fn midpoints_have_two_sided_witnesses(seed in any::<u64>(), n in 6usize..40) {
        let mut r = rng(seed);
        let c = random_cfi(&mut r, n);
        let (u, _) = cfi_lp(&c, &random_measure(&mut r, *c.grid())).unwrap();
        for other in [c.lower(), c.upper()] {
            if u.dist_sup(other).unwrap() < 1e-3 {
                continue;
            }
            let mid = u.mix(other, 0.5).unwrap();
            prop_assert!(!verify_extreme(&c, &mid).extreme);
            let w = falsify_extremality(&c, &mid).unwrap().expect("witness for a midpoint");
            let step = w.step();
            prop_assert!(step.sup_norm() > 0.0);
            prop_assert!(c.contains(&mid.add(&step).unwrap()) && c.contains(&mid.sub(&step).unwrap()));
        }
        prop_assert!(falsify_extremality(&c, c.lower()).unwrap().is_none());
    }

    #[test]
    fn concavification_matches_the_oracle(seed in any::<u64>(), n in 6usize..60, up in any::<bool>()) {
        let mut r = rng(seed);
        let c = random_affine_cfi(&mut r, n, up);
        let mu = random_measure(&mut r, *c.grid());
        let bound = AffineBound::detect(&c).expect("affinely bounded by construction");
        prop_assert_eq!(bound, if up { AffineBound::UpperAffine } else { AffineBound::LowerAffine });
        let s = concavify_solve(&c, &mu, bound).unwrap();
        let (_, lp) = cfi_lp(&c, &mu).unwrap();
        prop_assert!((s.objective - lp).abs() <= 1e-6 * (1.0 + lp.abs()), "{} vs {lp}", s.objective);
        prop_assert!(c.contains(&s.u));
        prop_assert!(s.partition.covers(c.grid().n_nodes()));
        let rep = verify_with_partition(&c, &s.u, &mu, &s.partition).unwrap();
        prop_assert!(rep.overall, "{rep}");
    }

    #[test]
    fn partitions_cover_and_certificates_are_sound(seed in any::<u64>(), n in 6usize..40) {
        let mut r = rng(seed);
        let c = random_cfi(&mut r, n);
        let mu = random_measure(&mut r, *c.grid());
        let (u, obj) = cfi_lp(&c, &mu).unwrap();
        if let Ok(p) = build_partition(&c, &u) {
            prop_assert!(p.covers(c.grid().n_nodes()));
        }
        let rep = verify_optimality(&c, &u, &mu).unwrap();
        // a certified member must attain the optimum; test a member that does not
        let low = c.lower();
        if verify_optimality(&c, low, &mu).unwrap().overall {
            let v = mu.integrate(low).unwrap();
            prop_assert!((v - obj).abs() <= 1e-6 * (1.0 + obj.abs()));
        }
        if rep.overall {
            prop_assert!((mu.integrate(&u).unwrap() - obj).abs() <= 1e-6 * (1.0 + obj.abs()));
        }
    }

    #[test]
    fn majorization_intervals_are_valid(seed in any::<u64>(), n in 6usize..40) {
        let mut r = rng(seed);
        let g = Grid::unit(n).unwrap();
        // a continuous nondecreasing f, and g pulled toward its mean, which f majorizes
        let mut f = vec![r.gen_range(0.0..1.0)];
        for _ in 0..n {
            f.push(f[f.len() - 1] + r.gen_range(0.0..0.04));
        }
        let f = GridFunction::new(g, f).unwrap();
        let mean = -cfi_core::cfi::iso_to_function(&f).value(0);
        let gg = f.mix(&GridFunction::constant(g, mean), r.gen_range(0.0..1.0)).unwrap();
        let c = make_majorization_cfi(&f, &gg, false, None);
        prop_assert!(c.is_ok(), "{:?}", c.err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn screening_allocations_and_transfers(loc in 0.3..0.7f64, scale in 0.08..0.3f64, price in 0.0..1.0f64, n in 150usize..260) {
        let f = DistributionSpec::logistic(loc, scale, 0.0, 1.0).unwrap();
        let m = solve_screening(&f, &Menu::posted_price(price), &ScreeningObjective::Revenue, &SolveOptions::with_cells(n)).unwrap();
        let g = *m.u.grid();
        let x = &m.allocation;
        for i in 0..g.n_nodes() {
            prop_assert!((0.0..=1.0).contains(&x.value(i)));
            if i > 0 {
                prop_assert!(x.value(i) >= x.value(i - 1) - 1e-9);
            }
            let t = g.node(i) * x.value(i) - m.u.value(i);
            prop_assert!((m.transfer.value(i) - t).abs() <= 1e-12);
        }
        prop_assert!(m.oracle_matches());
        prop_assert!((transfer_revenue(&f, &m.u) - m.oracle.unwrap()).abs() <= 1e-4);
    }
}
