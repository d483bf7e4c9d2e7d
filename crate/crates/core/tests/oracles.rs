//! Independent reference implementations checked against the library.
//! Each oracle is written from the definition, not from the library code.

mod common;

use cfi_core::apps::{solve_contest, solve_screening, DistributionSpec, Menu, ScreeningObjective, SolveOptions};
use cfi_core::cfi::verify_extreme;
use cfi_core::lp::{cfi_lp, simplex_solve, LpProblem, LpStatus, Sense};
use cfi_core::{Cfi, Grid, GridFunction, SignedMeasure};
use common::{random_cfi, random_measure, rng};
use rand::Rng;

// ---------------------------------------------------------------------------
// Convex minorant by brute force: the value at node k is the smallest chord
// value over all node pairs straddling k.

fn brute_vex(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|k| {
            let mut best = y[k];
            for a in 0..=k {
                for b in k..n {
                    if a == b {
                        continue;
                    }
                    let t = (k - a) as f64 / (b - a) as f64;
                    best = best.min(y[a] + t * (y[b] - y[a]));
                }
            }
            best
        })
        .collect()
}

#[test]
fn convex_minorant_matches_brute_force() {
    let mut r = rng(11);
    let g = Grid::unit(50).unwrap();
    for _ in 0..200 {
        let f = GridFunction::new(g, (0..51).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let fast = f.vex();
        let slow = brute_vex(f.values());
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

// ---------------------------------------------------------------------------
// Textbook two-phase tableau simplex with Bland's rule, for `max c·x` with
// `x ≥ 0`, `A_le x ≤ b_le`, `A_ge x ≥ b_ge` and nonnegative right sides.

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pr = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let f = r[col];
                for (v, q) in r.iter_mut().zip(&pr) {
                    *v -= f * q;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximize the objective row `obj` (reduced costs, last entry the
    /// negated value) over columns `allowed`. Returns false if unbounded.
    fn run(&mut self, obj: &mut Vec<f64>, allowed: usize) -> bool {
        let m = self.t.len();
        loop {
            let Some(col) = (0..allowed).find(|&j| obj[j] > 1e-11) else { return true };
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][col];
                if a > 1e-11 {
                    let ratio = self.t[i][self.t[i].len() - 1] / a;
                    let better = match pick {
                        None => true,
                        Some((k, r)) => ratio < r - 1e-13 || (ratio <= r + 1e-13 && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        pick = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = pick else { return false };
            self.pivot(row, col);
            let f = obj[col];
            for (v, q) in obj.iter_mut().zip(&self.t[row]) {
                *v -= f * q;
            }
        }
    }
}

fn tableau_max(c: &[f64], le: &[(Vec<f64>, f64)], ge: &[(Vec<f64>, f64)]) -> Option<f64> {
    let n = c.len();
    let (m_le, m_ge) = (le.len(), ge.len());
    let m = m_le + m_ge;
    // columns: structural, slack (le), surplus (ge), artificial (ge), rhs
    let width = n + m_le + 2 * m_ge + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0; m];
    for (i, (a, b)) in le.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][n + i] = 1.0;
        t[i][width - 1] = *b;
        basis[i] = n + i;
    }
    for (k, (a, b)) in ge.iter().enumerate() {
        let i = m_le + k;
        t[i][..n].copy_from_slice(a);
        t[i][n + m_le + k] = -1.0;
        t[i][n + m_le + m_ge + k] = 1.0;
        t[i][width - 1] = *b;
        basis[i] = n + m_le + m_ge + k;
    }
    let mut tab = Tableau { t, basis };
    let art0 = n + m_le + m_ge;

    // phase one: maximize minus the sum of artificials
    let mut obj = vec![0.0; width];
    for k in 0..m_ge {
        obj[art0 + k] = -1.0;
    }
    for i in m_le..m {
        for (v, q) in obj.iter_mut().zip(&tab.t[i]) {
            *v += q;
        }
    }
    tab.run(&mut obj, art0 + m_ge);
    if obj[width - 1] > 1e-9 {
        return None;
    }
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| tab.t[i][j].abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }

    // phase two over the original columns
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    for i in 0..m {
        let b = tab.basis[i];
        if b < n && obj[b] != 0.0 {
            let f = obj[b];
            for (v, q) in obj.iter_mut().zip(&tab.t[i]) {
                *v -= f * q;
            }
        }
    }
    if !tab.run(&mut obj, art0) {
        return Some(f64::INFINITY);
    }
    Some(-obj[width - 1])
}

#[test]
fn simplex_matches_tableau_reference() {
    let mut r = rng(12);
    for case in 0..40 {
        let (n, m_le, m_ge) = (60, 20, 10);
        let x0: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let dot = |a: &[f64]| a.iter().zip(&x0).map(|(p, q)| p * q).sum::<f64>();
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut le = Vec::new();
        for _ in 0..m_le {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
            let b = dot(&a) + r.gen_range(0.0..1.0);
            le.push((a, b));
        }
        // a few simple upper bounds, which the library takes as bounds
        let caps: Vec<Option<f64>> =
            (0..n).map(|j| if r.gen_bool(0.2) { Some(x0[j] + r.gen_range(0.0..0.5)) } else { None }).collect();
        let mut ge = Vec::new();
        for _ in 0..m_ge {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
            let b = (dot(&a) - r.gen_range(0.0..0.5)).max(0.0);
            ge.push((a, b));
        }

        let mut p = LpProblem::new(n);
        p.objective = c.clone();
        for (a, b) in &le {
            p.add_row(a.clone(), Sense::Le, *b);
        }
        for (a, b) in &ge {
            p.add_row(a.clone(), Sense::Ge, *b);
        }
        let mut le_ref = le.clone();
        for (j, cap) in caps.iter().enumerate() {
            if let Some(u) = cap {
                p.bounds[j] = (0.0, *u);
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                le_ref.push((a, *u));
            }
        }
        let reference = tableau_max(&c, &le_ref, &ge).expect("feasible by construction");
        let sol = simplex_solve(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!((sol.objective - reference).abs() <= 1e-7 * (1.0 + reference.abs()), "case {case}: {} vs {reference}", sol.objective);
        // the reported point is feasible
        for (a, b) in &le {
            assert!(a.iter().zip(&sol.values).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-7);
        }
        for (a, b) in &ge {
            assert!(a.iter().zip(&sol.values).map(|(p, q)| p * q).sum::<f64>() >= b - 1e-7);
        }
    }
}

#[test]
fn tableau_reference_detects_infeasibility() {
    // x ≤ 1 and x ≥ 2
    let r = tableau_max(&[1.0], &[(vec![1.0], 1.0)], &[(vec![1.0], 2.0)]);
    assert!(r.is_none());
    assert_eq!(tableau_max(&[1.0, 1.0], &[(vec![1.0, 1.0], 1.0)], &[]), Some(1.0));
}

// ---------------------------------------------------------------------------
// Vertex test by rank: a point of the grid polytope is a vertex exactly when
// the normals of its active constraints span the whole space.

fn rank(mut rows: Vec<Vec<f64>>, cols: usize) -> usize {
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else { break };
        if rows[p][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(r, p);
        for i in r + 1..rows.len() {
            let f = rows[i][c] / rows[r][c];
            if f != 0.0 {
                for k in c..cols {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

fn is_vertex_by_rank(c: &Cfi, u: &GridFunction) -> bool {
    let g = *c.grid();
    let n = g.n_nodes();
    let h = g.h();
    let (lt, kt, st) = (c.level_tol(), c.kink_tol(), c.slope_tol() * h);
    let s = c.slopes();
    let unit = |idx: &[(usize, f64)]| {
        let mut v = vec![0.0; n];
        for &(i, a) in idx {
            v[i] += a;
        }
        v
    };
    let mut active = Vec::new();
    for i in 0..n {
        if (u.value(i) - c.lower().value(i)).abs() <= lt || (c.upper().value(i) - u.value(i)).abs() <= lt {
            active.push(unit(&[(i, 1.0)]));
        }
    }
    for i in 1..n - 1 {
        if u.second_diff(i).abs() <= kt {
            active.push(unit(&[(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)]));
        }
    }
    for j in 0..n - 1 {
        let d = u.value(j + 1) - u.value(j);
        if (d - s.s_lo * h).abs() <= st || (s.s_hi * h - d).abs() <= st {
            active.push(unit(&[(j + 1, 1.0), (j, -1.0)]));
        }
    }
    rank(active, n) == n
}

#[test]
fn extremality_matches_rank_oracle() {
    let mut r = rng(13);
    let mut checked = (0, 0);
    for _ in 0..150 {
        let n = r.gen_range(8..30);
        let c = random_cfi(&mut r, n);
        let mut candidates = vec![c.lower().clone(), c.upper().clone()];
        let mut vertices = Vec::new();
        for _ in 0..2 {
            let mu = random_measure(&mut r, *c.grid());
            let (u, _) = cfi_lp(&c, &mu).unwrap();
            vertices.push(u);
        }
        candidates.extend(vertices.iter().cloned());
        for v in &vertices {
            for w in [c.lower(), c.upper()] {
                if v.dist_sup(w).unwrap() > 1e-3 {
                    candidates.push(v.mix(w, 0.5).unwrap());
                }
            }
        }
        for u in &candidates {
            let by_rank = is_vertex_by_rank(&c, u);
            let by_structure = verify_extreme(&c, u).extreme;
            assert_eq!(by_rank, by_structure, "rank oracle and structural test disagree\n{}", verify_extreme(&c, u));
            if by_rank {
                checked.0 += 1;
            } else {
                checked.1 += 1;
            }
        }
    }
    // both verdicts occur
    assert!(checked.0 > 100 && checked.1 > 100, "{checked:?}");
}

// ---------------------------------------------------------------------------
// Closed forms.

#[test]
fn stop_loss_closed_forms() {
    let g = Grid::unit(40).unwrap();
    let lebesgue = SignedMeasure::from_density_fn(g, |_| 1.0);
    let atoms = SignedMeasure::from_atoms(g, &[(10, 0.5), (30, -0.25)]).unwrap();
    for k in 0..=80 {
        let t = k as f64 / 80.0;
        assert!((lebesgue.stop_loss(t) - 0.5 * (1.0 - t).powi(2)).abs() < 1e-14);
        assert!((lebesgue.stop_loss_left(t) - 0.5 * t * t).abs() < 1e-14);
        let direct = 0.5 * (0.25 - t).max(0.0) - 0.25 * (0.75 - t).max(0.0);
        assert!((atoms.stop_loss(t) - direct).abs() < 1e-15);
    }
}

#[test]
fn uniform_screening_closed_form() {
    // v(θ) = 2θ - 1 vanishes at 1/2 and the posted price 1/2 earns 1/4
    let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
    for n in [50, 100, 200] {
        let m = solve_screening(&f, &Menu::null(), &ScreeningObjective::Revenue, &SolveOptions::with_cells(n)).unwrap();
        assert!((m.cutoff("theta_star").unwrap() - 0.5).abs() <= 1.0 / n as f64 + 1e-12);
        assert!((m.value - 0.25).abs() <= 1e-3);
    }
}

/// Truncated logistic on `[0, 1]` written out from the formula.
fn logistic_virtual_value(loc: f64, scale: f64, x: f64) -> f64 {
    let l = |z: f64| 1.0 / (1.0 + (-(z - loc) / scale).exp());
    let (l0, l1) = (l(0.0), l(1.0));
    let cdf = (l(x) - l0) / (l1 - l0);
    let pdf = l(x) * (1.0 - l(x)) / scale / (l1 - l0);
    x - (1.0 - cdf) / pdf
}

fn root(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn logistic_screening_cutoff_is_virtual_value_root() {
    let (loc, scale) = (0.5, 0.15);
    let theta = root(0.0, 1.0, |x| logistic_virtual_value(loc, scale, x));
    let f = DistributionSpec::logistic(loc, scale, 0.0, 1.0).unwrap();
    for x in [0.1, 0.4, 0.7] {
        assert!((f.virtual_value(x) - logistic_virtual_value(loc, scale, x)).abs() < 1e-9);
    }
    let n = 200;
    let m = solve_screening(&f, &Menu::null(), &ScreeningObjective::Revenue, &SolveOptions::with_cells(n)).unwrap();
    assert!((m.cutoff("theta_star").unwrap() - theta).abs() <= 1.0 / n as f64, "{theta}");
}

#[test]
fn uniform_contest_excludes_the_bottom_half() {
    // with uniform types the quantile virtual value 2q - 1 vanishes at 1/2
    let f = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let g = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let n = 200;
    let m = solve_contest(&f, &g, 0.0, &SolveOptions::with_cells(n)).unwrap();
    assert!((m.cutoff("q_star").unwrap() - 0.5).abs() <= 1.0 / n as f64 + 1e-12);
    // the allocation is G⁻¹(q) = q above the cutoff, so the value is ∫_{1/2}^1 q (2q - 1) dq
    let exact = exact_contest_value();
    assert!((m.value - exact).abs() <= 1e-3, "{} vs {exact}", m.value);
}

/// `∫_{1/2}^1 q (2q - 1) dq`.
fn exact_contest_value() -> f64 {
    let anti = |q: f64| 2.0 * q * q * q / 3.0 - q * q / 2.0;
    anti(1.0) - anti(0.5)
}
