mod common;

use std::collections::HashSet;
use std::f64::consts::PI;

use common::recoupling::QGroup;
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvgeom::qnum::{Color, Level};
use tvgeom::statesum::{
    for_each_admissible_coloring, tv, tv_term, tv_with, Coloring, StateSumOptions,
};
use tvgeom::trimesh::{fivecell, fivecell_14, fivecell_23, Move, Triangulation};

fn lv(r: u32) -> Level {
    Level::new(r).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1e-30)
}

/// The term Δ^{−v} Π_e Δ_e Π_τ i^{−Σ2j} {τ} computed from sines and
/// recoupled Clebsch-Gordan coefficients.
fn oracle_term(t: &Triangulation, r: u32, c: &Coloring) -> Complex64 {
    let x = PI / f64::from(r);
    let dim = |j: u32| ((f64::from(j) + 1.0) * x).sin() / x.sin();
    let delta: f64 = (0..=r - 2).map(|j| dim(j) * dim(j)).sum();
    let mut acc = Complex64::new(delta.powi(-(t.num_vertices() as i32)), 0.0);
    for col in &c.0 {
        let j = col.twice_j();
        acc *= if j % 2 == 0 { dim(j) } else { -dim(j) };
    }
    let g = QGroup::root_of_unity(r);
    for tet in t.tetrahedra() {
        let mut v = tet.vertices;
        v.sort_unstable();
        let j = |a: usize, b: usize| {
            let la = tet.local_of(v[a]).unwrap();
            let lb = tet.local_of(v[b]).unwrap();
            c.0[tet.edge(la, lb)].twice_j()
        };
        let six = [j(0, 1), j(1, 2), j(0, 2), j(2, 3), j(0, 3), j(1, 3)];
        let turns = six.iter().sum::<u32>() % 4;
        acc *= Complex64::i().powu(4 - turns) * g.sixj(six);
    }
    acc
}

fn all_colorings(n: usize, colors: u32) -> impl Iterator<Item = Coloring> {
    let total = (colors as usize).pow(n as u32);
    (0..total).map(move |mut k| {
        let mut c = Vec::with_capacity(n);
        for _ in 0..n {
            c.push(Color::from_twice((k % colors as usize) as u32));
            k /= colors as usize;
        }
        Coloring(c)
    })
}

#[test]
fn all_zero_coloring() {
    let t = fivecell();
    for r in 3..7 {
        let v = tv_term(&t, lv(r), &Coloring(vec![Color::ZERO; 10]));
        let d = tvgeom::qnum::state_sum_delta(lv(r));
        assert!((v.re() - d.powi(-5)).abs() < 1e-15);
    }
}

#[test]
fn exhaustive_enumeration_at_r3() {
    let t = fivecell();
    let l = lv(3);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut admissible = HashSet::new();
    for c in all_colorings(10, 2) {
        let term = tv_term(&t, l, &c);
        sum += Complex64::new(term.re(), term.im());
        if c.is_admissible(&t, l) {
            admissible.insert(c.0.clone());
        } else {
            assert!(term.is_zero());
        }
    }
    let res = tv(&t, l).unwrap();
    assert!(
        rel(res.value, sum.re) <= 1e-12,
        "{} vs {}",
        res.value,
        sum.re
    );
    assert!(sum.im.abs() <= 1e-12);
    assert_eq!(res.admissible_count as usize, admissible.len());

    let mut visited = HashSet::new();
    for_each_admissible_coloring(&t, l, None, |c| {
        assert!(visited.insert(c.0.clone()), "visited twice");
    })
    .unwrap();
    assert_eq!(visited, admissible);
}

#[test]
fn random_terms_match_the_product_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (t, r) in [
        (fivecell(), 4),
        (fivecell_23(), 4),
        (fivecell_14(), 4),
        (fivecell(), 6),
    ] {
        let mut pool = Vec::new();
        for_each_admissible_coloring(&t, lv(r), None, |c| pool.push(c.clone())).unwrap();
        assert!(!pool.is_empty());
        for c in pool.choose_multiple(&mut rng, 40) {
            let got = tv_term(&t, lv(r), c);
            let want = oracle_term(&t, r, c);
            assert!(
                (got.re() - want.re).abs() <= 1e-12 * want.norm().max(1e-3)
                    && (got.im() - want.im).abs() <= 1e-12 * want.norm().max(1e-3),
                "{c:?}: {got:?} vs {want}"
            );
        }
    }
}

#[test]
fn invariant_under_every_single_move_from_the_fivecell() {
    let t = fivecell();
    for r in [3, 4] {
        let base = tv(&t, lv(r)).unwrap().value;
        for m in t.legal_moves() {
            let (u, _) = t.apply(&m).unwrap();
            let v = tv(&u, lv(r)).unwrap();
            assert!(
                rel(base, v.value) <= 1e-9,
                "{m:?} at r = {r}: {base} vs {}",
                v.value
            );
            assert!(v.imaginary_residue <= 1e-12);
        }
    }
}

#[test]
fn invariant_under_two_three_at_r5() {
    let a = tv(&fivecell(), lv(5)).unwrap().value;
    let b = tv(&fivecell_23(), lv(5)).unwrap().value;
    assert!(rel(a, b) <= 1e-9, "{a} {b}");
}

#[test]
fn invariant_under_three_two_back() {
    let u = fivecell_23();
    let back: Vec<Move> = u
        .legal_moves()
        .into_iter()
        .filter(|m| matches!(m, Move::ThreeTwo { .. }))
        .collect();
    assert!(!back.is_empty());
    for m in back {
        let w = u.apply(&m).unwrap().0;
        for r in [3, 4] {
            let (a, b) = (tv(&u, lv(r)).unwrap().value, tv(&w, lv(r)).unwrap().value);
            assert!(rel(a, b) <= 1e-9);
        }
    }
}

#[test]
fn independent_of_thread_count() {
    let t = fivecell_14();
    let one = tv_with(
        &t,
        lv(4),
        &StateSumOptions {
            threads: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let four = tv_with(
        &t,
        lv(4),
        &StateSumOptions {
            threads: Some(4),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(rel(one.value, four.value) <= 1e-12);
    assert_eq!(one.colorings_visited, four.colorings_visited);
}

#[test]
fn fivecell_value_is_the_sphere_normalization() {
    // For S³ the state sum is Δ^{-1}, whatever the triangulation.
    for r in 3..=6 {
        let v = tv(&fivecell(), lv(r)).unwrap();
        assert!(
            rel(v.value, 1.0 / v.delta) <= 1e-10,
            "r = {r}: {} vs {}",
            v.value,
            1.0 / v.delta
        );
    }
}
