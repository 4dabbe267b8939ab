mod common;

use std::f64::consts::PI;

use common::{det4, measured_dihedral, random_tetra};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvgeom::diff::central;
use tvgeom::sphgeom::*;
use tvgeom::trimesh::LOCAL_PAIRS;

fn perms4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn gram_det_is_squared_coordinate_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let (v, l) = random_tetra(&mut rng);
        let d = det4(&v);
        assert!(
            (gram_det(&l) - d * d).abs() < 1e-12,
            "{} {}",
            gram_det(&l),
            d * d
        );
        assert!(tetra_exists_spherical(&l) || d * d < 1e-12);
    }
}

#[test]
fn points_on_a_great_sphere_are_degenerate() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let v: [[f64; 4]; 4] = std::array::from_fn(|_| {
            let mut p = random_point_s3(&mut rng);
            p[3] = 0.0;
            let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            p.map(|x| x / n)
        });
        let l = EdgeLengths6::from_unit_vectors(&v);
        assert!(gram_det(&l).abs() < 1e-9);
        assert!(!tetra_exists_spherical(&l) || gram_det(&l) < 1e-9);
    }
}

#[test]
fn cayley_formula_on_random_euclidean_tetrahedra() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let p: [[f64; 3]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let e = |a: usize, b: usize| -> [f64; 3] { std::array::from_fn(|i| p[b][i] - p[a][i]) };
        let m = nalgebra::Matrix3::from_fn(|i, j| e(0, i + 1)[j]);
        let six_v = m.determinant();
        let l: Vec<f64> = LOCAL_PAIRS
            .iter()
            .map(|&(a, b)| e(a, b).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let g0 = cayley_menger_det(&l, 3).unwrap();
        assert!(
            (g0 - six_v * six_v).abs() <= 1e-10 * (six_v * six_v).max(1e-3),
            "{g0} {}",
            six_v * six_v
        );
    }
}

#[test]
fn dihedral_angles_match_realization() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (v, l) = random_tetra(&mut rng);
        if !tetra_exists_spherical(&l) {
            continue;
        }
        let phi = dihedral_angles(&l).unwrap();
        for (k, &(a, b)) in LOCAL_PAIRS.iter().enumerate() {
            let m = measured_dihedral(&v, a, b);
            worst = worst.max((phi[k] - m).abs());
            assert!(phi[k] > 0.0 && phi[k] < PI);
        }
    }
    assert!(worst < 1e-10, "worst angle mismatch {worst:.3e}");
}

#[test]
fn realization_reproduces_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let (_, l) = random_tetra(&mut rng);
        if gram_det(&l) < 1e-8 {
            continue;
        }
        let w = realize(&l).unwrap();
        let back = EdgeLengths6::from_unit_vectors(&w);
        for k in 0..6 {
            assert!((back.0[k] - l.0[k]).abs() < 1e-9);
        }
    }
}

/// One-parameter derivative: vary l_ab alone and differentiate the
/// exterior angle θ_cd at the opposite edge. Returns the relative error of
/// dl_ab/dθ_cd = 1/(dθ_cd/dl_ab) against −√G / (sin l_ab sin l_cd), and the
/// relative gap between the two step sizes' central differences.
fn opposite_derivative_error(l: &EdgeLengths6, k: usize, h: f64) -> (f64, f64) {
    let opp = EdgeLengths6::opposite(k);
    let theta = |x: f64| {
        let mut m = *l;
        m.0[k] = x;
        PI - dihedral_angles(&m).unwrap()[opp]
    };
    let h1 = h.min(degeneracy_scale(l, k) / 20.0);
    let h2 = h1 / 10.0;
    let d1 = central(theta, l.0[k], h1);
    let d2 = central(theta, l.0[k], h2);
    let richardson = (100.0 * d2 - d1) / 99.0;
    let closed = -gram_det(l).sqrt() / (l.0[k].sin() * l.0[opp].sin());
    let numeric = 1.0 / richardson;
    (((numeric - closed) / closed).abs(), ((d1 - d2) / d2).abs())
}

#[test]
fn opposite_edge_derivative_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 1000 {
        let (_, l) = random_tetra(&mut rng);
        if gram_det(&l) < DEGENERACY_THRESHOLD {
            continue;
        }
        tested += 1;
        for k in 0..6 {
            for h in [1e-4, 1e-5] {
                let (err, gap) = opposite_derivative_error(&l, k, h);
                worst = worst.max(err);
                assert!(gap < 1e-3, "step consistency {gap:.3e} at {:?}", l.0);
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:.3e}");
}

#[test]
fn schlafli_uses_interior_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tested = 0;
    while tested < 30 {
        let (_, l) = random_tetra(&mut rng);
        if gram_det(&l) < 1e-3 {
            continue;
        }
        tested += 1;
        let u: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let h = 1e-3;
        let shift = |t: f64| EdgeLengths6(std::array::from_fn(|k| l.0[k] + t * u[k]));
        let (lp, lm) = (shift(h), shift(-h));
        let dv = spherical_volume(&lp).unwrap() - spherical_volume(&lm).unwrap();
        let (pp, pm) = (dihedral_angles(&lp).unwrap(), dihedral_angles(&lm).unwrap());
        let rhs: f64 = (0..6).map(|k| l.0[k] * (pp[k] - pm[k])).sum();
        assert!(
            ((2.0 * dv - rhs) / rhs).abs() < 1e-4,
            "{} {}",
            2.0 * dv,
            rhs
        );
        // With exterior angles the identity holds with the opposite sign.
        let rhs_ext: f64 = (0..6).map(|k| l.0[k] * ((PI - pp[k]) - (PI - pm[k]))).sum();
        assert!(((2.0 * dv + rhs_ext) / rhs_ext).abs() < 1e-4);
    }
}

#[test]
fn volume_is_symmetric_under_relabelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..5 {
        let (_, l) = common::random_tetra_with(&mut rng, 1e-2);
        let v0 = spherical_volume(&l).unwrap();
        assert!(v0 > 0.0 && v0 < 2.0 * PI * PI);
        for p in perms4() {
            let v = spherical_volume(&l.relabel(p)).unwrap();
            assert!((v - v0).abs() < 1e-10, "{v} {v0}");
        }
    }
}

#[test]
fn orthants_tile_the_sphere() {
    let v = spherical_volume(&EdgeLengths6::uniform(PI / 2.0)).unwrap();
    assert!((16.0 * v - 2.0 * PI * PI).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn realized_configurations_have_nonnegative_gram(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, l) = random_tetra(&mut rng);
        let d = det4(&v);
        prop_assert!(gram_det(&l) > -1e-14);
        prop_assert!((gram_det(&l) - d * d).abs() < 1e-12);
    }

    #[test]
    fn angles_are_relabelling_covariant(seed in any::<u64>(), pi in 0usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, l) = random_tetra(&mut rng);
        prop_assume!(gram_det(&l) > 1e-6);
        let p = perms4()[pi];
        let m = l.relabel(p);
        let (a, b) = (dihedral_angles(&l).unwrap(), dihedral_angles(&m).unwrap());
        // Angles are conditioned like 1/√G near flat configurations, and a
        // relabelling reorders the rounding in the determinants.
        let tol = 1e-12 / gram_det(&l).sqrt();
        for (k, &(i, j)) in LOCAL_PAIRS.iter().enumerate() {
            let orig = tvgeom::trimesh::local_pair_index(p[i], p[j]);
            prop_assert!((b[k] - a[orig]).abs() < tol);
        }
        prop_assert!((gram_det(&m) - gram_det(&l)).abs() < 1e-13);
    }

    #[test]
    fn face_failure_excludes_existence(x in 0.01f64..1.0, y in 0.01f64..1.0) {
        // l01 + l02 < l12 violates the triangle inequality of face 012.
        let mut l = EdgeLengths6::uniform(1.0);
        l.set(0, 1, x);
        l.set(0, 2, y);
        l.set(1, 2, (x + y + 0.1).min(3.0));
        prop_assert!(!tetra_exists_spherical(&l));
    }
}
