use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvgeom::quad::Tolerance;
use tvgeom::semiclassical::*;
use tvgeom::sphgeom::gram_det;
use tvgeom::trimesh::fivecell;
use tvgeom::Error;

fn realized(rng: &mut ChaCha8Rng, floor: f64) -> (Labelling, SignAssignment) {
    let (p, _) = sample_five_points(rng, floor);
    realized_fivecell(&p)
}

#[test]
fn realized_configurations_are_flat() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (l, s) = realized(&mut rng, 0.0);
        worst = worst.max(flatness_residual(&t, &l, &s).unwrap());
    }
    assert!(worst < 1e-9, "worst defect {worst:.3e}");
}

#[test]
fn flatness_depends_on_signs_up_to_global_reversal() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (l, s) = realized(&mut rng, 1e-3);
    let mut flipped = s.clone();
    flipped.0[2] = -flipped.0[2];
    assert!(flatness_residual(&t, &l, &flipped).unwrap() > 1e-3);
    // Reversing every orientation sends Σ sφ to −Σ sφ, which is still ≡ 0.
    assert!(flatness_residual(&t, &l, &s.negated()).unwrap() < 1e-9);
}

#[test]
fn hessian_is_symmetric_with_one_dimensional_positive_part() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let (l, s) = realized(&mut rng, 0.0);
        let h = hessian(&t, &l, &s).unwrap();
        assert!(h.asymmetry <= 1e-8, "asymmetry {:.3e}", h.asymmetry);
        assert_eq!(h.c.len(), 1, "{:?}", h.c);
        assert_eq!(h.c.len() + h.c_bar.len(), 10);
        assert!(h.det_cc() > 0.0);
    }
}

#[test]
fn closed_form_hessian_matches_finite_differences() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let (l, s) = realized(&mut rng, 1e-3);
        let h = hessian(&t, &l, &s).unwrap();
        assert!(h.fd_deviation < 1e-5, "{:.3e}", h.fd_deviation);
        assert!(h.step_gap < 1e-3, "{:.3e}", h.step_gap);
    }
}

#[test]
fn hessian_predicts_first_order_defect_change() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let (l, s) = realized(&mut rng, 1e-2);
    let h = hessian(&t, &l, &s).unwrap();
    let dir: Vec<f64> = (0..10).map(|e| ((e * 7 % 5) as f64 - 2.0) / 3.0).collect();
    let w0 = defect_angles(&t, &l, &s).unwrap();
    let remainder = |eps: f64| {
        let lp = Labelling(l.0.iter().zip(&dir).map(|(x, d)| x + eps * d).collect());
        let w = defect_angles(&t, &lp, &s).unwrap();
        (0..10)
            .map(|i| {
                let lin: f64 = (0..10).map(|j| h.h[i][j] * eps * dir[j]).sum();
                (w[i] - w0[i] - lin).abs()
            })
            .fold(0.0, f64::max)
    };
    let (r1, r2) = (remainder(1e-3), remainder(5e-4));
    assert!(r1 < 1e-4, "{r1:.3e}");
    let order = (r1 / r2).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

/// Solve ω_a ≡ 0 for l_a, starting from the current value, by Newton's
/// method with a numerical slope.
fn solve_flat(
    t: &tvgeom::trimesh::Triangulation,
    l: &Labelling,
    s: &SignAssignment,
    a: usize,
) -> f64 {
    let mut m = l.clone();
    for _ in 0..50 {
        let w = wrap_angle(defect_angle(t, &m, s, a).unwrap());
        if w.abs() < 1e-15 {
            break;
        }
        let h = 1e-7;
        let mut p = m.clone();
        p.0[a] += h;
        let slope = (wrap_angle(defect_angle(t, &p, s, a).unwrap()) - w) / h;
        m.0[a] -= w / slope;
    }
    m.0[a]
}

#[test]
fn hessian_blocks_relate_by_flat_jacobian() {
    let t = fivecell();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut checked = 0;
    while checked < 20 {
        let (l, s) = realized(&mut rng, 1e-2);
        let hs = hessian(&t, &l, &s).unwrap();
        let a = hs.c[0];
        for b in (0..10).filter(|&b| b != a) {
            // D = ∂l_a/∂l_b along the flat family, by re-solving ω_a = 0.
            let h = 1e-5;
            let shifted = |d: f64| {
                let mut m = l.clone();
                m.0[b] += d;
                solve_flat(&t, &m, &s, a)
            };
            let d = (shifted(h) - shifted(-h)) / (2.0 * h);
            let (haa, hbb) = (hs.h[a][a], hs.h[b][b]);
            let rel = (hbb - haa * d * d).abs() / haa.abs().max(hbb.abs());
            assert!(rel < 1e-6, "edges {a} {b}: {hbb} vs {}", haa * d * d);
        }
        checked += 1;
    }
}

#[test]
fn regular_fivecell_hessian() {
    let t = fivecell();
    let (l, s) = regular_fivecell();
    let h = hessian(&t, &l, &s).unwrap();
    assert_eq!(h.c.len(), 1);
    let d = h.h[0][0];
    for i in 0..10 {
        assert!((h.h[i][i] - d).abs() < 1e-12);
    }
}

#[test]
fn pentagon_identity_on_seeded_configurations() {
    let r = verify_sjac(1, 100).unwrap();
    assert!(r.max_relative_deviation <= 1e-4, "{r:?}");
    // The relating factor −s₀s₄ takes both values, so no single global
    // sign would do.
    assert!(r.factor_plus > 0 && r.factor_minus > 0, "{r:?}");
}

#[test]
fn pentagon_identity_matches_hessian_diagonal() {
    let t = fivecell();
    let e04 = t.edge_between(0, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..50 {
        let (l, s) = realized(&mut rng, 1e-6);
        let h = hessian(&t, &l, &s).unwrap();
        let g: [f64; 5] = std::array::from_fn(|i| gram_det(&tet_lengths(&t, &l, i)));
        let rhs = sjac_sign_factor(&s) * sjac_rhs(&g, l.0[e04], &s);
        assert!(
            ((h.h[e04][e04] - rhs) / rhs).abs() < 1e-10,
            "{} {}",
            h.h[e04][e04],
            rhs
        );
    }
}

#[test]
fn pentagon_identity_near_orthant() {
    // Frame vectors ±e_i plus a diagonal point, slightly perturbed.
    let n = |v: [f64; 4]| {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| x / r)
    };
    let p = [
        n([1.0, 0.02, 0.0, 0.01]),
        n([0.0, 1.0, 0.03, 0.0]),
        n([0.01, 0.0, 1.0, 0.02]),
        n([0.0, 0.01, 0.0, 1.0]),
        n([-0.5, -0.5, -0.5, -0.5]),
    ];
    let dev = sjac_deviation(&p, None).unwrap();
    assert!(dev <= 1e-6, "{dev:.3e}");
}

#[test]
fn pentagon_deviation_converges_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let (p, _) = sample_five_points(&mut rng, 1e-2);
    let d1 = sjac_deviation(&p, Some(1e-2)).unwrap();
    let d2 = sjac_deviation(&p, Some(5e-3)).unwrap();
    let order = (d1 / d2).log2();
    assert!((order - 2.0).abs() < 0.2, "{d1:.3e} {d2:.3e} order {order}");
}

#[test]
fn normalization_at_orthant_context() {
    let ctx = NormalizationContext::uniform(0.5 * PI);
    let tol = Tolerance::new(1e-10, 1e-10);
    for x in [0.5, 1.0, 0.5 * PI, 2.0] {
        let p = normalization_integral(&ctx, x, tol).unwrap();
        assert!((p.value - PI).abs() < 1e-6, "{x}: {}", p.value);
        assert!((normalization_angle_sweep(&ctx, x).unwrap() - PI).abs() < 1e-9);
    }
}

#[test]
fn normalization_over_a_grid() {
    let ctx = NormalizationContext {
        l02: 1.1,
        l03: 1.3,
        l12: 0.9,
        l13: 1.6,
    };
    let grid = normalization_grid(&ctx, 10);
    assert_eq!(grid.len(), 10);
    for p in verify_normalization(&ctx, &grid, Tolerance::new(1e-10, 1e-10)).unwrap() {
        assert!((p.value - PI).abs() < 1e-6, "{p:?}");
        assert!(p.interval.0 < p.interval.1);
    }
}

#[test]
fn normalization_empty_interval_is_domain_error() {
    let ctx = NormalizationContext {
        l02: 0.1,
        l03: 0.1,
        l12: 1.0,
        l13: 1.0,
    };
    let r = normalization_integral(&ctx, 1.5, Tolerance::new(1e-10, 1e-10));
    assert!(matches!(r, Err(Error::Domain(_))), "{r:?}");
}

#[test]
fn region_integral_is_symmetric_and_equals_pi() {
    for i in 0..10 {
        let la = 0.1 + 0.3 * i as f64;
        let d = verify_delinfty(la).unwrap();
        assert!((d.value - d.swapped).abs() <= 1e-10);
        // The region integral is π for every l_a: at l_a = π/2 the inner
        // integral over l_c is 2 sin l_b, and ∫₀^π 2 sin² = π.
        assert!((d.value - PI).abs() < 1e-9, "{la}: {}", d.value);
    }
    assert!(verify_delinfty(0.0).is_err());
    assert!(verify_delinfty(PI).is_err());
}

#[test]
fn reduction_reproduces_the_closed_form() {
    let r = invariant_s3().unwrap();
    assert_eq!(r.per_sign.len(), 32);
    let expected = 32.0 / PI.powi(3);
    assert!((r.total - expected).abs() < 3e-3, "{}", r.total);
    assert!((r.per_sign_value - 1.0 / PI.powi(3)).abs() < 1e-4);
    assert!(r.error < 1e-8);
}

fn mc(samples: u64, seed: u64, epsilon: f64, threads: Option<usize>) -> InvariantResult {
    invariant_mc(
        &fivecell(),
        &SignAssignment::all_plus(5),
        &McOptions {
            samples,
            seed,
            epsilon,
            threads,
            audits: 20,
        },
    )
    .unwrap()
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let a = mc(100_000, 5, 1e-8, Some(1));
    let b = mc(100_000, 5, 1e-8, Some(3));
    assert_eq!(a.per_sign_value.to_bits(), b.per_sign_value.to_bits());
    assert_eq!(a.error.to_bits(), b.error.to_bits());
    let c = mc(100_000, 6, 1e-8, Some(1));
    assert_ne!(a.per_sign_value, c.per_sign_value);
}

#[test]
fn monte_carlo_is_stable_under_the_cutoff() {
    let a = mc(200_000, 7, 1e-8, None);
    let b = mc(200_000, 7, 1e-6, None);
    assert!(
        (a.per_sign_value - b.per_sign_value).abs() < a.error / 32.0,
        "{} {}",
        a.per_sign_value,
        b.per_sign_value
    );
}

#[test]
fn monte_carlo_diagnostics() {
    let r = mc(200_000, 8, 1e-8, None);
    let d = r.mc.as_ref().unwrap();
    assert_eq!(d.samples, 200_000);
    assert!(d.acceptance_rate > 1e-4);
    assert_eq!(d.root_failures, 0);
    assert_eq!(d.audited, 20);
    assert!(d.audit_max_deviation < 1e-4, "{}", d.audit_max_deviation);
    assert!(d.unrestricted_value > 0.0 && d.unrestricted_error.is_finite());
    assert!(d.flat_roots > 0);
}

#[test]
fn monte_carlo_rejects_other_triangulations() {
    let t = tvgeom::trimesh::fivecell_23();
    let s = SignAssignment::all_plus(t.num_tetrahedra());
    assert!(matches!(
        invariant_mc(&t, &s, &McOptions::default()),
        Err(Error::InvalidInput(_))
    ));
}
