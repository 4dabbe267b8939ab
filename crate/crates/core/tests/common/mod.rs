//! Shared oracles for integration tests: explicit point realizations and
//! angle measurement in the tangent space.
#![allow(dead_code)]

pub mod recoupling;

use rand::Rng;
use tvgeom::sphgeom::{random_point_s3, EdgeLengths6};
use tvgeom::trimesh::{local_pair_index, LOCAL_PAIRS};

pub fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// det of the 4×4 matrix whose rows are the given vectors.
pub fn det4(v: &[[f64; 4]; 4]) -> f64 {
    nalgebra::Matrix4::from_fn(|i, j| v[i][j]).determinant()
}

/// Remove from `x` its components along the orthonormalized `basis`.
fn reject(x: &[f64; 4], basis: &[[f64; 4]]) -> [f64; 4] {
    let mut q: Vec<[f64; 4]> = Vec::new();
    for b in basis {
        let mut u = *b;
        for e in &q {
            let t = dot(&u, e);
            for i in 0..4 {
                u[i] -= t * e[i];
            }
        }
        let n = dot(&u, &u).sqrt();
        q.push(u.map(|c| c / n));
    }
    let mut y = *x;
    for e in &q {
        let t = dot(&y, e);
        for i in 0..4 {
            y[i] -= t * e[i];
        }
    }
    y
}

/// Interior dihedral angle at edge ab of the spherical tetrahedron with
/// unit vertex vectors v, measured between the projections of v_c and v_d
/// onto the orthogonal complement of span(v_a, v_b).
pub fn measured_dihedral(v: &[[f64; 4]; 4], a: usize, b: usize) -> f64 {
    let (c, d) = LOCAL_PAIRS[5 - local_pair_index(a, b)];
    let u = reject(&v[c], &[v[a], v[b]]);
    let w = reject(&v[d], &[v[a], v[b]]);
    (dot(&u, &w) / (dot(&u, &u) * dot(&w, &w)).sqrt())
        .clamp(-1.0, 1.0)
        .acos()
}

pub fn random_tetra<R: Rng>(rng: &mut R) -> ([[f64; 4]; 4], EdgeLengths6) {
    let v: [[f64; 4]; 4] = std::array::from_fn(|_| random_point_s3(rng));
    (v, EdgeLengths6::from_unit_vectors(&v))
}

/// Four points on S³ whose Gram determinant is at least `gmin`.
pub fn random_tetra_with<R: Rng>(rng: &mut R, gmin: f64) -> ([[f64; 4]; 4], EdgeLengths6) {
    loop {
        let (v, l) = random_tetra(rng);
        if tvgeom::sphgeom::gram_det(&l) >= gmin {
            return (v, l);
        }
    }
}
