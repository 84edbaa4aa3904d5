//! Seeded random operators for fixtures and property tests.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random positive operator G G†.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    g.matmul(&g.adjoint())
}

/// Random full-rank density operator (Hilbert–Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let p = random_positive(rng, dim);
    let t = p.trace().re;
    p.scale_re(1.0 / t)
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, 1);
    let n = g.frobenius_norm();
    ComplexMatrix::projector(&g.scale_re(1.0 / n).into_data())
}

/// Matrix with orthonormal columns obtained by Gram–Schmidt on a Ginibre sample.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs rows >= cols");
    let g = ginibre(rng, rows, cols);
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v: Vec<C64> = (0..rows).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for u in &q {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|z| z / n).collect());
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// Haar-random unitary.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_isometry(rng, dim, dim)
}

/// Kraus operators of a random CPTP map from a random Stinespring isometry.
pub fn random_kraus<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, rank: usize) -> Vec<ComplexMatrix> {
    let v = random_isometry(rng, d_out * rank, d_in);
    (0..rank)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(a * rank + k, i)]))
        .collect()
}
