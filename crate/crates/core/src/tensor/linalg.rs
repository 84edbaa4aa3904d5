use faer::prelude::SpSolver;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

fn hermitian_input(m: &ComplexMatrix) -> Result<faer::Mat<faer::complex_native::c64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let defect = m.hermiticity_defect();
    if defect > 1e-8 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(m.hermitian_part().to_faer())
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let a = hermitian_input(m)?;
    if let Some(r) = faer_eigh(&a) {
        return Ok(r);
    }
    // faer 0.19 occasionally returns NaN on exactly structured sparse inputs
    // (large rank-one projectors). A fixed random Householder reflection
    // H = H† = H⁻¹ leaves the spectrum unchanged and removes that structure.
    let h = householder(m.dim());
    let mixed = h.matmul(&m.hermitian_part()).matmul(&h);
    match faer_eigh(&mixed.hermitian_part().to_faer()) {
        Some((vals, v)) => Ok((vals, h.matmul(&v))),
        None => Err(Error::Parameter("eigendecomposition did not converge".into())),
    }
}

fn faer_eigh(a: &faer::Mat<faer::complex_native::c64>) -> Option<(Vec<f64>, ComplexMatrix)> {
    let evd = a.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let vals: Vec<f64> = (0..s.nrows()).map(|i| s.read(i).re).collect();
    let u = ComplexMatrix::from_faer(&evd.u().to_owned());
    if vals.iter().any(|v| !v.is_finite()) || u.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    Some((vals, u))
}

/// 1 − 2vv†/‖v‖² for a dense pseudo-random v from a fixed seed.
fn householder(d: usize) -> ComplexMatrix {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let v = super::random::ginibre(&mut rng, d, 1);
    let n2 = v.frobenius_norm().powi(2);
    &ComplexMatrix::identity(d) - &v.matmul(&v.adjoint()).scale_re(2.0 / n2)
}

/// Eigenvalues (ascending) of a Hermitian matrix. faer's eigenvalue-only
/// path shares the NaN failure mode, so the full decomposition is used.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = eigh(m)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// f(M) for Hermitian M via the spectral decomposition.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (vals, v) = eigh(m)?;
    let d = vals.len();
    let scaled = ComplexMatrix::from_fn(d, d, |i, j| v[(i, j)] * f(vals[j]));
    Ok(scaled.matmul(&v.adjoint()))
}

/// Solve A X = B by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension("solve needs square A with matching rows".into()));
    }
    let lu = a.to_faer().partial_piv_lu();
    let x = ComplexMatrix::from_faer(&lu.solve(b.to_faer()));
    if x.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::LinearDependence);
    }
    Ok(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn lincomb(terms: &[(f64, &ComplexMatrix)]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros_rect(terms[0].1.rows(), terms[0].1.cols());
    for (c, m) in terms {
        for (o, z) in out.data_mut().iter_mut().zip(m.data()) {
            *o += z * *c;
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn matrix_exp(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "matrix_exp needs a square matrix");
    let d = m.dim();
    let norm = one_norm(m);
    if norm == 0.0 {
        return ComplexMatrix::identity(d);
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m.scale_re(0.5f64.powi(s));
    let b = &PADE13;
    let id = ComplexMatrix::identity(d);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_inner = a6.matmul(&lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u = a.matmul(&(&u_inner + &lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)])));
    let v_inner = a6.matmul(&lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]));
    let v = &v_inner + &lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);
    let mut r = solve(&(&v - &u), &(&v + &u)).expect("Padé denominator is invertible after scaling");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// Scalar helper for building exponents.
pub fn i_times(m: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    m.scale(C64::new(0.0, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::{c, pauli_x, pauli_z};
    use crate::tensor::random::{ginibre, random_positive};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_rank_one_spectrum_is_finite() {
        let mut v = vec![C64::new(0.0, 0.0); 256];
        for (k, x) in v.iter_mut().enumerate().filter(|(k, _)| k % 5 == 0) {
            *x = C64::new(if k % 3 == 0 { 0.6 } else { -0.8 }, 0.0);
        }
        let p = ComplexMatrix::projector(&v);
        let vals = eigvalsh(&p).unwrap();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert!((vals[255] - norm).abs() < 1e-10 && vals[..255].iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(matrix_exp(&ComplexMatrix::zeros(3)), ComplexMatrix::identity(3));
    }

    #[test]
    fn exp_of_diagonal_phase() {
        let theta = 0.7;
        let e = matrix_exp(&i_times(&pauli_z(), theta));
        let expect = ComplexMatrix::from_vec(
            2,
            2,
            vec![C64::from_polar(1.0, theta), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, -theta)],
        )
        .unwrap();
        assert!(e.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn exp_of_anti_hermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for scale in [0.1, 1.0, 10.0] {
            let g = ginibre(&mut rng, 4, 4);
            let ah = (&g - &g.adjoint()).scale_re(0.5 * scale);
            let u = matrix_exp(&ah);
            assert!(u.matmul(&u.adjoint()).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
        }
    }

    #[test]
    fn exp_matches_spectral_route_on_hermitian_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_positive(&mut rng, 5).scale_re(0.3);
        let a = matrix_exp(&h);
        let b = hermitian_function(&h, f64::exp).unwrap();
        assert!(a.max_abs_diff(&b) / b.max_abs() < 1e-12);
    }

    #[test]
    fn exp_of_nilpotent() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let n = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let e = matrix_exp(&n);
        assert!(e.max_abs_diff(&ComplexMatrix::from_real(2, &[1.0, 1.0, 0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_positive(&mut rng, 6);
        let (vals, v) = eigh(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let rec = ComplexMatrix::from_fn(6, 6, |i, j| v[(i, j)] * vals[j]).matmul(&v.adjoint());
        assert!(rec.max_abs_diff(&h) < 1e-10);
        let vals2 = eigvalsh(&h).unwrap();
        for (a, b) in vals.iter().zip(&vals2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        assert!(matches!(eigh(&ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0])), Err(Error::NotHermitian(_))));
        let x = pauli_x();
        assert!(eigh(&x).is_ok());
    }
}
