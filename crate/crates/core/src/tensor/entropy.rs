use super::linalg::{eigh, eigvalsh};
use super::matrix::ComplexMatrix;
use super::ops::partial_trace;
use super::wires::{SpaceLabel, WireList};
use super::{EPS_EIG, EPS_POS, EPS_SUP, EPS_TR};
use crate::error::{Error, Result};

/// Spectrum of a density operator after positivity and normalisation checks.
pub fn state_spectrum(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    let vals = eigvalsh(rho)?;
    check_spectrum(&vals)?;
    Ok(vals)
}

fn check_spectrum(vals: &[f64]) -> Result<()> {
    let tr: f64 = vals.iter().sum();
    if let Some(&min) = vals.first() {
        if min < -EPS_POS * tr.abs().max(1.0) {
            return Err(Error::Positivity(min));
        }
    }
    if (tr - 1.0).abs() > EPS_TR {
        return Err(Error::Normalization(tr));
    }
    Ok(())
}

/// −Σ λ log₂ λ with eigenvalues at or below the clip treated as zero.
pub fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    let tr: f64 = vals.iter().sum();
    let cut = EPS_EIG * tr.abs().max(1.0);
    let s: f64 = vals.iter().filter(|&&l| l > cut).map(|&l| -l * l.log2()).sum();
    s.max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let vals = state_spectrum(rho)?;
    let cap = (rho.dim() as f64).log2();
    Ok(entropy_of_spectrum(&vals).min(cap))
}

/// Shannon entropy in bits of a probability vector (zeros skipped).
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// D(ρ‖σ) in bits; `f64::INFINITY` when the support of ρ is not contained in
/// that of σ.
pub fn quantum_relative_entropy(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let (p, u) = eigh(rho)?;
    check_spectrum(&p)?;
    let (q, v) = eigh(sigma)?;
    check_spectrum(&q)?;
    let overlap = u.adjoint().matmul(&v);
    let d = p.len();
    let (pcut, qcut) = (EPS_EIG, EPS_EIG);
    let mut cross = 0.0;
    for j in 0..d {
        let weight: f64 = (0..d).filter(|&i| p[i] > pcut).map(|i| p[i] * overlap[(i, j)].norm_sqr()).sum();
        if q[j] <= qcut {
            if weight > EPS_SUP {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * q[j].log2();
    }
    let neg_s: f64 = p.iter().filter(|&&l| l > pcut).map(|&l| l * l.log2()).sum();
    Ok((neg_s - cross).max(0.0))
}

/// ½‖ρ − σ‖₁
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    for m in [rho, sigma] {
        let defect = m.hermiticity_defect();
        if defect > 1e-8 * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
    }
    let vals = eigvalsh(&(rho - sigma))?;
    Ok(0.5 * vals.iter().map(|l| l.abs()).sum::<f64>())
}

/// I(A:B) = S(A) + S(B) − S(AB) in bits, B being every wire not in `part_a`.
pub fn mutual_information(rho: &ComplexMatrix, wires: &WireList, part_a: &[SpaceLabel]) -> Result<f64> {
    wires.positions(part_a)?;
    if part_a.is_empty() || part_a.len() >= wires.len() {
        return Err(Error::Label("part A must be a strict nonempty subset of the wires".into()));
    }
    let part_b: Vec<SpaceLabel> = wires.labels().into_iter().filter(|l| !part_a.contains(l)).collect();
    let s_ab = von_neumann_entropy(rho)?;
    let (ra, _) = partial_trace(rho, wires, part_a)?;
    let (rb, _) = partial_trace(rho, wires, &part_b)?;
    let s_a = von_neumann_entropy(&ra)?;
    let s_b = von_neumann_entropy(&rb)?;
    Ok((s_a + s_b - s_ab).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::matrix::{kron, C64};
    use crate::tensor::random::{random_density, random_pure, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_qubits() -> WireList {
        WireList::from_pairs([(SpaceLabel::input(2), 2), (SpaceLabel::input(1), 2)]).unwrap()
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(von_neumann_entropy(&random_pure(&mut rng, 5)).unwrap() < 1e-9);
    }

    #[test]
    fn maximally_mixed_entropy() {
        for d in [2usize, 3, 8] {
            let rho = ComplexMatrix::identity(d).scale_re(1.0 / d as f64);
            assert!((von_neumann_entropy(&rho).unwrap() - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_entropy_value() {
        let s = von_neumann_entropy(&ComplexMatrix::from_diag(&[0.3, 0.7])).unwrap();
        let oracle = -0.3 * 0.3f64.log2() - 0.7 * 0.7f64.log2();
        assert!((s - oracle).abs() < 1e-14);
        assert!((s - 0.881_290_899_230_281_9).abs() < 1e-12);
    }

    #[test]
    fn entropy_errors() {
        assert!(matches!(von_neumann_entropy(&ComplexMatrix::from_diag(&[1.5, -0.5])), Err(Error::Positivity(_))));
        assert!(matches!(von_neumann_entropy(&ComplexMatrix::from_diag(&[0.5, 0.4])), Err(Error::Normalization(_))));
    }

    #[test]
    fn relative_entropy_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, 3);
        assert!(quantum_relative_entropy(&rho, &rho).unwrap() < 1e-10);
        let zero = ComplexMatrix::basis_projector(2, 0);
        let one = ComplexMatrix::basis_projector(2, 1);
        let mixed = ComplexMatrix::identity(2).scale_re(0.5);
        assert!((quantum_relative_entropy(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(quantum_relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        assert!(quantum_relative_entropy(&mixed, &zero).unwrap().is_infinite());
    }

    #[test]
    fn trace_distance_cases() {
        let zero = ComplexMatrix::basis_projector(2, 0);
        let one = ComplexMatrix::basis_projector(2, 1);
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        let a = ComplexMatrix::from_diag(&[0.6, 0.4]);
        let b = ComplexMatrix::from_diag(&[0.5, 0.5]);
        assert!((trace_distance(&a, &b).unwrap() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn mutual_information_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = two_qubits();
        let a = [SpaceLabel::input(2)];
        let prod = kron(&random_density(&mut rng, 2), &random_density(&mut rng, 2));
        assert!(mutual_information(&prod, &w, &a).unwrap() < 1e-9);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = ComplexMatrix::projector(&[C64::new(h, 0.0), z, z, C64::new(h, 0.0)]);
        assert!((mutual_information(&bell, &w, &a).unwrap() - 2.0).abs() < 1e-10);
        let classical = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!((mutual_information(&classical, &w, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(mutual_information(&bell, &w, &w.labels()).is_err());
    }

    #[test]
    fn entropy_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, 4);
        let u = random_unitary(&mut rng, 4);
        let a = von_neumann_entropy(&rho).unwrap();
        let b = von_neumann_entropy(&rho.conjugate_by(&u)).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
