use crate::error::{Error, Result};
use crate::tensor::{eigh, ComplexMatrix, C64};

/// Hermitian operator frame with tr[Γ⁽ⁱ⁾Γ⁽ʲ⁾] = 2δᵢⱼ: a scaled identity
/// followed by the generalised Gell-Mann matrices. For d = 2 this is {1, X, Y, Z}.
pub fn hermitian_frame(d: usize) -> Vec<ComplexMatrix> {
    let mut frame = vec![ComplexMatrix::identity(d).scale_re((2.0 / d as f64).sqrt())];
    for j in 0..d {
        for k in j + 1..d {
            let mut s = ComplexMatrix::zeros(d);
            s[(j, k)] = C64::new(1.0, 0.0);
            s[(k, j)] = C64::new(1.0, 0.0);
            frame.push(s);
            let mut a = ComplexMatrix::zeros(d);
            a[(j, k)] = C64::new(0.0, -1.0);
            a[(k, j)] = C64::new(0.0, 1.0);
            frame.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = norm;
        }
        diag[l] = -(l as f64) * norm;
        frame.push(ComplexMatrix::from_diag(&diag));
    }
    frame
}

/// Basis together with its biorthogonal dual set, tr[D⁽ⁱ⁾†ρ⁽ʲ⁾] = δᵢⱼ.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSet {
    pub basis: Vec<ComplexMatrix>,
    pub duals: Vec<ComplexMatrix>,
}

impl DualSet {
    /// Coefficients tr[D⁽ⁱ⁾†M].
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<C64> {
        self.duals.iter().map(|d| d.inner(m)).collect()
    }

    /// Σᵢ tr[D⁽ⁱ⁾†M] ρ⁽ⁱ⁾, the projection of M onto the span of the basis.
    pub fn reconstruct(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.dim());
        for (c, b) in self.coefficients(m).into_iter().zip(&self.basis) {
            out += &b.scale(c);
        }
        out
    }
}

/// Dual set via the frame expansion ρ⁽ⁱ⁾ = Σⱼ hᵢⱼΓ⁽ʲ⁾, F† = H⁻¹ and
/// D⁽ⁱ⁾ = ½ Σⱼ fᵢⱼΓ⁽ʲ⁾. A basis smaller than the full operator space uses the
/// right inverse F† = H†(HH†)⁻¹, which keeps the duals inside the span.
pub fn build_dual_set(basis: &[ComplexMatrix]) -> Result<DualSet> {
    let first = basis.first().ok_or(Error::LinearDependence)?;
    let d = first.dim();
    if basis.iter().any(|b| !b.is_square() || b.dim() != d) {
        return Err(Error::Dimension("basis elements differ in dimension".into()));
    }
    let frame = hermitian_frame(d);
    let (n, m) = (basis.len(), frame.len());
    if n > m {
        return Err(Error::LinearDependence);
    }
    let h = ComplexMatrix::from_fn(n, m, |i, j| basis[i].matmul(&frame[j]).trace() * 0.5);
    let gram = h.matmul(&h.adjoint());
    let (vals, vecs) = eigh(&gram)?;
    let top = vals.last().copied().unwrap_or(0.0);
    if vals[0] <= 1e-12 * top.max(1e-300) {
        return Err(Error::LinearDependence);
    }
    let inv = ComplexMatrix::from_fn(n, n, |i, j| vecs[(i, j)] / vals[j]).matmul(&vecs.adjoint());
    let f_dag = h.adjoint().matmul(&inv);
    let f = f_dag.adjoint();
    let duals = (0..n)
        .map(|i| {
            let mut acc = ComplexMatrix::zeros(d);
            for (j, g) in frame.iter().enumerate() {
                acc += &g.scale(f[(i, j)] * 0.5);
            }
            acc
        })
        .collect();
    Ok(DualSet { basis: basis.to_vec(), duals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random::ginibre;
    use crate::tensor::{c, pauli_x, pauli_y, pauli_z};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(a: C64, b: C64, cc: C64, d: C64) -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![a, b, cc, d]).unwrap()
    }

    #[test]
    fn frame_is_orthogonal() {
        for d in [2usize, 3, 4] {
            let f = hermitian_frame(d);
            assert_eq!(f.len(), d * d);
            for (i, a) in f.iter().enumerate() {
                assert!(a.hermiticity_defect() < 1e-15);
                for (j, b) in f.iter().enumerate() {
                    let expect = if i == j { 2.0 } else { 0.0 };
                    assert!((a.matmul(b).trace() - c(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qubit_tomography_basis_duals() {
        let z = c(0.0, 0.0);
        let basis = vec![
            m2(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)),
            m2(c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)),
            m2(c(1.0, 0.0), z, z, z),
            m2(c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)),
        ];
        let expect = [
            m2(z, c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)),
            m2(z, c(0.0, -1.0), c(0.0, 1.0), z),
            m2(c(1.0, 0.0), z, z, c(-1.0, 0.0)),
            m2(z, c(-0.5, 0.5), c(-0.5, -0.5), c(1.0, 0.0)),
        ];
        let ds = build_dual_set(&basis).unwrap();
        for (d, e) in ds.duals.iter().zip(&expect) {
            assert!(d.max_abs_diff(e) < 1e-10);
        }
    }

    #[test]
    fn pauli_basis_is_self_dual() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let basis: Vec<ComplexMatrix> =
            [ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()].iter().map(|p| p.scale_re(s)).collect();
        let ds = build_dual_set(&basis).unwrap();
        for (d, b) in ds.duals.iter().zip(&basis) {
            assert!(d.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn biorthogonal_and_reconstructs_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [9usize, 5] {
            let basis: Vec<ComplexMatrix> = (0..n).map(|_| ginibre(&mut rng, 3, 3)).collect();
            let ds = build_dual_set(&basis).unwrap();
            for (i, d) in ds.duals.iter().enumerate() {
                for (j, b) in basis.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((d.inner(b) - c(expect, 0.0)).norm() < 1e-10);
                }
            }
            let target = &basis[0].scale(c(0.3, -1.0)) + &basis[n - 1].scale_re(2.0);
            assert!(ds.reconstruct(&target).max_abs_diff(&target) < 1e-9);
        }
    }

    #[test]
    fn dependent_basis_rejected() {
        let basis = vec![pauli_x(), pauli_x().scale_re(2.0)];
        assert_eq!(build_dual_set(&basis), Err(Error::LinearDependence));
    }
}
