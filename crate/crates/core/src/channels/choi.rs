use crate::error::{Error, Result};
use crate::tensor::{
    check_wired, eigh, eigvalsh, kron, partial_contract, partial_trace, permute_subsystems, ComplexMatrix,
    SpaceLabel, WireList, C64, EPS_EIG, EPS_POS, EPS_TR,
};

/// Choi operator of a linear map, stored with output factors before input
/// factors. States have no input wires, effects have no output wires.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOperator {
    matrix: ComplexMatrix,
    out_wires: WireList,
    in_wires: WireList,
}

impl ChoiOperator {
    pub fn new(matrix: ComplexMatrix, out_wires: WireList, in_wires: WireList) -> Result<Self> {
        let all = out_wires.concat(&in_wires)?;
        check_wired(&matrix, &all)?;
        Ok(Self { matrix, out_wires, in_wires })
    }

    pub fn state(rho: ComplexMatrix, wires: WireList) -> Result<Self> {
        Self::new(rho, wires, WireList::empty())
    }

    /// Effect in Choi form. For a POVM element Π this is Πᵀ; see
    /// [`ChoiOperator::from_povm_element`].
    pub fn effect(matrix: ComplexMatrix, wires: WireList) -> Result<Self> {
        Self::new(matrix, WireList::empty(), wires)
    }

    /// Choi operator of the map ρ ↦ tr[Π ρ], which is Πᵀ.
    pub fn from_povm_element(pi: &ComplexMatrix, wires: WireList) -> Result<Self> {
        Self::effect(pi.transpose(), wires)
    }

    /// Operator on arbitrary wires, reordered so that output-direction wires
    /// come first (stable otherwise).
    pub fn from_wires(matrix: ComplexMatrix, wires: WireList) -> Result<Self> {
        check_wired(&matrix, &wires)?;
        let mut order: Vec<usize> = (0..wires.len()).filter(|&k| wires.wires()[k].label.is_output()).collect();
        let n_out = order.len();
        order.extend((0..wires.len()).filter(|&k| wires.wires()[k].label.is_input()));
        let (m, w) = permute_subsystems(&matrix, &wires, &order)?;
        let out = w.select(&(0..n_out).collect::<Vec<_>>());
        let inp = w.select(&(n_out..w.len()).collect::<Vec<_>>());
        Self::new(m, out, inp)
    }

    /// Identity channel Ψ = Σ|ii⟩⟨jj| between the given wires.
    pub fn identity_channel(out: SpaceLabel, inp: SpaceLabel, dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i * dim + i, j * dim + j)] = C64::new(1.0, 0.0);
            }
        }
        Self { matrix: m, out_wires: WireList::single(out, dim), in_wires: WireList::single(inp, dim) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn out_wires(&self) -> &WireList {
        &self.out_wires
    }

    pub fn in_wires(&self) -> &WireList {
        &self.in_wires
    }

    pub fn wires(&self) -> WireList {
        self.out_wires.concat(&self.in_wires).expect("disjoint by construction")
    }

    pub fn d_out(&self) -> usize {
        self.out_wires.total_dim()
    }

    pub fn d_in(&self) -> usize {
        self.in_wires.total_dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale_re(s), ..self.clone() }
    }

    /// Same matrix on new labels of equal dimensions.
    pub fn relabel(&self, out_wires: WireList, in_wires: WireList) -> Result<Self> {
        if out_wires.dims() != self.out_wires.dims() || in_wires.dims() != self.in_wires.dims() {
            return Err(Error::Dimension("relabelling must keep wire dimensions".into()));
        }
        Self::new(self.matrix.clone(), out_wires, in_wires)
    }

    /// Apply `f` to every label.
    pub fn map_labels(&self, f: impl Fn(&SpaceLabel) -> SpaceLabel) -> Result<Self> {
        let remap = |w: &WireList| {
            WireList::from_pairs(w.iter().map(|x| (f(&x.label), x.dim)))
        };
        Self::new(self.matrix.clone(), remap(&self.out_wires)?, remap(&self.in_wires)?)
    }

    /// Tensor product of two operators on disjoint wires.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let a = &self.matrix;
        let b = &other.matrix;
        let k = kron(a, b);
        let joint = self.wires().concat(&other.wires())?;
        let (na, nb) = (self.out_wires.len(), other.out_wires.len());
        let la = self.out_wires.len() + self.in_wires.len();
        let mut order: Vec<usize> = (0..na).collect();
        order.extend(la..la + nb);
        order.extend(na..la);
        order.extend(la + nb..joint.len());
        let (m, _) = permute_subsystems(&k, &joint, &order)?;
        Self::new(
            m,
            self.out_wires.concat(&other.out_wires)?,
            self.in_wires.concat(&other.in_wires)?,
        )
    }
}

/// Linear map on operators as a d_out² × d_in² matrix acting on row-major
/// vectorised operators, vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    d_in: usize,
    d_out: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(matrix: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        if matrix.rows() != d_out * d_out || matrix.cols() != d_in * d_in {
            return Err(Error::Dimension(format!(
                "superoperator {}x{} does not map {d_in}-dim to {d_out}-dim operators",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { d_in, d_out, matrix })
    }

    pub fn from_fn(d_in: usize, d_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut m = ComplexMatrix::zeros_rect(d_out * d_out, d_in * d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                let mut unit = ComplexMatrix::zeros(d_in);
                unit[(i, j)] = C64::new(1.0, 0.0);
                let img = f(&unit);
                assert_eq!(img.rows(), d_out, "map output dimension");
                for (k, z) in img.data().iter().enumerate() {
                    m[(k, i * d_in + j)] = *z;
                }
            }
        }
        Self { d_in, d_out, matrix: m }
    }

    pub fn identity(d: usize) -> Self {
        Self { d_in: d, d_out: d, matrix: ComplexMatrix::identity(d * d) }
    }

    pub fn from_unitary(u: &ComplexMatrix) -> Self {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn from_kraus(ks: &[ComplexMatrix]) -> Self {
        let (d_out, d_in) = (ks[0].rows(), ks[0].cols());
        let mut m = ComplexMatrix::zeros_rect(d_out * d_out, d_in * d_in);
        for k in ks {
            m += &kron(k, &k.conj());
        }
        Self { d_in, d_out, matrix: m }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(rho.rows(), self.d_in, "input dimension");
        let v = ComplexMatrix::from_vec(self.d_in * self.d_in, 1, rho.data().to_vec()).unwrap();
        let out = self.matrix.matmul(&v);
        ComplexMatrix::from_vec(self.d_out, self.d_out, out.into_data()).unwrap()
    }

    /// `next ∘ self`
    pub fn then(&self, next: &Self) -> Self {
        assert_eq!(self.d_out, next.d_in, "composition dimension");
        Self { d_in: self.d_in, d_out: next.d_out, matrix: next.matrix.matmul(&self.matrix) }
    }
}

/// Default wire labels for a single-timestep map: output 1^o, input 1^i.
pub fn default_wires(d_in: usize, d_out: usize) -> (WireList, WireList) {
    (WireList::single(SpaceLabel::output(1), d_out), WireList::single(SpaceLabel::input(1), d_in))
}

/// C = (S ⊗ 1)(Ψ) with unnormalised Ψ = Σ|ii⟩⟨jj|, on the default wires.
pub fn choi_from_superoperator(s: &Superoperator) -> ChoiOperator {
    let (di, dout) = (s.d_in, s.d_out);
    let m = ComplexMatrix::from_fn(dout * di, dout * di, |r, c| {
        let (a, i) = (r / di, r % di);
        let (b, j) = (c / di, c % di);
        s.matrix[(a * dout + b, i * di + j)]
    });
    let (out, inp) = default_wires(di, dout);
    ChoiOperator::new(m, out, inp).expect("dimensions consistent")
}

/// Inverse of [`choi_from_superoperator`].
pub fn superoperator_from_choi(c: &ChoiOperator) -> Superoperator {
    let (di, dout) = (c.d_in(), c.d_out());
    let m = ComplexMatrix::from_fn(dout * dout, di * di, |r, col| {
        let (a, b) = (r / dout, r % dout);
        let (i, j) = (col / di, col % di);
        c.matrix[(a * di + i, b * di + j)]
    });
    Superoperator { d_in: di, d_out: dout, matrix: m }
}

/// tr_i[(1_o ⊗ ρᵀ) C]
pub fn apply_choi(c: &ChoiOperator, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !rho.is_square() || rho.rows() != c.d_in() {
        return Err(Error::Dimension(format!("input of dimension {} for a map on {}", rho.rows(), c.d_in())));
    }
    if c.in_wires.is_empty() {
        return Ok(c.matrix.scale(rho[(0, 0)]));
    }
    let (out, _) = partial_contract(&c.matrix, &c.wires(), rho, &c.in_wires)?;
    Ok(out)
}

/// Kraus operators (d_out × d_in each).
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::Dimension("empty Kraus set".into()))?;
        let shape = (first.rows(), first.cols());
        if operators.iter().any(|k| (k.rows(), k.cols()) != shape) {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        Ok(Self { operators })
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.operators[0].rows());
        for k in &self.operators {
            out += &k.matmul(rho).matmul(&k.adjoint());
        }
        out
    }

    /// Σ K†K
    pub fn completeness(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.operators[0].cols());
        for k in &self.operators {
            out += &k.adjoint().matmul(k);
        }
        out
    }

    pub fn to_superoperator(&self) -> Superoperator {
        Superoperator::from_kraus(&self.operators)
    }
}

/// Kraus decomposition from the spectral decomposition of C; only
/// eigenvalues above the clip contribute.
pub fn kraus_from_choi(c: &ChoiOperator) -> Result<KrausSet> {
    let (vals, vecs) = eigh(&c.matrix)?;
    let tr: f64 = vals.iter().sum();
    if vals[0] < -EPS_POS * tr.abs().max(1.0) {
        return Err(Error::NotCptp(format!("not completely positive (eigenvalue {:.3e})", vals[0])));
    }
    let (dout, di) = (c.d_out(), c.d_in());
    let cut = EPS_EIG * tr.abs().max(1.0);
    let mut ops = Vec::new();
    for (k, &l) in vals.iter().enumerate().rev() {
        if l <= cut {
            continue;
        }
        let s = l.sqrt();
        ops.push(ComplexMatrix::from_fn(dout, di, |a, i| vecs[(a * di + i, k)] * s));
    }
    if ops.is_empty() {
        ops.push(ComplexMatrix::zeros_rect(dout, di));
    }
    KrausSet::new(ops)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelReport {
    pub cp: bool,
    pub tp: bool,
    pub trace_nonincreasing: bool,
    pub min_eigenvalue: f64,
    pub tp_deviation: f64,
}

pub fn validate_channel(c: &ChoiOperator) -> ChannelReport {
    let vals = match eigvalsh(&c.matrix) {
        Ok(v) => v,
        Err(_) => {
            return ChannelReport {
                cp: false,
                tp: false,
                trace_nonincreasing: false,
                min_eigenvalue: f64::NAN,
                tp_deviation: f64::NAN,
            }
        }
    };
    let tr: f64 = vals.iter().sum();
    let min = vals[0];
    let cp = min >= -EPS_POS * tr.abs().max(1.0);
    let reduced = if c.in_wires.is_empty() {
        ComplexMatrix::scalar(c.matrix.trace())
    } else {
        partial_trace(&c.matrix, &c.wires(), &c.in_wires.labels()).expect("own wires").0
    };
    let id = ComplexMatrix::identity(reduced.dim());
    let tp_deviation = reduced.max_abs_diff(&id);
    let tp = tp_deviation <= EPS_TR;
    let gap = &id - &reduced;
    let trace_nonincreasing = eigvalsh(&gap).map(|v| v[0] >= -EPS_TR).unwrap_or(false);
    ChannelReport { cp, tp, trace_nonincreasing, min_eigenvalue: min, tp_deviation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random::{random_density, random_kraus};
    use crate::tensor::{pauli_x, pauli_z};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psi(d: usize) -> ComplexMatrix {
        ChoiOperator::identity_channel(SpaceLabel::output(1), SpaceLabel::input(1), d).into_matrix()
    }

    #[test]
    fn identity_map_gives_psi() {
        let c = choi_from_superoperator(&Superoperator::identity(2));
        let corners = ComplexMatrix::from_real(
            4,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        );
        assert_eq!(c.matrix(), &corners);
    }

    #[test]
    fn bit_flip_gives_phi_plus() {
        let c = choi_from_superoperator(&Superoperator::from_unitary(&pauli_x()));
        let phi = ComplexMatrix::from_real(
            4,
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(c.matrix(), &phi);
        let out = apply_choi(&c, &ComplexMatrix::basis_projector(2, 0)).unwrap();
        assert_eq!(out, ComplexMatrix::basis_projector(2, 1));
    }

    #[test]
    fn depolarising_choi() {
        let s = Superoperator::from_fn(2, 2, |r| ComplexMatrix::identity(2).scale(r.trace() * 0.5));
        let c = choi_from_superoperator(&s);
        assert!(c.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_re(0.5)) < 1e-15);
        for k in 0..4 {
            let mut unit = ComplexMatrix::zeros(2);
            unit[(k / 2, k % 2)] = C64::new(1.0, 0.0);
            let out = apply_choi(&c, &unit).unwrap();
            assert!(out.max_abs_diff(&ComplexMatrix::identity(2).scale(unit.trace() * 0.5)) < 1e-15);
        }
    }

    #[test]
    fn apply_matches_kraus_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ks = random_kraus(&mut rng, 2, 3, 3);
        let set = KrausSet::new(ks.clone()).unwrap();
        let c = choi_from_superoperator(&Superoperator::from_kraus(&ks));
        let rho = random_density(&mut rng, 2);
        assert!(apply_choi(&c, &rho).unwrap().max_abs_diff(&set.apply(&rho)) < 1e-12);
        let id = ChoiOperator::identity_channel(SpaceLabel::output(1), SpaceLabel::input(1), 2);
        assert!(apply_choi(&id, &rho).unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn kraus_extraction_ranks() {
        let unitary = kraus_from_choi(&ChoiOperator::new(psi(2), default_wires(2, 2).0, default_wires(2, 2).1).unwrap()).unwrap();
        assert_eq!(unitary.len(), 1);
        let k = &unitary.operators[0];
        let phase = k[(0, 0)];
        assert!(k.max_abs_diff(&ComplexMatrix::identity(2).scale(phase)) < 1e-12);
        assert!((phase.norm() - 1.0).abs() < 1e-12);

        let (o, i) = default_wires(2, 2);
        let dep = ChoiOperator::new(ComplexMatrix::identity(4).scale_re(0.5), o.clone(), i.clone()).unwrap();
        let kd = kraus_from_choi(&dep).unwrap();
        assert_eq!(kd.len(), 4);
        assert!(kd.completeness().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);

        let p: f64 = 0.3;
        let deph = Superoperator::from_kraus(&[
            ComplexMatrix::identity(2).scale_re((1.0 - p).sqrt()),
            pauli_z().scale_re(p.sqrt()),
        ]);
        assert_eq!(kraus_from_choi(&choi_from_superoperator(&deph)).unwrap().len(), 2);
    }

    #[test]
    fn kraus_rejects_non_positive() {
        let (o, i) = default_wires(2, 2);
        let swap = ChoiOperator::new(transpose_choi(), o, i).unwrap();
        assert!(matches!(kraus_from_choi(&swap), Err(Error::NotCptp(_))));
    }

    fn transpose_choi() -> ComplexMatrix {
        choi_from_superoperator(&Superoperator::from_fn(2, 2, |r| r.transpose())).into_matrix()
    }

    #[test]
    fn channel_reports() {
        let (o, i) = default_wires(2, 2);
        let r = validate_channel(&ChoiOperator::new(psi(2), o.clone(), i.clone()).unwrap());
        assert!(r.cp && r.tp && r.trace_nonincreasing);
        let swap = transpose_choi();
        let mut expect_swap = ComplexMatrix::zeros(4);
        for a in 0..2 {
            for b in 0..2 {
                expect_swap[(a * 2 + b, b * 2 + a)] = C64::new(1.0, 0.0);
            }
        }
        assert_eq!(swap, expect_swap);
        let r = validate_channel(&ChoiOperator::new(swap, o.clone(), i.clone()).unwrap());
        assert!(!r.cp && r.tp);
        let r = validate_channel(&ChoiOperator::new(psi(2).scale_re(0.5), o, i).unwrap());
        assert!(r.cp && !r.tp && r.trace_nonincreasing);
    }

    #[test]
    fn tensor_orders_outputs_first() {
        let a = ChoiOperator::identity_channel(SpaceLabel::output(2), SpaceLabel::input(2), 2);
        let rho = ChoiOperator::state(ComplexMatrix::basis_projector(2, 1), WireList::single(SpaceLabel::output(1), 2)).unwrap();
        let t = a.tensor(&rho).unwrap();
        assert_eq!(t.out_wires().labels(), vec![SpaceLabel::output(2), SpaceLabel::output(1)]);
        assert_eq!(t.in_wires().labels(), vec![SpaceLabel::input(2)]);
        let (back, _) = partial_trace(t.matrix(), &t.wires(), &[SpaceLabel::output(1)]).unwrap();
        assert!(back.max_abs_diff(&ComplexMatrix::basis_projector(2, 1).scale_re(2.0)) < 1e-15);
    }
}
