use std::f64::consts::FRAC_1_SQRT_2;

use super::choi::{validate_channel, ChoiOperator};
use crate::error::{Error, Result};
use crate::process::comb::comb_report;
use crate::tensor::{
    eigvalsh, kron, pauli_x, pauli_y, pauli_z, reorder_to, ComplexMatrix, Direction, SpaceLabel, WireList, C64,
    EPS_POS, EPS_TR,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstrumentKind {
    Povm,
    Instrument,
    Tester,
}

/// Labelled collection of Choi operators on a common set of wires.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    elements: Vec<(String, ChoiOperator)>,
    kind: InstrumentKind,
}

impl Instrument {
    /// All elements are brought to the wire order of the first one.
    pub fn new(elements: Vec<(String, ChoiOperator)>, kind: InstrumentKind) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidInstrument("no elements".into()))?.1.clone();
        let mut out = Vec::with_capacity(elements.len());
        for (label, el) in elements {
            let el = if el.wires() == first.wires() {
                el
            } else {
                let m = reorder_to(el.matrix(), &el.wires(), &first.wires())
                    .map_err(|e| Error::InvalidInstrument(format!("element {label}: {e}")))?;
                ChoiOperator::new(m, first.out_wires().clone(), first.in_wires().clone())?
            };
            out.push((label, el));
        }
        Ok(Self { elements: out, kind })
    }

    /// POVM from effect operators Π; elements are stored in Choi form Πᵀ.
    pub fn povm(effects: Vec<(String, ComplexMatrix)>, wires: WireList) -> Result<Self> {
        let elements = effects
            .into_iter()
            .map(|(l, e)| Ok((l, ChoiOperator::from_povm_element(&e, wires.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, InstrumentKind::Povm)
    }

    pub fn elements(&self) -> &[(String, ChoiOperator)] {
        &self.elements
    }

    pub fn kind(&self) -> InstrumentKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn wires(&self) -> WireList {
        self.elements[0].1.wires()
    }

    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Sum of all elements.
    pub fn sum(&self) -> ChoiOperator {
        let first = &self.elements[0].1;
        let mut m = ComplexMatrix::zeros(first.matrix().dim());
        for (_, el) in &self.elements {
            m += el.matrix();
        }
        ChoiOperator::new(m, first.out_wires().clone(), first.in_wires().clone()).expect("same wires")
    }

    /// Apply `f` to every wire label of every element.
    pub fn map_labels(&self, f: impl Fn(&SpaceLabel) -> SpaceLabel) -> Result<Self> {
        let elements =
            self.elements.iter().map(|(l, e)| Ok((l.clone(), e.map_labels(&f)?))).collect::<Result<Vec<_>>>()?;
        Self::new(elements, self.kind)
    }

    /// Move a single-timestep instrument to timestep `t`.
    pub fn at_timestep(&self, t: i64) -> Result<Self> {
        self.map_labels(|l| SpaceLabel { timestep: t, ..l.clone() })
    }

    /// Elementwise tensor product with another instrument on disjoint wires;
    /// labels are joined with `,`.
    pub fn product(&self, other: &Self, kind: InstrumentKind) -> Result<Self> {
        let mut elements = Vec::with_capacity(self.len() * other.len());
        for (la, a) in &self.elements {
            for (lb, b) in &other.elements {
                elements.push((format!("{la},{lb}"), a.tensor(b)?));
            }
        }
        Self::new(elements, kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentReport {
    pub valid: bool,
    pub kind: InstrumentKind,
    pub element_min_eigenvalues: Vec<f64>,
    pub all_positive: bool,
    /// Deviation of the summed element from the kind's normalisation.
    pub sum_deviation: f64,
    pub failure: Option<String>,
}

pub fn validate_instrument(ins: &Instrument) -> InstrumentReport {
    let mut mins = Vec::with_capacity(ins.len());
    let mut failure = None;
    for (label, el) in ins.elements() {
        match eigvalsh(el.matrix()) {
            Ok(v) => {
                let tr: f64 = v.iter().sum();
                if v[0] < -EPS_POS * tr.abs().max(1.0) && failure.is_none() {
                    failure = Some(format!("element {label} is not positive (eigenvalue {:.3e})", v[0]));
                }
                mins.push(v[0]);
            }
            Err(e) => {
                failure.get_or_insert(format!("element {label}: {e}"));
                mins.push(f64::NAN);
            }
        }
    }
    let all_positive = failure.is_none();
    let sum = ins.sum();
    let sum_deviation = match ins.kind() {
        InstrumentKind::Povm => {
            if !sum.out_wires().is_empty() {
                failure.get_or_insert("POVM elements must not have output wires".into());
            }
            sum.matrix().max_abs_diff(&ComplexMatrix::identity(sum.matrix().dim()))
        }
        InstrumentKind::Instrument => {
            let r = validate_channel(&sum);
            r.tp_deviation
        }
        InstrumentKind::Tester => {
            let r = comb_report(sum.matrix(), &sum.wires(), Direction::Output);
            if let Some(e) = &r.structure_error {
                failure.get_or_insert(format!("tester structure: {e}"));
            }
            r.levels.iter().map(|&(_, d)| d).fold(r.normalisation_deviation, f64::max)
        }
    };
    if sum_deviation > EPS_TR || sum_deviation.is_nan() {
        failure.get_or_insert(format!("summed element deviates from normalisation by {sum_deviation:.3e}"));
    }
    InstrumentReport {
        valid: failure.is_none(),
        kind: ins.kind(),
        element_min_eigenvalues: mins,
        all_positive,
        sum_deviation,
        failure,
    }
}

const TETRAHEDRON: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

fn bloch(r: [f64; 3], scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(2);
    for (k, p) in [pauli_x(), pauli_y(), pauli_z()].iter().enumerate() {
        m += &p.scale_re(r[k] * scale);
    }
    m
}

/// Effect operators Π⁽ᵇ⁾ = ¼(1 + β⁽ᵇ⁾·σ/√3).
pub fn tetrahedral_effects() -> Vec<ComplexMatrix> {
    TETRAHEDRON.iter().map(|&b| bloch(b, 1.0 / 3f64.sqrt()).scale_re(0.25)).collect()
}

/// Dual operators Δ⁽ᵇ⁾ = ½(1 + √3 β⁽ᵇ⁾·σ) of the tetrahedral effects.
pub fn tetrahedral_duals() -> Vec<ComplexMatrix> {
    TETRAHEDRON.iter().map(|&b| bloch(b, 3f64.sqrt()).scale_re(0.5)).collect()
}

/// Symmetric informationally complete qubit POVM on wire 1^i.
pub fn tetrahedral_povm() -> Instrument {
    tetrahedral_povm_on(SpaceLabel::input(1))
}

pub fn tetrahedral_povm_on(label: SpaceLabel) -> Instrument {
    let effects = tetrahedral_effects().into_iter().enumerate().map(|(b, e)| (format!("b{}", b + 1), e)).collect();
    Instrument::povm(effects, WireList::single(label, 2)).expect("fixed construction")
}

/// Projective z-basis measurement on a qubit wire.
pub fn computational_povm_on(label: SpaceLabel, dim: usize) -> Instrument {
    let effects = (0..dim).map(|k| (k.to_string(), ComplexMatrix::basis_projector(dim, k))).collect();
    Instrument::povm(effects, WireList::single(label, dim)).expect("fixed construction")
}

/// Uniform preparations of |0⟩, |1⟩, |+⟩ and |+y⟩ on an output wire.
pub fn ic_preparations(label: SpaceLabel) -> Vec<(f64, ChoiOperator)> {
    let h = FRAC_1_SQRT_2;
    let kets = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(h, 0.0), C64::new(0.0, h)],
    ];
    kets.iter()
        .map(|k| {
            let st = ChoiOperator::state(ComplexMatrix::projector(k), WireList::single(label.clone(), 2)).unwrap();
            (0.25, st)
        })
        .collect()
}

/// Measure-and-reprepare instrument: elements p_s ρ⁽ˢ⁾ ⊗ Π⁽ʳ⁾ with the POVM
/// element in Choi form.
pub fn causal_break_instrument(povm: &Instrument, preparations: &[(f64, ChoiOperator)]) -> Result<Instrument> {
    if povm.kind() != InstrumentKind::Povm {
        return Err(Error::InvalidInstrument("causal break needs a POVM".into()));
    }
    let report = validate_instrument(povm);
    if !report.valid {
        return Err(Error::InvalidInstrument(report.failure.unwrap_or_default()));
    }
    let total: f64 = preparations.iter().map(|(p, _)| p).sum();
    if (total - 1.0).abs() > 1e-12 || preparations.iter().any(|(p, _)| *p < 0.0) {
        return Err(Error::InvalidInstrument(format!("preparation probabilities sum to {total}")));
    }
    let mut elements = Vec::with_capacity(povm.len() * preparations.len());
    for (s, (p, state)) in preparations.iter().enumerate() {
        if !state.in_wires().is_empty() {
            return Err(Error::InvalidInstrument("preparations must be states".into()));
        }
        let tr = state.matrix().trace();
        if (tr.re - 1.0).abs() > EPS_TR || tr.im.abs() > EPS_TR {
            return Err(Error::Normalization(tr.re));
        }
        for (r, el) in povm.elements() {
            let m = kron(&state.matrix().scale_re(*p), el.matrix());
            let op = ChoiOperator::new(m, state.out_wires().clone(), el.in_wires().clone())?;
            elements.push((format!("s{}r{r}", s + 1), op));
        }
    }
    Instrument::new(elements, InstrumentKind::Instrument)
}

/// The four unnormalised Bell operators Ψ±, Φ± on two qubit wires, in the
/// order Ψ⁺, Φ⁺, Φ⁻, Ψ⁻ (|00⟩±|11⟩ and |01⟩±|10⟩ in the first/second factor).
pub fn bell_operators() -> Vec<ComplexMatrix> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let vs = [[one, zero, zero, one], [zero, one, one, zero], [zero, one, -one, zero], [one, zero, zero, -one]];
    vs.iter().map(|v| ComplexMatrix::projector(v)).collect()
}
