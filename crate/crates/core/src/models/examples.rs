use std::f64::consts::FRAC_1_SQRT_2;

use crate::channels::{bell_operators, tetrahedral_duals, tetrahedral_effects, ChoiOperator, Instrument, InstrumentKind};
use crate::error::{Error, Result};
use crate::process::{born_probability, build_from_dilation, InitialCondition, ProcessTensor, StepMap};
use crate::tensor::{eigvalsh, kron, kron_all, ComplexMatrix, SpaceLabel, Wire, WireList, C64, EPS_POS};

/// Unnormalised Bell vectors |00⟩+|11⟩, |01⟩+|10⟩, |01⟩−|10⟩, |00⟩−|11⟩:
/// the Choi vectors of 1, X, ZX and Z.
fn bell_vectors() -> [[C64; 4]; 4] {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z, z, o], [z, o, o, z], [z, o, -o, z], [o, z, z, -o]]
}

/// Coherent mixture of the four Pauli sequences controlled by a ququart
/// ancilla: |Υ⟩ = Σₓ aₓ |x⟩_A ⊗ |Bₓ⟩^{⊗(n−1)}, with Bell pairs on
/// (k^i, k−1^o). The ancilla is fed out at n^i (tag "A") when
/// `keep_ancilla`; otherwise it is traced, leaving Σ|aₓ|² |Bₓ⟩⟨Bₓ|^{⊗(n−1)}.
pub fn pauli_control_process(amplitudes: [C64; 4], n: usize, keep_ancilla: bool) -> Result<ProcessTensor> {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Normalization(norm));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("pauli control needs n ≥ 2, got {n}")));
    }
    let n_i = n as i64;
    let mut ws = Vec::new();
    if keep_ancilla {
        ws.push(Wire::new(SpaceLabel::input(n_i).tagged("A"), 4));
    }
    for k in (2..=n_i).rev() {
        ws.push(Wire::new(SpaceLabel::input(k), 2));
        ws.push(Wire::new(SpaceLabel::output(k - 1), 2));
    }
    let wires = WireList::new(ws)?;
    let chain = |x: usize| {
        let v = ComplexMatrix::from_vec(4, 1, bell_vectors()[x].to_vec()).expect("fixed shape");
        kron_all(std::iter::repeat(&v).take(n - 1))
    };
    let matrix = if keep_ancilla {
        let d = wires.total_dim();
        let mut psi = ComplexMatrix::zeros_rect(d, 1);
        for (x, a) in amplitudes.iter().enumerate() {
            let mut e = ComplexMatrix::zeros_rect(4, 1);
            e[(x, 0)] = *a;
            psi += &kron(&e, &chain(x));
        }
        psi.matmul(&psi.adjoint())
    } else {
        let d = wires.total_dim();
        let mut acc = ComplexMatrix::zeros(d);
        for (x, a) in amplitudes.iter().enumerate() {
            let v = chain(x);
            acc += &v.matmul(&v.adjoint()).scale_re(a.norm_sqr());
        }
        acc
    };
    Ok(ProcessTensor::new(matrix, wires)?.with_metadata("keep_ancilla", keep_ancilla))
}

fn embed_qubit_in_qutrit(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |r, c| if r < 2 && c < 2 { m[(r, c)] } else { C64::new(0.0, 0.0) })
}

/// Process with trivial outputs at 1 and 2 feeding out the parts of
/// ρ(q, r) = q μ(r) + (1 − q) σ ⊗ |2⟩⟨2| ⊗ σ on (3^i, 2^i, 1^i), where 2^i
/// is a qutrit, σ = |0⟩⟨0| and μ(r) = Σₓ ¼ ρ⁽ˣ⁾(r) ⊗ Δ⁽ˣ⁾ pairs the Werner
/// states ρ⁽ˣ⁾ = r βₓ + (1 − r) 1/4 with the tetrahedral duals.
pub fn werner_process(q: f64, r: f64) -> Result<ProcessTensor> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("q = {q} outside (0, 1)")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!("r = {r} outside (0, 1)")));
    }
    let id4 = ComplexMatrix::identity(4).scale_re(0.25);
    let duals = tetrahedral_duals();
    // Factor order (3^i, 1^i, 2^i), reordered on construction.
    let mut mu = ComplexMatrix::zeros(12);
    for (beta, delta) in bell_operators().iter().zip(&duals) {
        let werner = &beta.scale_re(0.5 * r) + &id4.scale_re(1.0 - r);
        mu += &kron(&werner, &embed_qubit_in_qutrit(delta)).scale_re(0.25);
    }
    let sigma = ComplexMatrix::basis_projector(2, 0);
    let rest = kron_all([&sigma, &sigma, &ComplexMatrix::basis_projector(3, 2)]);
    let rho = &mu.scale_re(q) + &rest.scale_re(1.0 - q);
    let min = eigvalsh(&rho)?[0];
    if min < -EPS_POS {
        return Err(Error::Positivity(min));
    }
    let wires = WireList::from_pairs([
        (SpaceLabel::input(3), 2),
        (SpaceLabel::input(1), 2),
        (SpaceLabel::input(2), 3),
        (SpaceLabel::output(2), 1),
        (SpaceLabel::output(1), 1),
    ])?;
    Ok(ProcessTensor::new(rho, wires)?.with_metadata("sigma", "|0><0|"))
}

fn qutrit_element(label: &str, effect: &ComplexMatrix) -> Result<(String, ChoiOperator)> {
    let op = ChoiOperator::new(
        effect.transpose(),
        WireList::single(SpaceLabel::output(2), 1),
        WireList::single(SpaceLabel::input(2), 3),
    )?;
    Ok((label.to_string(), op))
}

/// {1 − |2⟩⟨2|, |2⟩⟨2|} on the qutrit at 2^i.
pub fn werner_fuzzy_instrument() -> Result<Instrument> {
    let p2 = ComplexMatrix::basis_projector(3, 2);
    let rest = &ComplexMatrix::identity(3) - &p2;
    Instrument::new(vec![qutrit_element("01", &rest)?, qutrit_element("2", &p2)?], InstrumentKind::Povm)
}

/// Tetrahedral POVM on levels {0, 1} together with |2⟩⟨2|.
pub fn werner_sharp_instrument() -> Result<Instrument> {
    let mut els = Vec::new();
    for (b, e) in tetrahedral_effects().iter().enumerate() {
        els.push(qutrit_element(&format!("b{}", b + 1), &embed_qubit_in_qutrit(e))?);
    }
    els.push(qutrit_element("2", &ComplexMatrix::basis_projector(3, 2))?);
    Instrument::new(els, InstrumentKind::Povm)
}

/// Tripartite state Σ_b ¼ ρ_A⁽ᵇ⁾ ⊗ Δ_B⁽ᵇ⁾ ⊗ ρ_C⁽ᵇ⁾ with ρ⁽ᵇ⁾ = (3/8)1 + ½Π⁽ᵇ⁾,
/// normalised and fed out at A = 1^i, B = 2^i, C = 3^i; outputs are trivial.
pub fn tetrahedral_tripartite_process() -> ProcessTensor {
    let effects = tetrahedral_effects();
    let duals = tetrahedral_duals();
    let mut rho = ComplexMatrix::zeros(8);
    for (pi, delta) in effects.iter().zip(&duals) {
        let local = &ComplexMatrix::identity(2).scale_re(3.0 / 8.0) + &pi.scale_re(0.5);
        rho += &kron_all([&local, delta, &local]).scale_re(0.25);
    }
    let tr = rho.trace().re;
    let wires = WireList::from_pairs([
        (SpaceLabel::input(3), 2),
        (SpaceLabel::input(2), 2),
        (SpaceLabel::output(2), 1),
        (SpaceLabel::input(1), 2),
        (SpaceLabel::output(1), 1),
    ])
    .expect("distinct labels");
    ProcessTensor::new(rho.scale_re(1.0 / tr), wires).expect("fixed construction")
}

/// Three-step qubit process with no environment, starting in |+⟩ and
/// evolving trivially: wires 1^i, 1^o, 2^i, 2^o, 3^i.
pub fn stern_gerlach_process() -> Result<ProcessTensor> {
    let h = FRAC_1_SQRT_2;
    let plus = ComplexMatrix::projector(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
    let id = StepMap::Unitary(ComplexMatrix::identity(2));
    build_from_dilation(InitialCondition::Joint { state: plus, d_system: 2 }, &[id.clone(), id], 1)
}

/// Joint outcome probabilities of sequential spin measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct SternGerlachTable {
    pub measured_t2: bool,
    /// (outcomes, probability). Outcomes list t1 (z), t2 (x, if measured)
    /// and t3 (z); outcome k is the projector onto |k⟩ or onto |+⟩ (0), |−⟩ (1).
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl SternGerlachTable {
    pub fn probability(&self, outcomes: &[usize]) -> Option<f64> {
        self.entries.iter().find(|(o, _)| o == outcomes).map(|(_, p)| *p)
    }

    /// Sum over the outcome at t2, giving a table over (t1, t3).
    pub fn marginalise_t2(&self) -> Vec<(Vec<usize>, f64)> {
        if !self.measured_t2 {
            return self.entries.clone();
        }
        let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
        for (o, p) in &self.entries {
            let key = vec![o[0], o[2]];
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some(e) => e.1 += p,
                None => out.push((key, *p)),
            }
        }
        out
    }
}

/// z at t1 and t3, x at t2 when `measure_at_t2`, otherwise the identity at t2.
pub fn stern_gerlach_statistics(measure_at_t2: bool) -> Result<SternGerlachTable> {
    let p = stern_gerlach_process()?;
    let h = FRAC_1_SQRT_2;
    let z = [ComplexMatrix::basis_projector(2, 0), ComplexMatrix::basis_projector(2, 1)];
    let x = [
        ComplexMatrix::projector(&[C64::new(h, 0.0), C64::new(h, 0.0)]),
        ComplexMatrix::projector(&[C64::new(h, 0.0), C64::new(-h, 0.0)]),
    ];
    let measure = |proj: &ComplexMatrix, t: i64| {
        ChoiOperator::new(
            kron(proj, &proj.transpose()),
            WireList::single(SpaceLabel::output(t), 2),
            WireList::single(SpaceLabel::input(t), 2),
        )
    };
    let last = |proj: &ComplexMatrix| ChoiOperator::effect(proj.transpose(), WireList::single(SpaceLabel::input(3), 2));
    let mut entries = Vec::new();
    for a in 0..2 {
        for c in 0..2 {
            let outer = measure(&z[a], 1)?.tensor(&last(&z[c])?)?;
            if measure_at_t2 {
                for b in 0..2 {
                    let el = outer.tensor(&measure(&x[b], 2)?)?;
                    entries.push((vec![a, b, c], born_probability(&p, &el)?));
                }
            } else {
                let el = outer.tensor(&ChoiOperator::identity_channel(SpaceLabel::output(2), SpaceLabel::input(2), 2))?;
                entries.push((vec![a, c], born_probability(&p, &el)?));
            }
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(SternGerlachTable { measured_t2: measure_at_t2, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{has_markov_order, memory_strength, quantum_cmi, Aggregation, MemoryBlockSpec};
    use crate::process::{non_markovianity, validate_process};
    use crate::tensor::shannon_entropy;

    fn pauli_block(n: i64) -> MemoryBlockSpec {
        let mid = 3;
        MemoryBlockSpec::new(
            vec![SpaceLabel::input(n).tagged("A"), SpaceLabel::input(n), SpaceLabel::output(mid)],
            vec![SpaceLabel::input(mid), SpaceLabel::output(mid - 1)],
            vec![SpaceLabel::input(mid - 1), SpaceLabel::output(mid - 2)],
        )
    }

    fn bell_instrument() -> Instrument {
        let els = bell_operators()
            .into_iter()
            .enumerate()
            .map(|(x, b)| {
                let op = ChoiOperator::from_wires(
                    b.scale_re(0.25),
                    WireList::from_pairs([(SpaceLabel::input(3), 2), (SpaceLabel::output(2), 2)]).unwrap(),
                )
                .unwrap();
                (x.to_string(), op)
            })
            .collect();
        Instrument::new(els, InstrumentKind::Instrument).unwrap()
    }

    #[test]
    fn pauli_control_cmi_is_control_entropy() {
        let amps = [0.6, 0.0, 0.48, 0.64].map(|a| C64::new(a, 0.0));
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let p = pauli_control_process(amps, 4, true).unwrap();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        assert_eq!(p.wires().labels()[0], SpaceLabel::input(4).tagged("A"));
        let cmi = quantum_cmi(&p, &pauli_block(4)).unwrap();
        assert!((cmi - shannon_entropy(&probs)).abs() < 1e-8, "{cmi}");
        let per = memory_strength(&p, &bell_instrument(), &pauli_block(4), Aggregation::Maximum).unwrap();
        assert!(per.scalar().unwrap() < 1e-8);
    }

    #[test]
    fn traced_pauli_control_is_classical_mixture() {
        let p = pauli_control_process([C64::new(0.5, 0.0); 4], 4, false).unwrap();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        let mut block = pauli_block(4);
        block.future.remove(0);
        assert!(quantum_cmi(&p, &block).unwrap().abs() < 1e-8);
        assert!(non_markovianity(&p).unwrap() > 0.1);
        assert!(pauli_control_process([C64::new(0.6, 0.0); 4], 3, true).is_err());
    }

    fn werner_block() -> MemoryBlockSpec {
        MemoryBlockSpec::new(
            vec![SpaceLabel::input(3)],
            vec![SpaceLabel::output(2), SpaceLabel::input(2)],
            vec![SpaceLabel::output(1), SpaceLabel::input(1)],
        )
    }

    #[test]
    fn werner_markov_order_depends_on_resolution() {
        let p = werner_process(0.5, 0.3).unwrap();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        let fuzzy = has_markov_order(&p, &werner_fuzzy_instrument().unwrap(), &werner_block(), 1e-8).unwrap();
        assert!(fuzzy.holds, "{fuzzy:?}");
        let sharp = has_markov_order(&p, &werner_sharp_instrument().unwrap(), &werner_block(), 1e-8).unwrap();
        assert!(!sharp.holds && sharp.max_violation > 1e-3);
        assert!(quantum_cmi(&p, &werner_block()).unwrap() > 0.1);
    }

    #[test]
    fn werner_positivity_window() {
        assert!(matches!(werner_process(0.5, 0.6), Err(Error::Positivity(_))));
        assert!(werner_process(0.5, 1.0 / 3.0).is_ok());
        assert!(werner_process(1.5, 0.2).is_err());
    }

    #[test]
    fn tetrahedral_example() {
        let p = tetrahedral_tripartite_process();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        let block = MemoryBlockSpec::new(
            vec![SpaceLabel::input(3)],
            vec![SpaceLabel::output(2), SpaceLabel::input(2)],
            vec![SpaceLabel::output(1), SpaceLabel::input(1)],
        );
        assert!((quantum_cmi(&p, &block).unwrap() - 0.059).abs() < 1e-3);
        let povm = crate::channels::tetrahedral_povm_on(SpaceLabel::input(2));
        let trivial = Instrument::new(
            vec![("_".into(), ChoiOperator::state(ComplexMatrix::identity(1), WireList::single(SpaceLabel::output(2), 1)).unwrap())],
            InstrumentKind::Instrument,
        )
        .unwrap();
        let ins = povm.product(&trivial, InstrumentKind::Povm).unwrap();
        let s = memory_strength(&p, &ins, &block, Aggregation::Maximum).unwrap();
        assert!(s.scalar().unwrap() < 1e-8);
    }

    #[test]
    fn stern_gerlach_tables() {
        let m = stern_gerlach_statistics(true).unwrap();
        assert_eq!(m.entries.len(), 8);
        assert!(m.entries.iter().all(|(_, p)| (p - 0.125).abs() < 1e-15));
        let u = stern_gerlach_statistics(false).unwrap();
        assert!((u.probability(&[1, 1]).unwrap() - 0.5).abs() < 1e-15);
        let marg = m.marginalise_t2();
        assert!(marg.iter().all(|(_, p)| (p - 0.25).abs() < 1e-15));
    }
}
