use rand::Rng;

use super::{embed_operator, swap_gate};
use crate::channels::{ChoiOperator, Instrument, InstrumentKind};
use crate::error::{Error, Result};
use crate::process::{DilationBuilder, InitialCondition, ProcessTensor, StepMap};
use crate::tensor::random::random_unitary;
use crate::tensor::{kron, ComplexMatrix, SpaceLabel, WireList, EPS_TR};

/// Repeated-interaction model where step j collides the system with
/// ancillas A_j, ..., A_{j+ℓ−1}.
#[derive(Clone, Debug)]
pub struct CollisionModel {
    pub ell: usize,
    /// Number of steps; the process runs on wires 0^o, 1^i, ..., n^i.
    pub n: usize,
    /// `unitaries[j][k]` acts on (S, A_{j+k}), system factor first.
    pub unitaries: Vec<Vec<ComplexMatrix>>,
    pub ancilla_init: ComplexMatrix,
    /// Reverse the collision order within each step.
    pub flip: bool,
}

/// Haar-random pair unitaries for every collision of the model.
pub fn random_collision_unitaries<R: Rng + ?Sized>(
    rng: &mut R,
    ell: usize,
    n: usize,
    d_system: usize,
    d_ancilla: usize,
) -> Vec<Vec<ComplexMatrix>> {
    (0..n).map(|_| (0..ell).map(|_| random_unitary(rng, d_system * d_ancilla)).collect()).collect()
}

/// Step j applies Ũ_j = U^{SA_j} ··· U^{SA_{j+ℓ−1}}, so the newest ancilla
/// collides first and A_j, which carries the oldest information, last.
/// A_j is then discarded; each ancilla meets the system in ℓ steps.
pub fn collision_process_tensor(m: &CollisionModel) -> Result<ProcessTensor> {
    if m.ell == 0 || m.n == 0 {
        return Err(Error::Parameter("collision model needs ell ≥ 1 and n ≥ 1".into()));
    }
    if m.unitaries.len() != m.n || m.unitaries.iter().any(|u| u.len() != m.ell) {
        return Err(Error::Dimension(format!("expected {} × {} collision unitaries", m.n, m.ell)));
    }
    let da = m.ancilla_init.dim();
    let pair = m.unitaries[0][0].dim();
    if pair % da != 0 {
        return Err(Error::Dimension(format!("pair unitary of dimension {pair} with ancilla dimension {da}")));
    }
    let ds = pair / da;
    if m.unitaries.iter().flatten().any(|u| u.dim() != pair || !u.is_square()) {
        return Err(Error::Dimension("collision unitaries differ in dimension".into()));
    }
    let mut b = DilationBuilder::new(
        InitialCondition::Environment { state: ComplexMatrix::identity(1), d_system: ds },
        0,
    )?;
    for _ in 0..m.ell - 1 {
        b.attach_env(&m.ancilla_init)?;
    }
    let mut dims = vec![ds];
    dims.extend(std::iter::repeat(da).take(m.ell));
    for j in 0..m.n {
        b.attach_env(&m.ancilla_init)?;
        // Factor k + 1 of [S, A_j, ..., A_{j+ℓ−1}] holds A_{j+k}.
        let mut total = ComplexMatrix::identity(dims.iter().product());
        let order: Vec<usize> = if m.flip { (0..m.ell).collect() } else { (0..m.ell).rev().collect() };
        for k in order {
            let g = embed_operator(&m.unitaries[j][k], &dims, &[0, k + 1])?;
            total = g.matmul(&total);
        }
        b.step(&StepMap::Unitary(total))?;
        b.trace_env(0)?;
    }
    Ok(b.finish(false)?.with_metadata("ell", m.ell).with_metadata("flip", m.flip))
}

/// Instrument that discards the input at t^i and prepares σ_k on t^o with
/// probability p_k: elements p_k σ_k ⊗ 1.
pub fn trash_and_prepare_instrument(timestep: i64, preparations: &[(f64, ComplexMatrix)]) -> Result<Instrument> {
    let total: f64 = preparations.iter().map(|(p, _)| p).sum();
    if preparations.is_empty() || (total - 1.0).abs() > 1e-12 || preparations.iter().any(|(p, _)| *p < 0.0) {
        return Err(Error::InvalidInstrument(format!("preparation probabilities sum to {total}")));
    }
    let mut elements = Vec::new();
    for (k, (p, sigma)) in preparations.iter().enumerate() {
        let tr = sigma.trace().re;
        if (tr - 1.0).abs() > EPS_TR {
            return Err(Error::Normalization(tr));
        }
        let d = sigma.dim();
        let m = kron(&sigma.scale_re(*p), &ComplexMatrix::identity(d));
        let op = ChoiOperator::new(
            m,
            WireList::single(SpaceLabel::output(timestep), d),
            WireList::single(SpaceLabel::input(timestep), d),
        )?;
        elements.push((format!("p{}", k + 1), op));
    }
    Instrument::new(elements, InstrumentKind::Instrument)
}

/// Chain where the first interaction swaps the system into A_1 and each
/// later step passes the stored state to the next ancilla, until the last
/// interaction swaps it back. Fresh ancillas start in |0⟩. Wires 0^o..n^i.
pub fn swap_chain_process(n: usize) -> Result<ProcessTensor> {
    if n < 2 {
        return Err(Error::Parameter(format!("swap chain needs n ≥ 2, got {n}")));
    }
    let tau = ComplexMatrix::basis_projector(2, 0);
    let swap = swap_gate(2);
    let mut b =
        DilationBuilder::new(InitialCondition::Environment { state: ComplexMatrix::identity(1), d_system: 2 }, 0)?;
    // Step 1: [S, A1, A2]; G^{A2A1} G^{SA1}.
    b.attach_env(&tau)?;
    b.attach_env(&tau)?;
    let first = embed_operator(&swap, &[2, 2, 2], &[1, 2])?.matmul(&embed_operator(&swap, &[2, 2, 2], &[0, 1])?);
    b.step(&StepMap::Unitary(first))?;
    b.trace_env(0)?;
    // Steps 2..n−1: [S, A_j, A_{j+1}]; G^{A_{j+1}A_j}.
    for _ in 2..n {
        b.attach_env(&tau)?;
        b.step(&StepMap::Unitary(embed_operator(&swap, &[2, 2, 2], &[1, 2])?))?;
        b.trace_env(0)?;
    }
    // Step n: [S, A_n]; G^{SA_n}.
    b.step(&StepMap::Unitary(swap))?;
    b.finish(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{choi_from_superoperator, Superoperator};
    use crate::memory::{memory_strength, Aggregation, MemoryBlockSpec};
    use crate::process::{contract, markov_marginal, non_markovianity, validate_process};
    use crate::tensor::random::{random_density, random_kraus};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(seed: u64, ell: usize, n: usize, flip: bool) -> CollisionModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CollisionModel {
            ell,
            n,
            unitaries: random_collision_unitaries(&mut rng, ell, n, 2, 2),
            ancilla_init: ComplexMatrix::basis_projector(2, 0),
            flip,
        }
    }

    #[test]
    fn memoryless_collisions_are_markov() {
        let p = collision_process_tensor(&model(3, 1, 3, false)).unwrap();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        assert_eq!(p.wires().labels()[0], SpaceLabel::input(3));
        assert!(non_markovianity(&p).unwrap() < 1e-8);
        let mk = markov_marginal(&p).unwrap();
        assert!(p.matrix().max_abs_diff(mk.matrix()) < 1e-9);
    }

    #[test]
    fn trash_and_prepare_blocks_memory_of_length_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = collision_process_tensor(&model(5, 2, 4, false)).unwrap();
        { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
        assert!(non_markovianity(&p).unwrap() > 1e-6);
        let block = MemoryBlockSpec::from_memory_timesteps(p.wires(), &[2, 3]).unwrap();
        let preps: Vec<(f64, ComplexMatrix)> = (0..3).map(|_| (1.0 / 3.0, random_density(&mut rng, 2))).collect();
        let ins = trash_and_prepare_instrument(3, &preps)
            .unwrap()
            .product(&trash_and_prepare_instrument(2, &preps).unwrap(), InstrumentKind::Instrument)
            .unwrap();
        let s = memory_strength(&p, &ins, &block, Aggregation::Maximum).unwrap().scalar().unwrap();
        assert!(s < 1e-8, "{s}");
    }

    #[test]
    fn swap_chain_transmits_the_initial_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3, 4] {
            let p = swap_chain_process(n).unwrap();
            { let r = validate_process(&p); assert!(r.pass, "{:?}", r); }
            let chois: Vec<ChoiOperator> = (1..n as i64)
                .map(|t| {
                    let s = Superoperator::from_kraus(&random_kraus(&mut rng, 2, 2, 3));
                    choi_from_superoperator(&s)
                        .relabel(
                            WireList::single(SpaceLabel::output(t), 2),
                            WireList::single(SpaceLabel::input(t), 2),
                        )
                        .unwrap()
                })
                .collect();
            let (m, w) = contract(&p, &chois).unwrap();
            assert_eq!(w.labels(), vec![SpaceLabel::input(n as i64), SpaceLabel::output(0)]);
            let psi = ChoiOperator::identity_channel(SpaceLabel::input(n as i64), SpaceLabel::output(0), 2);
            assert!(m.max_abs_diff(psi.matrix()) < 1e-10);
        }
    }

    #[test]
    fn bad_dimensions() {
        let mut m = model(1, 2, 3, false);
        m.unitaries.pop();
        assert!(collision_process_tensor(&m).is_err());
        assert!(swap_chain_process(1).is_err());
        assert!(trash_and_prepare_instrument(1, &[(0.5, ComplexMatrix::identity(2).scale_re(0.5))]).is_err());
    }
}
