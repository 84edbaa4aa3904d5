use super::*;
use crate::channels::{ChoiOperator, KrausSet, Superoperator};
use crate::tensor::random::{random_density, random_unitary};
use crate::tensor::{kron, pauli_x};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_joint_process(seed: u64, steps: usize) -> ProcessTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = random_density(&mut rng, 4);
    let maps: Vec<StepMap> = (0..steps).map(|_| StepMap::Unitary(random_unitary(&mut rng, 4))).collect();
    build_from_dilation(InitialCondition::Joint { state, d_system: 2 }, &maps, 1).unwrap()
}

#[test]
fn dilation_produces_valid_process() {
    for steps in 1..=3 {
        let p = random_joint_process(steps as u64, steps);
        assert_eq!(p.n_steps(), steps + 1);
        assert_eq!(p.wires().len(), 2 * steps + 1);
        assert!(p.wires().is_canonical());
        let r = validate_process(&p);
        assert!(r.pass, "{:?}", r.failures);
        assert!((p.trace() - 2f64.powi(steps as i32)).abs() < 1e-10);
    }
}

#[test]
fn environment_start_begins_on_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let env = random_density(&mut rng, 2);
    let maps = vec![StepMap::Unitary(random_unitary(&mut rng, 4)), StepMap::Unitary(random_unitary(&mut rng, 4))];
    let p = build_from_dilation(InitialCondition::Environment { state: env, d_system: 2 }, &maps, 0).unwrap();
    let labels: Vec<String> = p.wires().labels().iter().map(|l| l.to_string()).collect();
    assert_eq!(labels, ["2^i", "1^o", "1^i", "0^o"]);
    assert!(validate_process(&p).pass);
}

#[test]
fn identity_dynamics_gives_identity_channel() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(2), 2);
    let maps = vec![StepMap::Unitary(ComplexMatrix::identity(2))];
    let p = build_from_dilation(InitialCondition::Joint { state: rho.clone(), d_system: 2 }, &maps, 1).unwrap();
    let psi = ChoiOperator::identity_channel(SpaceLabel::output(1), SpaceLabel::input(2), 2);
    assert!(p.matrix().max_abs_diff(&kron(psi.matrix(), &rho)) < 1e-12);
}

#[test]
fn unitary_kraus_and_superoperator_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let state = random_density(&mut rng, 4);
    let u = random_unitary(&mut rng, 4);
    let init = || InitialCondition::Joint { state: state.clone(), d_system: 2 };
    let a = build_from_dilation(init(), &[StepMap::Unitary(u.clone())], 1).unwrap();
    let b = build_from_dilation(init(), &[StepMap::Kraus(KrausSet::new(vec![u.clone()]).unwrap())], 1).unwrap();
    let s = build_from_dilation(init(), &[StepMap::Superoperator(Superoperator::from_unitary(&u))], 1).unwrap();
    assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    assert!(a.matrix().max_abs_diff(s.matrix()) < 1e-12);
}

#[test]
fn non_unitary_map_rejected() {
    let state = ComplexMatrix::identity(4).scale_re(0.25);
    let bad = StepMap::Unitary(ComplexMatrix::identity(4).scale_re(1.1));
    let err = build_from_dilation(InitialCondition::Joint { state, d_system: 2 }, &[bad], 1).unwrap_err();
    assert!(matches!(err, Error::NotCptp(_)));
}

#[test]
fn non_positive_operator_fails_validation() {
    let p = random_joint_process(4, 1);
    let w = p.wires().clone();
    let shifted = p.matrix() - &ComplexMatrix::identity(8).scale_re(0.5);
    let r = validate_operator(&shifted, &w);
    assert!(!r.pass);
    assert!(r.positivity_margin < 0.0);
}

#[test]
fn signalling_operator_fails_hierarchy() {
    // Output at 1 is copied to input 2 but with a bias on 1^o.
    let w = WireList::from_pairs([(SpaceLabel::input(2), 2), (SpaceLabel::output(1), 2), (SpaceLabel::input(1), 2)])
        .unwrap();
    let m = kron(&ComplexMatrix::from_diag(&[1.5, 0.0, 0.0, 0.5]), &ComplexMatrix::from_diag(&[0.5, 0.5]));
    let r = validate_operator(&m, &w);
    assert!(!r.pass);
}

#[test]
fn born_rule_matches_direct_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let state = random_density(&mut rng, 4);
    let u = random_unitary(&mut rng, 4);
    let p = build_from_dilation(InitialCondition::Joint { state: state.clone(), d_system: 2 }, &[StepMap::Unitary(u.clone())], 1)
        .unwrap();
    // Measure 1^i in Z keeping outcome 0, reprepare |+>, measure 2^i in Z outcome 1.
    let p0 = ComplexMatrix::basis_projector(2, 0);
    let p1 = ComplexMatrix::basis_projector(2, 1);
    let plus = ComplexMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]);
    let wires = WireList::from_pairs([(SpaceLabel::input(2), 2), (SpaceLabel::output(1), 2), (SpaceLabel::input(1), 2)])
        .unwrap();
    let element = ChoiOperator::from_wires(kron(&kron(&p1.transpose(), &plus), &p0.transpose()), wires).unwrap();
    let prob = born_probability(&p, &element).unwrap();
    let w = WireList::from_pairs([(SpaceLabel::input(0).tagged("s"), 2), (SpaceLabel::input(0).tagged("e"), 2)])
        .unwrap();
    let proj = kron(&p0, &ComplexMatrix::identity(2));
    let kept = proj.matmul(&state).matmul(&proj);
    let (env, _) = crate::tensor::partial_trace(&kept, &w, &[SpaceLabel::input(0).tagged("e")]).unwrap();
    let joint = kron(&plus, &env).conjugate_by(&u);
    let (sys, _) = crate::tensor::partial_trace(&joint, &w, &[SpaceLabel::input(0).tagged("s")]).unwrap();
    let direct = p1.matmul(&sys).trace().re;
    assert!((prob - direct).abs() < 1e-12);
}

#[test]
fn contraction_rejects_overlap_and_unknown_wires() {
    let p = random_joint_process(5, 1);
    let a = ChoiOperator::effect(ComplexMatrix::identity(2), WireList::single(SpaceLabel::input(1), 2)).unwrap();
    assert!(matches!(contract(&p, &[a.clone(), a.clone()]), Err(Error::Overlap(_))));
    let b = ChoiOperator::effect(ComplexMatrix::identity(2), WireList::single(SpaceLabel::input(7), 2)).unwrap();
    assert!(matches!(contract(&p, &[b]), Err(Error::Label(_))));
}

#[test]
fn marginals_are_valid_processes() {
    let p = random_joint_process(6, 3);
    for keep in [vec![1], vec![1, 2], vec![2, 3], vec![1, 3], vec![1, 2, 4], vec![4]] {
        let m = marginal_process(&p, &keep).unwrap();
        let r = validate_process(&m);
        assert!(r.pass, "keep {keep:?}: {:?}", r.failures);
        let last = *keep.iter().max().unwrap();
        assert_eq!(m.timesteps()[0], last);
    }
    assert!(marginal_process(&p, &[]).is_err());
    assert!(marginal_process(&p, &[9]).is_err());
}

#[test]
fn first_timestep_marginal_is_initial_state() {
    let rho = random_density(&mut ChaCha8Rng::seed_from_u64(8), 4);
    let p = random_joint_process(8, 2);
    let m = marginal_process(&p, &[1]).unwrap();
    let w = WireList::from_pairs([(SpaceLabel::input(0).tagged("s"), 2), (SpaceLabel::input(0).tagged("e"), 2)])
        .unwrap();
    let (expect, _) = crate::tensor::partial_trace(&rho, &w, &[SpaceLabel::input(0).tagged("s")]).unwrap();
    assert!(m.matrix().max_abs_diff(&expect) < 1e-12);
}

#[test]
fn markov_process_has_zero_non_markovianity() {
    // System-only unitaries on a product initial state.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rho = random_density(&mut rng, 2);
    let env = random_density(&mut rng, 2);
    let u = kron(&random_unitary(&mut rng, 2), &ComplexMatrix::identity(2));
    let maps = vec![StepMap::Unitary(u.clone()), StepMap::Unitary(u)];
    let p = build_from_dilation(InitialCondition::Joint { state: kron(&rho, &env), d_system: 2 }, &maps, 1).unwrap();
    let n = non_markovianity(&p).unwrap();
    assert!(n.abs() < 1e-9, "{n}");
    let mk = markov_marginal(&p).unwrap();
    assert!(mk.matrix().max_abs_diff(p.matrix()) < 1e-10);
}

#[test]
fn non_markovianity_routes_agree() {
    for seed in 0..4 {
        let p = random_joint_process(100 + seed, 2);
        let fast = non_markovianity(&p).unwrap();
        let direct = non_markovianity_relative_entropy(&p).unwrap();
        assert!(fast > 1e-6);
        assert!((fast - direct).abs() < 1e-8, "{fast} vs {direct}");
        assert!(validate_process(&markov_marginal(&p).unwrap()).pass);
    }
}

#[test]
fn keep_env_and_attach_env() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut b = DilationBuilder::new(
        InitialCondition::Environment { state: ComplexMatrix::basis_projector(2, 0), d_system: 2 },
        0,
    )
    .unwrap();
    b.step(&StepMap::Unitary(random_unitary(&mut rng, 4))).unwrap();
    b.attach_env(&ComplexMatrix::basis_projector(2, 1)).unwrap();
    assert_eq!(b.env_dims(), &[2, 2]);
    b.step(&StepMap::Unitary(random_unitary(&mut rng, 8))).unwrap();
    b.trace_env(0).unwrap();
    let kept = b.clone().finish(true).unwrap();
    assert_eq!(kept.wires().labels()[0].tag.as_deref(), Some("E0"));
    assert!((kept.trace() - 4.0).abs() < 1e-10);
    let p = b.finish(false).unwrap();
    assert!(validate_process(&p).pass);
    let (traced, w) = trace_out(kept.matrix(), kept.wires(), &[kept.wires().labels()[0].clone()]).unwrap();
    assert_eq!(&w, p.wires());
    assert!(traced.max_abs_diff(p.matrix()) < 1e-12);
}

#[test]
fn validated_attaches_certificate() {
    let p = random_joint_process(1, 1).validated().unwrap();
    assert!(p.certificate().unwrap().pass);
    let flipped = ProcessTensor::new(p.matrix().conjugate_by(&kron(&pauli_x(), &ComplexMatrix::identity(4))), p.wires().clone())
        .unwrap();
    assert!(flipped.validated().is_ok());
    let bad = ProcessTensor::new(p.matrix().scale_re(2.0), p.wires().clone()).unwrap();
    assert!(matches!(bad.validated(), Err(Error::InvalidProcess(_))));
}

#[test]
fn new_canonicalises_wire_order() {
    let p = random_joint_process(2, 1);
    let rev_order: Vec<usize> = (0..p.wires().len()).rev().collect();
    let (m, w) = crate::tensor::permute_subsystems(p.matrix(), p.wires(), &rev_order).unwrap();
    let q = ProcessTensor::new(m, w).unwrap();
    assert_eq!(q.wires(), p.wires());
    assert!(q.matrix().max_abs_diff(p.matrix()) < 1e-14);
}
