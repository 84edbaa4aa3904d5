//! Property tests for structural invariants.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptensor::channels::{apply_choi, choi_from_superoperator, kraus_from_choi, Superoperator};
use ptensor::classical::{
    classical_cmi, coarse_grain, embed_as_process_tensor, marginalize, markov_order_check, markov_reconstruction,
    random_distribution, random_markov_chain, JointDistribution,
};
use ptensor::io::{process_from_json, process_to_json};
use ptensor::memory::{causal_break_sequence, memory_strength_sequential, Aggregation, MemoryBlockSpec};
use ptensor::process::{build_from_dilation, marginal_process, validate_process, InitialCondition, StepMap};
use ptensor::tensor::random::{random_density, random_kraus, random_positive, random_unitary};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_alphabets(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| r.gen_range(2..=3)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequential_marginals_match_one_shot(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alph = random_alphabets(&mut r, 4);
        let d = random_distribution(&mut r, alph);
        let direct = marginalize(&d, &[1, 3]).unwrap();
        let staged = marginalize(&marginalize(&d, &[1, 2, 3]).unwrap(), &[1, 3]).unwrap();
        prop_assert_eq!(direct.alphabets(), staged.alphabets());
        prop_assert!(max_diff(direct.probs(), staged.probs()) <= 1e-14);
    }

    #[test]
    fn markov_chains_have_vanishing_cmi_and_exact_reconstruction(seed in any::<u64>(), dim in 2usize..4) {
        let mut r = rng(seed);
        let d = random_markov_chain(&mut r, dim, 4);
        prop_assert!(markov_order_check(&d, 1).holds);
        prop_assert!(classical_cmi(&d, &[4], &[3], &[1, 2]).unwrap().abs() <= 1e-10);
        prop_assert!(max_diff(markov_reconstruction(&d, 1).probs(), d.probs()) <= 1e-12);
    }

    #[test]
    fn cmi_is_nonnegative_and_detects_memory(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alph = random_alphabets(&mut r, 3);
        let d = random_distribution(&mut r, alph);
        let cmi = classical_cmi(&d, &[3], &[2], &[1]).unwrap();
        let check = markov_order_check(&d, 1);
        prop_assert!(cmi >= -1e-12);
        prop_assert_eq!(cmi > 1e-10, !check.holds);
    }

    #[test]
    fn coarse_graining_preserves_normalisation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = random_distribution(&mut r, vec![3, 3, 3]);
        let lumping: Vec<Vec<usize>> = (0..3).map(|_| vec![0, 1, r.gen_range(0..2)]).collect();
        let g = coarse_grain(&d, &lumping).unwrap();
        prop_assert!((g.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn distribution_json_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alph = random_alphabets(&mut r, 3);
        let d = random_distribution(&mut r, alph);
        let back = JointDistribution::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(back.probs(), d.probs());
    }

    #[test]
    fn embedding_commutes_with_marginals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = random_distribution(&mut r, vec![2, 2, 2]);
        let via_process = marginal_process(&embed_as_process_tensor(&d).unwrap(), &[1, 2]).unwrap();
        let via_distribution = embed_as_process_tensor(&marginalize(&d, &[1, 2]).unwrap()).unwrap();
        prop_assert_eq!(via_process.wires(), via_distribution.wires());
        prop_assert!(via_process.matrix().max_abs_diff(via_distribution.matrix()) <= 1e-12);
    }

    #[test]
    fn choi_kraus_round_trip(seed in any::<u64>(), d_in in 1usize..4, d_out in 1usize..4, rank in 1usize..5) {
        let mut r = rng(seed);
        let ks = random_kraus(&mut r, d_in, d_out, rank.max(d_in.div_ceil(d_out)));
        let choi = choi_from_superoperator(&Superoperator::from_kraus(&ks));
        let back = choi_from_superoperator(&Superoperator::from_kraus(&kraus_from_choi(&choi).unwrap().operators));
        prop_assert!(choi.matrix().max_abs_diff(back.matrix()) <= 1e-10);
        let rho = random_density(&mut r, d_in);
        prop_assert!((apply_choi(&choi, &rho).unwrap().trace().re - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dilated_processes_are_valid_and_serialise_exactly(seed in any::<u64>()) {
        let mut r = rng(seed);
        let joint = random_positive(&mut r, 4);
        let joint = joint.scale_re(1.0 / joint.trace().re);
        let maps = vec![StepMap::Unitary(random_unitary(&mut r, 4)), StepMap::Unitary(random_unitary(&mut r, 4))];
        let p = build_from_dilation(InitialCondition::Joint { state: joint, d_system: 2 }, &maps, 1).unwrap();
        prop_assert!(validate_process(&p).pass);
        let back = process_from_json(&process_to_json(&p).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), p.matrix());

        let block = MemoryBlockSpec::from_memory_timesteps(p.wires(), &[2]).unwrap();
        let parts = causal_break_sequence(p.wires(), &block.memory).unwrap();
        let avg = memory_strength_sequential(&p, &parts, &block, Aggregation::Average).unwrap().scalar().unwrap();
        let max = memory_strength_sequential(&p, &parts, &block, Aggregation::Maximum).unwrap().scalar().unwrap();
        prop_assert!(avg >= -1e-12);
        prop_assert!(avg <= max + 1e-12);
    }
}
