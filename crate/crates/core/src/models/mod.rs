//! Concrete process constructions: GKSL dynamics and the solvable
//! two-qubit model, collision models, swap chains and small example
//! processes with finite Markov order.

mod collision;
mod examples;
mod gksl;
mod two_qubit;

pub use collision::{
    collision_process_tensor, random_collision_unitaries, swap_chain_process, trash_and_prepare_instrument,
    CollisionModel,
};
pub use examples::{
    pauli_control_process, stern_gerlach_process, stern_gerlach_statistics, tetrahedral_tripartite_process,
    werner_fuzzy_instrument, werner_process, werner_sharp_instrument, SternGerlachTable,
};
pub use gksl::{
    blp_numeric, c_coefficient, c_derivative, cp_divisible, cp_divisible_sampled, dephasing_rate, liouvillian,
    propagator, two_time_non_markovianity, BlpResult, GkslSpec,
};
pub use two_qubit::{
    analytic_dephasing, reduced_channel, reduced_dynamics_error, select_env_init, two_qubit_generator,
    two_qubit_process_tensor, EnvInit, EnvInitSelection, SigmaConvention, TwoQubitModel,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::ProcessTensor;
use crate::tensor::{ComplexMatrix, C64};

/// `op` acting on the factors `targets` (in that order) of a product space
/// with factor dimensions `dims`, identity elsewhere.
pub fn embed_operator(op: &ComplexMatrix, dims: &[usize], targets: &[usize]) -> Result<ComplexMatrix> {
    let td: usize = targets.iter().map(|&t| dims.get(t).copied().unwrap_or(0)).product();
    if op.rows() != td || op.cols() != td {
        return Err(Error::Dimension(format!("operator of dimension {} on targets of dimension {td}", op.rows())));
    }
    let mut seen = vec![false; dims.len()];
    for &t in targets {
        if std::mem::replace(&mut seen[t], true) {
            return Err(Error::Parameter(format!("target {t} repeated")));
        }
    }
    let total: usize = dims.iter().product();
    let split = |mut i: usize| {
        let mut digits = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            digits[k] = i % dims[k];
            i /= dims[k];
        }
        digits
    };
    let sub = |digits: &[usize]| targets.iter().fold(0, |acc, &t| acc * dims[t] + digits[t]);
    Ok(ComplexMatrix::from_fn(total, total, |r, c| {
        let (dr, dc) = (split(r), split(c));
        if (0..dims.len()).any(|k| !seen[k] && dr[k] != dc[k]) {
            return C64::new(0.0, 0.0);
        }
        op[(sub(&dr), sub(&dc))]
    }))
}

/// SWAP on two factors of dimension d.
pub fn swap_gate(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (a, b) = (r / d, r % d);
        C64::new(if c == b * d + a { 1.0 } else { 0.0 }, 0.0)
    })
}

fn default_amplitudes() -> [f64; 4] {
    [0.5; 4]
}

fn default_true() -> bool {
    true
}

/// JSON model specification, tagged by `"model"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoQubit { xi: f64, kappa: f64, dt: f64, n: usize },
    Collision {
        ell: usize,
        n: usize,
        seed: u64,
        #[serde(default)]
        flip: bool,
    },
    SwapChain { n: usize },
    PauliControl {
        n: usize,
        /// Real amplitudes (α, β, γ, δ).
        #[serde(default = "default_amplitudes")]
        amplitudes: [f64; 4],
        #[serde(default = "default_true")]
        keep_ancilla: bool,
    },
    Werner { q: f64, r: f64 },
    Tetrahedral {},
    SternGerlach {},
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::TwoQubit { .. } => "two-qubit",
            ModelSpec::Collision { .. } => "collision",
            ModelSpec::SwapChain { .. } => "swap-chain",
            ModelSpec::PauliControl { .. } => "pauli-control",
            ModelSpec::Werner { .. } => "werner",
            ModelSpec::Tetrahedral {} => "tetrahedral",
            ModelSpec::SternGerlach {} => "stern-gerlach",
        }
    }

    /// Build the process tensor; every parameter is recorded in its metadata.
    pub fn build(&self) -> Result<ProcessTensor> {
        let p = match self {
            ModelSpec::TwoQubit { xi, kappa, dt, n } => two_qubit_process_tensor(&TwoQubitModel::new(*xi, *kappa, *dt, *n)?)?,
            ModelSpec::Collision { ell, n, seed, flip } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let model = CollisionModel {
                    ell: *ell,
                    n: *n,
                    unitaries: random_collision_unitaries(&mut rng, *ell, *n, 2, 2),
                    ancilla_init: ComplexMatrix::basis_projector(2, 0),
                    flip: *flip,
                };
                collision_process_tensor(&model)?
            }
            ModelSpec::SwapChain { n } => swap_chain_process(*n)?,
            ModelSpec::PauliControl { n, amplitudes, keep_ancilla } => {
                let amps = amplitudes.map(|a| C64::new(a, 0.0));
                pauli_control_process(amps, *n, *keep_ancilla)?
            }
            ModelSpec::Werner { q, r } => werner_process(*q, *r)?,
            ModelSpec::Tetrahedral {} => tetrahedral_tripartite_process(),
            ModelSpec::SternGerlach {} => stern_gerlach_process()?,
        };
        let json = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        let mut p = p;
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                let v = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                p = p.with_metadata(&k, v);
            }
        }
        Ok(p.with_metadata("software", concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"))))
    }
}
