use crate::channels::{choi_from_superoperator, validate_channel, KrausSet, Superoperator};
use crate::error::{Error, Result};
use crate::tensor::{kron, permute_subsystems, trace_out, ComplexMatrix, SpaceLabel, Wire, WireList};

use super::ProcessTensor;

/// Starting point of a dilation.
#[derive(Clone, Debug)]
pub enum InitialCondition {
    /// Joint system-environment state, system factor first. The process
    /// begins by emitting the system on an input wire.
    Joint { state: ComplexMatrix, d_system: usize },
    /// Environment state alone. The process begins with an output wire
    /// feeding a system of dimension `d_system`.
    Environment { state: ComplexMatrix, d_system: usize },
}

/// Map applied to the system and all attached environments.
#[derive(Clone, Debug)]
pub enum StepMap {
    Unitary(ComplexMatrix),
    Superoperator(Superoperator),
    Kraus(KrausSet),
}

impl StepMap {
    fn dim(&self) -> usize {
        match self {
            StepMap::Unitary(u) => u.dim(),
            StepMap::Superoperator(s) => s.d_in(),
            StepMap::Kraus(k) => k.operators[0].cols(),
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        let square = match self {
            StepMap::Unitary(u) => u.is_square(),
            StepMap::Superoperator(s) => s.d_in() == s.d_out(),
            StepMap::Kraus(k) => k.operators.iter().all(|o| o.is_square()),
        };
        if !square || self.dim() != d {
            return Err(Error::Dimension(format!("map of dimension {} on a block of dimension {d}", self.dim())));
        }
        let dev = match self {
            StepMap::Unitary(u) => u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(d)),
            StepMap::Superoperator(s) => {
                let r = validate_channel(&choi_from_superoperator(s));
                if !r.cp {
                    return Err(Error::NotCptp(format!("minimum Choi eigenvalue {:.3e}", r.min_eigenvalue)));
                }
                r.tp_deviation
            }
            StepMap::Kraus(k) => k.completeness().max_abs_diff(&ComplexMatrix::identity(d)),
        };
        if dev > 1e-8 {
            return Err(Error::NotCptp(format!("trace preservation deviation {dev:.3e}")));
        }
        Ok(())
    }
}

/// Sequential construction of a process tensor from a system-environment
/// dilation. The internal operator has factors [S?, E₁..E_k, W] where W are
/// the process wires collected so far, latest first.
#[derive(Clone, Debug)]
pub struct DilationBuilder {
    matrix: ComplexMatrix,
    d_system: usize,
    has_system: bool,
    env_dims: Vec<usize>,
    process: WireList,
    t: i64,
}

impl DilationBuilder {
    /// Start at timestep `t0`.
    pub fn new(initial: InitialCondition, t0: i64) -> Result<Self> {
        let (state, d_system, has_system) = match initial {
            InitialCondition::Joint { state, d_system } => (state, d_system, true),
            InitialCondition::Environment { state, d_system } => (state, d_system, false),
        };
        if d_system == 0 || !state.is_square() {
            return Err(Error::Dimension("invalid initial state".into()));
        }
        let d_env = if has_system {
            if state.dim() % d_system != 0 {
                return Err(Error::Dimension(format!(
                    "joint state of dimension {} has no system factor of dimension {d_system}",
                    state.dim()
                )));
            }
            state.dim() / d_system
        } else {
            state.dim()
        };
        let tr = state.trace().re;
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::Normalization(tr));
        }
        let env_dims = if d_env > 1 { vec![d_env] } else { Vec::new() };
        Ok(Self { matrix: state, d_system, has_system, env_dims, process: WireList::empty(), t: t0 })
    }

    pub fn timestep(&self) -> i64 {
        self.t
    }

    pub fn env_dims(&self) -> &[usize] {
        &self.env_dims
    }

    fn internal_wires(&self) -> WireList {
        let mut ws = Vec::new();
        if self.has_system {
            ws.push(Wire::new(internal("S"), self.d_system));
        }
        for (k, &d) in self.env_dims.iter().enumerate() {
            ws.push(Wire::new(internal(&format!("E{k}")), d));
        }
        ws.extend(self.process.iter().cloned());
        WireList::new(ws).expect("distinct internal labels")
    }

    fn block_dim(&self) -> usize {
        let ds = if self.has_system { self.d_system } else { 1 };
        ds * self.env_dims.iter().product::<usize>()
    }

    /// Append an environment factor in the given state after the existing ones.
    pub fn attach_env(&mut self, state: &ComplexMatrix) -> Result<()> {
        let w = self.internal_wires();
        let n_block = usize::from(self.has_system) + self.env_dims.len();
        let joint = kron(state, &self.matrix);
        let mut ws = vec![Wire::new(internal("new"), state.dim())];
        ws.extend(w.iter().cloned());
        let jw = WireList::new(ws)?;
        let mut order: Vec<usize> = (1..=n_block).collect();
        order.push(0);
        order.extend(n_block + 1..jw.len());
        self.matrix = permute_subsystems(&joint, &jw, &order)?.0;
        self.env_dims.push(state.dim());
        Ok(())
    }

    /// Discard environment factor `index`.
    pub fn trace_env(&mut self, index: usize) -> Result<()> {
        if index >= self.env_dims.len() {
            return Err(Error::Parameter(format!("no environment factor {index}")));
        }
        let w = self.internal_wires();
        self.matrix = trace_out(&self.matrix, &w, &[internal(&format!("E{index}"))])?.0;
        self.env_dims.remove(index);
        Ok(())
    }

    /// Apply a CPTP map to the system and environment factors without
    /// touching the process wires.
    pub fn evolve(&mut self, map: &StepMap) -> Result<()> {
        let d = self.block_dim();
        map.check(d)?;
        self.matrix = match map {
            StepMap::Unitary(u) => conjugate_block(&self.matrix, u, d),
            StepMap::Kraus(k) => {
                let mut acc = ComplexMatrix::zeros(self.matrix.dim());
                for op in &k.operators {
                    acc += &conjugate_block(&self.matrix, op, d);
                }
                acc
            }
            StepMap::Superoperator(s) => superoperator_block(&self.matrix, s.matrix(), d),
        };
        Ok(())
    }

    /// Emit the system on `t^i` (if held), take a new system from `t^o`,
    /// apply `map` and advance to the next timestep.
    pub fn step(&mut self, map: &StepMap) -> Result<()> {
        self.ingest()?;
        self.evolve(map)?;
        self.t += 1;
        Ok(())
    }

    fn ingest(&mut self) -> Result<()> {
        let d = self.d_system;
        let w = self.internal_wires();
        let psi = crate::channels::ChoiOperator::identity_channel(SpaceLabel::output(0), SpaceLabel::input(0), d);
        let joint = kron(psi.matrix(), &self.matrix);
        let out_label = SpaceLabel::output(self.t);
        let mut ws = vec![Wire::new(internal("new"), d), Wire::new(out_label.clone(), d)];
        let mut labels = w.wires().to_vec();
        if self.has_system {
            labels[0] = Wire::new(SpaceLabel::input(self.t), d);
        }
        ws.extend(labels);
        let jw = WireList::new(ws)?;
        let n_env = self.env_dims.len();
        let sys_shift = usize::from(self.has_system);
        let env_start = 2 + sys_shift;
        let mut order = vec![0];
        order.extend(env_start..env_start + n_env);
        order.push(1);
        if self.has_system {
            order.push(2);
        }
        order.extend(env_start + n_env..jw.len());
        let (m, pw) = permute_subsystems(&joint, &jw, &order)?;
        self.matrix = m;
        let first_process = 1 + n_env;
        self.process = pw.select(&(first_process..pw.len()).collect::<Vec<_>>());
        self.has_system = true;
        Ok(())
    }

    /// Emit the system on the final input wire. Environment factors are
    /// traced out unless `keep_env`, in which case they become input wires
    /// tagged `E0`, `E1`, ... at the final timestep, ahead of the system.
    pub fn finish(self, keep_env: bool) -> Result<ProcessTensor> {
        let w = self.internal_wires();
        let mut ws = w.wires().to_vec();
        let mut k = 0;
        if self.has_system {
            ws[0] = Wire::new(SpaceLabel::input(self.t), self.d_system);
            k = 1;
        }
        for (e, &d) in self.env_dims.iter().enumerate() {
            ws[k + e] = Wire::new(SpaceLabel::input(self.t).tagged(&format!("E{e}")), d);
        }
        let fw = WireList::new(ws)?;
        let env_labels: Vec<SpaceLabel> = fw.wires()[k..k + self.env_dims.len()].iter().map(|w| w.label.clone()).collect();
        let (m, fw) = if keep_env {
            let mut order: Vec<usize> = (k..k + self.env_dims.len()).collect();
            order.extend(0..k);
            order.extend(k + self.env_dims.len()..fw.len());
            permute_subsystems(&self.matrix, &fw, &order)?
        } else {
            trace_out(&self.matrix, &fw, &env_labels)?
        };
        ProcessTensor::new(m, fw)
    }
}

fn internal(name: &str) -> SpaceLabel {
    SpaceLabel::input(i64::MIN).tagged(&format!("dilation:{name}"))
}

/// (K ⊗ 1) M (K ⊗ 1)† where K acts on the leading factor of dimension d.
fn conjugate_block(m: &ComplexMatrix, k: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let n = m.dim();
    let left = |x: &ComplexMatrix| {
        let reshaped = ComplexMatrix::from_vec(d, n * n / d, x.data().to_vec()).expect("block shape");
        let prod = k.matmul(&reshaped);
        ComplexMatrix::from_vec(n, n, prod.into_data()).expect("block shape")
    };
    left(&left(m).adjoint()).adjoint()
}

/// out[(a,x),(b,y)] = Σ P[(a·d+b),(c·d+e)] M[(c,x),(e,y)]
fn superoperator_block(m: &ComplexMatrix, p: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let n = m.dim();
    let r = n / d;
    let t = ComplexMatrix::from_fn(d * d, r * r, |ce, xy| {
        let (c, e, x, y) = (ce / d, ce % d, xy / r, xy % r);
        m[(c * r + x, e * r + y)]
    });
    let out_t = p.matmul(&t);
    ComplexMatrix::from_fn(n, n, |i, j| {
        let (a, x, b, y) = (i / r, i % r, j / r, j % r);
        out_t[(a * d + b, x * r + y)]
    })
}

/// Run a dilation from `t0`, applying one map per step.
pub fn build_from_dilation(initial: InitialCondition, maps: &[StepMap], t0: i64) -> Result<ProcessTensor> {
    let mut b = DilationBuilder::new(initial, t0)?;
    for map in maps {
        b.step(map)?;
    }
    b.finish(false)
}
