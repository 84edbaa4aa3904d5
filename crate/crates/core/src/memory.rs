//! Quantum Markov order: conditional future/history decompositions, memory
//! strengths with respect to instruments on the memory block, and the
//! quantum conditional mutual information.

use crate::channels::{
    build_dual_set, causal_break_instrument, computational_povm_on, ic_preparations, tetrahedral_povm_on, ChoiOperator,
    Instrument, InstrumentKind,
};
use crate::error::{Error, Result};
use crate::process::{contract_operator, ProcessTensor};
use crate::tensor::{
    kron, kron_all, mutual_information, partial_trace, reorder_to, trace_out, von_neumann_entropy, ComplexMatrix,
    Direction, SpaceLabel, WireList,
};

/// Default threshold (bits) below which the conditional mutual information
/// counts as vanishing.
pub const MARKOV_ORDER_TOL: f64 = 1e-7;

/// Partition of the wires of a process into future, memory and history.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryBlockSpec {
    pub future: Vec<SpaceLabel>,
    pub memory: Vec<SpaceLabel>,
    pub history: Vec<SpaceLabel>,
}

impl MemoryBlockSpec {
    pub fn new(future: Vec<SpaceLabel>, memory: Vec<SpaceLabel>, history: Vec<SpaceLabel>) -> Self {
        Self { future, memory, history }
    }

    /// Everything before `memory` in canonical order is future, everything
    /// after it is history.
    pub fn around(wires: &WireList, memory: &[SpaceLabel]) -> Result<Self> {
        let canonical = wires.select(&wires.canonical_permutation()).labels();
        let mut pos = Vec::new();
        for l in memory {
            pos.push(canonical.iter().position(|c| c == l).ok_or_else(|| Error::Label(l.to_string()))?);
        }
        let (lo, hi) = (*pos.iter().min().ok_or(Error::Parameter("empty memory".into()))?, *pos.iter().max().unwrap());
        let spec = Self {
            future: canonical[..lo].to_vec(),
            memory: canonical[lo..=hi].to_vec(),
            history: canonical[hi + 1..].to_vec(),
        };
        if spec.memory.len() != memory.len() {
            return Err(Error::Parameter("memory wires are not contiguous".into()));
        }
        Ok(spec)
    }

    /// Memory made of all wires of the given timesteps.
    pub fn from_memory_timesteps(wires: &WireList, timesteps: &[i64]) -> Result<Self> {
        let memory: Vec<SpaceLabel> = wires.labels().into_iter().filter(|l| timesteps.contains(&l.timestep)).collect();
        Self::around(wires, &memory)
    }

    /// Disjointness, coverage of `wires`, nonempty parts and contiguity of the memory.
    pub fn check(&self, wires: &WireList) -> Result<()> {
        if self.future.is_empty() || self.memory.is_empty() || self.history.is_empty() {
            return Err(Error::Parameter("future, memory and history must all be nonempty".into()));
        }
        let all: Vec<&SpaceLabel> = self.future.iter().chain(&self.memory).chain(&self.history).collect();
        for (k, l) in all.iter().enumerate() {
            if !wires.contains(l) {
                return Err(Error::Label(format!("{l} is not a wire of the process")));
            }
            if all[..k].contains(l) {
                return Err(Error::Overlap(format!("{l} appears in more than one part")));
            }
        }
        if all.len() != wires.len() {
            return Err(Error::Parameter("partition does not cover every wire".into()));
        }
        let canonical = wires.select(&wires.canonical_permutation()).labels();
        let pos: Vec<usize> =
            self.memory.iter().map(|l| canonical.iter().position(|c| c == l).unwrap()).collect();
        if pos.iter().max().unwrap() - pos.iter().min().unwrap() + 1 != pos.len() {
            return Err(Error::Parameter("memory wires are not contiguous".into()));
        }
        Ok(())
    }
}

fn output_dim(w: &WireList, labels: &[SpaceLabel]) -> usize {
    labels.iter().filter(|l| l.is_output()).map(|l| w.dim_of(l).unwrap()).product()
}

/// Conditional processes for one outcome of an instrument on the memory.
#[derive(Clone, Debug)]
pub struct ConditionalSplit {
    pub label: String,
    /// Υ̃_FH = tr_M[O⁽ˣ⁾ᵀ Υ]
    pub joint: ComplexMatrix,
    pub joint_wires: WireList,
    /// Υ_F normalised to trace Π d_{F^o}; `None` for a null outcome.
    pub future: Option<ProcessTensor>,
    /// Υ̃_H, the future discarded with a deterministic tester.
    pub history: ComplexMatrix,
    pub history_wires: WireList,
    /// tr Υ̃_H / Π d_{H^o}: outcome probability when the history is fed
    /// maximally mixed states.
    pub weight: f64,
}

impl ConditionalSplit {
    /// max |Υ̃_FH − Υ_F ⊗ Υ̃_H| after reordering.
    pub fn product_deviation(&self) -> Result<f64> {
        let Some(f) = &self.future else { return Ok(self.joint.max_abs()) };
        let w = f.wires().concat(&self.history_wires)?;
        let prod = reorder_to(&kron(f.matrix(), &self.history), &w, &self.joint_wires)?;
        Ok(prod.max_abs_diff(&self.joint))
    }
}

const NULL_TRACE: f64 = 1e-13;

fn check_instrument(p: &ProcessTensor, ins: &Instrument, block: &MemoryBlockSpec) -> Result<()> {
    block.check(p.wires())?;
    let w = ins.wires();
    if w.len() != block.memory.len() || block.memory.iter().any(|l| !w.contains(l)) {
        return Err(Error::Label(format!("instrument wires {w} do not match the memory block")));
    }
    Ok(())
}

fn split_of(p: &ProcessTensor, block: &MemoryBlockSpec, label: String, joint: ComplexMatrix, jw: WireList) -> Result<ConditionalSplit> {
    let d_fo = output_dim(p.wires(), &block.future) as f64;
    let d_ho = output_dim(p.wires(), &block.history) as f64;
    let tr = joint.trace().re;
    let (h, hw) = trace_out(&joint, &jw, &block.future)?;
    let history = h.scale_re(1.0 / d_fo);
    let future = if tr.abs() > NULL_TRACE {
        let (f, fw) = trace_out(&joint, &jw, &block.history)?;
        Some(ProcessTensor::new(f.scale_re(d_fo / tr), fw)?)
    } else {
        None
    };
    let weight = history.trace().re / d_ho;
    Ok(ConditionalSplit { label, joint, joint_wires: jw, future, history, history_wires: hw, weight })
}

/// Υ̃_FH, Υ_F and Υ̃_H for every element of an instrument on the memory.
pub fn conditional_decomposition(
    p: &ProcessTensor,
    instrument: &Instrument,
    block: &MemoryBlockSpec,
) -> Result<Vec<ConditionalSplit>> {
    check_instrument(p, instrument, block)?;
    instrument
        .elements()
        .iter()
        .map(|(label, el)| {
            let (joint, jw) = contract_operator(p.matrix(), p.wires(), std::slice::from_ref(el))?;
            split_of(p, block, label.clone(), joint, jw)
        })
        .collect()
}

/// Mutual information between future and history of a conditional
/// operator, computed on its trace-normalised form. Null outcomes carry no
/// correlations and give 0.
fn conditional_mi(joint: &ComplexMatrix, jw: &WireList, future: &[SpaceLabel]) -> Result<f64> {
    let tr = joint.trace().re;
    if tr.abs() <= NULL_TRACE {
        return Ok(0.0);
    }
    Ok(mutual_information(&joint.scale_re(1.0 / tr), jw, future)?.max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeStrength {
    pub label: String,
    /// I(F:H) of the normalised conditional operator, in bits.
    pub strength: f64,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    PerOutcome,
    Average,
    Maximum,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MemoryStrength {
    PerOutcome(Vec<OutcomeStrength>),
    Scalar(f64),
}

impl MemoryStrength {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            MemoryStrength::Scalar(v) => Some(*v),
            MemoryStrength::PerOutcome(_) => None,
        }
    }

    pub fn outcomes(&self) -> Option<&[OutcomeStrength]> {
        match self {
            MemoryStrength::PerOutcome(v) => Some(v),
            MemoryStrength::Scalar(_) => None,
        }
    }
}

/// Uniform mean or maximum of per-outcome strengths.
pub fn aggregate(outcomes: Vec<OutcomeStrength>, mode: Aggregation) -> MemoryStrength {
    match mode {
        Aggregation::PerOutcome => MemoryStrength::PerOutcome(outcomes),
        Aggregation::Average => {
            let n = outcomes.len().max(1) as f64;
            MemoryStrength::Scalar(outcomes.iter().map(|o| o.strength).sum::<f64>() / n)
        }
        Aggregation::Maximum => MemoryStrength::Scalar(outcomes.iter().map(|o| o.strength).fold(0.0, f64::max)),
    }
}

/// Memory strength of `p` with respect to an instrument on the memory block.
pub fn memory_strength(
    p: &ProcessTensor,
    instrument: &Instrument,
    block: &MemoryBlockSpec,
    mode: Aggregation,
) -> Result<MemoryStrength> {
    check_instrument(p, instrument, block)?;
    let d_fo = output_dim(p.wires(), &block.future) as f64;
    let d_ho = output_dim(p.wires(), &block.history) as f64;
    let mut out = Vec::with_capacity(instrument.len());
    for (label, el) in instrument.elements() {
        let (joint, jw) = contract_operator(p.matrix(), p.wires(), std::slice::from_ref(el))?;
        let strength = conditional_mi(&joint, &jw, &block.future)?;
        let weight = joint.trace().re / (d_fo * d_ho);
        out.push(OutcomeStrength { label: label.clone(), strength, weight });
    }
    Ok(aggregate(out, mode))
}

/// Memory strength for a product of instruments acting on disjoint parts
/// of the memory, evaluated by contracting one factor at a time so that
/// partial contractions are shared between outcome sequences. Outcome labels
/// are joined by ",".
pub fn memory_strength_sequential(
    p: &ProcessTensor,
    instruments: &[Instrument],
    block: &MemoryBlockSpec,
    mode: Aggregation,
) -> Result<MemoryStrength> {
    block.check(p.wires())?;
    let mut covered: Vec<SpaceLabel> = Vec::new();
    for ins in instruments {
        for l in ins.wires().labels() {
            if covered.contains(&l) {
                return Err(Error::Overlap(format!("{l} is acted on by two instruments")));
            }
            covered.push(l);
        }
    }
    if covered.len() != block.memory.len() || block.memory.iter().any(|l| !covered.contains(l)) {
        return Err(Error::Label("instruments do not cover the memory block exactly".into()));
    }
    let d_fo = output_dim(p.wires(), &block.future) as f64;
    let d_ho = output_dim(p.wires(), &block.history) as f64;
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<String>, ComplexMatrix, WireList)> =
        vec![(0, Vec::new(), p.matrix().clone(), p.wires().clone())];
    while let Some((level, labels, m, w)) = stack.pop() {
        if level == instruments.len() {
            let strength = conditional_mi(&m, &w, &block.future)?;
            let weight = m.trace().re / (d_fo * d_ho);
            out.push(OutcomeStrength { label: labels.join(","), strength, weight });
            continue;
        }
        for (label, el) in instruments[level].elements().iter().rev() {
            let (c, cw) = contract_operator(&m, &w, std::slice::from_ref(el))?;
            let mut l = labels.clone();
            l.push(label.clone());
            stack.push((level + 1, l, c, cw));
        }
    }
    Ok(aggregate(out, mode))
}

/// Single-element instrument applying the identity channel j^i → j^o at each
/// memory timestep. An unpaired output is fed the maximally mixed state and
/// an unpaired input is discarded.
pub fn identity_instrument(wires: &WireList, memory: &[SpaceLabel]) -> Result<Instrument> {
    let mw = wires.select(&wires.positions(memory)?);
    let mut factors: Vec<ChoiOperator> = Vec::new();
    let mut used: Vec<SpaceLabel> = Vec::new();
    for wire in mw.iter() {
        let l = &wire.label;
        if used.contains(l) {
            continue;
        }
        let partner = SpaceLabel { direction: flip(l.direction), ..l.clone() };
        let el = match mw.dim_of(&partner) {
            Some(d) if d == wire.dim => {
                used.push(partner.clone());
                let (o, i) = if l.is_output() { (l.clone(), partner) } else { (partner, l.clone()) };
                ChoiOperator::identity_channel(o, i, d)
            }
            _ => discard_or_feed(l, wire.dim)?,
        };
        used.push(l.clone());
        factors.push(el);
    }
    single_element("identity", factors)
}

/// Single-element instrument feeding maximally mixed states into every
/// memory output and discarding every memory input.
pub fn noise_instrument(wires: &WireList, memory: &[SpaceLabel]) -> Result<Instrument> {
    let mw = wires.select(&wires.positions(memory)?);
    let factors = mw.iter().map(|w| discard_or_feed(&w.label, w.dim)).collect::<Result<Vec<_>>>()?;
    single_element("noise", factors)
}

fn flip(d: Direction) -> Direction {
    match d {
        Direction::Input => Direction::Output,
        Direction::Output => Direction::Input,
    }
}

fn discard_or_feed(l: &SpaceLabel, d: usize) -> Result<ChoiOperator> {
    let w = WireList::single(l.clone(), d);
    if l.is_output() {
        ChoiOperator::state(ComplexMatrix::identity(d).scale_re(1.0 / d as f64), w)
    } else {
        ChoiOperator::effect(ComplexMatrix::identity(d), w)
    }
}

fn single_element(name: &str, factors: Vec<ChoiOperator>) -> Result<Instrument> {
    let mut it = factors.into_iter();
    let mut acc = it.next().ok_or_else(|| Error::Parameter("empty memory".into()))?;
    for f in it {
        acc = acc.tensor(&f)?;
    }
    Instrument::new(vec![(name.to_string(), acc)], crate::channels::InstrumentKind::Instrument)
}

/// Measure-and-reprepare instruments on the given wires, one per timestep
/// (latest first). Qubit inputs are measured with the tetrahedral POVM and
/// qubit outputs receive one of the four informationally complete states
/// uniformly; other dimensions use the computational basis. Several wires of
/// one direction at a timestep are probed independently.
pub fn causal_break_sequence(wires: &WireList, labels: &[SpaceLabel]) -> Result<Vec<Instrument>> {
    let sel = wires.select(&wires.positions(labels)?);
    let mut out = Vec::new();
    for t in sel.timesteps() {
        let here: Vec<&crate::tensor::Wire> = sel.iter().filter(|w| w.label.timestep == t).collect();
        let mut povm: Option<Instrument> = None;
        let mut preps: Option<Vec<(f64, ChoiOperator)>> = None;
        for w in &here {
            let l = w.label.clone();
            if l.is_input() {
                let m = if w.dim == 2 { tetrahedral_povm_on(l) } else { computational_povm_on(l, w.dim) };
                povm = Some(match povm {
                    None => m,
                    Some(prev) => prev.product(&m, InstrumentKind::Povm)?,
                });
            } else {
                let set = if w.dim == 2 {
                    ic_preparations(l)
                } else {
                    let single = WireList::single(l, w.dim);
                    (0..w.dim)
                        .map(|k| {
                            Ok((1.0 / w.dim as f64, ChoiOperator::state(ComplexMatrix::basis_projector(w.dim, k), single.clone())?))
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                preps = Some(match preps {
                    None => set,
                    Some(prev) => {
                        let mut joint = Vec::with_capacity(prev.len() * set.len());
                        for (p, a) in &prev {
                            for (q, b) in &set {
                                joint.push((p * q, a.tensor(b)?));
                            }
                        }
                        joint
                    }
                });
            }
        }
        out.push(match (povm, preps) {
            (Some(m), Some(p)) => causal_break_instrument(&m, &p)?,
            (Some(m), None) => m,
            (None, Some(p)) => {
                let els = p.into_iter().enumerate().map(|(k, (w, s))| (format!("s{}", k + 1), s.scale(w))).collect();
                Instrument::new(els, InstrumentKind::Instrument)?
            }
            (None, None) => unreachable!("timesteps come from the selected wires"),
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialInstrument {
    /// Identity channels on the memory.
    Natural,
    /// Maximally mixed feeds and discarded inputs.
    NoiseResistant,
}

pub fn special_memory_strength(p: &ProcessTensor, block: &MemoryBlockSpec, kind: SpecialInstrument) -> Result<f64> {
    block.check(p.wires())?;
    let ins = match kind {
        SpecialInstrument::Natural => identity_instrument(p.wires(), &block.memory)?,
        SpecialInstrument::NoiseResistant => noise_instrument(p.wires(), &block.memory)?,
    };
    Ok(memory_strength(p, &ins, block, Aggregation::Maximum)?.scalar().unwrap())
}

/// I(F:H|M) = S(FM) + S(MH) − S(FMH) − S(M) on Υ / tr Υ.
pub fn quantum_cmi(p: &ProcessTensor, block: &MemoryBlockSpec) -> Result<f64> {
    block.check(p.wires())?;
    let rho = p.normalised();
    let w = p.wires();
    let s = |keep: Vec<SpaceLabel>| -> Result<f64> { von_neumann_entropy(&partial_trace(&rho, w, &keep)?.0) };
    let cat = |a: &[SpaceLabel], b: &[SpaceLabel]| a.iter().chain(b).cloned().collect::<Vec<_>>();
    let s_fm = s(cat(&block.future, &block.memory))?;
    let s_mh = s(cat(&block.memory, &block.history))?;
    let s_m = s(block.memory.clone())?;
    let s_all = von_neumann_entropy(&rho)?;
    Ok(s_fm + s_mh - s_all - s_m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovOrderReport {
    pub holds: bool,
    /// Largest per-outcome I(F:H).
    pub max_violation: f64,
    pub worst_outcome: Option<String>,
}

/// Finite Markov order with respect to `instrument`: every conditional
/// future/history pair has mutual information ≤ `tol`.
pub fn has_markov_order(
    p: &ProcessTensor,
    instrument: &Instrument,
    block: &MemoryBlockSpec,
    tol: f64,
) -> Result<MarkovOrderReport> {
    let per = memory_strength(p, instrument, block, Aggregation::PerOutcome)?;
    let outcomes = per.outcomes().unwrap();
    let worst = outcomes.iter().max_by(|a, b| a.strength.total_cmp(&b.strength));
    let max_violation = worst.map_or(0.0, |o| o.strength);
    Ok(MarkovOrderReport {
        holds: max_violation <= tol,
        max_violation,
        worst_outcome: worst.map(|o| o.label.clone()),
    })
}

/// Expansion Υ = Σₓ Υ̃_FH⁽ˣ⁾ ⊗ Δ⁽ˣ⁾* + R, with {Δ⁽ˣ⁾} dual to the instrument
/// elements. R is returned in the wire order of `p` and is annihilated by
/// contraction with any instrument element.
#[derive(Clone, Debug)]
pub struct DualExpansion {
    pub splits: Vec<ConditionalSplit>,
    pub duals: Vec<ComplexMatrix>,
    pub remainder: ComplexMatrix,
}

pub fn dual_expansion(p: &ProcessTensor, instrument: &Instrument, block: &MemoryBlockSpec) -> Result<DualExpansion> {
    let splits = conditional_decomposition(p, instrument, block)?;
    let mats: Vec<ComplexMatrix> = instrument.elements().iter().map(|(_, e)| e.matrix().clone()).collect();
    let duals = build_dual_set(&mats)?.duals;
    let mw = instrument.wires();
    let mut remainder = p.matrix().clone();
    for (s, d) in splits.iter().zip(&duals) {
        let w = s.joint_wires.concat(&mw)?;
        let term = reorder_to(&kron_all([&s.joint, &d.conj()]), &w, p.wires())?;
        remainder = &remainder - &term;
    }
    Ok(DualExpansion { splits, duals, remainder })
}
