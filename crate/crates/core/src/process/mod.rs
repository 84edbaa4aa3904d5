//! Process tensors: construction by dilation, validation against the causal
//! hierarchy, contraction with instruments, marginals and the Markov
//! marginal with the associated non-Markovianity.

pub mod comb;
mod dilation;

pub use comb::{comb_report, CombReport};
pub use dilation::{build_from_dilation, DilationBuilder, InitialCondition, StepMap};

use std::collections::BTreeMap;

use crate::channels::ChoiOperator;
use crate::error::{Error, Result};
use crate::tensor::{
    eigvalsh, entropy_of_spectrum, kron_all, partial_contract, partial_trace, quantum_relative_entropy,
    reorder_to, trace_out, ComplexMatrix, Direction, SpaceLabel, WireList, EPS_POS, EPS_TR,
};

/// Many-body Choi operator of a multi-time process, wires in canonical
/// order (latest timestep first, output before input).
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessTensor {
    matrix: ComplexMatrix,
    wires: WireList,
    n_steps: usize,
    validated: Option<ProcessReport>,
    metadata: BTreeMap<String, String>,
}

impl ProcessTensor {
    /// Wrap an operator; the wires are brought into canonical order.
    pub fn new(matrix: ComplexMatrix, wires: WireList) -> Result<Self> {
        crate::tensor::check_wired(&matrix, &wires)?;
        let canonical = wires.select(&wires.canonical_permutation());
        let matrix = if canonical == wires { matrix } else { reorder_to(&matrix, &wires, &canonical)? };
        let n_steps = canonical.timesteps().len();
        Ok(Self { matrix, wires: canonical, n_steps, validated: None, metadata: BTreeMap::new() })
    }

    /// Run [`validate_process`] and attach the report; fails if it does not pass.
    pub fn validated(mut self) -> Result<Self> {
        let report = validate_process(&self);
        if !report.pass {
            return Err(Error::InvalidProcess(report.failures.join("; ")));
        }
        self.validated = Some(report);
        Ok(self)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn wires(&self) -> &WireList {
        &self.wires
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Free-form provenance such as model parameters.
    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn certificate(&self) -> Option<&ProcessReport> {
        self.validated.as_ref()
    }

    /// Timesteps, latest first.
    pub fn timesteps(&self) -> Vec<i64> {
        self.wires.timesteps()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Υ / tr Υ
    pub fn normalised(&self) -> ComplexMatrix {
        self.matrix.scale_re(1.0 / self.trace())
    }

    /// Product of output-wire dimensions, the trace of a valid process tensor.
    pub fn output_dim(&self) -> usize {
        self.wires.direction_dim(Direction::Output)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessReport {
    /// Smallest eigenvalue of Υ divided by its trace.
    pub positivity_margin: f64,
    /// Per level (timestep, ‖tr_{j^i}Υ_{j:1} − 1_{j−1^o} ⊗ Υ_{j−1:1}‖_max), latest first.
    pub hierarchy: Vec<(i64, f64)>,
    /// |tr Υ / Π d_o − 1|
    pub trace_deviation: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Positivity and the full causal hierarchy of an operator with wires.
pub fn validate_operator(m: &ComplexMatrix, wires: &WireList) -> ProcessReport {
    let mut failures = Vec::new();
    let tr = m.trace().re;
    let positivity_margin = match eigvalsh(m) {
        Ok(v) => v[0] / tr.abs().max(f64::MIN_POSITIVE),
        Err(e) => {
            failures.push(format!("positivity: {e}"));
            f64::NAN
        }
    };
    if positivity_margin < -EPS_POS {
        failures.push(format!("positivity: minimum eigenvalue/trace {positivity_margin:.3e}"));
    }
    let comb = comb_report(m, wires, Direction::Input);
    if let Some(e) = &comb.structure_error {
        failures.push(format!("structure: {e}"));
    }
    for &(t, dev) in &comb.levels {
        if dev > EPS_TR {
            failures.push(format!("hierarchy at timestep {t}: deviation {dev:.3e}"));
        }
    }
    let d_out = wires.direction_dim(Direction::Output) as f64;
    let trace_deviation = (tr / d_out - 1.0).abs();
    if trace_deviation > EPS_TR || comb.normalisation_deviation > EPS_TR {
        failures.push(format!("trace: {tr} but product of output dimensions is {d_out}"));
    }
    ProcessReport { positivity_margin, hierarchy: comb.levels, trace_deviation, pass: failures.is_empty(), failures }
}

pub fn validate_process(p: &ProcessTensor) -> ProcessReport {
    validate_operator(&p.matrix, &p.wires)
}

/// Link product of Υ with operators on disjoint subsets of its wires:
/// tr_X[(⊗O ᵀ ⊗ 1) Υ]. Remaining wires keep their order.
pub fn contract(p: &ProcessTensor, elements: &[ChoiOperator]) -> Result<(ComplexMatrix, WireList)> {
    contract_operator(&p.matrix, &p.wires, elements)
}

pub fn contract_operator(
    m: &ComplexMatrix,
    wires: &WireList,
    elements: &[ChoiOperator],
) -> Result<(ComplexMatrix, WireList)> {
    let mut seen: Vec<SpaceLabel> = Vec::new();
    for el in elements {
        for l in el.wires().labels() {
            if seen.contains(&l) {
                return Err(Error::Overlap(format!("{l} is contracted twice")));
            }
            if !wires.contains(&l) {
                return Err(Error::Label(format!("{l} is not a wire of the process")));
            }
            seen.push(l);
        }
    }
    let mut cur = (m.clone(), wires.clone());
    for el in elements {
        cur = partial_contract(&cur.0, &cur.1, el.matrix(), &el.wires())?;
    }
    Ok(cur)
}

/// Spatio-temporal Born rule tr[Oᵀ Υ] for an element covering every wire.
pub fn born_probability(p: &ProcessTensor, element: &ChoiOperator) -> Result<f64> {
    let ew = element.wires();
    if ew.len() != p.wires.len() || p.wires.iter().any(|w| !ew.contains(&w.label)) {
        return Err(Error::Label(format!("element wires {ew} do not match process wires {}", p.wires)));
    }
    let (s, _) = contract(p, std::slice::from_ref(element))?;
    Ok(s[(0, 0)].re)
}

/// Labels of a process at one timestep, split by direction.
fn timestep_labels(w: &WireList, t: i64) -> (Vec<SpaceLabel>, Vec<SpaceLabel>) {
    let all = w.labels_at(t);
    let outs = all.iter().filter(|l| l.is_output()).cloned().collect();
    let ins = all.iter().filter(|l| l.is_input()).cloned().collect();
    (outs, ins)
}

/// Process on a subset of timesteps. Dropped intermediate timesteps are
/// contracted with identity channels; timesteps after the last kept one are
/// traced together with its output, divided by the traced output dimension.
pub fn marginal_process(p: &ProcessTensor, keep_timesteps: &[i64]) -> Result<ProcessTensor> {
    if keep_timesteps.is_empty() {
        return Err(Error::Parameter("keep set is empty".into()));
    }
    let all = p.timesteps();
    for t in keep_timesteps {
        if !all.contains(t) {
            return Err(Error::Label(format!("timestep {t} is not part of the process")));
        }
    }
    let last = *keep_timesteps.iter().max().unwrap();
    let mut traced = Vec::new();
    for &t in all.iter().filter(|&&t| t > last) {
        traced.extend(p.wires.labels_at(t));
    }
    let (last_out, _) = timestep_labels(&p.wires, last);
    traced.extend(last_out.iter().cloned());
    let d_traced_out: usize = traced
        .iter()
        .filter(|l| l.is_output())
        .map(|l| p.wires.dim_of(l).unwrap())
        .product();
    let (mut m, mut w) = if traced.is_empty() {
        (p.matrix.clone(), p.wires.clone())
    } else {
        let (m, w) = trace_out(&p.matrix, &p.wires, &traced)?;
        (m.scale_re(1.0 / d_traced_out as f64), w)
    };
    let mut identities = Vec::new();
    for &t in all.iter().filter(|&&t| t < last && !keep_timesteps.contains(&t)) {
        let (outs, ins) = timestep_labels(&w, t);
        if outs.len() != 1 || ins.len() != 1 {
            return Err(Error::Parameter(format!(
                "timestep {t} needs exactly one output and one input wire to be bridged by an identity"
            )));
        }
        let d = w.dim_of(&outs[0]).unwrap();
        if w.dim_of(&ins[0]) != Some(d) {
            return Err(Error::Dimension(format!("cannot bridge timestep {t}: dimensions differ")));
        }
        identities.push(ChoiOperator::identity_channel(outs[0].clone(), ins[0].clone(), d));
    }
    if !identities.is_empty() {
        (m, w) = contract_operator(&m, &w, &identities)?;
    }
    ProcessTensor::new(m, w)
}

/// Wire groups of the Markov blocks, latest first: (j+1^i, j^o) pairs and a
/// trailing initial input group when the process begins on an input.
fn markov_blocks(w: &WireList) -> Result<Vec<(Vec<SpaceLabel>, Vec<SpaceLabel>)>> {
    let ts = w.timesteps();
    let (top_out, _) = timestep_labels(w, ts[0]);
    if !top_out.is_empty() {
        return Err(Error::InvalidProcess("process must end on an input wire".into()));
    }
    let mut blocks = Vec::new();
    for k in 0..ts.len() {
        let (_, ins) = timestep_labels(w, ts[k]);
        let outs = if k + 1 < ts.len() { timestep_labels(w, ts[k + 1]).0 } else { Vec::new() };
        if ins.is_empty() && outs.is_empty() {
            continue;
        }
        blocks.push((ins, outs));
    }
    Ok(blocks)
}

/// Product of normalised two-time marginals, each rescaled to a TP block.
pub fn markov_marginal(p: &ProcessTensor) -> Result<ProcessTensor> {
    let rho = p.normalised();
    let blocks = markov_blocks(&p.wires)?;
    let mut factors = Vec::with_capacity(blocks.len());
    let mut labels = Vec::new();
    for (ins, outs) in &blocks {
        let mut keep = ins.clone();
        keep.extend(outs.iter().cloned());
        let (r, rw) = partial_trace(&rho, &p.wires, &keep)?;
        let d_out: usize = outs.iter().map(|l| p.wires.dim_of(l).unwrap()).product();
        let block = r.scale_re(d_out as f64);
        if !ins.is_empty() && !outs.is_empty() {
            let (reduced, _) = partial_trace(&block, &rw, outs)?;
            let dev = reduced.max_abs_diff(&ComplexMatrix::identity(d_out));
            if dev > 1e-6 {
                return Err(Error::InvalidProcess(format!(
                    "two-time marginal on {} is not trace preserving (deviation {dev:.3e})",
                    rw
                )));
            }
        }
        factors.push(block);
        labels.extend(rw.iter().cloned());
    }
    let wires = WireList::new(labels)?;
    let m = kron_all(factors.iter());
    ProcessTensor::new(m, wires)
}

/// D(Υ‖Υ^Markov) on normalised operators, in bits. Because the Markov
/// marginal is the product of the marginals of Υ, this equals
/// Σ_b S(ρ_b) − S(ρ).
pub fn non_markovianity(p: &ProcessTensor) -> Result<f64> {
    let rho = p.normalised();
    let blocks = markov_blocks(&p.wires)?;
    markov_marginal(p)?;
    let mut block_entropy = 0.0;
    for (ins, outs) in &blocks {
        let mut keep = ins.clone();
        keep.extend(outs.iter().cloned());
        let (r, _) = partial_trace(&rho, &p.wires, &keep)?;
        block_entropy += entropy_of_spectrum(&eigvalsh(&r)?);
    }
    let spectrum = eigvalsh(&rho)?;
    if spectrum[0] < -EPS_POS {
        return Err(Error::Positivity(spectrum[0]));
    }
    Ok((block_entropy - entropy_of_spectrum(&spectrum)).max(0.0))
}

/// Reference route: quantum relative entropy between Υ and its Markov
/// marginal computed with the general two-operator formula.
pub fn non_markovianity_relative_entropy(p: &ProcessTensor) -> Result<f64> {
    let mk = markov_marginal(p)?;
    quantum_relative_entropy(&p.normalised(), &mk.normalised())
}

#[cfg(test)]
mod tests;
