//! Classical multi-time statistics: joint distributions, Markov order,
//! conditional mutual information, coarse-graining, stochastic matrices and
//! the embedding of distributions as diagonal process tensors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ChoiOperator;
use crate::error::{Error, Result};
use crate::process::ProcessTensor;
use crate::tensor::{shannon_entropy, ComplexMatrix, SpaceLabel, Wire, WireList, C64};

/// Normalisation tolerance for distributions and stochastic matrices.
pub const NORM_TOL: f64 = 1e-12;
/// Histories rarer than this are skipped when comparing conditionals.
pub const CONDITIONING_TOL: f64 = 1e-12;
/// Default tolerance on conditional-probability mismatches.
pub const MARKOV_TOL: f64 = 1e-10;

/// Joint distribution over outcomes at a list of timesteps. Axis k belongs
/// to `timesteps[k]`; `probs` is row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    alphabets: Vec<usize>,
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timesteps: Option<Vec<i64>>,
}

impl JointDistribution {
    /// Distribution on timesteps 1..=n.
    pub fn new(alphabets: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let n = alphabets.len() as i64;
        Self::with_timesteps(alphabets, probs, (1..=n).collect())
    }

    pub fn with_timesteps(alphabets: Vec<usize>, probs: Vec<f64>, timesteps: Vec<i64>) -> Result<Self> {
        let d = Self { alphabets, probs, timesteps: Some(timesteps) };
        d.check()?;
        Ok(d)
    }

    fn check(&self) -> Result<()> {
        if self.alphabets.is_empty() || self.alphabets.contains(&0) {
            return Err(Error::Dimension("alphabets must be nonempty and positive".into()));
        }
        let size: usize = self.alphabets.iter().product();
        if self.probs.len() != size {
            return Err(Error::Dimension(format!("{} probabilities for {size} outcomes", self.probs.len())));
        }
        if let Some(&p) = self.probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Positivity(p));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization(total));
        }
        let ts = self.timesteps();
        if ts.len() != self.alphabets.len() {
            return Err(Error::Dimension("one timestep per alphabet is required".into()));
        }
        for (k, t) in ts.iter().enumerate() {
            if ts[..k].contains(t) {
                return Err(Error::Label(format!("timestep {t} repeated")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        d.check()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn timesteps(&self) -> Vec<i64> {
        self.timesteps.clone().unwrap_or_else(|| (1..=self.alphabets.len() as i64).collect())
    }

    pub fn len(&self) -> usize {
        self.alphabets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabets.is_empty()
    }

    /// Outcome tuple of a flat index.
    pub fn outcome(&self, mut index: usize) -> Vec<usize> {
        let mut x = vec![0; self.alphabets.len()];
        for k in (0..x.len()).rev() {
            x[k] = index % self.alphabets[k];
            index /= self.alphabets[k];
        }
        x
    }

    pub fn index(&self, outcome: &[usize]) -> usize {
        outcome.iter().zip(&self.alphabets).fold(0, |acc, (&x, &a)| acc * a + x)
    }

    pub fn prob(&self, outcome: &[usize]) -> f64 {
        self.probs[self.index(outcome)]
    }

    fn axes_of(&self, timesteps: &[i64]) -> Result<Vec<usize>> {
        let ts = self.timesteps();
        timesteps
            .iter()
            .map(|t| ts.iter().position(|x| x == t).ok_or_else(|| Error::Label(format!("no timestep {t}"))))
            .collect()
    }
}

/// Sum over every timestep not in `keep`; kept axes stay in their order.
pub fn marginalize(d: &JointDistribution, keep: &[i64]) -> Result<JointDistribution> {
    if keep.is_empty() {
        return Err(Error::Parameter("keep set is empty".into()));
    }
    let mut axes = d.axes_of(keep)?;
    axes.sort_unstable();
    axes.dedup();
    let alphabets: Vec<usize> = axes.iter().map(|&k| d.alphabets[k]).collect();
    let ts = d.timesteps();
    let mut out = vec![0.0; alphabets.iter().product()];
    for (i, p) in d.probs.iter().enumerate() {
        let x = d.outcome(i);
        let j = axes.iter().fold(0, |acc, &k| acc * d.alphabets[k] + x[k]);
        out[j] += p;
    }
    let timesteps = axes.iter().map(|&k| ts[k]).collect();
    Ok(JointDistribution { alphabets, probs: out, timesteps: Some(timesteps) })
}

/// P(rest | given) for an assignment of values to some timesteps.
pub fn conditional(d: &JointDistribution, given: &[(i64, usize)]) -> Result<JointDistribution> {
    let ts: Vec<i64> = given.iter().map(|g| g.0).collect();
    let axes = d.axes_of(&ts)?;
    for (&k, &(t, v)) in axes.iter().zip(given) {
        if v >= d.alphabets[k] {
            return Err(Error::Parameter(format!("value {v} outside the alphabet at timestep {t}")));
        }
    }
    let rest: Vec<usize> = (0..d.len()).filter(|k| !axes.contains(k)).collect();
    if rest.is_empty() {
        return Err(Error::Parameter("nothing left after conditioning".into()));
    }
    let alphabets: Vec<usize> = rest.iter().map(|&k| d.alphabets[k]).collect();
    let mut out = vec![0.0; alphabets.iter().product()];
    let mut norm = 0.0;
    for (i, p) in d.probs.iter().enumerate() {
        let x = d.outcome(i);
        if axes.iter().zip(given).all(|(&k, &(_, v))| x[k] == v) {
            let j = rest.iter().fold(0, |acc, &k| acc * d.alphabets[k] + x[k]);
            out[j] += p;
            norm += p;
        }
    }
    if norm <= CONDITIONING_TOL {
        return Err(Error::UndefinedConditional(norm));
    }
    out.iter_mut().for_each(|p| *p /= norm);
    let all = d.timesteps();
    Ok(JointDistribution { alphabets, probs: out, timesteps: Some(rest.iter().map(|&k| all[k]).collect()) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovOrderCheck {
    pub holds: bool,
    /// Largest |P(x_k | full past) − P(x_k | last ℓ)| over positive-probability pasts.
    pub max_violation: f64,
}

/// Whether every P(x_k | x_{k−1}, ..., x_1) equals P(x_k | x_{k−1}, ..., x_{k−ℓ})
/// within [`MARKOV_TOL`], axes taken in order.
pub fn markov_order_check(d: &JointDistribution, ell: usize) -> MarkovOrderCheck {
    let mut worst: f64 = 0.0;
    let prefix = |k: usize| -> Vec<f64> {
        // Marginal over axes 0..k (exclusive).
        let tail: usize = d.alphabets[k..].iter().product();
        d.probs.chunks(tail).map(|c| c.iter().sum()).collect()
    };
    for k in (ell + 1)..d.len() {
        let full_k = prefix(k + 1);
        let full_past = prefix(k);
        // Window marginal over axes k−ℓ..=k.
        let lo = k - ell;
        let win_size: usize = d.alphabets[lo..=k].iter().product();
        let mut window = vec![0.0; win_size];
        for (i, p) in full_k.iter().enumerate() {
            window[i % win_size] += p;
        }
        let a = d.alphabets[k];
        for (h, &ph) in full_past.iter().enumerate() {
            if ph <= CONDITIONING_TOL {
                continue;
            }
            let w_past = h % (win_size / a);
            let pw: f64 = (0..a).map(|x| window[w_past * a + x]).sum();
            for x in 0..a {
                let cond_full = full_k[h * a + x] / ph;
                let cond_win = window[w_past * a + x] / pw;
                worst = worst.max((cond_full - cond_win).abs());
            }
        }
    }
    MarkovOrderCheck { holds: worst <= MARKOV_TOL, max_violation: worst }
}

/// H(FM) + H(MH) − H(FMH) − H(M) in bits; the three sets partition the timesteps.
pub fn classical_cmi(d: &JointDistribution, future: &[i64], memory: &[i64], history: &[i64]) -> Result<f64> {
    let mut all: Vec<i64> = future.iter().chain(memory).chain(history).copied().collect();
    all.sort_unstable();
    let mut ts = d.timesteps();
    ts.sort_unstable();
    if all != ts {
        return Err(Error::Label("future, memory and history must partition the timesteps".into()));
    }
    let h = |keep: Vec<i64>| -> Result<f64> {
        if keep.is_empty() {
            return Ok(0.0);
        }
        Ok(shannon_entropy(&marginalize(d, &keep)?.probs))
    };
    let cat = |a: &[i64], b: &[i64]| a.iter().chain(b).copied().collect::<Vec<_>>();
    Ok(h(cat(future, memory))? + h(cat(memory, history))? - shannon_entropy(&d.probs) - h(memory.to_vec())?)
}

/// Sum probabilities within lumps: `lumping[k][x]` is the new value of x on axis k.
pub fn coarse_grain(d: &JointDistribution, lumping: &[Vec<usize>]) -> Result<JointDistribution> {
    if lumping.len() != d.len() {
        return Err(Error::Dimension(format!("{} lumpings for {} timesteps", lumping.len(), d.len())));
    }
    let mut alphabets = Vec::with_capacity(d.len());
    for (k, map) in lumping.iter().enumerate() {
        if map.len() != d.alphabets[k] {
            return Err(Error::Dimension(format!("lumping {k} covers {} of {} values", map.len(), d.alphabets[k])));
        }
        let size = map.iter().max().map_or(0, |m| m + 1);
        if (0..size).any(|v| !map.contains(&v)) {
            return Err(Error::Parameter(format!("lumping {k} is not onto 0..{size}")));
        }
        alphabets.push(size);
    }
    let mut out = vec![0.0; alphabets.iter().product()];
    for (i, p) in d.probs.iter().enumerate() {
        let x = d.outcome(i);
        let j = x.iter().enumerate().fold(0, |acc, (k, &v)| acc * alphabets[k] + lumping[k][v]);
        out[j] += p;
    }
    Ok(JointDistribution { alphabets, probs: out, timesteps: d.timesteps.clone() })
}

/// Column-stochastic matrix acting on probability column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    dim: usize,
    /// Row-major; entry (r, c) is P(r | c).
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim || dim == 0 {
            return Err(Error::Dimension(format!("{} entries for a {dim}×{dim} matrix", data.len())));
        }
        if let Some(&x) = data.iter().find(|&&x| !(x >= 0.0)) {
            return Err(Error::Positivity(x));
        }
        for c in 0..dim {
            let s: f64 = (0..dim).map(|r| data[r * dim + c]).sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::Normalization(s));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, data: (0..dim * dim).map(|i| if i / dim == i % dim { 1.0 } else { 0.0 }).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|r| (0..self.dim).map(|c| self.get(r, c) * p[c]).sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let mut data: Vec<f64> = (0..dim * dim).map(|_| rng.gen::<f64>() + 1e-3).collect();
        for c in 0..dim {
            let s: f64 = (0..dim).map(|r| data[r * dim + c]).sum();
            (0..dim).for_each(|r| data[r * dim + c] /= s);
        }
        Self { dim, data }
    }
}

/// a · b: apply `b`, then `a`.
pub fn compose_stochastic(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<StochasticMatrix> {
    if a.dim != b.dim {
        return Err(Error::Dimension(format!("composing {}-dim with {}-dim", a.dim, b.dim)));
    }
    let d = a.dim;
    let data = (0..d * d).map(|i| (0..d).map(|k| a.get(i / d, k) * b.get(k, i % d)).sum()).collect();
    Ok(StochasticMatrix { dim: d, data })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityReport {
    pub divisible: bool,
    pub max_deviation: f64,
    /// (k, j, i) of the largest violation of S_{k,i} = S_{k,j} S_{j,i}.
    pub worst: Option<(i64, i64, i64)>,
}

/// Check S_{k,i} = S_{k,j} S_{j,i} for every triple k > j > i for which all
/// three maps are in the family, entries given as (k, i, S_{k,i}).
pub fn verify_divisibility(family: &[(i64, i64, StochasticMatrix)], tol: f64) -> Result<DivisibilityReport> {
    let find = |k: i64, i: i64| family.iter().find(|(a, b, _)| *a == k && *b == i).map(|e| &e.2);
    let mut worst = None;
    let mut max_dev: f64 = 0.0;
    for (k, i, ski) in family {
        for (j, _, _) in family.iter().filter(|(j, b, _)| b == i && j < k && j > i) {
            if let (Some(skj), Some(sji)) = (find(*k, *j), find(*j, *i)) {
                let dev = compose_stochastic(skj, sji)?.max_abs_diff(ski);
                if dev > max_dev || worst.is_none() {
                    max_dev = max_dev.max(dev);
                    worst = Some((*k, *j, *i));
                }
            }
        }
    }
    Ok(DivisibilityReport { divisible: max_dev <= tol, max_deviation: max_dev, worst })
}

/// Joint distribution of a Markov chain with initial distribution `initial`
/// and transitions S_{2,1}, S_{3,2}, ...
pub fn markov_chain(initial: &[f64], transitions: &[StochasticMatrix]) -> Result<JointDistribution> {
    let d = initial.len();
    if transitions.iter().any(|t| t.dim != d) {
        return Err(Error::Dimension("transition dimension differs from the initial alphabet".into()));
    }
    let n = transitions.len() + 1;
    let mut probs = initial.to_vec();
    for t in transitions {
        probs = probs.iter().flat_map(|&p| (0..d).map(move |_| p)).collect::<Vec<_>>();
        for (i, p) in probs.iter_mut().enumerate() {
            let (prev, next) = ((i / d) % d, i % d);
            *p *= t.get(next, prev);
        }
    }
    JointDistribution::new(vec![d; n], probs)
}

/// Rebuild the joint from its order-ℓ transition probabilities (the chain
/// rule truncated to the last ℓ values).
pub fn markov_reconstruction(d: &JointDistribution, ell: usize) -> JointDistribution {
    let prefix = |k: usize| -> Vec<f64> {
        let tail: usize = d.alphabets[k..].iter().product();
        d.probs.chunks(tail).map(|c| c.iter().sum()).collect()
    };
    let m = (ell + 1).min(d.len());
    let mut probs = prefix(m);
    for k in m..d.len() {
        let full = prefix(k + 1);
        let lo = k - ell;
        let win_size: usize = d.alphabets[lo..=k].iter().product();
        let a = d.alphabets[k];
        let mut window = vec![0.0; win_size];
        for (i, p) in full.iter().enumerate() {
            window[i % win_size] += p;
        }
        probs = (0..probs.len() * a)
            .map(|i| {
                let (h, x) = (i / a, i % a);
                let w = (h % (win_size / a)) * a;
                let pw: f64 = window[w..w + a].iter().sum();
                if pw <= CONDITIONING_TOL {
                    0.0
                } else {
                    probs[h] * window[w + x] / pw
                }
            })
            .collect();
    }
    JointDistribution { alphabets: d.alphabets.clone(), probs, timesteps: d.timesteps.clone() }
}

/// Diagonal process tensor on wires 1^i, 1^o, ..., n^i in which the value
/// emitted at k+1 is drawn from P(x_{k+1} | x_k, ..., x_1) evaluated on the
/// values fed back at k^o, ..., 1^o. A Markov chain becomes a product of
/// classical channels, and the sharp tester |x⟩⟨x|_{k^o} ⊗ |x⟩⟨x|_{k^i}
/// reproduces `d` exactly. Fed-back sequences of probability zero emit the
/// unconditioned marginal.
pub fn embed_as_process_tensor(d: &JointDistribution) -> Result<ProcessTensor> {
    let ts = d.timesteps();
    let n = d.len();
    let prefix = |k: usize| -> Vec<f64> {
        let tail: usize = d.alphabets[k..].iter().product();
        d.probs.chunks(tail).map(|c| c.iter().sum()).collect()
    };
    let prefixes: Vec<Vec<f64>> = (0..=n).map(prefix).collect();
    let singles: Vec<Vec<f64>> = (0..n).map(|k| marginalize(d, &[ts[k]]).map(|m| m.probs)).collect::<Result<_>>()?;
    // Wires latest first: n^i, (n−1)^o, (n−1)^i, ..., 1^o, 1^i.
    let mut ws = vec![Wire::new(SpaceLabel::input(ts[n - 1]), d.alphabets[n - 1])];
    for k in (0..n - 1).rev() {
        ws.push(Wire::new(SpaceLabel::output(ts[k]), d.alphabets[k]));
        ws.push(Wire::new(SpaceLabel::input(ts[k]), d.alphabets[k]));
    }
    let wires = WireList::new(ws)?;
    let dims = wires.dims();
    let total = wires.total_dim();
    let mut diag = vec![0.0; total];
    for (idx, slot) in diag.iter_mut().enumerate() {
        let mut digits = vec![0; dims.len()];
        let mut r = idx;
        for p in (0..dims.len()).rev() {
            digits[p] = r % dims[p];
            r /= dims[p];
        }
        // Position of axis k: input at 2(n−1−k), output at 2(n−1−k) − 1.
        let y = |k: usize| digits[2 * (n - 1 - k)];
        let z = |k: usize| digits[2 * (n - 1 - k) - 1];
        let mut p = prefixes[1][y(0)];
        let mut fed = 0usize;
        for k in 1..n {
            if p == 0.0 {
                break;
            }
            fed = fed * d.alphabets[k - 1] + z(k - 1);
            let past = prefixes[k][fed];
            let cond = if past <= CONDITIONING_TOL {
                singles[k][y(k)]
            } else {
                prefixes[k + 1][fed * d.alphabets[k] + y(k)] / past
            };
            p *= cond;
        }
        *slot = p;
    }
    let m = ComplexMatrix::from_fn(total, total, |r, c| if r == c { C64::new(diag[r], 0.0) } else { C64::new(0.0, 0.0) });
    ProcessTensor::new(m, wires)
}

/// Sharp classical tester element for one outcome sequence: |x_k⟩⟨x_k| at
/// k^i and the same value re-prepared at k^o (no output at the last step).
pub fn classical_tester_element(d: &JointDistribution, outcome: &[usize]) -> Result<ChoiOperator> {
    let ts = d.timesteps();
    let n = d.len();
    let mut acc: Option<ChoiOperator> = None;
    for k in 0..n {
        let a = d.alphabets[k];
        let proj = ComplexMatrix::basis_projector(a, outcome[k]);
        let el = if k + 1 < n {
            ChoiOperator::new(
                crate::tensor::kron(&proj, &proj),
                WireList::single(SpaceLabel::output(ts[k]), a),
                WireList::single(SpaceLabel::input(ts[k]), a),
            )?
        } else {
            ChoiOperator::effect(proj, WireList::single(SpaceLabel::input(ts[k]), a))?
        };
        acc = Some(match acc {
            None => el,
            Some(prev) => prev.tensor(&el)?,
        });
    }
    acc.ok_or_else(|| Error::Parameter("empty distribution".into()))
}

/// Perturbed coin: uniform start, keep the face with probability p.
pub fn perturbed_coin(p: f64, n: usize) -> Result<JointDistribution> {
    if !(0.0..=1.0).contains(&p) || n == 0 {
        return Err(Error::Parameter(format!("perturbed coin needs p ∈ [0, 1] and n ≥ 1 (p = {p}, n = {n})")));
    }
    let s = StochasticMatrix::new(2, vec![p, 1.0 - p, 1.0 - p, p])?;
    markov_chain(&[0.5, 0.5], &vec![s; n - 1])
}

/// Three-state chain a → b → c, c → a with probability p and c → b with
/// 1 − p (values 0, 1, 2), started in its stationary distribution.
pub fn c1(p: f64, n: usize) -> Result<JointDistribution> {
    if !(p > 0.0 && p < 1.0) || n == 0 {
        return Err(Error::Parameter(format!("c1 needs p ∈ (0, 1) and n ≥ 1 (p = {p}, n = {n})")));
    }
    // Columns are the previous value: a, b, c.
    let s = StochasticMatrix::new(3, vec![0.0, 0.0, p, 1.0, 0.0, 1.0 - p, 0.0, 1.0, 0.0])?;
    let z = 2.0 + p;
    markov_chain(&[p / z, 1.0 / z, 1.0 / z], &vec![s; n - 1])
}

/// Lumping {a} → 0, {b, c} → 1 on every timestep of [`c1`].
pub fn c1_lumping(n: usize) -> Vec<Vec<usize>> {
    vec![vec![0, 1, 1]; n]
}

/// Three bits with x_3 = x_1 ⊕ x_2 and x_1, x_2 uniform.
pub fn c2() -> JointDistribution {
    let mut probs = vec![0.0; 8];
    for x1 in 0..2 {
        for x2 in 0..2 {
            probs[x1 * 4 + x2 * 2 + (x1 ^ x2)] = 0.25;
        }
    }
    JointDistribution::new(vec![2, 2, 2], probs).expect("fixed construction")
}

pub fn three_coins() -> JointDistribution {
    JointDistribution::new(vec![2, 2, 2], vec![0.125; 8]).expect("fixed construction")
}

/// Named reference distributions.
pub fn example_distribution(name: &str, p: f64, n: usize) -> Result<JointDistribution> {
    match name {
        "perturbed_coin" => perturbed_coin(p, n),
        "c1" => c1(p, n),
        "c2" => Ok(c2()),
        "three_coins" => Ok(three_coins()),
        other => Err(Error::Parameter(format!("unknown example distribution {other}"))),
    }
}

/// Random order-1 chain with a random initial distribution.
pub fn random_markov_chain<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize) -> JointDistribution {
    let mut init: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = init.iter().sum();
    init.iter_mut().for_each(|x| *x /= s);
    let ts: Vec<StochasticMatrix> = (1..n).map(|_| StochasticMatrix::random(rng, dim)).collect();
    markov_chain(&init, &ts).expect("consistent dimensions")
}

/// Random distribution with full support.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, alphabets: Vec<usize>) -> JointDistribution {
    let size: usize = alphabets.iter().product();
    let mut probs: Vec<f64> = (0..size).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= s);
    JointDistribution::new(alphabets, probs).expect("normalised")
}
