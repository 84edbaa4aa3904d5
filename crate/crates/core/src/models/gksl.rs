use crate::channels::Superoperator;
use crate::error::{Error, Result};
use crate::tensor::{kron, matrix_exp, ComplexMatrix, C64};

/// Time-independent Lindblad generator: Hamiltonian and (rate, jump operator) pairs.
#[derive(Clone, Debug)]
pub struct GkslSpec {
    pub hamiltonian: ComplexMatrix,
    pub jump_ops: Vec<(f64, ComplexMatrix)>,
}

impl GkslSpec {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn check(&self) -> Result<()> {
        let h = &self.hamiltonian;
        if !h.is_square() {
            return Err(Error::Dimension("Hamiltonian is not square".into()));
        }
        let defect = h.hermiticity_defect();
        if defect > 1e-8 * h.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        for (rate, l) in &self.jump_ops {
            if *rate < 0.0 || !rate.is_finite() {
                return Err(Error::Parameter(format!("negative or non-finite rate {rate}")));
            }
            if l.rows() != h.dim() || l.cols() != h.dim() {
                return Err(Error::Dimension("jump operator does not match the Hamiltonian".into()));
            }
        }
        Ok(())
    }
}

/// Matrix of ρ ↦ −i[H,ρ] + Σ γ(LρL† − ½{L†L, ρ}) on row-major vectorised operators.
pub fn liouvillian(spec: &GkslSpec) -> Result<ComplexMatrix> {
    spec.check()?;
    let d = spec.dim();
    let id = ComplexMatrix::identity(d);
    let h = &spec.hamiltonian;
    let mut l = (&kron(h, &id) - &kron(&id, &h.transpose())).scale(C64::new(0.0, -1.0));
    for (rate, op) in &spec.jump_ops {
        let ldl = op.adjoint().matmul(op);
        let term = &(&kron(op, &op.conj()) - &kron(&ldl, &id).scale_re(0.5)) - &kron(&id, &ldl.transpose()).scale_re(0.5);
        l += &term.scale_re(*rate);
    }
    Ok(l)
}

/// exp(L t) as a superoperator.
pub fn propagator(spec: &GkslSpec, t: f64) -> Result<Superoperator> {
    if t < 0.0 {
        return Err(Error::Parameter(format!("negative time {t}")));
    }
    let l = liouvillian(spec)?;
    Superoperator::new(matrix_exp(&l.scale_re(t)), spec.dim(), spec.dim())
}

/// Coherence factor c_t of the two-qubit model's reduced dephasing. The
/// critical branch is used when |κ² − 64ξ²| ≤ 1e-9 max(κ², 64ξ²).
pub fn c_coefficient(xi: f64, kappa: f64, t: f64) -> f64 {
    let a = kappa / 4.0;
    let env = (-a * t).exp();
    match branch(xi, kappa) {
        Branch::Critical => env * (1.0 + a * t),
        Branch::Overdamped(w) => env * (a * (w * t).sinh() / w + (w * t).cosh()),
        Branch::Oscillating(w) => env * (a * (w * t).sin() / w + (w * t).cos()),
    }
}

/// dc/dt, from differentiating the closed form: −4ξ² e^{−κt/4} sinh(wt)/w
/// (sin in the oscillating branch, t in the critical one).
pub fn c_derivative(xi: f64, kappa: f64, t: f64) -> f64 {
    let env = (-kappa * t / 4.0).exp();
    let s = match branch(xi, kappa) {
        Branch::Critical => t,
        Branch::Overdamped(w) => (w * t).sinh() / w,
        Branch::Oscillating(w) => (w * t).sin() / w,
    };
    -4.0 * xi * xi * env * s
}

enum Branch {
    Critical,
    /// w = √(κ² − 64ξ²)/4
    Overdamped(f64),
    /// w = √(64ξ² − κ²)/4
    Oscillating(f64),
}

fn branch(xi: f64, kappa: f64) -> Branch {
    let (k2, x2) = (kappa * kappa, 64.0 * xi * xi);
    let disc = k2 - x2;
    if disc.abs() <= 1e-9 * k2.max(x2) || (k2 == 0.0 && x2 == 0.0) {
        Branch::Critical
    } else if disc > 0.0 {
        Branch::Overdamped(disc.sqrt() / 4.0)
    } else {
        Branch::Oscillating((-disc).sqrt() / 4.0)
    }
}

/// Rate −ċ/(2c) of the reduced σ_x dephasing; undefined where c_t ≤ 0.
pub fn dephasing_rate(xi: f64, kappa: f64, t: f64) -> Result<f64> {
    let c = c_coefficient(xi, kappa, t);
    if c <= 0.0 {
        return Err(Error::Parameter(format!("c_t = {c:.3e} ≤ 0 at t = {t}: rate is singular")));
    }
    Ok(-c_derivative(xi, kappa, t) / (2.0 * c))
}

/// CP-divisibility of the reduced dynamics: κ² ≥ 64ξ².
pub fn cp_divisible(xi: f64, kappa: f64) -> bool {
    kappa * kappa >= 64.0 * xi * xi
}

/// Sampled check: the rate is ≥ −1e-9 at every grid point of [0, t_max]
/// where it is defined, and no point is singular.
pub fn cp_divisible_sampled(xi: f64, kappa: f64, t_max: f64, points: usize) -> bool {
    (0..points).all(|k| {
        let t = t_max * k as f64 / (points - 1).max(1) as f64;
        matches!(dephasing_rate(xi, kappa, t), Ok(r) if r >= -1e-9)
    })
}

/// Closed-form BLP measure 1/(exp(κπ/√(64ξ² − κ²)) − 1) for κ² < 64ξ², else 0.
/// κ = 0 with ξ > 0 gives +∞.
pub fn two_time_non_markovianity(xi: f64, kappa: f64) -> f64 {
    if cp_divisible(xi, kappa) {
        return 0.0;
    }
    if kappa == 0.0 {
        return f64::INFINITY;
    }
    let w = (64.0 * xi * xi - kappa * kappa).sqrt();
    1.0 / ((kappa * std::f64::consts::PI / w).exp_m1())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlpResult {
    pub value: f64,
    pub t_max: f64,
    /// Set when the grid is too coarse for the oscillation period.
    pub warning: Option<String>,
}

/// Integral of the increases of |c_t| (the trace distance of the z-basis
/// antipodal pair) on a uniform grid of `grid` points. The horizon is the
/// first time the envelope e^{−κt/4} drops below 1e-6, capped at `t_max`.
pub fn blp_numeric(xi: f64, kappa: f64, t_max: f64, grid: usize) -> BlpResult {
    let horizon = if kappa > 0.0 { (4.0 * 1e6f64.ln() / kappa).min(t_max) } else { t_max };
    let n = grid.max(2);
    let dt = horizon / (n - 1) as f64;
    let mut warning = None;
    if let Branch::Oscillating(w) = branch(xi, kappa) {
        let period = 2.0 * std::f64::consts::PI / w;
        if dt > period / 20.0 {
            warning = Some(format!("grid step {dt:.3e} resolves the period {period:.3e} with fewer than 20 points"));
        }
    }
    let mut value = 0.0;
    let mut prev = 1.0;
    for k in 1..n {
        let cur = c_coefficient(xi, kappa, k as f64 * dt).abs();
        if cur > prev {
            value += cur - prev;
        }
        prev = cur;
    }
    BlpResult { value, t_max: horizon, warning }
}
