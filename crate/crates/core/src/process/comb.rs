use crate::tensor::{kron, reorder_to, trace_out, ComplexMatrix, Direction, WireList};

/// Outcome of walking the causal trace hierarchy of a comb.
#[derive(Clone, Debug, PartialEq)]
pub struct CombReport {
    /// (timestep, deviation) for each identity-factor check, latest first.
    pub levels: Vec<(i64, f64)>,
    /// |final scalar − 1| after all traces and normalisations.
    pub normalisation_deviation: f64,
    pub structure_error: Option<String>,
}

impl CombReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.structure_error.is_none()
            && self.normalisation_deviation <= tol
            && self.levels.iter().all(|&(_, d)| d <= tol)
    }
}

/// Check the hierarchy tr_{emitted}[C] = 1_{next absorbed} ⊗ C' from the
/// latest wire backwards. `emits` is the direction of the comb's own
/// outputs: `Input` for process tensors (they emit the system into j^i),
/// `Output` for testers.
pub fn comb_report(m: &ComplexMatrix, wires: &WireList, emits: Direction) -> CombReport {
    let canonical = wires.select(&wires.canonical_permutation());
    let mut cur = match reorder_to(m, wires, &canonical) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    let mut w = canonical;
    let mut levels = Vec::new();
    loop {
        if w.is_empty() {
            let dev = (cur[(0, 0)] - 1.0).norm();
            return CombReport { levels, normalisation_deviation: dev, structure_error: None };
        }
        let slot = w.slots()[0].clone();
        let head = w.select(&slot.clone().collect::<Vec<_>>());
        let t = head.wires()[0].label.timestep;
        if head.wires()[0].label.direction == emits {
            let (traced, tw) = trace_out(&cur, &w, &head.labels()).expect("own labels");
            if tw.is_empty() {
                cur = traced;
                w = tw;
                continue;
            }
            let next = tw.select(&tw.slots()[0].clone().collect::<Vec<_>>());
            if next.wires()[0].label.direction == emits {
                return failed(format!("two consecutive emitted slots at timestep {t}"));
            }
            let (dev, reduced, rw) = split_identity(&traced, &tw, &next);
            levels.push((t, dev));
            cur = reduced;
            w = rw;
        } else {
            let (dev, reduced, rw) = split_identity(&cur, &w, &head);
            levels.push((t, dev));
            cur = reduced;
            w = rw;
        }
    }
}

/// Write m = 1_head ⊗ r with r = tr_head[m]/d_head; returns the deviation.
fn split_identity(m: &ComplexMatrix, w: &WireList, head: &WireList) -> (f64, ComplexMatrix, WireList) {
    let d = head.total_dim();
    let (r, rw) = trace_out(m, w, &head.labels()).expect("own labels");
    let r = r.scale_re(1.0 / d as f64);
    let dev = m.max_abs_diff(&kron(&ComplexMatrix::identity(d), &r));
    (dev, r, rw)
}

fn failed(msg: String) -> CombReport {
    CombReport { levels: Vec::new(), normalisation_deviation: f64::INFINITY, structure_error: Some(msg) }
}
