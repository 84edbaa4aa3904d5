use super::matrix::{ComplexMatrix, C64};
use super::wires::{sub_offsets, SpaceLabel, WireList};
use crate::error::{Error, Result};

pub(crate) fn check_wired(m: &ComplexMatrix, wires: &WireList) -> Result<()> {
    if !m.is_square() || m.rows() != wires.total_dim() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix annotated by wires of total dimension {}",
            m.rows(),
            m.cols(),
            wires.total_dim()
        )));
    }
    Ok(())
}

/// Trace out every wire not listed in `keep`. Kept wires stay in their
/// original relative order.
pub fn partial_trace(
    m: &ComplexMatrix,
    wires: &WireList,
    keep: &[SpaceLabel],
) -> Result<(ComplexMatrix, WireList)> {
    check_wired(m, wires)?;
    let mut kp = wires.positions(keep)?;
    kp.sort_unstable();
    let tp: Vec<usize> = (0..wires.len()).filter(|p| !kp.contains(p)).collect();
    let (dims, strides) = (wires.dims(), wires.strides());
    let ko = sub_offsets(&dims, &strides, &kp);
    let to = sub_offsets(&dims, &strides, &tp);
    let (d, dk) = (m.dim(), ko.len());
    let data = m.data();
    let mut out = ComplexMatrix::zeros(dk);
    let od = out.data_mut();
    for r in 0..dk {
        for r2 in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for &x in &to {
                acc += data[(ko[r] + x) * d + ko[r2] + x];
            }
            od[r * dk + r2] = acc;
        }
    }
    Ok((out, wires.select(&kp)))
}

/// Trace out the listed wires.
pub fn trace_out(
    m: &ComplexMatrix,
    wires: &WireList,
    traced: &[SpaceLabel],
) -> Result<(ComplexMatrix, WireList)> {
    wires.positions(traced)?;
    let keep: Vec<SpaceLabel> = wires.labels().into_iter().filter(|l| !traced.contains(l)).collect();
    partial_trace(m, wires, &keep)
}

/// Reorder tensor factors: position `k` of the result holds old wire `new_order[k]`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    wires: &WireList,
    new_order: &[usize],
) -> Result<(ComplexMatrix, WireList)> {
    check_wired(m, wires)?;
    let n = wires.len();
    let mut seen = vec![false; n];
    if new_order.len() != n {
        return Err(Error::Permutation(format!("{} entries for {} wires", new_order.len(), n)));
    }
    for &p in new_order {
        if p >= n || seen[p] {
            return Err(Error::Permutation(format!("{new_order:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    let po = sub_offsets(&wires.dims(), &wires.strides(), new_order);
    let d = m.dim();
    let data = m.data();
    let out = ComplexMatrix::from_fn(d, d, |i, j| data[po[i] * d + po[j]]);
    Ok((out, wires.select(new_order)))
}

/// Bring `m` into the wire order `target` (same label set).
pub fn reorder_to(
    m: &ComplexMatrix,
    wires: &WireList,
    target: &WireList,
) -> Result<ComplexMatrix> {
    if target.len() != wires.len() {
        return Err(Error::Label(format!("cannot reorder {wires} to {target}")));
    }
    let order = wires.positions(&target.labels())?;
    let (out, w) = permute_subsystems(m, wires, &order)?;
    if &w != target {
        return Err(Error::Dimension(format!("wire dimensions differ: {w} vs {target}")));
    }
    Ok(out)
}

/// Link product with a single operator: tr_X[(op^T ⊗ 1) m], where X are the
/// wires of `op`. The remaining wires of `m` keep their order.
pub fn partial_contract(
    m: &ComplexMatrix,
    wires: &WireList,
    op: &ComplexMatrix,
    op_wires: &WireList,
) -> Result<(ComplexMatrix, WireList)> {
    check_wired(m, wires)?;
    check_wired(op, op_wires)?;
    let xp = wires.positions(&op_wires.labels())?;
    for (k, &p) in xp.iter().enumerate() {
        if wires.wires()[p].dim != op_wires.wires()[k].dim {
            return Err(Error::Dimension(format!(
                "wire {} has dimension {} but the operator expects {}",
                op_wires.wires()[k].label,
                wires.wires()[p].dim,
                op_wires.wires()[k].dim
            )));
        }
    }
    let rp: Vec<usize> = (0..wires.len()).filter(|p| !xp.contains(p)).collect();
    let (dims, strides) = (wires.dims(), wires.strides());
    let xo = sub_offsets(&dims, &strides, &xp);
    let ro = sub_offsets(&dims, &strides, &rp);
    let (d, dr, dx) = (m.dim(), ro.len(), xo.len());
    let data = m.data();
    let mut out = ComplexMatrix::zeros(dr);
    let od = out.data_mut();
    for y in 0..dx {
        for x in 0..dx {
            let coeff = op[(y, x)];
            if coeff == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..dr {
                let base = (ro[r] + xo[y]) * d + xo[x];
                let orow = &mut od[r * dr..(r + 1) * dr];
                for (o, &c2) in orow.iter_mut().zip(&ro) {
                    *o += coeff * data[base + c2];
                }
            }
        }
    }
    Ok((out, wires.select(&rp)))
}
