//! Text syntax for wire labels, memory blocks and parameter ranges.

use ptensor::memory::MemoryBlockSpec;
use ptensor::tensor::{Direction, SpaceLabel, WireList};

/// `3i`, `3^o`, `4i[A]` or `4^i:A`.
pub fn parse_label(s: &str) -> Result<SpaceLabel, String> {
    let s = s.trim();
    let (body, tag) = if let Some(rest) = s.strip_suffix(']') {
        let open = rest.find('[').ok_or_else(|| format!("unbalanced tag in {s:?}"))?;
        (&rest[..open], Some(rest[open + 1..].to_string()))
    } else if let Some((b, t)) = s.split_once(':') {
        (b, Some(t.to_string()))
    } else {
        (s, None)
    };
    let body = body.replace('^', "");
    let (num, dir) = body.split_at(body.len().saturating_sub(1));
    let direction = match dir {
        "i" => Direction::Input,
        "o" => Direction::Output,
        _ => return Err(format!("label {s:?} must end in i or o")),
    };
    let timestep = num.parse::<i64>().map_err(|_| format!("bad timestep in label {s:?}"))?;
    Ok(SpaceLabel { timestep, direction, tag })
}

fn parse_labels(s: &str) -> Result<Vec<SpaceLabel>, String> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(parse_label).collect()
}

/// `F=4i,3o;M=3i,2o;H=2i,1o` gives the partition directly. `M=...` alone
/// takes every wire before the memory as future and after it as history.
/// A bare list of integers such as `2,3` selects the memory timesteps.
pub fn parse_block(s: &str, wires: &WireList) -> Result<MemoryBlockSpec, String> {
    let s = s.trim();
    if !s.contains('=') {
        let ts = s
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| format!("bad timestep {t:?} in block {s:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        return MemoryBlockSpec::from_memory_timesteps(wires, &ts).map_err(|e| e.to_string());
    }
    let (mut f, mut m, mut h) = (None, None, None);
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, labels) = part.split_once('=').ok_or_else(|| format!("missing '=' in {part:?}"))?;
        let labels = parse_labels(labels)?;
        let slot = match key.trim() {
            "F" => &mut f,
            "M" => &mut m,
            "H" => &mut h,
            other => return Err(format!("unknown block part {other:?}; use F, M or H")),
        };
        if slot.replace(labels).is_some() {
            return Err(format!("block part {} given twice", key.trim()));
        }
    }
    let block = match (f, m, h) {
        (Some(f), Some(m), Some(h)) => MemoryBlockSpec::new(f, m, h),
        (None, Some(m), None) => MemoryBlockSpec::around(wires, &m).map_err(|e| e.to_string())?,
        _ => return Err("give either F, M and H, or M alone".into()),
    };
    block.check(wires).map_err(|e| e.to_string())?;
    Ok(block)
}

/// `a:b:steps` with steps ≥ 2, endpoints included.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("range {s:?} must look like a:b:steps"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad range start in {s:?}"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad range end in {s:?}"))?;
    let n: usize = n.parse().map_err(|_| format!("bad step count in {s:?}"))?;
    if n < 2 || !a.is_finite() || !b.is_finite() {
        return Err(format!("range {s:?} needs finite endpoints and at least 2 steps"));
    }
    Ok((0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 }).collect())
}
