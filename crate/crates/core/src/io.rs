//! JSON files for process tensors, Choi operators and instruments.
//!
//! Matrices are written as `{"dim":d,"data":[[re,im],...]}` in row-major
//! order with every float at 17 significant digits, so reading a file back
//! reproduces the stored values bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::channels::{ChoiOperator, Instrument, InstrumentKind};
use crate::error::{Error, Result};
use crate::process::ProcessTensor;
use crate::tensor::{ComplexMatrix, Direction, SpaceLabel, Wire, WireList, C64};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireJson {
    t: i64,
    dir: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    dim: usize,
}

#[derive(Serialize)]
struct MatrixOut {
    dim: usize,
    data: Vec<[Box<RawValue>; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixIn {
    dim: usize,
    data: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ProcessOut {
    wires: Vec<WireJson>,
    matrix: MatrixOut,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessIn {
    wires: Vec<WireJson>,
    matrix: MatrixIn,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ElementOut {
    label: String,
    wires: Vec<WireJson>,
    matrix: MatrixOut,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementIn {
    label: String,
    wires: Vec<WireJson>,
    matrix: MatrixIn,
}

#[derive(Serialize)]
struct InstrumentOut {
    kind: &'static str,
    elements: Vec<ElementOut>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstrumentIn {
    #[serde(default)]
    kind: Option<String>,
    elements: Vec<ElementIn>,
}

/// 17 significant digits determine every f64 uniquely.
fn number(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite floats are valid JSON numbers")
}

fn matrix_out(m: &ComplexMatrix) -> Result<MatrixOut> {
    if let Some(z) = m.data().iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse(format!("cannot serialise non-finite entry {z}")));
    }
    Ok(MatrixOut { dim: m.dim(), data: m.data().iter().map(|z| [number(z.re), number(z.im)]).collect() })
}

fn matrix_in(m: MatrixIn) -> Result<ComplexMatrix> {
    if m.data.len() != m.dim * m.dim {
        return Err(Error::Parse(format!("{} entries for dimension {}", m.data.len(), m.dim)));
    }
    ComplexMatrix::from_vec(m.dim, m.dim, m.data.into_iter().map(|[re, im]| C64::new(re, im)).collect())
}

fn wires_out(w: &WireList) -> Vec<WireJson> {
    w.iter()
        .map(|w| WireJson { t: w.label.timestep, dir: w.label.direction, tag: w.label.tag.clone(), dim: w.dim })
        .collect()
}

fn wires_in(ws: Vec<WireJson>) -> Result<WireList> {
    WireList::new(
        ws.into_iter()
            .map(|w| Wire::new(SpaceLabel { timestep: w.t, direction: w.dir, tag: w.tag }, w.dim))
            .collect(),
    )
}

fn parse<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

pub fn process_to_json(p: &ProcessTensor) -> Result<String> {
    let out = ProcessOut { wires: wires_out(p.wires()), matrix: matrix_out(p.matrix())?, metadata: p.metadata().clone() };
    serde_json::to_string(&out).map_err(|e| Error::Parse(e.to_string()))
}

pub fn process_from_json(s: &str) -> Result<ProcessTensor> {
    let raw: ProcessIn = parse(s)?;
    let mut p = ProcessTensor::new(matrix_in(raw.matrix)?, wires_in(raw.wires)?)?;
    for (k, v) in raw.metadata {
        p = p.with_metadata(&k, v);
    }
    Ok(p)
}

pub fn read_process(path: &std::path::Path) -> Result<ProcessTensor> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    process_from_json(&s)
}

pub fn write_process(path: &std::path::Path, p: &ProcessTensor) -> Result<()> {
    std::fs::write(path, process_to_json(p)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn element_out(label: &str, c: &ChoiOperator) -> Result<ElementOut> {
    Ok(ElementOut { label: label.to_string(), wires: wires_out(&c.wires()), matrix: matrix_out(c.matrix())? })
}

fn element_in(e: ElementIn) -> Result<(String, ChoiOperator)> {
    Ok((e.label, ChoiOperator::from_wires(matrix_in(e.matrix)?, wires_in(e.wires)?)?))
}

/// Choi operator with its wires listed outputs first.
pub fn choi_to_json(c: &ChoiOperator) -> Result<String> {
    let e = element_out("", c)?;
    serde_json::to_string(&serde_json::json!({ "wires": e.wires, "matrix": e.matrix }))
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn choi_from_json(s: &str) -> Result<ChoiOperator> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct ChoiIn {
        wires: Vec<WireJson>,
        matrix: MatrixIn,
    }
    let raw: ChoiIn = parse(s)?;
    ChoiOperator::from_wires(matrix_in(raw.matrix)?, wires_in(raw.wires)?)
}

fn kind_name(k: InstrumentKind) -> &'static str {
    match k {
        InstrumentKind::Povm => "povm",
        InstrumentKind::Instrument => "instrument",
        InstrumentKind::Tester => "tester",
    }
}

/// `{"kind":"povm"|"instrument"|"tester","elements":[{"label","wires","matrix"},...]}`
pub fn instrument_to_json(ins: &Instrument) -> Result<String> {
    let elements = ins.elements().iter().map(|(l, c)| element_out(l, c)).collect::<Result<Vec<_>>>()?;
    serde_json::to_string(&InstrumentOut { kind: kind_name(ins.kind()), elements })
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn instrument_from_json(s: &str) -> Result<Instrument> {
    let raw: InstrumentIn = parse(s)?;
    let kind = match raw.kind.as_deref() {
        None | Some("instrument") => InstrumentKind::Instrument,
        Some("povm") => InstrumentKind::Povm,
        Some("tester") => InstrumentKind::Tester,
        Some(other) => return Err(Error::Parse(format!("unknown instrument kind {other}"))),
    };
    let elements = raw.elements.into_iter().map(element_in).collect::<Result<Vec<_>>>()?;
    Instrument::new(elements, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{tetrahedral_povm_on, ChoiOperator};
    use crate::tensor::random::random_positive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn process_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let wires = WireList::from_pairs([
            (SpaceLabel::input(2), 2),
            (SpaceLabel::output(1).tagged("S"), 2),
            (SpaceLabel::input(1), 2),
        ])
        .unwrap();
        let m = random_positive(&mut rng, 8).scale_re(1.0 / 3.0);
        let p = ProcessTensor::new(m, wires).unwrap().with_metadata("model", "test");
        let s = process_to_json(&p).unwrap();
        let back = process_from_json(&s).unwrap();
        assert_eq!(back.wires(), p.wires());
        assert!(back.matrix().data().iter().zip(p.matrix().data()).all(|(a, b)| a.re.to_bits() == b.re.to_bits()
            && a.im.to_bits() == b.im.to_bits()));
        assert_eq!(back.metadata().get("model").map(String::as_str), Some("test"));
        assert!(s.contains(r#""dir":"o","tag":"S""#));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(process_from_json("{"), Err(Error::Parse(_))));
        let bad = r#"{"wires":[{"t":1,"dir":"i","dim":2}],"matrix":{"dim":2,"data":[[1,0],[0,0],[0,0]]}}"#;
        assert!(matches!(process_from_json(bad), Err(Error::Parse(_))));
        let mismatch = r#"{"wires":[{"t":1,"dir":"i","dim":3}],"matrix":{"dim":2,"data":[[1,0],[0,0],[0,0],[1,0]]}}"#;
        assert!(process_from_json(mismatch).is_err());
    }

    #[test]
    fn instrument_and_choi_round_trip() {
        let ins = tetrahedral_povm_on(SpaceLabel::input(3));
        let back = instrument_from_json(&instrument_to_json(&ins).unwrap()).unwrap();
        assert_eq!(back, ins);
        let c = ChoiOperator::identity_channel(SpaceLabel::output(1), SpaceLabel::input(1), 3);
        assert_eq!(choi_from_json(&choi_to_json(&c).unwrap()).unwrap(), c);
    }
}
