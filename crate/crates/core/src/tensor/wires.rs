use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "o")]
    Output,
    #[serde(rename = "i")]
    Input,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Output => "o",
            Direction::Input => "i",
        }
    }
}

/// Hilbert-space label `t^i` or `t^o`, optionally tagged with a subsystem name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLabel {
    pub timestep: i64,
    pub direction: Direction,
    pub tag: Option<String>,
}

impl SpaceLabel {
    pub fn input(timestep: i64) -> Self {
        Self { timestep, direction: Direction::Input, tag: None }
    }

    pub fn output(timestep: i64) -> Self {
        Self { timestep, direction: Direction::Output, tag: None }
    }

    pub fn tagged(self, tag: &str) -> Self {
        Self { tag: Some(tag.to_string()), ..self }
    }

    pub fn is_input(&self) -> bool {
        self.direction == Direction::Input
    }

    pub fn is_output(&self) -> bool {
        self.direction == Direction::Output
    }

    /// Canonical order: later timesteps first, output before input.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        other.timestep.cmp(&self.timestep).then(self.direction.cmp(&other.direction))
    }
}

impl fmt::Display for SpaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.timestep, self.direction.symbol())?;
        if let Some(tag) = &self.tag {
            write!(f, "[{tag}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Wire {
    pub label: SpaceLabel,
    pub dim: usize,
}

impl Wire {
    pub fn new(label: SpaceLabel, dim: usize) -> Self {
        Self { label, dim }
    }
}

/// Ordered tensor factors of an operator. The first wire is the most
/// significant index of the row-major layout.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WireList {
    wires: Vec<Wire>,
}

impl WireList {
    pub fn new(wires: Vec<Wire>) -> Result<Self> {
        let mut seen = HashSet::new();
        for w in &wires {
            if w.dim == 0 {
                return Err(Error::Dimension(format!("wire {} has dimension 0", w.label)));
            }
            if !seen.insert(&w.label) {
                return Err(Error::Label(format!("{} appears twice", w.label)));
            }
        }
        Ok(Self { wires })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(label: SpaceLabel, dim: usize) -> Self {
        Self { wires: vec![Wire::new(label, dim)] }
    }

    /// Qubit-style list from `(label, dim)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (SpaceLabel, usize)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(l, d)| Wire::new(l, d)).collect())
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Wire> {
        self.wires.iter()
    }

    pub fn labels(&self) -> Vec<SpaceLabel> {
        self.wires.iter().map(|w| w.label.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.wires.iter().map(|w| w.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.wires.iter().map(|w| w.dim).product()
    }

    pub fn position(&self, label: &SpaceLabel) -> Option<usize> {
        self.wires.iter().position(|w| &w.label == label)
    }

    pub fn contains(&self, label: &SpaceLabel) -> bool {
        self.position(label).is_some()
    }

    pub fn positions(&self, labels: &[SpaceLabel]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l).ok_or_else(|| Error::Label(format!("{l} is not a wire here")))?;
            if out.contains(&p) {
                return Err(Error::Label(format!("{l} requested twice")));
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn dim_of(&self, label: &SpaceLabel) -> Option<usize> {
        self.position(label).map(|p| self.wires[p].dim)
    }

    pub fn select(&self, positions: &[usize]) -> Self {
        Self { wires: positions.iter().map(|&p| self.wires[p].clone()).collect() }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut w = self.wires.clone();
        w.extend(other.wires.iter().cloned());
        Self::new(w)
    }

    /// Wires whose labels are not in `labels`, order preserved.
    pub fn without(&self, labels: &[SpaceLabel]) -> Self {
        Self { wires: self.wires.iter().filter(|w| !labels.contains(&w.label)).cloned().collect() }
    }

    /// Distinct timesteps, latest first.
    pub fn timesteps(&self) -> Vec<i64> {
        let mut ts: Vec<i64> = self.wires.iter().map(|w| w.label.timestep).collect();
        ts.sort_unstable_by(|a, b| b.cmp(a));
        ts.dedup();
        ts
    }

    pub fn labels_at(&self, timestep: i64) -> Vec<SpaceLabel> {
        self.wires.iter().filter(|w| w.label.timestep == timestep).map(|w| w.label.clone()).collect()
    }

    /// Product of the dimensions of the given direction.
    pub fn direction_dim(&self, dir: Direction) -> usize {
        self.wires.iter().filter(|w| w.label.direction == dir).map(|w| w.dim).product()
    }

    pub fn is_canonical(&self) -> bool {
        self.wires.windows(2).all(|p| p[0].label.canonical_cmp(&p[1].label) != Ordering::Greater)
    }

    /// Permutation that sorts the wires into canonical order (stable within
    /// a (timestep, direction) slot).
    pub fn canonical_permutation(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.wires.len()).collect();
        idx.sort_by(|&a, &b| self.wires[a].label.canonical_cmp(&self.wires[b].label));
        idx
    }

    /// Consecutive runs of wires sharing (timestep, direction).
    pub fn slots(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.wires.len() {
            let boundary = k == self.wires.len() || {
                let (a, b) = (&self.wires[k - 1].label, &self.wires[k].label);
                a.timestep != b.timestep || a.direction != b.direction
            };
            if boundary {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Row-major strides of each wire.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.wires.len()];
        for k in (0..self.wires.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.wires[k + 1].dim;
        }
        s
    }
}

impl fmt::Display for WireList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, w) in self.wires.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}({})", w.label, w.dim)?;
        }
        write!(f, "]")
    }
}

/// Flat offsets of all multi-indices over `selected` wires (row-major in the
/// order given), using the strides of the full list.
pub(crate) fn sub_offsets(dims: &[usize], strides: &[usize], selected: &[usize]) -> Vec<usize> {
    let mut offs = vec![0usize];
    for &p in selected {
        let mut next = Vec::with_capacity(offs.len() * dims[p]);
        for &o in &offs {
            for k in 0..dims[p] {
                next.push(o + k * strides[p]);
            }
        }
        offs = next;
    }
    offs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_labels_rejected() {
        let r = WireList::from_pairs([(SpaceLabel::input(1), 2), (SpaceLabel::input(1), 2)]);
        assert!(matches!(r, Err(Error::Label(_))));
        let ok = WireList::from_pairs([(SpaceLabel::input(1), 2), (SpaceLabel::input(1).tagged("A"), 2)]);
        assert!(ok.is_ok());
    }

    #[test]
    fn canonical_order_and_slots() {
        let w = WireList::from_pairs([
            (SpaceLabel::input(1), 2),
            (SpaceLabel::input(2).tagged("A"), 4),
            (SpaceLabel::output(1), 2),
            (SpaceLabel::input(2), 2),
        ])
        .unwrap();
        assert!(!w.is_canonical());
        let sorted = w.select(&w.canonical_permutation());
        assert!(sorted.is_canonical());
        let names: Vec<String> = sorted.labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(names, ["2^i[A]", "2^i", "1^o", "1^i"]);
        assert_eq!(sorted.slots(), vec![0..2, 2..3, 3..4]);
        assert_eq!(sorted.strides(), vec![8, 4, 2, 1]);
    }

    #[test]
    fn offsets_enumerate_row_major() {
        let dims = [2, 3, 2];
        let strides = [6, 2, 1];
        assert_eq!(sub_offsets(&dims, &strides, &[2, 0]), vec![0, 6, 1, 7]);
    }
}
