//! Finite topological spaces and point sets.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::bounds::MAX_SPACE_POINTS;
use crate::error::{input, Error, Result};

/// A subset of a finite space, stored as a bit mask over point indices.
///
/// Sets are ordered canonically: lexicographically by their sorted point lists,
/// so `{0} < {0,1} < {1}` and the empty set is least.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PointSet(u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn from_bits(bits: u64) -> Self {
        PointSet(bits)
    }

    pub fn from_points(points: impl IntoIterator<Item = usize>) -> Self {
        PointSet(points.into_iter().fold(0, |acc, i| acc | 1 << i))
    }

    pub fn singleton(i: usize) -> Self {
        PointSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        PointSet(if n == 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: PointSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn difference(self, other: PointSet) -> PointSet {
        PointSet(self.0 & !other.0)
    }

    pub fn points(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }
}

impl Ord for PointSet {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            return Ordering::Equal;
        }
        let diff = self.0 ^ other.0;
        let i = diff.trailing_zeros();
        let above = if i == 63 { 0 } else { u64::MAX << (i + 1) };
        // The set holding point `i` is smaller unless the other set stops before `i`.
        let (holder_first, other_bits) = if self.0 >> i & 1 == 1 {
            (Ordering::Less, other.0)
        } else {
            (Ordering::Greater, self.0)
        };
        if other_bits & above != 0 {
            holder_first
        } else {
            holder_first.reverse()
        }
    }
}

impl PartialOrd for PointSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.points().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Sorts canonically and removes duplicates.
pub fn canonical_family(mut family: Vec<PointSet>) -> Vec<PointSet> {
    family.sort();
    family.dedup();
    family
}

/// A finite space `(X, τ)` given by a base; the topology is the closure of
/// the base under finite intersections and unions.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    labels: Vec<String>,
    lookup: HashMap<String, usize>,
    base: Vec<PointSet>,
    topology: Vec<PointSet>,
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, base: Vec<PointSet>) -> Result<Self> {
        let n = labels.len();
        if n > MAX_SPACE_POINTS {
            return Err(Error::Resource(format!(
                "space with {n} points exceeds {MAX_SPACE_POINTS}"
            )));
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return input(format!("duplicate point `{l}`"));
            }
        }
        let full = PointSet::full(n);
        if let Some(bad) = base.iter().find(|b| !b.is_subset(full)) {
            return input(format!("base set {bad} mentions points outside the space"));
        }
        let covered = base.iter().fold(PointSet::EMPTY, |acc, &b| acc.union(b));
        if covered != full {
            return input("the base does not cover the space");
        }
        let base = canonical_family(base);
        let topology = generate_topology(&base, full);
        Ok(Self { labels, lookup, base, topology })
    }

    /// Builds a space from point labels and base sets given as label lists.
    pub fn from_labels<S: AsRef<str>>(points: &[S], base: &[Vec<S>]) -> Result<Self> {
        let labels: Vec<String> = points.iter().map(|s| s.as_ref().to_string()).collect();
        let index: HashMap<&str, usize> = points.iter().enumerate().map(|(i, s)| (s.as_ref(), i)).collect();
        let base = base
            .iter()
            .map(|set| {
                set.iter()
                    .map(|p| {
                        index
                            .get(p.as_ref())
                            .copied()
                            .ok_or_else(|| Error::Input(format!("unknown point `{}`", p.as_ref())))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(PointSet::from_points)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, base)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn full(&self) -> PointSet {
        PointSet::full(self.len())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn point(&self, label: &str) -> Result<usize> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown point `{label}`")))
    }

    pub fn set_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<PointSet> {
        labels
            .iter()
            .map(|l| self.point(l.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(PointSet::from_points)
    }

    pub fn set_labels(&self, set: PointSet) -> Vec<String> {
        set.points().map(|i| self.labels[i].clone()).collect()
    }

    /// Base sets in canonical order.
    pub fn base(&self) -> &[PointSet] {
        &self.base
    }

    /// All open sets in canonical order.
    pub fn topology(&self) -> &[PointSet] {
        &self.topology
    }

    pub fn is_basic(&self, set: PointSet) -> bool {
        self.base.binary_search(&set).is_ok()
    }

    pub fn is_open(&self, set: PointSet) -> bool {
        self.topology.binary_search(&set).is_ok()
    }

    /// True iff every point lies in some member of `family`.
    pub fn is_cover(&self, family: &[PointSet]) -> bool {
        family.iter().fold(PointSet::EMPTY, |acc, &s| acc.union(s)) == self.full()
    }
}

fn generate_topology(base: &[PointSet], full: PointSet) -> Vec<PointSet> {
    let mut meets: BTreeSet<PointSet> = base.iter().copied().collect();
    meets.insert(full);
    loop {
        let current: Vec<PointSet> = meets.iter().copied().collect();
        let before = meets.len();
        for (i, &a) in current.iter().enumerate() {
            for &b in &current[i + 1..] {
                meets.insert(a.intersection(b));
            }
        }
        if meets.len() == before {
            break;
        }
    }
    // Unions of an intersection-closed family stay intersection-closed.
    let mut opens: BTreeSet<PointSet> = BTreeSet::from([PointSet::EMPTY]);
    for &m in &meets {
        let grown: Vec<PointSet> = opens.iter().map(|&o| o.union(m)).collect();
        opens.extend(grown);
    }
    opens.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_points(s: PointSet) -> Vec<usize> {
        s.points().collect()
    }

    #[test]
    fn canonical_order_examples() {
        let x = PointSet::from_points([0]);
        let xy = PointSet::from_points([0, 1]);
        let y = PointSet::from_points([1]);
        assert!(PointSet::EMPTY < x);
        assert!(x < xy);
        assert!(xy < y);
    }

    proptest! {
        #[test]
        fn order_matches_sorted_lists(a in 0u64..4096, b in 0u64..4096) {
            let (pa, pb) = (PointSet::from_bits(a), PointSet::from_bits(b));
            prop_assert_eq!(pa.cmp(&pb), sorted_points(pa).cmp(&sorted_points(pb)));
        }
    }

    #[test]
    fn topology_is_closed() {
        let space = FiniteSpace::from_labels(&["x", "y", "z"], &[vec!["x", "y"], vec!["y", "z"]]).unwrap();
        let t = space.topology();
        for &a in t {
            for &b in t {
                assert!(space.is_open(a.union(b)));
                assert!(space.is_open(a.intersection(b)));
            }
        }
        assert!(space.is_open(PointSet::EMPTY));
        assert!(space.is_open(space.full()));
        assert!(space.is_open(PointSet::from_points([1])));
        assert!(!space.is_open(PointSet::from_points([0])));
    }

    #[test]
    fn base_must_cover() {
        assert!(FiniteSpace::from_labels(&["x", "y"], &[vec!["x"]]).is_err());
        assert!(FiniteSpace::from_labels(&["x", "x"], &[vec!["x"]]).is_err());
        assert!(FiniteSpace::from_labels(&["x"], &[vec!["q"]]).is_err());
    }
}
