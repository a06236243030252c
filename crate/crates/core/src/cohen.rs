//! Finite Cohen posets `Fn(D, 2)` over an index set `D = {0, …, d-1}`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::bounds::Bounds;
use crate::error::{input, Error, Result};
use crate::poset::{AtomSet, Cond, Poset, Stratification};
use crate::space::PointSet;

/// Largest index set that keeps the atom count within a `u64`.
const MAX_INDEX_SET: usize = 6;

/// A finite partial function from the index set to `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CohenCondition {
    domain: u32,
    values: u32,
}

impl CohenCondition {
    pub const EMPTY: CohenCondition = CohenCondition { domain: 0, values: 0 };

    pub fn new(assignments: impl IntoIterator<Item = (usize, u8)>) -> Result<Self> {
        let mut c = Self::EMPTY;
        for (i, v) in assignments {
            if i >= 32 || v > 1 {
                return input(format!("bad assignment {i}:{v}"));
            }
            if c.domain >> i & 1 == 1 && (c.values >> i & 1) as u8 != v {
                return input(format!("index {i} assigned twice with different values"));
            }
            c.domain |= 1 << i;
            c.values |= (v as u32) << i;
        }
        Ok(c)
    }

    /// Indices in the domain, ascending.
    pub fn support(&self) -> Vec<usize> {
        PointSet::from_bits(self.domain as u64).points().collect()
    }

    pub fn support_mask(&self) -> u32 {
        self.domain
    }

    pub fn size(&self) -> usize {
        self.domain.count_ones() as usize
    }

    pub fn value(&self, i: usize) -> Option<u8> {
        (self.domain >> i & 1 == 1).then(|| (self.values >> i & 1) as u8)
    }

    /// `self <= other`: `self` extends `other`.
    pub fn extends(&self, other: &CohenCondition) -> bool {
        other.domain & !self.domain == 0 && (self.values ^ other.values) & other.domain == 0
    }

    /// Agreement on the common part of the supports.
    pub fn compatible(&self, other: &CohenCondition) -> bool {
        (self.values ^ other.values) & self.domain & other.domain == 0
    }

    pub fn merge(&self, other: &CohenCondition) -> Option<CohenCondition> {
        self.compatible(other).then_some(CohenCondition {
            domain: self.domain | other.domain,
            values: self.values | other.values,
        })
    }

    pub fn restrict(&self, mask: u32) -> CohenCondition {
        CohenCondition { domain: self.domain & mask, values: self.values & mask }
    }

    /// Literal form `0:1,2:0`; the empty condition is written `∅`.
    pub fn literal(&self) -> String {
        if self.domain == 0 {
            return "∅".to_string();
        }
        self.support()
            .iter()
            .map(|&i| format!("{i}:{}", self.values >> i & 1))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(literal: &str) -> Result<Self> {
        let literal = literal.trim();
        if literal.is_empty() || literal == "∅" {
            return Ok(Self::EMPTY);
        }
        let mut assignments = Vec::new();
        for part in literal.split(',') {
            let Some((i, v)) = part.trim().split_once(':') else {
                return input(format!("condition literal `{literal}` has a part without `:`"));
            };
            let i: usize = i.trim().parse().map_err(|_| Error::Input(format!("bad index in `{literal}`")))?;
            let v: u8 = v.trim().parse().map_err(|_| Error::Input(format!("bad bit in `{literal}`")))?;
            assignments.push((i, v));
        }
        Self::new(assignments)
    }
}

impl Ord for CohenCondition {
    /// Size first, then support as a sorted index list, then values in index order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| PointSet::from_bits(self.domain as u64).cmp(&PointSet::from_bits(other.domain as u64)))
            .then_with(|| {
                let diff = self.values ^ other.values;
                if diff == 0 {
                    Ordering::Equal
                } else if self.values >> diff.trailing_zeros() & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            })
    }
}

impl PartialOrd for CohenCondition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CohenCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

/// `Fn(D, 2)` for `D = {0, …, d-1}`, compiled to a [`Poset`] in canonical order.
#[derive(Debug, Clone)]
pub struct CohenPoset {
    index_count: usize,
    conditions: Vec<CohenCondition>,
    lookup: HashMap<CohenCondition, Cond>,
    poset: Poset,
    strat: Stratification,
}

impl CohenPoset {
    pub fn new(index_count: usize, bounds: &Bounds) -> Result<Self> {
        if index_count == 0 {
            return input("the Cohen index set must be nonempty");
        }
        if index_count > bounds.cohen_index || index_count > MAX_INDEX_SET {
            return Err(Error::Resource(format!(
                "Cohen index set of size {index_count} exceeds the limit {}",
                bounds.cohen_index.min(MAX_INDEX_SET)
            )));
        }
        let full = (1u32 << index_count) - 1;
        let mut conditions = Vec::new();
        for domain in 0..=full {
            // every values ⊆ domain
            let mut values = domain;
            loop {
                conditions.push(CohenCondition { domain, values });
                if values == 0 {
                    break;
                }
                values = (values - 1) & domain;
            }
        }
        conditions.sort();
        let lookup: HashMap<CohenCondition, Cond> =
            conditions.iter().enumerate().map(|(i, c)| (*c, Cond(i))).collect();
        let total: Vec<CohenCondition> = conditions.iter().copied().filter(|c| c.domain == full).collect();
        let atoms: Vec<Cond> = total.iter().map(|c| lookup[c]).collect();
        let atoms_below: Vec<AtomSet> = conditions
            .iter()
            .map(|p| {
                let mut set = AtomSet::EMPTY;
                for (pos, t) in total.iter().enumerate() {
                    if t.extends(p) {
                        set.insert(pos);
                    }
                }
                set
            })
            .collect();
        let labels = conditions.iter().map(CohenCondition::literal).collect();
        let poset = Poset::separative(labels, atoms_below, atoms)?;
        let strat = Stratification::from_rank(&poset, |c| conditions[c.index()].size());
        Ok(Self { index_count, conditions, lookup, poset, strat })
    }

    pub fn index_count(&self) -> usize {
        self.index_count
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    /// `P_n = {p : |supp(p)| <= n}`, stabilizing at `|D|`.
    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    pub fn condition(&self, c: Cond) -> CohenCondition {
        self.conditions[c.index()]
    }

    pub fn cond_of(&self, p: &CohenCondition) -> Result<Cond> {
        self.lookup
            .get(p)
            .copied()
            .ok_or_else(|| Error::Input(format!("condition `{p}` uses indices outside the index set")))
    }

    pub fn parse_cond(&self, literal: &str) -> Result<Cond> {
        self.cond_of(&CohenCondition::parse(literal)?)
    }

    pub fn supp(&self, c: Cond) -> Vec<usize> {
        self.condition(c).support()
    }
}
