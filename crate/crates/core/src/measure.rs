//! Finite measure algebras: nonempty subsets of the cube `{0,1}^k` ordered by
//! inclusion, with the counting measure normalized to total mass 1.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::bounds::{Bounds, MAX_MEASURE_DIM};
use crate::error::{input, Error, Result};
use crate::poset::{Antichain, AtomSet, Cond, Poset, Stratification};
use crate::space::PointSet;

/// A nonempty cell of the cube, as a bit mask over the `2^k` cube points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasureCondition {
    cell: u16,
    dim: u8,
}

impl MeasureCondition {
    pub fn cell(&self) -> u16 {
        self.cell
    }

    pub fn points(&self) -> impl Iterator<Item = usize> {
        PointSet::from_bits(self.cell as u64).points()
    }

    pub fn len(&self) -> usize {
        self.cell.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.cell == 0
    }

    /// `|cell| / 2^k`, exactly.
    pub fn measure(&self) -> Ratio<u64> {
        Ratio::new(self.len() as u64, 1 << self.dim)
    }

    /// Bitstring list such as `00,01`.
    pub fn literal(&self) -> String {
        let k = self.dim as usize;
        self.points()
            .map(|i| format!("{i:0k$b}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// The measure algebra on `{0,1}^k`, compiled to a [`Poset`].
///
/// Conditions are ordered canonically by cell size, then by sorted point list,
/// so the singletons come first and the full cube last.
#[derive(Debug, Clone)]
pub struct MeasurePoset {
    dim: usize,
    cells: Vec<u16>,
    lookup: HashMap<u16, Cond>,
    poset: Poset,
    strat: Stratification,
}

impl MeasurePoset {
    pub fn new(dim: usize, bounds: &Bounds) -> Result<Self> {
        if dim == 0 {
            return input("the cube dimension must be at least 1");
        }
        if dim > bounds.measure_dim || dim > MAX_MEASURE_DIM {
            return Err(Error::Resource(format!(
                "measure algebra dimension {dim} exceeds the limit {}",
                bounds.measure_dim.min(MAX_MEASURE_DIM)
            )));
        }
        let npoints = 1usize << dim;
        let full = if npoints == 16 { u16::MAX } else { (1u16 << npoints) - 1 };
        let mut cells: Vec<u16> = (1..=full).collect();
        cells.sort_by(|a, b| {
            a.count_ones()
                .cmp(&b.count_ones())
                .then_with(|| PointSet::from_bits(*a as u64).cmp(&PointSet::from_bits(*b as u64)))
        });
        let lookup: HashMap<u16, Cond> = cells.iter().enumerate().map(|(i, &c)| (c, Cond(i))).collect();
        let atoms: Vec<Cond> = (0..npoints).map(|i| lookup[&(1u16 << i)]).collect();
        let atoms_below = cells.iter().map(|&c| AtomSet::from_bits(c as u64)).collect();
        let labels = cells
            .iter()
            .map(|&cell| MeasureCondition { cell, dim: dim as u8 }.literal())
            .collect();
        let poset = Poset::separative(labels, atoms_below, atoms)?;
        // B_n = {p : |p| * 2^n >= 2^k}
        let strat = Stratification::from_rank(&poset, |c| {
            let size = cells[c.index()].count_ones() as usize;
            (0..=dim).find(|&n| size << n >= npoints).expect("n = k always qualifies")
        });
        Ok(Self { dim, cells, lookup, poset, strat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    /// `B_n = {p : μ(p) >= 2^-n}`, stabilizing at `k`.
    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    pub fn condition(&self, c: Cond) -> MeasureCondition {
        MeasureCondition { cell: self.cells[c.index()], dim: self.dim as u8 }
    }

    pub fn measure(&self, c: Cond) -> Ratio<u64> {
        self.condition(c).measure()
    }

    /// Parses a bitstring list such as `00,01`.
    pub fn parse_cond(&self, literal: &str) -> Result<Cond> {
        let mut cell = 0u16;
        for part in literal.split(',').map(str::trim) {
            if part.len() != self.dim || !part.chars().all(|ch| ch == '0' || ch == '1') {
                return input(format!("`{part}` is not a bitstring of length {}", self.dim));
            }
            cell |= 1 << usize::from_str_radix(part, 2).expect("checked binary digits");
        }
        self.lookup
            .get(&cell)
            .copied()
            .ok_or_else(|| Error::Input(format!("`{literal}` is not a nonempty cell")))
    }

    /// Total measure of a family, in units of `2^-k`.
    fn total_points(&self, members: &[Cond]) -> u64 {
        members.iter().map(|&c| self.cells[c.index()].count_ones() as u64).sum()
    }

    pub fn total_measure(&self, members: &[Cond]) -> Ratio<u64> {
        Ratio::new(self.total_points(members), 1 << self.dim)
    }

    /// Exact test of `total > 1 - 2^-n` for a family with dyadic measures.
    fn exceeds_threshold(&self, points: u64, n: usize) -> bool {
        // Totals are multiples of 2^-k, so levels past k behave like level k.
        let n = n.min(self.dim) as u32;
        let k = self.dim as u32;
        (points as u128) << n > ((1u128 << n) - 1) << k
    }
}

/// Membership in the `n`-th weak endowment: an antichain of total measure
/// strictly greater than `1 - 2^-n`.
pub fn measure_endowment_member(m: &MeasurePoset, n: usize, l: &Antichain) -> Result<bool> {
    if !m.poset.is_antichain(l.members()) {
        return input("cells are not pairwise disjoint");
    }
    Ok(m.exceeds_threshold(m.total_points(l.members()), n))
}

/// Picks members of a maximal antichain by decreasing measure (ties in
/// canonical order) and returns the shortest prefix whose total measure
/// exceeds `1 - 2^-n`.
pub fn extract_measure_endowment(m: &MeasurePoset, n: usize, a: &Antichain) -> Result<Antichain> {
    if !m.poset.is_maximal_antichain(a) {
        return Err(Error::Precondition("the antichain is not maximal".into()));
    }
    let mut order: Vec<Cond> = a.members().to_vec();
    order.sort_by(|x, y| {
        m.cells[y.index()]
            .count_ones()
            .cmp(&m.cells[x.index()].count_ones())
            .then(x.cmp(y))
    });
    let mut points = 0u64;
    for (taken, &c) in order.iter().enumerate() {
        points += m.cells[c.index()].count_ones() as u64;
        if m.exceeds_threshold(points, n) {
            return Ok(Antichain::from_members(order[..=taken].iter().copied()));
        }
    }
    unreachable!("a maximal antichain partitions the cube, so its total measure is 1")
}
