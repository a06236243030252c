//! Finite partial orders with exact forcing semantics.
//!
//! Conditions are opaque indices into a [`Poset`]; the index order is the
//! canonical order used for every deterministic tie-break downstream. Smaller
//! conditions are stronger. Every finite poset has an atom below each
//! condition, so compatibility and lower bounds are decided on atom sets.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::bounds::MAX_ATOMS;
use crate::error::{input, Error, Result};

/// Largest explicit poset accepted (the order is stored as a bit matrix).
pub const MAX_EXPLICIT_ELEMENTS: usize = 4096;
/// Largest number of maximal antichains an exhaustive enumeration may return.
pub const MAX_ENUMERATED_ANTICHAINS: usize = 1_000_000;

/// A condition of some poset, identified by its canonical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cond(pub(crate) usize);

impl Cond {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A set of atom positions (positions into [`Poset::atoms`]).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct AtomSet(u64);

impl AtomSet {
    pub const EMPTY: AtomSet = AtomSet(0);

    pub fn from_bits(bits: u64) -> Self {
        AtomSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(pos: usize) -> Self {
        AtomSet(1 << pos)
    }

    pub fn contains(self, pos: usize) -> bool {
        self.0 >> pos & 1 == 1
    }

    pub fn insert(&mut self, pos: usize) {
        self.0 |= 1 << pos;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersect(self, other: AtomSet) -> AtomSet {
        AtomSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: AtomSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let pos = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(pos)
        })
    }
}

#[derive(Debug, Clone)]
enum Order {
    /// `below[q]` holds every `p` with `p <= q`.
    Explicit(Vec<FixedBitSet>),
    /// `p <= q` iff the atoms below `p` are among the atoms below `q`.
    Separative,
}

/// A finite partial order of forcing conditions.
#[derive(Debug, Clone)]
pub struct Poset {
    labels: Vec<String>,
    lookup: HashMap<String, Cond>,
    order: Order,
    atoms: Vec<Cond>,
    atom_pos: Vec<Option<usize>>,
    atoms_below: Vec<AtomSet>,
    top: Option<Cond>,
}

impl Poset {
    /// Builds a poset from labelled elements and `(a, b)` pairs meaning `a <= b`.
    /// The reflexive-transitive closure is applied; antisymmetry is checked.
    pub fn from_relation(labels: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return input("a poset needs at least one element");
        }
        if n > MAX_EXPLICIT_ELEMENTS {
            return Err(Error::Resource(format!(
                "explicit poset with {n} elements exceeds {MAX_EXPLICIT_ELEMENTS}"
            )));
        }
        let lookup = build_lookup(&labels)?;
        let mut up: Vec<FixedBitSet> = (0..n)
            .map(|i| {
                let mut row = FixedBitSet::with_capacity(n);
                row.insert(i);
                row
            })
            .collect();
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return input(format!("order pair ({a}, {b}) refers to a missing element"));
            }
            up[a].insert(b);
        }
        for k in 0..n {
            let row_k = up[k].clone();
            for row in up.iter_mut() {
                if row.contains(k) {
                    row.union_with(&row_k);
                }
            }
        }
        for i in 0..n {
            for j in up[i].ones() {
                if j != i && up[j].contains(i) {
                    return input(format!(
                        "order is not antisymmetric: `{}` and `{}` are mutually below each other",
                        labels[i], labels[j]
                    ));
                }
            }
        }
        let mut below: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(n)).collect();
        for (p, row) in up.iter().enumerate() {
            for q in row.ones() {
                below[q].insert(p);
            }
        }
        let atoms: Vec<Cond> = (0..n).filter(|&p| below[p].count_ones(..) == 1).map(Cond).collect();
        if atoms.len() > MAX_ATOMS {
            return Err(Error::Resource(format!(
                "poset has {} atoms, more than {MAX_ATOMS}",
                atoms.len()
            )));
        }
        let mut atom_pos = vec![None; n];
        for (pos, a) in atoms.iter().enumerate() {
            atom_pos[a.0] = Some(pos);
        }
        let atoms_below = (0..n)
            .map(|p| {
                let mut set = AtomSet::EMPTY;
                for (pos, a) in atoms.iter().enumerate() {
                    if below[p].contains(a.0) {
                        set.insert(pos);
                    }
                }
                set
            })
            .collect();
        let top = (0..n).find(|&q| below[q].count_ones(..) == n).map(Cond);
        Ok(Self {
            labels,
            lookup,
            order: Order::Explicit(below),
            atoms,
            atom_pos,
            atoms_below,
            top,
        })
    }

    /// Builds a separative poset from per-element atom sets. `atoms[i]` must
    /// be the element whose atom set is `{i}`, and atom sets must be distinct.
    pub(crate) fn separative(labels: Vec<String>, atoms_below: Vec<AtomSet>, atoms: Vec<Cond>) -> Result<Self> {
        let n = labels.len();
        debug_assert_eq!(atoms_below.len(), n);
        if atoms.len() > MAX_ATOMS {
            return Err(Error::Resource(format!("{} atoms exceed {MAX_ATOMS}", atoms.len())));
        }
        let lookup = build_lookup(&labels)?;
        let mut atom_pos = vec![None; n];
        for (pos, a) in atoms.iter().enumerate() {
            debug_assert_eq!(atoms_below[a.0], AtomSet::singleton(pos));
            atom_pos[a.0] = Some(pos);
        }
        let full = if atoms.len() == 64 { u64::MAX } else { (1u64 << atoms.len()) - 1 };
        let top = atoms_below.iter().position(|s| s.bits() == full).map(Cond);
        Ok(Self {
            labels,
            lookup,
            order: Order::Separative,
            atoms,
            atom_pos,
            atoms_below,
            top,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// All conditions in canonical order.
    pub fn conds(&self) -> impl DoubleEndedIterator<Item = Cond> + ExactSizeIterator + '_ {
        (0..self.len()).map(Cond)
    }

    pub fn cond(&self, index: usize) -> Option<Cond> {
        (index < self.len()).then_some(Cond(index))
    }

    pub fn contains_cond(&self, c: Cond) -> bool {
        c.0 < self.len()
    }

    pub fn label(&self, c: Cond) -> &str {
        &self.labels[c.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lookup(&self, label: &str) -> Result<Cond> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown condition `{label}`")))
    }

    pub fn top(&self) -> Option<Cond> {
        self.top
    }

    pub fn is_separative_encoding(&self) -> bool {
        matches!(self.order, Order::Separative)
    }

    /// `p <= q`, i.e. `p` is at least as strong as `q`.
    pub fn leq(&self, p: Cond, q: Cond) -> bool {
        match &self.order {
            Order::Explicit(below) => below[q.0].contains(p.0),
            Order::Separative => self.atoms_below[p.0].is_subset(self.atoms_below[q.0]),
        }
    }

    /// True iff some `r` lies below both `p` and `q`.
    pub fn compatible(&self, p: Cond, q: Cond) -> bool {
        !self.atoms_below[p.0].intersect(self.atoms_below[q.0]).is_empty()
    }

    pub fn compatible_by_label(&self, p: &str, q: &str) -> Result<bool> {
        Ok(self.compatible(self.lookup(p)?, self.lookup(q)?))
    }

    /// Minimal elements, in canonical order.
    pub fn atoms(&self) -> &[Cond] {
        &self.atoms
    }

    pub fn is_atom(&self, c: Cond) -> bool {
        self.atom_pos[c.0].is_some()
    }

    pub fn atom_position(&self, c: Cond) -> Option<usize> {
        self.atom_pos[c.0]
    }

    pub fn atom_set(&self, c: Cond) -> AtomSet {
        self.atoms_below[c.0]
    }

    pub fn all_atoms(&self) -> AtomSet {
        let k = self.atoms.len();
        AtomSet::from_bits(if k == 64 { u64::MAX } else { (1u64 << k) - 1 })
    }

    pub fn atoms_below(&self, p: Cond) -> impl Iterator<Item = Cond> + '_ {
        self.atoms_below[p.0].iter().map(|pos| self.atoms[pos])
    }

    /// Every `r <= p`, in canonical order.
    pub fn below(&self, p: Cond) -> Vec<Cond> {
        match &self.order {
            Order::Explicit(below) => below[p.0].ones().map(Cond).collect(),
            Order::Separative => self.conds().filter(|&r| self.leq(r, p)).collect(),
        }
    }

    /// True iff the given conditions share a lower bound.
    pub fn has_lower_bound(&self, conds: &[Cond]) -> bool {
        let mut common = self.all_atoms();
        for &c in conds {
            common = common.intersect(self.atoms_below[c.0]);
        }
        !common.is_empty()
    }

    pub fn is_antichain(&self, members: &[Cond]) -> bool {
        members.iter().enumerate().all(|(i, &p)| {
            members[i + 1..].iter().all(|&q| p != q && !self.compatible(p, q))
        })
    }

    /// True iff `a` is an antichain and every condition is compatible with a member.
    pub fn is_maximal_antichain(&self, a: &Antichain) -> bool {
        self.is_antichain(a.members())
            && self
                .conds()
                .all(|p| a.members().iter().any(|&q| self.compatible(p, q)))
    }

    /// Density by definition: every condition has an extension in `set`.
    pub fn is_dense(&self, set: &FixedBitSet) -> bool {
        self.conds().all(|p| self.below(p).iter().any(|r| set.contains(r.0)))
    }

    /// True iff every `r <= p` has some `s <= r` in `set`.
    pub fn is_dense_below(&self, p: Cond, set: &FixedBitSet) -> bool {
        self.below(p)
            .into_iter()
            .all(|r| self.below(r).iter().any(|s| set.contains(s.0)))
    }

    /// Scans `candidates` in order, keeping each one incompatible with all kept so far.
    pub fn greedy_antichain(&self, candidates: impl IntoIterator<Item = Cond>) -> Antichain {
        let mut chosen: Vec<Cond> = Vec::new();
        for c in candidates {
            if chosen.iter().all(|&q| !self.compatible(c, q)) {
                chosen.push(c);
            }
        }
        Antichain::from_members(chosen)
    }

    /// A maximal antichain from a seeded greedy completion over a shuffled order.
    pub fn random_maximal_antichain<R: Rng + ?Sized>(&self, rng: &mut R) -> Antichain {
        let mut order: Vec<Cond> = self.conds().collect();
        order.shuffle(rng);
        self.greedy_antichain(order)
    }

    /// Every maximal antichain, sorted canonically. Posets larger than
    /// `max_elements` are refused with a resource error.
    pub fn maximal_antichains(&self, max_elements: usize) -> Result<Vec<Antichain>> {
        let n = self.len();
        if n > max_elements {
            return Err(Error::Resource(format!(
                "exhaustive antichain enumeration needs at most {max_elements} elements, poset has {n}"
            )));
        }
        // Maximal antichains are the maximal cliques of the incompatibility graph.
        let neighbours: Vec<FixedBitSet> = (0..n)
            .map(|i| {
                let mut row = FixedBitSet::with_capacity(n);
                for j in 0..n {
                    if i != j && !self.compatible(Cond(i), Cond(j)) {
                        row.insert(j);
                    }
                }
                row
            })
            .collect();
        let mut candidates = FixedBitSet::with_capacity(n);
        candidates.insert_range(..);
        let mut out = Vec::new();
        let mut clique = Vec::new();
        bron_kerbosch(&neighbours, &mut clique, candidates, FixedBitSet::with_capacity(n), &mut out)?;
        out.sort();
        Ok(out)
    }
}

fn build_lookup(labels: &[String]) -> Result<HashMap<String, Cond>> {
    let mut lookup = HashMap::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        if lookup.insert(label.clone(), Cond(i)).is_some() {
            return input(format!("duplicate condition label `{label}`"));
        }
    }
    Ok(lookup)
}

fn bron_kerbosch(
    neighbours: &[FixedBitSet],
    clique: &mut Vec<usize>,
    mut candidates: FixedBitSet,
    mut excluded: FixedBitSet,
    out: &mut Vec<Antichain>,
) -> Result<()> {
    if candidates.is_clear() && excluded.is_clear() {
        if out.len() >= MAX_ENUMERATED_ANTICHAINS {
            return Err(Error::Resource(format!(
                "more than {MAX_ENUMERATED_ANTICHAINS} maximal antichains"
            )));
        }
        out.push(Antichain::from_members(clique.iter().map(|&i| Cond(i))));
        return Ok(());
    }
    let pivot = candidates
        .ones()
        .chain(excluded.ones())
        .max_by_key(|&u| candidates.intersection(&neighbours[u]).count())
        .expect("candidates or excluded is non-empty");
    let branch: Vec<usize> = candidates.difference(&neighbours[pivot]).collect();
    for v in branch {
        clique.push(v);
        let mut next_candidates = candidates.clone();
        next_candidates.intersect_with(&neighbours[v]);
        let mut next_excluded = excluded.clone();
        next_excluded.intersect_with(&neighbours[v]);
        bron_kerbosch(neighbours, clique, next_candidates, next_excluded, out)?;
        clique.pop();
        candidates.remove(v);
        excluded.insert(v);
    }
    Ok(())
}

/// A finite set of conditions, kept sorted in canonical order.
///
/// Construction through [`Antichain::from_members`] does not check pairwise
/// incompatibility so that verifiers can inspect untrusted outputs; use
/// [`Antichain::new`] for a checked value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Antichain(Vec<Cond>);

impl Antichain {
    pub fn from_members(members: impl IntoIterator<Item = Cond>) -> Self {
        let mut v: Vec<Cond> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Antichain(v)
    }

    pub fn new(poset: &Poset, members: impl IntoIterator<Item = Cond>) -> Result<Self> {
        let a = Self::from_members(members);
        if let Some(c) = a.0.iter().find(|c| !poset.contains_cond(**c)) {
            return input(format!("condition #{} is not in the poset", c.0));
        }
        if !poset.is_antichain(&a.0) {
            return input("members are not pairwise incompatible");
        }
        Ok(a)
    }

    pub fn from_labels<S: AsRef<str>>(poset: &Poset, labels: &[S]) -> Result<Self> {
        let members = labels
            .iter()
            .map(|l| poset.lookup(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(poset, members)
    }

    pub fn members(&self) -> &[Cond] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: Cond) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn is_subset_of(&self, other: &Antichain) -> bool {
        self.0.iter().all(|&c| other.contains(c))
    }

    pub fn labels(&self, poset: &Poset) -> Vec<String> {
        self.0.iter().map(|&c| poset.label(c).to_string()).collect()
    }
}

/// An increasing sequence of condition sets ending in the whole poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    levels: Vec<FixedBitSet>,
    stabilization: usize,
}

impl Stratification {
    pub fn new(poset: &Poset, levels: Vec<Vec<Cond>>) -> Result<Self> {
        let n = poset.len();
        if levels.is_empty() {
            return input("a stratification needs at least one level");
        }
        let mut sets = Vec::with_capacity(levels.len());
        for level in levels {
            let mut set = FixedBitSet::with_capacity(n);
            for c in level {
                if !poset.contains_cond(c) {
                    return input(format!("level mentions condition #{} outside the poset", c.0));
                }
                set.insert(c.0);
            }
            sets.push(set);
        }
        for (i, pair) in sets.windows(2).enumerate() {
            if !pair[0].is_subset(&pair[1]) {
                return input(format!("level {i} is not contained in level {}", i + 1));
            }
        }
        if sets.last().map(|s| s.count_ones(..)) != Some(n) {
            return input("the final level must be the whole poset");
        }
        let stabilization = sets
            .iter()
            .position(|s| s.count_ones(..) == n)
            .expect("last level is full");
        sets.truncate(stabilization + 1);
        Ok(Self { levels: sets, stabilization })
    }

    /// Single level containing everything.
    pub fn trivial(poset: &Poset) -> Self {
        let mut all = FixedBitSet::with_capacity(poset.len());
        all.insert_range(..);
        Self { levels: vec![all], stabilization: 0 }
    }

    /// Level `n` holds the conditions of rank at most `n`.
    pub fn from_rank(poset: &Poset, rank: impl Fn(Cond) -> usize) -> Self {
        let ranks: Vec<usize> = poset.conds().map(&rank).collect();
        let top = ranks.iter().copied().max().unwrap_or(0);
        let levels = (0..=top)
            .map(|n| {
                let mut set = FixedBitSet::with_capacity(poset.len());
                for (i, &r) in ranks.iter().enumerate() {
                    if r <= n {
                        set.insert(i);
                    }
                }
                set
            })
            .collect();
        Self { levels, stabilization: top }
    }

    /// Least `M` with `P_M` equal to the whole poset.
    pub fn stabilization_index(&self) -> usize {
        self.stabilization
    }

    pub fn contains(&self, n: usize, p: Cond) -> bool {
        self.levels[n.min(self.stabilization)].contains(p.0)
    }

    /// Members of `P_n` in canonical order (levels past stabilization are full).
    pub fn level(&self, n: usize) -> Vec<Cond> {
        self.levels[n.min(self.stabilization)].ones().map(Cond).collect()
    }

    pub fn level_len(&self, n: usize) -> usize {
        self.levels[n.min(self.stabilization)].count_ones(..)
    }

    /// Least `n` with `p` in `P_n`.
    pub fn rank(&self, p: Cond) -> usize {
        (0..=self.stabilization)
            .find(|&n| self.levels[n].contains(p.0))
            .expect("final level is full")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("e{i}")).collect()
    }

    /// Four-element diamond: bottom-left, bottom-right below a middle, middle below top.
    fn vee() -> Poset {
        Poset::from_relation(labels(4), &[(0, 2), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn closure_and_atoms() {
        let p = vee();
        assert!(p.leq(Cond(0), Cond(3)));
        assert!(!p.leq(Cond(3), Cond(0)));
        assert_eq!(p.atoms(), &[Cond(0), Cond(1)]);
        assert_eq!(p.top(), Some(Cond(3)));
        assert!(!p.compatible(Cond(0), Cond(1)));
        assert!(p.compatible(Cond(0), Cond(2)));
    }

    #[test]
    fn rejects_cycles_and_empty() {
        assert!(matches!(
            Poset::from_relation(labels(2), &[(0, 1), (1, 0)]),
            Err(Error::Input(_))
        ));
        assert!(Poset::from_relation(vec![], &[]).is_err());
        assert!(Poset::from_relation(labels(2), &[(0, 5)]).is_err());
    }

    #[test]
    fn one_element_poset() {
        let p = Poset::from_relation(labels(1), &[]).unwrap();
        assert_eq!(p.atoms(), &[Cond(0)]);
        assert_eq!(p.maximal_antichains(40).unwrap(), vec![Antichain::from_members([Cond(0)])]);
    }

    #[test]
    fn maximal_antichains_of_vee() {
        let p = vee();
        let all = p.maximal_antichains(40).unwrap();
        // {0,1}, {2}, {3}
        assert_eq!(
            all,
            vec![
                Antichain::from_members([Cond(0), Cond(1)]),
                Antichain::from_members([Cond(2)]),
                Antichain::from_members([Cond(3)]),
            ]
        );
        for a in &all {
            assert!(p.is_maximal_antichain(a));
        }
        assert!(!p.is_maximal_antichain(&Antichain::from_members([Cond(0)])));
    }

    #[test]
    fn enumeration_refuses_large_posets() {
        let p = Poset::from_relation(labels(50), &[]).unwrap();
        assert!(matches!(p.maximal_antichains(40), Err(Error::Resource(_))));
    }

    #[test]
    fn random_maximal_antichains_are_maximal() {
        let p = vee();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert!(p.is_maximal_antichain(&p.random_maximal_antichain(&mut rng)));
        }
    }

    #[test]
    fn stratification_checks() {
        let p = vee();
        let s = Stratification::new(&p, vec![vec![Cond(3)], vec![Cond(3), Cond(2)], p.conds().collect()]).unwrap();
        assert_eq!(s.stabilization_index(), 2);
        assert!(s.contains(7, Cond(0)));
        assert_eq!(s.rank(Cond(2)), 1);
        assert!(Stratification::new(&p, vec![vec![Cond(2)], vec![Cond(3)], p.conds().collect()]).is_err());
        assert!(Stratification::new(&p, vec![vec![Cond(2)]]).is_err());
        assert_eq!(Stratification::trivial(&p).stabilization_index(), 0);
    }

    #[test]
    fn density_by_definition() {
        let p = vee();
        let mut atoms = FixedBitSet::with_capacity(4);
        atoms.insert(0);
        atoms.insert(1);
        assert!(p.is_dense(&atoms));
        let mut left = FixedBitSet::with_capacity(4);
        left.insert(0);
        assert!(!p.is_dense(&left));
        assert!(p.is_dense_below(Cond(0), &left));
    }
}
