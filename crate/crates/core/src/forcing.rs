//! Names and the forcing relation over finite posets.
//!
//! A generic filter is modelled by the up-closure of an atom. A name is a
//! finite set of `(condition, point set)` pairs; at atom `a` it evaluates to
//! the sets paired with conditions above `a`. A condition forces a statement
//! when the statement holds at every atom below it.
//!
//! Finite spaces gain no new subsets in an extension, so the extension
//! topology equals the ground topology and every forced topological
//! statement reduces to set inclusions checked atom by atom.

use fixedbitset::FixedBitSet;

use crate::error::{input, Result};
use crate::poset::{Cond, Poset};
use crate::space::{canonical_family, PointSet};

/// A name for a family of point sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Name {
    pairs: Vec<(Cond, PointSet)>,
}

impl Name {
    pub fn new(pairs: impl IntoIterator<Item = (Cond, PointSet)>) -> Self {
        let mut pairs: Vec<(Cond, PointSet)> = pairs.into_iter().collect();
        pairs.sort();
        pairs.dedup();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(Cond, PointSet)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Value of the name in the extension determined by `atom`, canonically sorted.
    pub fn eval_at(&self, poset: &Poset, atom: Cond) -> Vec<PointSet> {
        canonical_family(
            self.pairs
                .iter()
                .filter(|(q, _)| poset.leq(atom, *q))
                .map(|&(_, s)| s)
                .collect(),
        )
    }

    pub(crate) fn check(&self, poset: &Poset) -> Result<()> {
        match self.pairs.iter().find(|(c, _)| !poset.contains_cond(*c)) {
            Some((c, _)) => input(format!("name mentions condition #{} outside the poset", c.index())),
            None => Ok(()),
        }
    }
}

/// The closed statement grammar used by every forced formula in the laboratory.
#[derive(Debug, Clone)]
pub enum Statement<'a> {
    /// The ground set is a member of the name's value.
    MemberOfName { name: &'a Name, set: PointSet },
    /// Some member of the cover's value contains the ground set.
    ExistsSupersetInCover { cover: &'a Name, set: PointSet },
    /// The name's value is a subfamily of the ground family.
    SubfamilyOf { name: &'a Name, family: &'a [PointSet] },
    /// Every member of `refined` sits inside some member of `cover`.
    RefinesName { refined: &'a Name, cover: &'a Name },
    /// The union of the names' values contains the point set.
    FamilyUnionCovers { names: Vec<&'a Name>, points: PointSet },
}

impl Statement<'_> {
    fn check(&self, poset: &Poset) -> Result<()> {
        match self {
            Statement::MemberOfName { name, .. } | Statement::SubfamilyOf { name, .. } => name.check(poset),
            Statement::ExistsSupersetInCover { cover, .. } => cover.check(poset),
            Statement::RefinesName { refined, cover } => {
                refined.check(poset)?;
                cover.check(poset)
            }
            Statement::FamilyUnionCovers { names, .. } => names.iter().try_for_each(|n| n.check(poset)),
        }
    }

    /// Truth value in the extension determined by `atom`.
    pub fn holds_at(&self, poset: &Poset, atom: Cond) -> bool {
        match self {
            Statement::MemberOfName { name, set } => name.eval_at(poset, atom).contains(set),
            Statement::ExistsSupersetInCover { cover, set } => cover
                .pairs()
                .iter()
                .any(|&(q, u)| poset.leq(atom, q) && set.is_subset(u)),
            Statement::SubfamilyOf { name, family } => {
                name.eval_at(poset, atom).iter().all(|s| family.contains(s))
            }
            Statement::RefinesName { refined, cover } => {
                let outer = cover.eval_at(poset, atom);
                refined
                    .eval_at(poset, atom)
                    .iter()
                    .all(|h| outer.iter().any(|u| h.is_subset(*u)))
            }
            Statement::FamilyUnionCovers { names, points } => {
                let union = names
                    .iter()
                    .flat_map(|n| n.eval_at(poset, atom))
                    .fold(PointSet::EMPTY, PointSet::union);
                points.is_subset(union)
            }
        }
    }
}

/// `p` forces `s`: the statement holds at every atom below `p`.
pub fn forces(poset: &Poset, p: Cond, s: &Statement<'_>) -> Result<bool> {
    if !poset.contains_cond(p) {
        return input(format!("condition #{} is not in the poset", p.index()));
    }
    s.check(poset)?;
    Ok(poset.atoms_below(p).all(|a| s.holds_at(poset, a)))
}

/// The statement is forced by every condition (it holds at every atom).
pub fn forced_everywhere(poset: &Poset, s: &Statement<'_>) -> Result<bool> {
    s.check(poset)?;
    Ok(poset.atoms().iter().all(|&a| s.holds_at(poset, a)))
}

/// Dense-witness form of `p ⊩ ∃U ∈ cover (V ⊆ U)`: the set of conditions below
/// a pair whose set contains `v` is dense below `p`. Uses only the order and
/// never evaluates names at atoms, so it cross-checks [`forces`].
pub fn forces_dense(poset: &Poset, p: Cond, cover: &Name, v: PointSet) -> bool {
    let mut witnesses = FixedBitSet::with_capacity(poset.len());
    for s in poset.conds() {
        if cover
            .pairs()
            .iter()
            .any(|&(q, u)| v.is_subset(u) && poset.leq(s, q))
        {
            witnesses.insert(s.index());
        }
    }
    poset.is_dense_below(p, &witnesses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::Poset;

    fn chain_and_fork() -> Poset {
        // a, b atoms; m above both; t top.
        Poset::from_relation(
            vec!["a".into(), "b".into(), "m".into(), "t".into()],
            &[(0, 2), (1, 2), (2, 3)],
        )
        .unwrap()
    }

    #[test]
    fn member_of_name_per_atom() {
        let p = chain_and_fork();
        let x = PointSet::singleton(0);
        let name = Name::new([(p.lookup("a").unwrap(), x)]);
        let s = Statement::MemberOfName { name: &name, set: x };
        assert!(forces(&p, p.lookup("a").unwrap(), &s).unwrap());
        assert!(!forces(&p, p.lookup("m").unwrap(), &s).unwrap());
        assert!(!forced_everywhere(&p, &s).unwrap());
    }

    #[test]
    fn empty_name_never_densely_forces() {
        let p = chain_and_fork();
        let empty = Name::default();
        for c in p.conds() {
            assert!(!forces_dense(&p, c, &empty, PointSet::EMPTY));
            let s = Statement::ExistsSupersetInCover { cover: &empty, set: PointSet::EMPTY };
            assert!(!forces(&p, c, &s).unwrap());
        }
    }

    #[test]
    fn malformed_statement_is_input_error() {
        let p = chain_and_fork();
        let foreign = Name::new([(Cond(99), PointSet::EMPTY)]);
        let s = Statement::MemberOfName { name: &foreign, set: PointSet::EMPTY };
        assert!(forces(&p, Cond(0), &s).is_err());
        let ok = Name::default();
        let s = Statement::MemberOfName { name: &ok, set: PointSet::EMPTY };
        assert!(forces(&p, Cond(17), &s).is_err());
    }
}
