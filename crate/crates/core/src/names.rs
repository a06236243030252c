//! Cover names, point names and their level-`n` approximations, plus the
//! refined names built from ground families and the certificates that check
//! them by exhaustive per-atom evaluation.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::endowment::EndowmentFamily;
use crate::error::{input, Error, Result};
use crate::forcing::{forced_everywhere, forces, Name, Statement};
use crate::poset::{Antichain, Cond, Poset, Stratification};
use crate::space::{canonical_family, FiniteSpace, PointSet};
use crate::topology::{refines, Refinement};

fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}

/// Conditions below some pair whose set contains `x`.
fn witness_set(poset: &Poset, name: &Name, x: usize) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(poset.len());
    for p in poset.conds() {
        if name.pairs().iter().any(|&(q, u)| u.contains(x) && poset.leq(p, q)) {
            set.insert(p.index());
        }
    }
    set
}

/// Whether `name` is forced to be an open cover: for each point the
/// conditions below a pair covering it are dense. Sets must be basic.
pub fn validate_cover_name(poset: &Poset, space: &FiniteSpace, name: &Name) -> Result<bool> {
    name.check(poset)?;
    if let Some((_, s)) = name.pairs().iter().find(|(_, s)| !space.is_basic(*s)) {
        return input(format!("name value {s} is not a basic open set"));
    }
    Ok((0..space.len()).all(|x| poset.is_dense(&witness_set(poset, name, x))))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointValue {
    pub cond: Cond,
    pub set: PointSet,
    /// The name pair the value was read from.
    pub source: Cond,
}

/// A name for a single open neighbourhood of `point`, decided on a maximal antichain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointName {
    pub point: usize,
    pub antichain: Antichain,
    pub values: Vec<PointValue>,
}

impl PointName {
    pub fn value(&self, p: Cond) -> Option<PointSet> {
        self.values.iter().find(|v| v.cond == p).map(|v| v.set)
    }
}

pub fn derive_point_names(poset: &Poset, space: &FiniteSpace, name: &Name) -> Result<Vec<PointName>> {
    if !validate_cover_name(poset, space, name)? {
        return precondition("the name is not forced to be an open cover");
    }
    (0..space.len())
        .map(|x| {
            let dense = witness_set(poset, name, x);
            let antichain = poset.greedy_antichain(dense.ones().filter_map(|i| poset.cond(i)));
            if !poset.is_maximal_antichain(&antichain) {
                return precondition(format!("no maximal antichain inside the witness set of {}", space.label(x)));
            }
            let values = antichain
                .members()
                .iter()
                .map(|&p| {
                    let (source, set) = name
                        .pairs()
                        .iter()
                        .filter(|&&(q, u)| u.contains(x) && poset.leq(p, q))
                        .map(|&(q, u)| (u, q))
                        .min()
                        .map(|(u, q)| (q, u))
                        .expect("antichain member lies in the witness set");
                    PointValue { cond: p, set, source }
                })
                .collect();
            Ok(PointName { point: x, antichain, values })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointApprox {
    pub point: usize,
    pub endowment: Antichain,
    pub value: PointSet,
}

/// The level-`n` approximation of a cover name: one open set per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approximation {
    pub level: usize,
    pub points: Vec<PointApprox>,
    pub cover: Vec<PointSet>,
}

pub fn approximate(
    space: &FiniteSpace,
    point_names: &[PointName],
    n: usize,
    family: &dyn EndowmentFamily,
) -> Result<Approximation> {
    let mut points = Vec::with_capacity(point_names.len());
    for pn in point_names {
        let endowment = family.construct(n, &pn.antichain)?;
        if !endowment.is_subset_of(&pn.antichain) {
            return precondition(format!(
                "{} returned a set outside the antichain of {}",
                family.label(),
                space.label(pn.point)
            ));
        }
        let value = endowment
            .members()
            .iter()
            .map(|&p| pn.value(p).expect("endowment member is in the antichain"))
            .fold(space.full(), PointSet::intersection);
        points.push(PointApprox { point: pn.point, endowment, value });
    }
    let cover = canonical_family(points.iter().map(|pa| pa.value).collect());
    Ok(Approximation { level: n, points, cover })
}

/// Certificate that every approximation set is eventually forced into the cover.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ApproxCertificate {
    pub level: usize,
    /// `(V, p, r)` with `r <= p` forcing some cover member to contain `V`.
    pub triples: Vec<(PointSet, Cond, Cond)>,
    /// `(V, p)` pairs with no such `r`.
    pub counterexamples: Vec<(PointSet, Cond)>,
}

impl ApproxCertificate {
    pub fn is_positive(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

pub fn check_lemma_approx(
    poset: &Poset,
    strat: &Stratification,
    approx: &Approximation,
    name: &Name,
) -> Result<ApproxCertificate> {
    let mut cert = ApproxCertificate { level: approx.level, ..Default::default() };
    let level = strat.level(approx.level);
    for &v in &approx.cover {
        let s = Statement::ExistsSupersetInCover { cover: name, set: v };
        for &p in &level {
            let mut found = None;
            for r in poset.below(p) {
                if forces(poset, r, &s)? {
                    found = Some(r);
                    break;
                }
            }
            match found {
                Some(r) => cert.triples.push((v, p, r)),
                None => cert.counterexamples.push((v, p)),
            }
        }
    }
    Ok(cert)
}

/// A name whose values are drawn from a ground family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedName {
    pub name: Name,
    pub family: Vec<PointSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefineCertificate {
    pub level: usize,
    /// The refined name is forced to refine the cover name.
    pub refines_cover: bool,
    /// `(p, H, r)` with `r <= p` forcing `H` into the refined name.
    pub witnesses: Vec<(Cond, PointSet, Cond)>,
    pub failures: Vec<(Cond, PointSet)>,
}

impl RefineCertificate {
    pub fn is_positive(&self) -> bool {
        self.refines_cover && self.failures.is_empty()
    }
}

/// Builds `{(p, H) : p ⊩ some member of the cover name contains H}` and
/// certifies it. `family` must consist of open sets refining the approximation cover.
pub fn refine_name(
    poset: &Poset,
    strat: &Stratification,
    space: &FiniteSpace,
    approx: &Approximation,
    family: &[PointSet],
    cover_name: &Name,
) -> Result<(RefinedName, RefineCertificate)> {
    let family = canonical_family(family.to_vec());
    if let Some(h) = family.iter().find(|h| !space.is_open(**h)) {
        return precondition(format!("{h} is not open"));
    }
    if let Refinement::Fails(h) = refines(space, &family, &approx.cover)? {
        return precondition(format!("{h} lies inside no member of the level-{} approximation", approx.level));
    }
    let mut pairs = Vec::new();
    for p in poset.conds() {
        for &h in &family {
            if forces(poset, p, &Statement::ExistsSupersetInCover { cover: cover_name, set: h })? {
                pairs.push((p, h));
            }
        }
    }
    let refined = RefinedName { name: Name::new(pairs), family };
    let mut cert = RefineCertificate {
        level: approx.level,
        refines_cover: forced_everywhere(poset, &Statement::RefinesName { refined: &refined.name, cover: cover_name })?,
        ..Default::default()
    };
    for p in strat.level(approx.level) {
        for &h in &refined.family {
            let s = Statement::MemberOfName { name: &refined.name, set: h };
            let mut found = None;
            for r in poset.below(p) {
                if forces(poset, r, &s)? {
                    found = Some(r);
                    break;
                }
            }
            match found {
                Some(r) => cert.witnesses.push((p, h, r)),
                None => cert.failures.push((p, h)),
            }
        }
    }
    Ok((refined, cert))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PipelineCertificate {
    #[serde(skip)]
    pub refinements: Vec<RefineCertificate>,
    pub subfamily: Vec<bool>,
    pub refines: Vec<bool>,
    pub covers: bool,
}

impl PipelineCertificate {
    pub fn is_positive(&self) -> bool {
        self.covers
            && self.subfamily.iter().all(|&b| b)
            && self.refines.iter().all(|&b| b)
            && self.refinements.iter().all(RefineCertificate::is_positive)
    }
}

/// Refines every level and certifies that the refined names jointly cover
/// the space. Points must be hit by some family at a level between the
/// stabilization index and the horizon.
pub fn endow_refine_pipeline(
    poset: &Poset,
    strat: &Stratification,
    space: &FiniteSpace,
    names: &[Name],
    approximations: &[Approximation],
    families: &[Vec<PointSet>],
) -> Result<(Vec<RefinedName>, PipelineCertificate)> {
    if names.len() != families.len() || names.len() != approximations.len() {
        return input(format!(
            "{} names, {} approximations and {} families",
            names.len(),
            approximations.len(),
            families.len()
        ));
    }
    let floor = strat.stabilization_index();
    for x in 0..space.len() {
        let hit = families.iter().skip(floor).any(|f| f.iter().any(|h| h.contains(x)));
        if !hit {
            return precondition(format!(
                "point {} is in no family at a level from {floor} to {}",
                space.label(x),
                families.len().saturating_sub(1)
            ));
        }
    }
    let mut refined = Vec::with_capacity(names.len());
    let mut cert = PipelineCertificate::default();
    for ((name, approx), family) in names.iter().zip(approximations).zip(families) {
        let (w, c) = refine_name(poset, strat, space, approx, family, name)?;
        cert.subfamily
            .push(forced_everywhere(poset, &Statement::SubfamilyOf { name: &w.name, family: &w.family })?);
        cert.refines.push(forced_everywhere(poset, &Statement::RefinesName { refined: &w.name, cover: name })?);
        cert.refinements.push(c);
        refined.push(w);
    }
    cert.covers = forced_everywhere(
        poset,
        &Statement::FamilyUnionCovers { names: refined.iter().map(|w| &w.name).collect(), points: space.full() },
    )?;
    Ok((refined, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Bounds;
    use crate::cohen::CohenPoset;
    use crate::endowment::DowFamily;

    struct I1 {
        c: CohenPoset,
        space: FiniteSpace,
        name: Name,
    }

    fn i1() -> I1 {
        let c = CohenPoset::new(2, &Bounds::default()).unwrap();
        let space = FiniteSpace::from_labels(&["x", "y"], &[vec!["x"], vec!["x", "y"]]).unwrap();
        let x = space.set_from_labels(&["x"]).unwrap();
        let xy = space.full();
        let (p0, p1) = (c.parse_cond("0:0").unwrap(), c.parse_cond("0:1").unwrap());
        let name = Name::new([(p0, x), (p0, xy), (p1, xy)]);
        I1 { c, space, name }
    }

    #[test]
    fn validation_examples() {
        let t = i1();
        let p = t.c.poset();
        assert!(validate_cover_name(p, &t.space, &t.name).unwrap());
        let x = t.space.set_from_labels(&["x"]).unwrap();
        let partial = Name::new([(t.c.parse_cond("0:0").unwrap(), x)]);
        assert!(!validate_cover_name(p, &t.space, &partial).unwrap());
        let trivial = Name::new([(p.top().unwrap(), t.space.full())]);
        assert!(validate_cover_name(p, &t.space, &trivial).unwrap());
        let y = PointSet::singleton(1);
        assert!(validate_cover_name(p, &t.space, &Name::new([(p.top().unwrap(), y)])).is_err());
    }

    #[test]
    fn point_names_for_i1() {
        let t = i1();
        let p = t.c.poset();
        let names = derive_point_names(p, &t.space, &t.name).unwrap();
        let (p0, p1) = (t.c.parse_cond("0:0").unwrap(), t.c.parse_cond("0:1").unwrap());
        let x = t.space.set_from_labels(&["x"]).unwrap();
        let xy = t.space.full();
        for pn in &names {
            assert_eq!(pn.antichain.members(), &[p0, p1]);
        }
        assert_eq!(names[0].value(p0), Some(x));
        assert_eq!(names[0].value(p1), Some(xy));
        assert_eq!(names[1].value(p0), Some(xy));
        assert_eq!(names[1].value(p1), Some(xy));

        let trivial = Name::new([(p.top().unwrap(), xy)]);
        let names = derive_point_names(p, &t.space, &trivial).unwrap();
        assert!(names.iter().all(|pn| pn.antichain.members() == [p.top().unwrap()] && pn.values[0].set == xy));
        let partial = Name::new([(p0, x)]);
        assert!(matches!(derive_point_names(p, &t.space, &partial), Err(Error::Precondition(_))));
    }

    #[test]
    fn approximation_for_i1() {
        let t = i1();
        let p = t.c.poset();
        let pns = derive_point_names(p, &t.space, &t.name).unwrap();
        let fam = DowFamily(&t.c);
        let a = approximate(&t.space, &pns, 1, &fam).unwrap();
        let x = t.space.set_from_labels(&["x"]).unwrap();
        assert_eq!(a.points[0].value, x);
        assert_eq!(a.points[1].value, t.space.full());
        assert_eq!(a.cover, vec![x, t.space.full()]);

        let a0 = approximate(&t.space, &pns, 0, &fam).unwrap();
        for pa in &a0.points {
            assert_eq!(pa.endowment.len(), 1);
            assert_eq!(Some(pa.value), pns[pa.point].value(pa.endowment.members()[0]));
        }
        let cert = check_lemma_approx(p, t.c.stratification(), &a, &t.name).unwrap();
        assert!(cert.is_positive());
        assert!(cert.triples.len() <= 18);
        let cert0 = check_lemma_approx(p, t.c.stratification(), &a0, &t.name).unwrap();
        assert!(cert0.is_positive());
    }

    #[test]
    fn tampered_approximation_is_rejected() {
        let c = CohenPoset::new(2, &Bounds::default()).unwrap();
        let space = FiniteSpace::from_labels(&["x", "y", "z"], &[vec!["x"], vec!["y"], vec!["z"], vec!["y", "z"], vec!["x", "y", "z"]]).unwrap();
        let (p0, p1) = (c.parse_cond("0:0").unwrap(), c.parse_cond("0:1").unwrap());
        let name = Name::new([
            (p0, PointSet::singleton(0)),
            (p0, PointSet::singleton(1)),
            (p0, PointSet::singleton(2)),
            (p1, space.full()),
        ]);
        let pns = derive_point_names(c.poset(), &space, &name).unwrap();
        let mut a = approximate(&space, &pns, 1, &DowFamily(&c)).unwrap();
        let yz = space.set_from_labels(&["y", "z"]).unwrap();
        a.cover = canonical_family([a.cover.clone(), vec![yz]].concat());
        let cert = check_lemma_approx(c.poset(), c.stratification(), &a, &name).unwrap();
        assert!(!cert.is_positive());
        assert!(cert.counterexamples.contains(&(yz, p0)));
    }

    #[test]
    fn refine_examples() {
        let t = i1();
        let p = t.c.poset();
        let strat = t.c.stratification();
        let pns = derive_point_names(p, &t.space, &t.name).unwrap();
        let a = approximate(&t.space, &pns, 1, &DowFamily(&t.c)).unwrap();
        let x = t.space.set_from_labels(&["x"]).unwrap();

        let (w, cert) = refine_name(p, strat, &t.space, &a, &[x], &t.name).unwrap();
        assert_eq!(w.name.pairs().len(), p.len());
        assert!(cert.is_positive());

        let (w, cert) = refine_name(p, strat, &t.space, &a, &[], &t.name).unwrap();
        assert!(w.name.is_empty() && cert.is_positive());

        let xy = t.space.full();
        let (w, cert) = refine_name(p, strat, &t.space, &a, &[xy], &t.name).unwrap();
        for q in p.conds() {
            let expected = forces(p, q, &Statement::ExistsSupersetInCover { cover: &t.name, set: xy }).unwrap();
            assert_eq!(w.name.pairs().contains(&(q, xy)), expected);
        }
        assert!(cert.is_positive());

        let y = PointSet::singleton(1);
        assert!(matches!(refine_name(p, strat, &t.space, &a, &[y], &t.name), Err(Error::Precondition(_))));
    }

    #[test]
    fn pipeline_examples() {
        let t = i1();
        let p = t.c.poset();
        let strat = t.c.stratification();
        let pns = derive_point_names(p, &t.space, &t.name).unwrap();
        let approxs: Vec<Approximation> =
            (0..3).map(|n| approximate(&t.space, &pns, n, &DowFamily(&t.c)).unwrap()).collect();
        let families: Vec<Vec<PointSet>> = approxs.iter().map(|a| a.cover.clone()).collect();
        let names = vec![t.name.clone(); 3];
        let (_, cert) = endow_refine_pipeline(p, strat, &t.space, &names, &approxs, &families).unwrap();
        assert!(cert.is_positive());

        let early: Vec<Vec<PointSet>> = vec![families[0].clone(), vec![], vec![]];
        let err = endow_refine_pipeline(p, strat, &t.space, &names, &approxs, &early).unwrap_err();
        assert!(err.to_string().contains('x'));

        let trivial_strat = Stratification::trivial(p);
        let single = Name::new([(p.top().unwrap(), t.space.full())]);
        let pns = derive_point_names(p, &t.space, &single).unwrap();
        let a = approximate(&t.space, &pns, 0, &DowFamily(&t.c)).unwrap();
        let (_, cert) =
            endow_refine_pipeline(p, &trivial_strat, &t.space, &[single], &[a], &[vec![t.space.full()]]).unwrap();
        assert!(cert.is_positive());
    }
}
