//! Weak endowments: clause-by-clause verifiers and the Cohen construction
//! that extracts a finite compatible piece from a maximal antichain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohen::CohenPoset;
use crate::error::{Error, Result};
use crate::measure::{extract_measure_endowment, measure_endowment_member, MeasurePoset};
use crate::poset::{Antichain, AtomSet, Cond, Poset, Stratification};

/// A sequence of candidate endowments `𝓛_n`, given intensionally.
pub trait EndowmentFamily: Sync {
    fn label(&self) -> &'static str;

    fn poset(&self) -> &Poset;

    /// Decides `l ∈ 𝓛_n`.
    fn contains(&self, n: usize, l: &Antichain) -> bool;

    /// Produces some member of `𝓛_n` inside the maximal antichain `a`.
    fn construct(&self, n: usize, a: &Antichain) -> Result<Antichain>;
}

/// Cohen endowments built by [`dow_construct`].
///
/// Membership is decided semantically: a finite antichain belongs to `𝓛_n`
/// when every condition of support size at most `n` meets one of its members.
pub struct DowFamily<'a>(pub &'a CohenPoset);

impl EndowmentFamily for DowFamily<'_> {
    fn label(&self) -> &'static str {
        "cohen-dow"
    }

    fn poset(&self) -> &Poset {
        self.0.poset()
    }

    fn contains(&self, n: usize, l: &Antichain) -> bool {
        let poset = self.0.poset();
        poset.is_antichain(l.members())
            && self
                .0
                .stratification()
                .level(n)
                .into_iter()
                .all(|p| l.members().iter().any(|&q| poset.compatible(p, q)))
    }

    fn construct(&self, n: usize, a: &Antichain) -> Result<Antichain> {
        Ok(dow_construct(self.0, a, n)?.result)
    }
}

/// Antichains of total measure greater than `1 - 2^-n`.
pub struct MeasureFamily<'a>(pub &'a MeasurePoset);

impl EndowmentFamily for MeasureFamily<'_> {
    fn label(&self) -> &'static str {
        "measure-total"
    }

    fn poset(&self) -> &Poset {
        self.0.poset()
    }

    fn contains(&self, n: usize, l: &Antichain) -> bool {
        measure_endowment_member(self.0, n, l).unwrap_or(false)
    }

    fn construct(&self, n: usize, a: &Antichain) -> Result<Antichain> {
        extract_measure_endowment(self.0, n, a)
    }
}

/// Every finite maximal antichain at every level. Valid for any finite poset.
pub struct WholeAntichainFamily<'a>(pub &'a Poset);

impl EndowmentFamily for WholeAntichainFamily<'_> {
    fn label(&self) -> &'static str {
        "whole-antichain"
    }

    fn poset(&self) -> &Poset {
        self.0
    }

    fn contains(&self, _n: usize, l: &Antichain) -> bool {
        self.0.is_maximal_antichain(l)
    }

    fn construct(&self, _n: usize, a: &Antichain) -> Result<Antichain> {
        if !self.0.is_maximal_antichain(a) {
            return Err(Error::Precondition("the antichain is not maximal".into()));
        }
        Ok(a.clone())
    }
}

/// Negative control: keeps only the least member of the antichain and accepts
/// any antichain as a member. Fails compatibility whenever the antichain has
/// more than one member.
pub struct SingletonFamily<'a>(pub &'a Poset);

impl EndowmentFamily for SingletonFamily<'_> {
    fn label(&self) -> &'static str {
        "adversarial-singleton"
    }

    fn poset(&self) -> &Poset {
        self.0
    }

    fn contains(&self, _n: usize, l: &Antichain) -> bool {
        self.0.is_antichain(l.members())
    }

    fn construct(&self, _n: usize, a: &Antichain) -> Result<Antichain> {
        Ok(Antichain::from_members(a.members().first().copied()))
    }
}

/// One stage of the Cohen construction: the chosen members `E_i` and the
/// accumulated support `D_i = supp(E_0 ∪ … ∪ E_i)` as an index mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DowStage {
    pub added: Antichain,
    pub support: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DowTrace {
    pub seed: Cond,
    pub stages: Vec<DowStage>,
    pub result: Antichain,
}

impl DowTrace {
    /// The pieces `D_0, D_1 \ D_0, …, D_n \ D_{n-1}` as index masks.
    pub fn pieces(&self) -> Vec<u32> {
        let mut prev = 0u32;
        self.stages
            .iter()
            .map(|s| {
                let piece = s.support & !prev;
                prev = s.support;
                piece
            })
            .collect()
    }
}

/// Extracts a finite `L ⊆ A` such that every condition with at most `n`
/// indices in its support is compatible with a member of `L`.
///
/// Stage 0 takes the least member of `A`. Stage `i` takes, for every
/// condition supported inside `D_{i-1}`, the least member of `A` compatible
/// with it. The result is the union of all stages.
pub fn dow_construct(c: &CohenPoset, a: &Antichain, n: usize) -> Result<DowTrace> {
    let poset = c.poset();
    if !poset.is_maximal_antichain(a) {
        return Err(Error::Precondition("the antichain is not maximal".into()));
    }
    let seed = a.members()[0];
    let mut support = c.condition(seed).support_mask();
    let mut stages = vec![DowStage { added: Antichain::from_members([seed]), support }];
    let mut result = vec![seed];
    for _ in 1..=n {
        let previous = support;
        let mut added = Vec::new();
        for p in poset.conds() {
            if c.condition(p).support_mask() & !previous != 0 {
                continue;
            }
            let a_p = a
                .members()
                .iter()
                .copied()
                .find(|&q| poset.compatible(p, q))
                .expect("a maximal antichain meets every condition");
            added.push(a_p);
            support |= c.condition(a_p).support_mask();
        }
        let added = Antichain::from_members(added);
        result.extend_from_slice(added.members());
        stages.push(DowStage { added, support });
    }
    Ok(DowTrace { seed, stages, result: Antichain::from_members(result) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    /// The output is a finite antichain.
    #[serde(rename = "1")]
    FiniteAntichain,
    /// The output lies inside the antichain and belongs to the family.
    #[serde(rename = "2")]
    InsideAntichain,
    /// Every condition of the level meets a member of the output.
    #[serde(rename = "3'")]
    WeakCompatibility,
    /// Any level-many outputs admit members with a common lower bound together with the condition.
    #[serde(rename = "3")]
    FullCompatibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub clause: Clause,
    pub witness_p: Option<String>,
    pub antichain_id: usize,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<Vec<usize>>,
}

impl Violation {
    fn new(clause: Clause, witness_p: Option<String>, antichain_id: usize) -> Self {
        Self { clause, witness_p, antichain_id, status: "violated".into(), tuple: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndowmentReport {
    pub family: String,
    pub level: usize,
    pub antichains_checked: usize,
    pub checks: u64,
    pub violations: Vec<Violation>,
}

impl EndowmentReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks clauses (1), (2) and (3') for the family's output on each supplied
/// maximal antichain. Antichain ids are positions in `antichains`.
pub fn verify_weak_endowment(
    poset: &Poset,
    strat: &Stratification,
    family: &dyn EndowmentFamily,
    n: usize,
    antichains: &[Antichain],
) -> EndowmentReport {
    let level = strat.level(n);
    let per_antichain: Vec<(u64, Vec<Violation>)> = antichains
        .par_iter()
        .enumerate()
        .map(|(id, a)| check_one_antichain(poset, family, n, &level, id, a))
        .collect();
    let checks = per_antichain.iter().map(|(c, _)| c).sum();
    EndowmentReport {
        family: family.label().into(),
        level: n,
        antichains_checked: antichains.len(),
        checks,
        violations: per_antichain.into_iter().flat_map(|(_, v)| v).collect(),
    }
}

fn check_one_antichain(
    poset: &Poset,
    family: &dyn EndowmentFamily,
    n: usize,
    level: &[Cond],
    id: usize,
    a: &Antichain,
) -> (u64, Vec<Violation>) {
    let mut violations = Vec::new();
    let l = match family.construct(n, a) {
        Ok(l) => l,
        Err(_) => {
            let mut v = Violation::new(Clause::InsideAntichain, None, id);
            v.status = "constructor-error".into();
            return (1, vec![v]);
        }
    };
    if !poset.is_antichain(l.members()) {
        violations.push(Violation::new(Clause::FiniteAntichain, None, id));
    }
    if !l.is_subset_of(a) || !family.contains(n, &l) {
        violations.push(Violation::new(Clause::InsideAntichain, None, id));
    }
    if let Some(&p) = level
        .iter()
        .find(|&&p| !l.members().iter().any(|&q| poset.compatible(p, q)))
    {
        violations.push(Violation::new(Clause::WeakCompatibility, Some(poset.label(p).into()), id));
    }
    (2 + level.len() as u64, violations)
}

/// Checks the full clause (3): for every `p ∈ P_n` and every `n` outputs
/// `L_0, …, L_{n-1}` drawn (with repetition) from the supplied antichains,
/// some choice `q_i ∈ L_i` has a common lower bound with `p`. Level 0 is
/// vacuous. Exceeding `budget` checks returns [`Error::Budget`] carrying the
/// partial report.
pub fn verify_full_endowment_clause3(
    poset: &Poset,
    strat: &Stratification,
    family: &dyn EndowmentFamily,
    n: usize,
    antichains: &[Antichain],
    budget: u64,
) -> Result<EndowmentReport> {
    let mut report = EndowmentReport {
        family: family.label().into(),
        level: n,
        antichains_checked: antichains.len(),
        checks: 0,
        violations: Vec::new(),
    };
    let mut outputs: Vec<(usize, Antichain)> = Vec::new();
    for (id, a) in antichains.iter().enumerate() {
        match family.construct(n, a) {
            Ok(l) => outputs.push((id, l)),
            Err(_) => {
                let mut v = Violation::new(Clause::InsideAntichain, None, id);
                v.status = "constructor-error".into();
                report.violations.push(v);
            }
        }
    }
    if n == 0 || outputs.is_empty() {
        return Ok(report);
    }
    let level = strat.level(n);
    // Multisets suffice: the condition is symmetric in the tuple.
    let mut tuple = vec![0usize; n];
    loop {
        let chosen: Vec<&Antichain> = tuple.iter().map(|&j| &outputs[j].1).collect();
        for &p in &level {
            report.checks += 1;
            if report.checks > budget {
                return Err(Error::Budget { budget, partial: Box::new(report) });
            }
            if !has_bounded_choice(poset, poset.atom_set(p), &chosen) {
                let ids: Vec<usize> = tuple.iter().map(|&j| outputs[j].0).collect();
                let mut v = Violation::new(Clause::FullCompatibility, Some(poset.label(p).into()), ids[0]);
                v.tuple = Some(ids);
                report.violations.push(v);
                break;
            }
        }
        // next non-decreasing tuple
        let Some(pos) = (0..n).rev().find(|&i| tuple[i] + 1 < outputs.len()) else {
            break;
        };
        let next = tuple[pos] + 1;
        for slot in &mut tuple[pos..] {
            *slot = next;
        }
    }
    Ok(report)
}

fn has_bounded_choice(poset: &Poset, common: AtomSet, rest: &[&Antichain]) -> bool {
    match rest.split_first() {
        None => !common.is_empty(),
        Some((l, tail)) => l.members().iter().any(|&q| {
            let next = common.intersect(poset.atom_set(q));
            !next.is_empty() && has_bounded_choice(poset, next, tail)
        }),
    }
}

/// Where verifiers draw their maximal antichains from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntichainSource {
    /// Every maximal antichain; refused above `max_elements`.
    Exhaustive { max_elements: usize },
    /// `count` seeded greedy completions of shuffled orders.
    Seeded { seed: u64, count: usize },
}

pub fn collect_antichains(poset: &Poset, source: AntichainSource) -> Result<Vec<Antichain>> {
    match source {
        AntichainSource::Exhaustive { max_elements } => poset.maximal_antichains(max_elements),
        AntichainSource::Seeded { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..count).map(|_| poset.random_maximal_antichain(&mut rng)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Bounds;

    fn cohen(d: usize) -> CohenPoset {
        CohenPoset::new(d, &Bounds::default()).unwrap()
    }

    fn ac(c: &CohenPoset, lits: &[&str]) -> Antichain {
        Antichain::from_labels(c.poset(), lits).unwrap()
    }

    #[test]
    fn dow_hand_run_on_first_coordinate() {
        let c = cohen(2);
        let a = ac(&c, &["0:0", "0:1"]);
        let trace = dow_construct(&c, &a, 1).unwrap();
        assert_eq!(c.poset().label(trace.seed), "0:0");
        assert_eq!(trace.stages.len(), 2);
        assert_eq!(trace.stages[0].added, ac(&c, &["0:0"]));
        assert_eq!(trace.stages[0].support, 0b01);
        assert_eq!(trace.stages[1].added, a);
        assert_eq!(trace.result, a);
    }

    #[test]
    fn dow_level_zero_is_single_seed() {
        let c = cohen(2);
        let a = ac(&c, &["0:0", "0:1"]);
        let trace = dow_construct(&c, &a, 0).unwrap();
        assert_eq!(trace.stages.len(), 1);
        assert_eq!(trace.result.len(), 1);
    }

    #[test]
    fn dow_on_total_functions() {
        let c = cohen(3);
        let a = Antichain::new(c.poset(), c.poset().atoms().iter().copied()).unwrap();
        let trace = dow_construct(&c, &a, 1).unwrap();
        let d0 = trace.stages[0].support.count_ones();
        assert!(trace.result.len() <= 1 + 3usize.pow(d0));
        for p in c.stratification().level(1) {
            assert!(trace.result.members().iter().any(|&q| c.poset().compatible(p, q)));
        }
    }

    #[test]
    fn dow_rejects_non_maximal() {
        let c = cohen(2);
        let a = ac(&c, &["0:0"]);
        assert!(matches!(dow_construct(&c, &a, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn adversarial_family_is_caught() {
        let c = cohen(2);
        let a = ac(&c, &["0:0", "0:1"]);
        let fam = SingletonFamily(c.poset());
        let report = verify_weak_endowment(c.poset(), c.stratification(), &fam, 1, std::slice::from_ref(&a));
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].clause, Clause::WeakCompatibility);
        assert_eq!(report.violations[0].witness_p.as_deref(), Some("0:1"));
    }

    #[test]
    fn clause3_on_coordinate_antichains() {
        let c = cohen(2);
        let both = [ac(&c, &["0:0", "0:1"]), ac(&c, &["1:0", "1:1"])];
        let dow = DowFamily(&c);
        let r = verify_full_endowment_clause3(c.poset(), c.stratification(), &dow, 2, &both, 1_000_000).unwrap();
        assert!(r.is_clean());
        let bad = SingletonFamily(c.poset());
        let r = verify_full_endowment_clause3(c.poset(), c.stratification(), &bad, 2, &both, 1_000_000).unwrap();
        assert!(!r.is_clean());
        assert_eq!(r.violations[0].clause, Clause::FullCompatibility);
    }

    #[test]
    fn clause3_level_zero_is_vacuous() {
        let c = cohen(2);
        let bad = SingletonFamily(c.poset());
        let all = c.poset().maximal_antichains(40).unwrap();
        let r = verify_full_endowment_clause3(c.poset(), c.stratification(), &bad, 0, &all, 10).unwrap();
        assert!(r.is_clean());
        assert_eq!(r.checks, 0);
    }

    #[test]
    fn clause3_budget_returns_partial_report() {
        let c = cohen(2);
        let all = c.poset().maximal_antichains(40).unwrap();
        let dow = DowFamily(&c);
        match verify_full_endowment_clause3(c.poset(), c.stratification(), &dow, 2, &all, 5) {
            Err(Error::Budget { budget, partial }) => {
                assert_eq!(budget, 5);
                assert_eq!(partial.checks, 6);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn whole_antichain_family_is_weak_endowment() {
        let p = Poset::from_relation(
            (0..5).map(|i| format!("e{i}")).collect(),
            &[(0, 3), (1, 3), (2, 4), (3, 4)],
        )
        .unwrap();
        let strat = Stratification::trivial(&p);
        let all = p.maximal_antichains(40).unwrap();
        let report = verify_weak_endowment(&p, &strat, &WholeAntichainFamily(&p), 0, &all);
        assert!(report.is_clean(), "{report:?}");
    }

    #[test]
    fn seeded_source_is_deterministic() {
        let c = cohen(3);
        let s = AntichainSource::Seeded { seed: 9, count: 12 };
        assert_eq!(collect_antichains(c.poset(), s).unwrap(), collect_antichains(c.poset(), s).unwrap());
    }
}
