//! Self-test sweeps: oracle agreement, endowment sweeps for Cohen posets and
//! measure algebras, fixed preservation scenarios, and a seeded scenario sweep.

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::Bounds;
use crate::cohen::CohenPoset;
use crate::endowment::{collect_antichains, verify_weak_endowment, AntichainSource, DowFamily, MeasureFamily};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::forcing::{forces, forces_dense, Name, Statement};
use crate::generate::{generate_loaded, random_open, random_pairs, rng_for};
use crate::instance::Scenario;
use crate::measure::{extract_measure_endowment, MeasurePoset};
use crate::preservation::{run_preservation, Verdict};
use crate::topology::SelectionMode;

pub const PROPERTIES: [SelectionMode; 3] =
    [SelectionMode::Rothberger, SelectionMode::Menger, SelectionMode::SelectiveScreenability];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub count: usize,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, cases: usize, failures: Vec<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: failures.is_empty(),
        cases,
        detail: failures.into_iter().next().unwrap_or_default(),
    }
}

/// Compares the atom-based forcing relation with the dense-set oracle on
/// `count` random `(poset, name, p, V)` quadruples.
pub fn oracle_agreement(seed: u64, count: usize, bounds: &Bounds) -> Result<(usize, Vec<String>)> {
    let scenarios = (0..count.div_ceil(10).max(1))
        .map(|i| generate_loaded(seed.wrapping_add(i as u64), bounds, SelectionMode::Menger))
        .collect::<Result<Vec<Scenario>>>()?;
    let failures: Vec<String> = (0..count)
        .into_par_iter()
        .filter_map(|i| {
            let s = &scenarios[i % scenarios.len()];
            let poset = s.forcing.poset();
            let mut rng = rng_for(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            let name = if rng.random_bool(0.5) {
                s.names[rng.random_range(0..s.names.len())].clone()
            } else {
                Name::new(random_pairs(&mut rng, poset, &s.space, 6))
            };
            let p = poset.cond(rng.random_range(0..poset.len())).expect("index in range");
            let v = random_open(&mut rng, &s.space);
            let by_atoms = forces(poset, p, &Statement::ExistsSupersetInCover { cover: &name, set: v }).ok()?;
            let by_density = forces_dense(poset, p, &name, v);
            (by_atoms != by_density).then(|| format!("case {i}: atoms say {by_atoms}, density says {by_density}"))
        })
        .collect();
    Ok((count, failures))
}

/// Dow's construction on Fn(D,2): exhaustive for `|D| <= 2`, seeded for `|D| = 3`.
pub fn dow_sweep(seed: u64, seeded_count: usize, bounds: &Bounds) -> Result<(usize, Vec<String>)> {
    let mut cases = 0;
    let mut failures = Vec::new();
    for d in 1..=3 {
        let c = CohenPoset::new(d, bounds)?;
        let source = if d <= 2 {
            AntichainSource::Exhaustive { max_elements: bounds.poset }
        } else {
            AntichainSource::Seeded { seed, count: seeded_count }
        };
        let antichains = collect_antichains(c.poset(), source)?;
        for n in 0..=3 {
            let report = verify_weak_endowment(c.poset(), c.stratification(), &DowFamily(&c), n, &antichains);
            cases += report.antichains_checked;
            if let Some(v) = report.violations.first() {
                failures.push(format!("D={d}, n={n}: clause {:?} fails on antichain {}", v.clause, v.antichain_id));
            }
        }
    }
    Ok((cases, failures))
}

/// Measure extraction: exhaustive for `k <= 2`, seeded for `k = 3`; checks
/// the exact measure bound and the weak endowment clauses.
pub fn measure_sweep(seed: u64, seeded_count: usize, bounds: &Bounds) -> Result<(usize, Vec<String>)> {
    let mut cases = 0;
    let mut failures = Vec::new();
    for k in 1..=3 {
        let m = MeasurePoset::new(k, bounds)?;
        let source = if k <= 2 {
            AntichainSource::Exhaustive { max_elements: bounds.poset }
        } else {
            AntichainSource::Seeded { seed, count: seeded_count }
        };
        let antichains = collect_antichains(m.poset(), source)?;
        for n in 0..=2 {
            let threshold = Ratio::from_integer(1u64) - Ratio::new(1u64, 1 << n);
            for (id, a) in antichains.iter().enumerate() {
                let l = extract_measure_endowment(&m, n, a)?;
                if m.total_measure(l.members()) <= threshold {
                    failures.push(format!("k={k}, n={n}: antichain {id} extracts measure {}", m.total_measure(l.members())));
                }
            }
            let report = verify_weak_endowment(m.poset(), m.stratification(), &MeasureFamily(&m), n, &antichains);
            cases += report.antichains_checked;
            if let Some(v) = report.violations.first() {
                failures.push(format!("k={k}, n={n}: clause {:?} fails on antichain {}", v.clause, v.antichain_id));
            }
        }
    }
    Ok((cases, failures))
}

/// The Cohen and measure split scenarios must certify; the no-headroom one
/// must be a scenario error.
pub fn fixed_scenarios(bounds: &Bounds) -> Result<(usize, Vec<String>)> {
    let mut failures = Vec::new();
    let certified = [
        ("cohen split, rothberger", fixtures::cohen_split_scenario(SelectionMode::Rothberger)),
        ("measure split, menger", fixtures::measure_split_scenario(SelectionMode::Menger)),
        ("cohen split, screenability", fixtures::cohen_split_scenario(SelectionMode::SelectiveScreenability)),
    ];
    for (label, payload) in &certified {
        let s = Scenario::load(payload, bounds)?;
        let cert = run_preservation(&s, payload.property.expect("fixtures name a property"))?;
        if cert.verdict != Verdict::Certified {
            failures.push(format!("{label}: certificate failed"));
        }
    }
    let s = Scenario::load(&fixtures::no_headroom_scenario(), bounds)?;
    if !matches!(run_preservation(&s, SelectionMode::Rothberger), Err(Error::Scenario(_))) {
        failures.push("no-headroom scenario was not a scenario error".into());
    }
    Ok((certified.len() + 1, failures))
}

/// Outcome counts of a seeded preservation sweep for one property.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepCounts {
    pub certified: usize,
    pub failed: usize,
    pub selection_unsatisfiable: usize,
    pub failures: Vec<u64>,
}

pub fn preservation_sweep(seed: u64, count: usize, bounds: &Bounds, property: SelectionMode) -> Result<SweepCounts> {
    let outcomes = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = generate_loaded(seed.wrapping_add(i), bounds, property)?;
            match run_preservation(&s, property) {
                Ok(cert) => Ok((i, Some(cert.verdict))),
                Err(Error::Scenario(_)) => Ok((i, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = SweepCounts::default();
    for (i, outcome) in outcomes {
        match outcome {
            Some(Verdict::Certified) => counts.certified += 1,
            Some(Verdict::Failed) => {
                counts.failed += 1;
                counts.failures.push(seed.wrapping_add(i));
            }
            None => counts.selection_unsatisfiable += 1,
        }
    }
    Ok(counts)
}

pub fn run_selftest(seed: u64, count: usize, bounds: &Bounds) -> Result<SelftestReport> {
    let mut checks = Vec::new();
    let (cases, failures) = oracle_agreement(seed, count.max(1) * 10, bounds)?;
    checks.push(check("oracle-agreement", cases, failures));
    let (cases, failures) = dow_sweep(seed, 100, bounds)?;
    checks.push(check("dow-sweep", cases, failures));
    let (cases, failures) = measure_sweep(seed, 100, bounds)?;
    checks.push(check("measure-sweep", cases, failures));
    let (cases, failures) = fixed_scenarios(bounds)?;
    checks.push(check("fixed-scenarios", cases, failures));
    for property in PROPERTIES {
        let counts = preservation_sweep(seed, count, bounds, property)?;
        checks.push(CheckResult {
            name: format!("sweep-{}", property.as_str()),
            passed: counts.failed == 0,
            cases: count,
            detail: format!(
                "{} certified, {} failed {:?}, {} selection unsatisfiable",
                counts.certified, counts.failed, counts.failures, counts.selection_unsatisfiable
            ),
        });
    }
    Ok(SelftestReport { seed, count, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_selftest_passes() {
        let report = run_selftest(7, 5, &Bounds::default()).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
