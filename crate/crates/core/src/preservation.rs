//! End-to-end preservation runs: approximate each cover name, solve the
//! ground selection problem on the approximations, refine the names along
//! the selection and check the forced conclusion at every atom.
//!
//! The resulting [`Certificate`] embeds the scenario, so [`verify_certificate`]
//! can replay the run and compare transcripts byte for byte.

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{input, Error, Result};
use crate::forcing::Name;
use crate::instance::{family_labels, name_payload, NamePair, Scenario, ScenarioPayload, FORMAT_VERSION};
use crate::names::{
    approximate, check_lemma_approx, derive_point_names, endow_refine_pipeline, validate_cover_name, Approximation,
};
use crate::poset::Poset;
use crate::space::{FiniteSpace, PointSet};
use crate::topology::{check_selection, solve, SelectionMode, SelectionProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub point: String,
    pub endowment: Vec<String>,
    pub value: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxRecord {
    pub level: usize,
    pub points: Vec<PointRecord>,
    pub cover: Vec<Vec<String>>,
    /// `(V, p, r)`: `r <= p` forces some member of the name to contain `V`.
    pub triples: Vec<(Vec<String>, String, String)>,
    pub counterexamples: Vec<(Vec<String>, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineRecord {
    pub level: usize,
    pub refines_cover: bool,
    /// `(p, H, r)`: `r <= p` forces `H` into the refined name.
    pub witnesses: Vec<(String, Vec<String>, String)>,
    pub failures: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRow {
    pub atom: String,
    /// Each refined name evaluates inside its ground family.
    pub subfamily: bool,
    /// Each refined name evaluates to a refinement of its cover name.
    pub refines: bool,
    /// The evaluated refined names jointly cover the space.
    pub covers: bool,
    /// Rothberger: at most one set per level; screenability: disjoint sets per level.
    pub shape: bool,
}

impl AtomRow {
    pub fn holds(&self) -> bool {
        self.subfamily && self.refines && self.covers && self.shape
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub horizon_floor: usize,
    pub approximations: Vec<ApproxRecord>,
    pub selection: Vec<Vec<Vec<String>>>,
    pub refined_names: Vec<Vec<NamePair>>,
    pub refinements: Vec<RefineRecord>,
    pub forced_subfamily: Vec<bool>,
    pub forced_refines: Vec<bool>,
    pub forced_covers: bool,
    pub atoms: Vec<AtomRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub format_version: u32,
    pub property: SelectionMode,
    pub scenario: ScenarioPayload,
    pub verdict: Verdict,
    pub transcript: Transcript,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates always serialize")
    }
}

/// Evaluates the refined names at every atom and checks the forced conclusion.
pub fn atom_table(
    poset: &Poset,
    space: &FiniteSpace,
    names: &[Name],
    refined: &[Name],
    selection: &[Vec<PointSet>],
    property: SelectionMode,
) -> Vec<AtomRow> {
    poset
        .atoms()
        .iter()
        .map(|&a| {
            let values: Vec<Vec<PointSet>> = refined.iter().map(|w| w.eval_at(poset, a)).collect();
            let subfamily = values.iter().zip(selection).all(|(v, h)| v.iter().all(|s| h.contains(s)));
            let refines = values.iter().zip(names).all(|(v, u)| {
                let outer = u.eval_at(poset, a);
                v.iter().all(|s| outer.iter().any(|o| s.is_subset(*o)))
            });
            let union = values.iter().flatten().fold(PointSet::EMPTY, |acc, &s| acc.union(s));
            let covers = space.full().is_subset(union);
            let shape = match property {
                SelectionMode::Rothberger => values.iter().all(|v| v.len() <= 1),
                SelectionMode::Menger => true,
                SelectionMode::SelectiveScreenability => values
                    .iter()
                    .all(|v| v.iter().enumerate().all(|(i, s)| v[i + 1..].iter().all(|t| s.is_disjoint(*t)))),
            };
            AtomRow { atom: poset.label(a).to_string(), subfamily, refines, covers, shape }
        })
        .collect()
}

/// Runs the whole pipeline for one property. Invalid names are input errors;
/// an unsatisfiable ground selection is a scenario error.
pub fn run_preservation(scenario: &Scenario, property: SelectionMode) -> Result<Certificate> {
    let poset = scenario.forcing.poset();
    let strat = scenario.forcing.stratification();
    let family = scenario.forcing.family();
    let space = &scenario.space;
    let floor = strat.stabilization_index();

    let mut approximations: Vec<Approximation> = Vec::with_capacity(scenario.names.len());
    let mut records = Vec::with_capacity(scenario.names.len());
    for (n, name) in scenario.names.iter().enumerate() {
        if !validate_cover_name(poset, space, name)? {
            return input(format!("cover name {n} is not forced to be an open cover"));
        }
        let point_names = derive_point_names(poset, space, name)?;
        let approx = approximate(space, &point_names, n, family.as_ref())?;
        let lemma = check_lemma_approx(poset, strat, &approx, name)?;
        records.push(ApproxRecord {
            level: n,
            points: approx
                .points
                .iter()
                .map(|pa| PointRecord {
                    point: space.label(pa.point).to_string(),
                    endowment: pa.endowment.labels(poset),
                    value: space.set_labels(pa.value),
                })
                .collect(),
            cover: family_labels(space, &approx.cover),
            triples: lemma
                .triples
                .iter()
                .map(|&(v, p, r)| (space.set_labels(v), poset.label(p).to_string(), poset.label(r).to_string()))
                .collect(),
            counterexamples: lemma
                .counterexamples
                .iter()
                .map(|&(v, p)| (space.set_labels(v), poset.label(p).to_string()))
                .collect(),
        });
        approximations.push(approx);
    }

    let covers = approximations.iter().map(|a| a.cover.clone()).collect();
    let problem = SelectionProblem::new(space, covers, floor, property)?;
    let Some(selection) = solve(space, &problem) else {
        return Err(Error::Scenario(format!(
            "no {} selection hits every point at levels {floor}..{} of the approximations",
            property.as_str(),
            scenario.names.len()
        )));
    };
    debug_assert!(check_selection(space, &problem, &selection).is_ok());

    let (refined, pipeline) = endow_refine_pipeline(poset, strat, space, &scenario.names, &approximations, &selection)?;
    let refined_names: Vec<Name> = refined.iter().map(|w| w.name.clone()).collect();
    let atoms = atom_table(poset, space, &scenario.names, &refined_names, &selection, property);

    let certified = records.iter().all(|r| r.counterexamples.is_empty())
        && pipeline.is_positive()
        && atoms.iter().all(AtomRow::holds);
    let transcript = Transcript {
        horizon_floor: floor,
        approximations: records,
        selection: selection.iter().map(|f| family_labels(space, f)).collect(),
        refined_names: refined_names.iter().map(|w| name_payload(poset, space, w)).collect(),
        refinements: pipeline
            .refinements
            .iter()
            .map(|c| RefineRecord {
                level: c.level,
                refines_cover: c.refines_cover,
                witnesses: c
                    .witnesses
                    .iter()
                    .map(|&(p, h, r)| (poset.label(p).to_string(), space.set_labels(h), poset.label(r).to_string()))
                    .collect(),
                failures: c
                    .failures
                    .iter()
                    .map(|&(p, h)| (poset.label(p).to_string(), space.set_labels(h)))
                    .collect(),
            })
            .collect(),
        forced_subfamily: pipeline.subfamily.clone(),
        forced_refines: pipeline.refines.clone(),
        forced_covers: pipeline.covers,
        atoms,
    };
    Ok(Certificate {
        format_version: FORMAT_VERSION,
        property,
        scenario: scenario.source.clone(),
        verdict: if certified { Verdict::Certified } else { Verdict::Failed },
        transcript,
    })
}

/// Outcome of replaying a stored certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verification {
    /// The replayed certificate serializes to exactly the stored bytes.
    pub replay_matches: bool,
    /// The per-atom table recomputed from the stored refined names and
    /// selection equals the stored table.
    pub atoms_match: bool,
    pub stored_verdict: Verdict,
    pub replayed_verdict: Verdict,
}

impl Verification {
    pub fn is_certified(&self) -> bool {
        self.replay_matches && self.atoms_match && self.replayed_verdict == Verdict::Certified
    }
}

pub fn verify_certificate(text: &str, bounds: &Bounds) -> Result<Verification> {
    let stored: Certificate = serde_json::from_str(text)?;
    if stored.format_version != FORMAT_VERSION {
        return input(format!("unsupported format_version {}", stored.format_version));
    }
    let scenario = Scenario::load(&stored.scenario, bounds)?;
    let replayed = run_preservation(&scenario, stored.property)?;

    let poset = scenario.forcing.poset();
    let space = &scenario.space;
    let refined = stored
        .transcript
        .refined_names
        .iter()
        .map(|pairs| crate::instance::load_name(&scenario.forcing, space, pairs))
        .collect::<Result<Vec<_>>>()?;
    let selection = stored
        .transcript
        .selection
        .iter()
        .map(|f| f.iter().map(|s| space.set_from_labels(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let atoms = atom_table(poset, space, &scenario.names, &refined, &selection, stored.property);

    Ok(Verification {
        replay_matches: replayed.to_json() == stored.to_json(),
        atoms_match: atoms == stored.transcript.atoms,
        stored_verdict: stored.verdict,
        replayed_verdict: replayed.verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{PosetPayload, SpacePayload};

    fn pair(c: &str, set: &[&str]) -> NamePair {
        NamePair { condition: c.into(), set: set.iter().map(|s| s.to_string()).collect() }
    }

    fn i1_tripled(poset: &str, lo: &str, hi: &str) -> ScenarioPayload {
        let name = vec![pair(lo, &["x"]), pair(lo, &["x", "y"]), pair(hi, &["x", "y"])];
        ScenarioPayload {
            poset: PosetPayload::Spec(poset.into()),
            space: SpacePayload { points: vec!["x".into(), "y".into()], base: vec![vec!["x".into()], vec!["x".into(), "y".into()]] },
            names: vec![name; 3],
            property: Some(SelectionMode::Rothberger),
        }
    }

    #[test]
    fn i1_rothberger_certified() {
        let s = Scenario::load(&i1_tripled("cohen:D=2", "0:0", "0:1"), &Bounds::default()).unwrap();
        let cert = run_preservation(&s, SelectionMode::Rothberger).unwrap();
        assert_eq!(cert.verdict, Verdict::Certified);
        assert_eq!(cert.transcript.atoms.len(), 4);
        assert_eq!(cert.transcript.horizon_floor, 2);
        assert_eq!(cert.transcript.selection[2], vec![vec!["x".to_string(), "y".to_string()]]);
        let v = verify_certificate(&cert.to_json(), &Bounds::default()).unwrap();
        assert!(v.is_certified());
    }

    #[test]
    fn measure_analog_certified() {
        let s = Scenario::load(&i1_tripled("measure:k=1", "0", "1"), &Bounds::default()).unwrap();
        for mode in [SelectionMode::Rothberger, SelectionMode::Menger, SelectionMode::SelectiveScreenability] {
            let cert = run_preservation(&s, mode).unwrap();
            assert_eq!(cert.verdict, Verdict::Certified);
            assert_eq!(cert.transcript.atoms.len(), 2);
        }
    }

    #[test]
    fn no_headroom_is_a_scenario_error() {
        let mut p = i1_tripled("cohen:D=2", "0:0", "0:1");
        p.space = SpacePayload { points: vec!["x".into(), "y".into()], base: vec![vec!["x".into()], vec!["y".into()]] };
        p.names = vec![vec![pair("∅", &["x"]), pair("∅", &["y"])]; 2];
        let s = Scenario::load(&p, &Bounds::default()).unwrap();
        assert!(matches!(run_preservation(&s, SelectionMode::Rothberger), Err(Error::Scenario(_))));
    }

    #[test]
    fn invalid_name_is_input_error() {
        let mut p = i1_tripled("cohen:D=2", "0:0", "0:1");
        p.names[1] = vec![pair("0:0", &["x"])];
        let s = Scenario::load(&p, &Bounds::default()).unwrap();
        assert!(matches!(run_preservation(&s, SelectionMode::Menger), Err(Error::Input(_))));
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let s = Scenario::load(&i1_tripled("cohen:D=2", "0:0", "0:1"), &Bounds::default()).unwrap();
        let mut cert = run_preservation(&s, SelectionMode::Rothberger).unwrap();
        cert.transcript.refined_names[2].clear();
        let v = verify_certificate(&cert.to_json(), &Bounds::default()).unwrap();
        assert!(!v.replay_matches);
        assert!(!v.atoms_match);
        assert!(!v.is_certified());
    }
}
