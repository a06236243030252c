//! Small hand-checkable instances shared by tests, benches and the self-test.

use crate::bounds::Bounds;
use crate::cohen::CohenPoset;
use crate::endowment::DowFamily;
use crate::error::Result;
use crate::forcing::Name;
use crate::instance::{NamePair, PosetPayload, ScenarioPayload, SpacePayload};
use crate::names::{approximate, check_lemma_approx, derive_point_names, ApproxCertificate};
use crate::space::{canonical_family, FiniteSpace, PointSet};
use crate::topology::SelectionMode;

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn pair(condition: &str, set: &[&str]) -> NamePair {
    NamePair { condition: condition.into(), set: strings(set) }
}

/// Two points `x`, `y` with base `{{x}, {x,y}}`.
pub fn two_point_space() -> SpacePayload {
    SpacePayload { points: strings(&["x", "y"]), base: vec![strings(&["x"]), strings(&["x", "y"])] }
}

/// The name that offers `{x}` and `{x,y}` below `lo` and `{x,y}` below `hi`.
pub fn split_name(lo: &str, hi: &str) -> Vec<NamePair> {
    vec![pair(lo, &["x"]), pair(lo, &["x", "y"]), pair(hi, &["x", "y"])]
}

/// Fn({0,1},2) over the two-point space with three copies of the split name
/// on the first coordinate.
pub fn cohen_split_scenario(property: SelectionMode) -> ScenarioPayload {
    ScenarioPayload {
        poset: PosetPayload::Spec("cohen:D=2".into()),
        space: two_point_space(),
        names: vec![split_name("0:0", "0:1"); 3],
        property: Some(property),
    }
}

/// The measure algebra on `{0,1}` with three copies of the split name.
pub fn measure_split_scenario(property: SelectionMode) -> ScenarioPayload {
    ScenarioPayload {
        poset: PosetPayload::Spec("measure:k=1".into()),
        space: two_point_space(),
        names: vec![split_name("0", "1"); 3],
        property: Some(property),
    }
}

/// Two separated points and only as many names as the stabilization index,
/// so no level is eligible for selection.
pub fn no_headroom_scenario() -> ScenarioPayload {
    ScenarioPayload {
        poset: PosetPayload::Spec("cohen:D=2".into()),
        space: SpacePayload { points: strings(&["x", "y"]), base: vec![strings(&["x"]), strings(&["y"])] },
        names: vec![vec![pair("∅", &["x"]), pair("∅", &["y"])]; 2],
        property: Some(SelectionMode::Rothberger),
    }
}

/// Checks a level-1 approximation over Fn({0,1},2) into which `{y,z}` was
/// injected although below `0:0` the name only offers singletons. The
/// certificate is expected to be negative at `p = 0:0`.
pub fn tampered_approximation() -> Result<(ApproxCertificate, PointSet)> {
    let c = CohenPoset::new(2, &Bounds::default())?;
    let space = FiniteSpace::from_labels(
        &["x", "y", "z"],
        &[vec!["x"], vec!["y"], vec!["z"], vec!["y", "z"], vec!["x", "y", "z"]],
    )?;
    let (lo, hi) = (c.parse_cond("0:0")?, c.parse_cond("0:1")?);
    let name = Name::new([
        (lo, PointSet::singleton(0)),
        (lo, PointSet::singleton(1)),
        (lo, PointSet::singleton(2)),
        (hi, space.full()),
    ]);
    let point_names = derive_point_names(c.poset(), &space, &name)?;
    let mut approx = approximate(&space, &point_names, 1, &DowFamily(&c))?;
    let injected = space.set_from_labels(&["y", "z"])?;
    approx.cover = canonical_family([approx.cover, vec![injected]].concat());
    Ok((check_lemma_approx(c.poset(), c.stratification(), &approx, &name)?, injected))
}
