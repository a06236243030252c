//! JSON instance files and their conversion into laboratory objects.
//!
//! Every file is `{"format_version": 1, "kind": ..., "payload": ...}` with
//! `kind` one of `poset`, `space`, `name` or `scenario`. Unknown fields are
//! rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::cohen::CohenPoset;
use crate::endowment::{DowFamily, EndowmentFamily, MeasureFamily, WholeAntichainFamily};
use crate::error::{input, Error, Result};
use crate::forcing::Name;
use crate::measure::MeasurePoset;
use crate::poset::{Cond, Poset, Stratification};
use crate::space::{FiniteSpace, PointSet};
use crate::topology::SelectionMode;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Poset,
    Space,
    Name,
    Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub kind: InstanceKind,
    pub payload: serde_json::Value,
}

impl InstanceFile {
    pub fn new<T: Serialize>(kind: InstanceKind, payload: &T) -> Result<Self> {
        Ok(Self { format_version: FORMAT_VERSION, kind, payload: serde_json::to_value(payload)? })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return input(format!("unsupported format_version {}", file.format_version));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Decodes the payload, insisting on the expected kind.
    pub fn payload<T: for<'de> Deserialize<'de>>(&self, kind: InstanceKind) -> Result<T> {
        if self.kind != kind {
            return input(format!("expected a {kind:?} file, found {:?}", self.kind).to_lowercase());
        }
        Ok(serde_json::from_value(self.payload.clone())?)
    }
}

/// `cohen:D=n` or `measure:k=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosetSpec {
    Cohen(usize),
    Measure(usize),
}

impl std::str::FromStr for PosetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |value: &str| {
            value
                .parse::<usize>()
                .map_err(|_| Error::Input(format!("poset spec `{s}` needs a number after `=`")))
        };
        if let Some(v) = s.strip_prefix("cohen:D=") {
            Ok(PosetSpec::Cohen(parse(v)?))
        } else if let Some(v) = s.strip_prefix("measure:k=") {
            Ok(PosetSpec::Measure(parse(v)?))
        } else {
            input(format!("poset spec `{s}` is not cohen:D=<n> or measure:k=<n>"))
        }
    }
}

impl std::fmt::Display for PosetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PosetSpec::Cohen(d) => write!(f, "cohen:D={d}"),
            PosetSpec::Measure(k) => write!(f, "measure:k={k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPoset {
    pub elements: Vec<String>,
    /// Pairs `[a, b]` meaning `a <= b`; the closure is taken on load.
    pub leq: Vec<(String, String)>,
    /// Cumulative stratification levels; a single full level when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PosetPayload {
    Spec(String),
    Explicit(ExplicitPoset),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacePayload {
    pub points: Vec<String>,
    pub base: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamePair {
    pub condition: String,
    pub set: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPayload {
    pub poset: PosetPayload,
    pub space: SpacePayload,
    pub names: Vec<Vec<NamePair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<SelectionMode>,
}

/// A loaded forcing notion with its stratification and endowment family.
#[derive(Debug, Clone)]
pub enum Forcing {
    Cohen(CohenPoset),
    Measure(MeasurePoset),
    Explicit { poset: Poset, strat: Stratification },
}

impl Forcing {
    pub fn from_spec(spec: PosetSpec, bounds: &Bounds) -> Result<Self> {
        Ok(match spec {
            PosetSpec::Cohen(d) => Forcing::Cohen(CohenPoset::new(d, bounds)?),
            PosetSpec::Measure(k) => Forcing::Measure(MeasurePoset::new(k, bounds)?),
        })
    }

    pub fn load(payload: &PosetPayload, bounds: &Bounds) -> Result<Self> {
        match payload {
            PosetPayload::Spec(s) => Self::from_spec(s.parse()?, bounds),
            PosetPayload::Explicit(e) => {
                let index = |label: &str| {
                    e.elements
                        .iter()
                        .position(|l| l == label)
                        .ok_or_else(|| Error::Input(format!("unknown element `{label}`")))
                };
                let pairs = e
                    .leq
                    .iter()
                    .map(|(a, b)| Ok((index(a)?, index(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                let poset = Poset::from_relation(e.elements.clone(), &pairs)?;
                let strat = match &e.levels {
                    None => Stratification::trivial(&poset),
                    Some(levels) => {
                        let levels = levels
                            .iter()
                            .map(|l| l.iter().map(|s| poset.lookup(s)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()?;
                        Stratification::new(&poset, levels)?
                    }
                };
                Ok(Forcing::Explicit { poset, strat })
            }
        }
    }

    pub fn poset(&self) -> &Poset {
        match self {
            Forcing::Cohen(c) => c.poset(),
            Forcing::Measure(m) => m.poset(),
            Forcing::Explicit { poset, .. } => poset,
        }
    }

    pub fn stratification(&self) -> &Stratification {
        match self {
            Forcing::Cohen(c) => c.stratification(),
            Forcing::Measure(m) => m.stratification(),
            Forcing::Explicit { strat, .. } => strat,
        }
    }

    /// Dow's family for Cohen posets, measure extraction for measure
    /// algebras, whole antichains for explicit posets.
    pub fn family(&self) -> Box<dyn EndowmentFamily + '_> {
        match self {
            Forcing::Cohen(c) => Box::new(DowFamily(c)),
            Forcing::Measure(m) => Box::new(MeasureFamily(m)),
            Forcing::Explicit { poset, .. } => Box::new(WholeAntichainFamily(poset)),
        }
    }

    /// Resolves a condition literal; Cohen and measure literals may be written
    /// in any order.
    pub fn parse_cond(&self, literal: &str) -> Result<Cond> {
        match self {
            Forcing::Cohen(c) => c.parse_cond(literal),
            Forcing::Measure(m) => m.parse_cond(literal),
            Forcing::Explicit { poset, .. } => poset.lookup(literal),
        }
    }
}

pub fn load_space(payload: &SpacePayload, bounds: &Bounds) -> Result<FiniteSpace> {
    if payload.points.len() > bounds.points {
        return Err(Error::Resource(format!(
            "space with {} points exceeds the limit {}",
            payload.points.len(),
            bounds.points
        )));
    }
    FiniteSpace::from_labels(&payload.points, &payload.base)
}

pub fn load_name(forcing: &Forcing, space: &FiniteSpace, pairs: &[NamePair]) -> Result<Name> {
    pairs
        .iter()
        .map(|pair| Ok((forcing.parse_cond(&pair.condition)?, space.set_from_labels(&pair.set)?)))
        .collect::<Result<Vec<_>>>()
        .map(Name::new)
}

pub fn name_payload(poset: &Poset, space: &FiniteSpace, name: &Name) -> Vec<NamePair> {
    name.pairs()
        .iter()
        .map(|&(c, s)| NamePair { condition: poset.label(c).to_string(), set: space.set_labels(s) })
        .collect()
}

pub fn family_labels(space: &FiniteSpace, family: &[PointSet]) -> Vec<Vec<String>> {
    family.iter().map(|&s| space.set_labels(s)).collect()
}

/// A scenario ready to run, keeping the payload it was loaded from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub source: ScenarioPayload,
    pub forcing: Forcing,
    pub space: FiniteSpace,
    pub names: Vec<Name>,
}

impl Scenario {
    pub fn load(payload: &ScenarioPayload, bounds: &Bounds) -> Result<Self> {
        if payload.names.len() > bounds.levels {
            return Err(Error::Resource(format!(
                "{} cover names exceed the limit of {} levels",
                payload.names.len(),
                bounds.levels
            )));
        }
        let forcing = Forcing::load(&payload.poset, bounds)?;
        let space = load_space(&payload.space, bounds)?;
        let names = payload
            .names
            .iter()
            .map(|pairs| load_name(&forcing, &space, pairs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { source: payload.clone(), forcing, space, names })
    }

    pub fn property(&self) -> Option<SelectionMode> {
        self.source.property
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings() {
        assert_eq!("cohen:D=3".parse::<PosetSpec>().unwrap(), PosetSpec::Cohen(3));
        assert_eq!("measure:k=2".parse::<PosetSpec>().unwrap(), PosetSpec::Measure(2));
        assert!("cohen:D=".parse::<PosetSpec>().is_err());
        assert!("random".parse::<PosetSpec>().is_err());
        assert_eq!(PosetSpec::Measure(2).to_string(), "measure:k=2");
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"format_version":1,"kind":"space","payload":{},"extra":0}"#;
        assert!(InstanceFile::parse(bad).is_err());
        let file = InstanceFile::parse(r#"{"format_version":1,"kind":"space","payload":{"points":["x"],"base":[["x"]],"weight":1}}"#)
            .unwrap();
        assert!(file.payload::<SpacePayload>(InstanceKind::Space).is_err());
        assert!(file.payload::<SpacePayload>(InstanceKind::Poset).is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let text = r#"{"format_version":1,"kind":"scenario","payload":{
            "poset":"cohen:D=2",
            "space":{"points":["x","y"],"base":[["x"],["x","y"]]},
            "names":[[{"condition":"0:0","set":["x"]},{"condition":"0:1","set":["x","y"]}]],
            "property":"rothberger"}}"#;
        let file = InstanceFile::parse(text).unwrap();
        let payload: ScenarioPayload = file.payload(InstanceKind::Scenario).unwrap();
        let s = Scenario::load(&payload, &Bounds::default()).unwrap();
        assert_eq!(s.names[0].pairs().len(), 2);
        assert_eq!(s.property(), Some(SelectionMode::Rothberger));
        let back = name_payload(s.forcing.poset(), &s.space, &s.names[0]);
        assert_eq!(back, payload.names[0]);
    }

    #[test]
    fn explicit_poset_with_levels() {
        let e = ExplicitPoset {
            elements: vec!["1".into(), "a".into(), "b".into()],
            leq: vec![("a".into(), "1".into()), ("b".into(), "1".into())],
            levels: Some(vec![vec!["1".into()], vec!["1".into(), "a".into(), "b".into()]]),
        };
        let f = Forcing::load(&PosetPayload::Explicit(e), &Bounds::default()).unwrap();
        assert_eq!(f.stratification().stabilization_index(), 1);
        assert_eq!(f.poset().atoms().len(), 2);
    }
}
