//! Seeded generators for scenarios, names and refinement families.
//!
//! All randomness flows from a `ChaCha8Rng` seeded with the caller's seed, so
//! the same seed and bounds always give the same output.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{Bounds, MAX_SPACE_POINTS};
use crate::error::{Error, Result};
use crate::forcing::Name;
use crate::instance::{
    name_payload, ExplicitPoset, Forcing, PosetPayload, PosetSpec, Scenario, ScenarioPayload, SpacePayload,
};
use crate::names::validate_cover_name;
use crate::poset::Poset;
use crate::space::{FiniteSpace, PointSet};
use crate::topology::SelectionMode;

/// Explicit posets drawn by the generator have at most this many elements.
const EXPLICIT_CAP: usize = 10;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid scenario within `bounds`, with `N >= M + |X|` cover names.
pub fn generate_scenario(seed: u64, bounds: &Bounds, property: SelectionMode) -> Result<ScenarioPayload> {
    if bounds.points == 0 || bounds.points > MAX_SPACE_POINTS || bounds.levels < 2 || bounds.base == 0 {
        return Err(Error::Resource(format!("bounds {bounds:?} leave no room for a scenario")));
    }
    let mut rng = rng_for(seed);
    let poset_payload = random_poset_payload(&mut rng, bounds);
    let forcing = Forcing::load(&poset_payload, bounds)?;
    let floor = forcing.stratification().stabilization_index();
    let room = bounds.levels.saturating_sub(floor);
    if room == 0 {
        return Err(Error::Resource(format!("{} levels leave no headroom above {floor}", bounds.levels)));
    }
    let npoints = rng.random_range(1..=bounds.points.min(room));
    let space = random_space(&mut rng, npoints, bounds.base);
    let levels = floor + npoints + rng.random_range(0..=room - npoints);
    let poset = forcing.poset();
    let names: Vec<Name> = (0..levels).map(|_| random_cover_name(&mut rng, poset, &space)).collect();
    for (n, name) in names.iter().enumerate() {
        if !validate_cover_name(poset, &space, name)? {
            return Err(Error::Input(format!("generated name {n} is not a cover name")));
        }
    }
    Ok(ScenarioPayload {
        poset: poset_payload,
        space: SpacePayload {
            points: space.labels().to_vec(),
            base: space.base().iter().map(|&b| space.set_labels(b)).collect(),
        },
        names: names.iter().map(|n| name_payload(poset, &space, n)).collect(),
        property: Some(property),
    })
}

/// Loads a freshly generated scenario.
pub fn generate_loaded(seed: u64, bounds: &Bounds, property: SelectionMode) -> Result<Scenario> {
    Scenario::load(&generate_scenario(seed, bounds, property)?, bounds)
}

fn random_poset_payload<R: Rng>(rng: &mut R, bounds: &Bounds) -> PosetPayload {
    let mut kinds = Vec::new();
    if bounds.cohen_index >= 1 && bounds.poset >= 3 {
        kinds.push(0);
    }
    if bounds.measure_dim >= 1 && bounds.poset >= 3 {
        kinds.push(1);
    }
    kinds.push(2);
    match *kinds.choose(rng).expect("explicit posets are always possible") {
        0 => {
            let max = (1..=bounds.cohen_index.min(3)).filter(|d| 3usize.pow(*d as u32) <= bounds.poset).max().unwrap_or(1);
            PosetPayload::Spec(PosetSpec::Cohen(rng.random_range(1..=max)).to_string())
        }
        1 => {
            let max = (1..=bounds.measure_dim.min(2)).filter(|k| (1usize << (1 << k)) - 1 <= bounds.poset).max().unwrap_or(1);
            PosetPayload::Spec(PosetSpec::Measure(rng.random_range(1..=max)).to_string())
        }
        _ => PosetPayload::Explicit(random_explicit_poset(rng, bounds.poset.clamp(1, EXPLICIT_CAP))),
    }
}

/// A random poset with a top element `p0`; later elements tend to be stronger.
pub fn random_explicit_poset<R: Rng>(rng: &mut R, max_elements: usize) -> ExplicitPoset {
    let n = rng.random_range(max_elements.min(3)..=max_elements);
    let elements: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut leq = Vec::new();
    for i in 1..n {
        leq.push((elements[i].clone(), elements[0].clone()));
        for j in 1..i {
            if rng.random_bool(0.3) {
                leq.push((elements[i].clone(), elements[j].clone()));
            }
        }
    }
    let ranks: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { rng.random_range(0..=2) }).collect();
    let top = ranks.iter().copied().max().unwrap_or(0);
    let levels = (0..=top)
        .map(|r| (0..n).filter(|&i| ranks[i] <= r).map(|i| elements[i].clone()).collect())
        .collect();
    ExplicitPoset { elements, leq, levels: Some(levels) }
}

/// A space on `n` points whose base always contains the whole space.
pub fn random_space<R: Rng>(rng: &mut R, n: usize, max_base: usize) -> FiniteSpace {
    let labels: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let full = PointSet::full(n);
    let mut base = vec![full];
    let extra = rng.random_range(0..max_base.max(1));
    for _ in 0..extra {
        let bits = rng.random_range(1..=full.bits());
        base.push(PointSet::from_bits(bits));
    }
    FiniteSpace::new(labels, base).expect("the whole space is in the base")
}

/// A valid cover name: every member of a random maximal antichain is paired
/// with a basic neighbourhood of each point, plus a few arbitrary pairs.
pub fn random_cover_name<R: Rng>(rng: &mut R, poset: &Poset, space: &FiniteSpace) -> Name {
    let antichain = poset.random_maximal_antichain(rng);
    let mut pairs = Vec::new();
    for &p in antichain.members() {
        for x in 0..space.len() {
            let mut around: Vec<PointSet> = space.base().iter().copied().filter(|b| b.contains(x)).collect();
            around.sort_by_key(|b| b.len());
            // biased towards small neighbourhoods
            let pick = rng.random_range(0..around.len());
            pairs.push((p, around[rng.random_range(0..=pick)]));
        }
    }
    pairs.extend(random_pairs(rng, poset, space, 2));
    Name::new(pairs)
}

/// Up to `max` pairs of a random condition and a random basic set.
pub fn random_pairs<R: Rng>(
    rng: &mut R,
    poset: &Poset,
    space: &FiniteSpace,
    max: usize,
) -> Vec<(crate::poset::Cond, PointSet)> {
    let count = rng.random_range(0..=max);
    (0..count)
        .map(|_| {
            let c = poset.cond(rng.random_range(0..poset.len())).expect("index in range");
            let b = *space.base().choose(rng).expect("nonempty base");
            (c, b)
        })
        .collect()
}

/// A random family of nonempty open sets, each inside some member of `cover`.
pub fn random_refinement<R: Rng>(rng: &mut R, space: &FiniteSpace, cover: &[PointSet]) -> Vec<PointSet> {
    let mut family = Vec::new();
    for &v in cover {
        let inside: Vec<PointSet> = space.topology().iter().copied().filter(|s| !s.is_empty() && s.is_subset(v)).collect();
        for _ in 0..rng.random_range(0..=2) {
            if let Some(&s) = inside.choose(rng) {
                family.push(s);
            }
        }
    }
    crate::space::canonical_family(family)
}

/// A random open set of the space.
pub fn random_open<R: Rng>(rng: &mut R, space: &FiniteSpace) -> PointSet {
    *space.topology().choose(rng).expect("the topology contains the empty set")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let b = Bounds::default();
        let a = generate_scenario(0, &b, SelectionMode::Menger).unwrap();
        assert_eq!(a, generate_scenario(0, &b, SelectionMode::Menger).unwrap());
        assert_ne!(a, generate_scenario(1, &b, SelectionMode::Menger).unwrap());
    }

    #[test]
    fn generated_scenarios_are_valid_with_headroom() {
        let b = Bounds::default();
        for seed in 0..40 {
            let s = generate_loaded(seed, &b, SelectionMode::Rothberger).unwrap();
            let p = s.forcing.poset();
            assert!(s.names.iter().all(|n| validate_cover_name(p, &s.space, n).unwrap()));
            let floor = s.forcing.stratification().stabilization_index();
            assert!(s.names.len() >= floor + s.space.len());
            assert!(s.names.len() <= b.levels && s.space.len() <= b.points && p.len() <= b.poset);
        }
    }

    #[test]
    fn impossible_bounds_rejected() {
        let b = Bounds { points: 0, ..Bounds::default() };
        assert!(matches!(generate_scenario(0, &b, SelectionMode::Menger), Err(Error::Resource(_))));
    }
}
