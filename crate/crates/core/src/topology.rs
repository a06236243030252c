//! Refinement checks and exact solvers for finite-horizon forms of the
//! Rothberger, Menger and selective-screenability selection principles.
//!
//! "Infinitely many `n`" becomes "some `n >= M`" for a horizon floor `M`.
//! Solvers are deterministic: branching follows the canonical set order.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::space::{canonical_family, FiniteSpace, PointSet};

/// Menger instances up to this many eligible cover elements are solved exactly.
pub const MENGER_EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    Rothberger,
    Menger,
    SelectiveScreenability,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Rothberger => "rothberger",
            SelectionMode::Menger => "menger",
            SelectionMode::SelectiveScreenability => "selective-screenability",
        }
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rothberger" => Ok(SelectionMode::Rothberger),
            "menger" => Ok(SelectionMode::Menger),
            "selective-screenability" | "screenability" => Ok(SelectionMode::SelectiveScreenability),
            other => input(format!("unknown property `{other}`")),
        }
    }
}

/// A sequence of open covers with a horizon floor. A floor at or past the
/// number of covers leaves no eligible level, so nonempty spaces are
/// unsatisfiable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionProblem {
    pub universe: PointSet,
    pub covers: Vec<Vec<PointSet>>,
    pub horizon_floor: usize,
    pub mode: SelectionMode,
}

impl SelectionProblem {
    pub fn new(
        space: &FiniteSpace,
        covers: Vec<Vec<PointSet>>,
        horizon_floor: usize,
        mode: SelectionMode,
    ) -> Result<Self> {
        let covers: Vec<Vec<PointSet>> = covers.into_iter().map(canonical_family).collect();
        for (n, cover) in covers.iter().enumerate() {
            if let Some(bad) = cover.iter().find(|s| !space.is_open(**s)) {
                return input(format!("cover {n} has the non-open member {bad}"));
            }
            if !space.is_cover(cover) {
                return input(format!("family {n} does not cover the space"));
            }
        }
        Ok(Self { universe: space.full(), covers, horizon_floor, mode })
    }

    pub fn len(&self) -> usize {
        self.covers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covers.is_empty()
    }
}

/// Outcome of [`refines`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement {
    /// Each member mapped to its canonically least superset.
    Refines(Vec<(PointSet, PointSet)>),
    /// A member with no superset.
    Fails(PointSet),
}

impl Refinement {
    pub fn holds(&self) -> bool {
        matches!(self, Refinement::Refines(_))
    }
}

/// Whether every member of `a` lies inside some member of `b`. Neither
/// family has to be a cover, but both must consist of open sets.
pub fn refines(space: &FiniteSpace, a: &[PointSet], b: &[PointSet]) -> Result<Refinement> {
    if let Some(bad) = a.iter().chain(b).find(|s| !space.is_open(**s)) {
        return input(format!("{bad} is not open"));
    }
    let b = canonical_family(b.to_vec());
    let mut witness = Vec::with_capacity(a.len());
    for &u in &canonical_family(a.to_vec()) {
        match b.iter().find(|v| u.is_subset(**v)) {
            Some(&v) => witness.push((u, v)),
            None => return Ok(Refinement::Fails(u)),
        }
    }
    Ok(Refinement::Refines(witness))
}

/// Picks `U_n ∈ 𝓤_n` for every level so that each point lies in some `U_n`
/// with `n >= M`. Returns `None` only after exhaustive search.
pub fn rothberger_select(problem: &SelectionProblem) -> Option<Vec<PointSet>> {
    let options: Vec<Vec<Vec<PointSet>>> = problem
        .covers
        .iter()
        .map(|c| c.iter().map(|&u| vec![u]).collect())
        .collect();
    let picked = level_search(problem, &options, true)?;
    Some(picked.into_iter().map(|f| f[0]).collect())
}

/// Picks finite `𝓕_n ⊆ 𝓤_n` (empty below the floor) whose late members cover
/// the space, minimizing `Σ|𝓕_n|` exactly for small instances and greedily
/// beyond [`MENGER_EXACT_LIMIT`] eligible elements.
pub fn menger_select(problem: &SelectionProblem) -> Option<Vec<Vec<PointSet>>> {
    let items: Vec<(usize, PointSet)> = problem
        .covers
        .iter()
        .enumerate()
        .skip(problem.horizon_floor)
        .flat_map(|(n, c)| c.iter().map(move |&u| (n, u)))
        .collect();
    let chosen = if items.len() <= MENGER_EXACT_LIMIT {
        exact_min_cover(&items, problem.universe)?
    } else {
        greedy_cover(&items, problem.universe)?
    };
    let mut out = vec![Vec::new(); problem.len()];
    for i in chosen {
        out[items[i].0].push(items[i].1);
    }
    Some(out.into_iter().map(canonical_family).collect())
}

fn exact_min_cover(items: &[(usize, PointSet)], universe: PointSet) -> Option<Vec<usize>> {
    for size in 0..=items.len() {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let union = combo.iter().fold(PointSet::EMPTY, |acc, &i| acc.union(items[i].1));
            if universe.is_subset(union) {
                return Some(combo);
            }
            // next combination in lexicographic order
            let Some(pos) = (0..size).rev().find(|&i| combo[i] < items.len() - size + i) else {
                break;
            };
            combo[pos] += 1;
            for j in pos + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    None
}

fn greedy_cover(items: &[(usize, PointSet)], universe: PointSet) -> Option<Vec<usize>> {
    let mut covered = PointSet::EMPTY;
    let mut chosen = Vec::new();
    while !universe.is_subset(covered) {
        let (best, gain) = items
            .iter()
            .enumerate()
            .map(|(i, &(_, u))| (i, u.difference(covered).len()))
            .fold((0, 0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if gain == 0 {
            return None;
        }
        covered = covered.union(items[best].1);
        chosen.push(best);
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// Picks pairwise-disjoint open families `𝓗_n` refining `𝓤_n` (empty below
/// the floor) so that each point is hit at some `n >= M`. Per level, the
/// candidates are open sets inside some cover member; among families with
/// the same union the smallest, then lexicographically least, is used. The
/// returned sequence is the least one in that per-level order.
pub fn selective_screenability_select(space: &FiniteSpace, problem: &SelectionProblem) -> Option<Vec<Vec<PointSet>>> {
    let options: Vec<Vec<Vec<PointSet>>> = problem
        .covers
        .iter()
        .map(|cover| disjoint_refinements(space, cover))
        .collect();
    level_search(problem, &options, false)
}

/// Best disjoint refining family for every achievable union, sorted by family order.
fn disjoint_refinements(space: &FiniteSpace, cover: &[PointSet]) -> Vec<Vec<PointSet>> {
    let candidates: Vec<PointSet> = space
        .topology()
        .iter()
        .copied()
        .filter(|s| !s.is_empty() && cover.iter().any(|u| s.is_subset(*u)))
        .collect();
    let full = space.full().bits();
    let mut best: BTreeMap<u64, Vec<PointSet>> = BTreeMap::from([(0, Vec::new())]);
    // Submasks are numerically smaller, so ascending order sees them first.
    let mut mask = full;
    let mut masks = Vec::new();
    loop {
        masks.push(mask);
        if mask == 0 {
            break;
        }
        mask = (mask - 1) & full;
    }
    masks.reverse();
    for &mask in masks.iter().skip(1) {
        let low = mask & mask.wrapping_neg();
        let mut winner: Option<Vec<PointSet>> = None;
        for &s in &candidates {
            if s.bits() & low == 0 || s.bits() & !mask != 0 {
                continue;
            }
            let Some(rest) = best.get(&(mask & !s.bits())) else {
                continue;
            };
            let mut family = rest.clone();
            let at = family.partition_point(|t| *t < s);
            family.insert(at, s);
            if winner.as_ref().is_none_or(|w| family_order(&family, w).is_lt()) {
                winner = Some(family);
            }
        }
        if let Some(w) = winner {
            best.insert(mask, w);
        }
    }
    let mut families: Vec<Vec<PointSet>> = best.into_values().collect();
    families.sort_by(|a, b| family_order(a, b));
    families
}

fn family_order(a: &[PointSet], b: &[PointSet]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Depth-first search over per-level options in the given order. With
/// `forced_pick` every level takes an option (the first one below the floor);
/// otherwise levels below the floor take the empty family.
fn level_search(
    problem: &SelectionProblem,
    options: &[Vec<Vec<PointSet>>],
    forced_pick: bool,
) -> Option<Vec<Vec<PointSet>>> {
    let mut picked = Vec::with_capacity(problem.len());
    let mut dead = HashSet::new();
    if search_from(problem, options, forced_pick, 0, PointSet::EMPTY, &mut picked, &mut dead) {
        Some(picked)
    } else {
        None
    }
}

fn search_from(
    problem: &SelectionProblem,
    options: &[Vec<Vec<PointSet>>],
    forced_pick: bool,
    level: usize,
    covered: PointSet,
    picked: &mut Vec<Vec<PointSet>>,
    dead: &mut HashSet<(usize, u64)>,
) -> bool {
    if level == problem.len() {
        return problem.universe.is_subset(covered);
    }
    if dead.contains(&(level, covered.bits())) {
        return false;
    }
    if level < problem.horizon_floor {
        let pick = if forced_pick {
            match options[level].first() {
                Some(first) => first.clone(),
                None => return false,
            }
        } else {
            Vec::new()
        };
        picked.push(pick);
        if search_from(problem, options, forced_pick, level + 1, covered, picked, dead) {
            return true;
        }
        picked.pop();
    } else {
        for option in &options[level] {
            let hit = option.iter().fold(covered, |acc, &s| acc.union(s));
            picked.push(option.clone());
            if search_from(problem, options, forced_pick, level + 1, hit, picked, dead) {
                return true;
            }
            picked.pop();
        }
    }
    dead.insert((level, covered.bits()));
    false
}

/// Dispatches on the problem's mode; Rothberger picks come back as singletons.
pub fn solve(space: &FiniteSpace, problem: &SelectionProblem) -> Option<Vec<Vec<PointSet>>> {
    match problem.mode {
        SelectionMode::Rothberger => rothberger_select(problem).map(|us| us.into_iter().map(|u| vec![u]).collect()),
        SelectionMode::Menger => menger_select(problem),
        SelectionMode::SelectiveScreenability => selective_screenability_select(space, problem),
    }
}

/// Checks a selection directly against the definition of its mode.
pub fn check_selection(
    space: &FiniteSpace,
    problem: &SelectionProblem,
    selection: &[Vec<PointSet>],
) -> std::result::Result<(), String> {
    if selection.len() != problem.len() {
        return Err(format!("{} levels selected for {} covers", selection.len(), problem.len()));
    }
    for (n, (family, cover)) in selection.iter().zip(&problem.covers).enumerate() {
        match problem.mode {
            SelectionMode::Rothberger => {
                if family.len() != 1 || !cover.contains(&family[0]) {
                    return Err(format!("level {n} must pick exactly one cover member"));
                }
            }
            SelectionMode::Menger => {
                if let Some(s) = family.iter().find(|s| !cover.contains(s)) {
                    return Err(format!("level {n} picks {s}, not a cover member"));
                }
            }
            SelectionMode::SelectiveScreenability => {
                for (i, s) in family.iter().enumerate() {
                    if !space.is_open(*s) {
                        return Err(format!("level {n} picks the non-open set {s}"));
                    }
                    if !cover.iter().any(|u| s.is_subset(*u)) {
                        return Err(format!("level {n}: {s} refines no cover member"));
                    }
                    if family[i + 1..].iter().any(|t| !s.is_disjoint(*t)) {
                        return Err(format!("level {n} is not pairwise disjoint"));
                    }
                }
            }
        }
    }
    for x in problem.universe.points() {
        let hit = selection
            .iter()
            .enumerate()
            .skip(problem.horizon_floor)
            .any(|(_, f)| f.iter().any(|s| s.contains(x)));
        if !hit {
            return Err(format!("point {x} is not hit at any level >= {}", problem.horizon_floor));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy_discrete() -> FiniteSpace {
        FiniteSpace::from_labels(&["x", "y"], &[vec!["x"], vec!["y"]]).unwrap()
    }

    fn set(space: &FiniteSpace, pts: &[&str]) -> PointSet {
        space.set_from_labels(pts).unwrap()
    }

    #[test]
    fn refines_examples() {
        let s = xy_discrete();
        let (x, y, xy) = (set(&s, &["x"]), set(&s, &["y"]), set(&s, &["x", "y"]));
        assert_eq!(refines(&s, &[x], &[x, xy]).unwrap(), Refinement::Refines(vec![(x, x)]));
        assert!(refines(&s, &[], &[y]).unwrap().holds());
        assert_eq!(refines(&s, &[xy], &[x, y]).unwrap(), Refinement::Fails(xy));
        let coarse = FiniteSpace::from_labels(&["x", "y"], &[vec!["x", "y"]]).unwrap();
        assert!(refines(&coarse, &[x], &[xy]).is_err());
    }

    #[test]
    fn rothberger_examples() {
        let s = xy_discrete();
        let (x, y, xy) = (set(&s, &["x"]), set(&s, &["y"]), set(&s, &["x", "y"]));
        let single = SelectionProblem::new(&s, vec![vec![xy]], 0, SelectionMode::Rothberger).unwrap();
        assert_eq!(rothberger_select(&single), Some(vec![xy]));
        let two = SelectionProblem::new(&s, vec![vec![x, y], vec![x, y]], 0, SelectionMode::Rothberger).unwrap();
        assert_eq!(rothberger_select(&two), Some(vec![x, y]));
        let one = SelectionProblem::new(&s, vec![vec![x, y]], 0, SelectionMode::Rothberger).unwrap();
        assert_eq!(rothberger_select(&one), None);
        let floor_too_high = SelectionProblem::new(&s, vec![vec![xy]], 1, SelectionMode::Rothberger).unwrap();
        assert_eq!(rothberger_select(&floor_too_high), None);
    }

    #[test]
    fn menger_examples() {
        let s = xy_discrete();
        let (x, y) = (set(&s, &["x"]), set(&s, &["y"]));
        let one = SelectionProblem::new(&s, vec![vec![x, y]], 0, SelectionMode::Menger).unwrap();
        assert_eq!(menger_select(&one), Some(vec![vec![x, y]]));
        let empty = FiniteSpace::new(vec![], vec![]).unwrap();
        let p = SelectionProblem::new(&empty, vec![vec![], vec![]], 0, SelectionMode::Menger).unwrap();
        assert_eq!(menger_select(&p), Some(vec![vec![], vec![]]));
    }

    #[test]
    fn screenability_examples() {
        let s = xy_discrete();
        let xy = set(&s, &["x", "y"]);
        let p = SelectionProblem::new(&s, vec![vec![xy]], 0, SelectionMode::SelectiveScreenability).unwrap();
        assert_eq!(selective_screenability_select(&s, &p), Some(vec![vec![xy]]));
        // Two overlapping opens, no way to separate x and y at one level.
        let overlap = FiniteSpace::from_labels(&["x", "y", "z"], &[vec!["x", "z"], vec!["y", "z"]]).unwrap();
        let (xz, yz) = (set(&overlap, &["x", "z"]), set(&overlap, &["y", "z"]));
        let p = SelectionProblem::new(&overlap, vec![vec![xz, yz]], 0, SelectionMode::SelectiveScreenability).unwrap();
        assert_eq!(selective_screenability_select(&overlap, &p), None);
        let two = SelectionProblem::new(&overlap, vec![vec![xz, yz], vec![xz, yz]], 0, SelectionMode::SelectiveScreenability)
            .unwrap();
        let sel = selective_screenability_select(&overlap, &two).unwrap();
        assert!(check_selection(&overlap, &two, &sel).is_ok());
    }

    #[test]
    fn checker_rejects_bad_selections() {
        let s = xy_discrete();
        let (x, y, xy) = (set(&s, &["x"]), set(&s, &["y"]), set(&s, &["x", "y"]));
        let p = SelectionProblem::new(&s, vec![vec![x, y], vec![x, y]], 1, SelectionMode::Rothberger).unwrap();
        assert!(check_selection(&s, &p, &[vec![x], vec![y]]).is_err());
        let p = SelectionProblem::new(&s, vec![vec![xy]], 0, SelectionMode::SelectiveScreenability).unwrap();
        assert!(check_selection(&s, &p, &[vec![x, xy]]).is_err());
    }

    #[test]
    fn non_cover_rejected() {
        let s = xy_discrete();
        assert!(SelectionProblem::new(&s, vec![vec![set(&s, &["x"])]], 0, SelectionMode::Menger).is_err());
    }
}
