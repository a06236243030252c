//! Resource limits shared by constructors, generators and sweeps.
//!
//! Defaults can be overridden through the `ENDOWLAB_BOUNDS` environment
//! variable, a comma separated list of `key=value` pairs such as
//! `cohen_index=6,points=8`.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub const BOUNDS_ENV: &str = "ENDOWLAB_BOUNDS";

/// Hard ceiling on the number of atoms a poset may have (atom sets are `u64`).
pub const MAX_ATOMS: usize = 64;
/// Hard ceiling on points in a finite space (topology closure is exponential).
pub const MAX_SPACE_POINTS: usize = 12;
/// Hard ceiling on the measure-algebra dimension (cells are `u16` masks).
pub const MAX_MEASURE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    /// Largest Cohen index set `|D|`.
    pub cohen_index: usize,
    /// Largest measure-algebra dimension `k`.
    pub measure_dim: usize,
    /// Largest space size `|X|` for generated and loaded spaces.
    pub points: usize,
    /// Largest base size for generated spaces.
    pub base: usize,
    /// Largest poset for generated scenarios and exhaustive antichain enumeration.
    pub poset: usize,
    /// Largest number of cover names `N` in a scenario.
    pub levels: usize,
    /// Check budget for the full clause (3) verifier.
    pub clause3_budget: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            cohen_index: 5,
            measure_dim: 4,
            points: 6,
            base: 12,
            poset: 40,
            levels: 8,
            clause3_budget: 5_000_000,
        }
    }
}

impl Bounds {
    /// Defaults with `ENDOWLAB_BOUNDS` overrides applied.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BOUNDS_ENV) {
            Ok(spec) => Self::default().with_overrides(&spec),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let Some((key, value)) = item.split_once('=') else {
                return input(format!("bounds override `{item}` is not key=value"));
            };
            let parsed: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bounds override `{item}` has a non-numeric value")))?;
            let as_usize = parsed as usize;
            match key.trim() {
                "cohen_index" => self.cohen_index = as_usize,
                "measure_dim" => self.measure_dim = as_usize,
                "points" => self.points = as_usize,
                "base" => self.base = as_usize,
                "poset" => self.poset = as_usize,
                "levels" => self.levels = as_usize,
                "clause3_budget" => self.clause3_budget = parsed,
                other => return input(format!("unknown bounds key `{other}`")),
            }
        }
        if self.measure_dim > MAX_MEASURE_DIM {
            return Err(Error::Resource(format!(
                "measure_dim {} exceeds the hard ceiling {MAX_MEASURE_DIM}",
                self.measure_dim
            )));
        }
        if self.points > MAX_SPACE_POINTS {
            return Err(Error::Resource(format!(
                "points {} exceeds the hard ceiling {MAX_SPACE_POINTS}",
                self.points
            )));
        }
        Ok(self)
    }

    /// Fails with a resource error if `requested` asks for more than `self` allows.
    pub fn admit(&self, requested: &Bounds) -> Result<()> {
        let checks = [
            ("cohen_index", requested.cohen_index, self.cohen_index),
            ("measure_dim", requested.measure_dim, self.measure_dim),
            ("points", requested.points, self.points),
            ("base", requested.base, self.base),
            ("poset", requested.poset, self.poset),
            ("levels", requested.levels, self.levels),
        ];
        for (key, want, limit) in checks {
            if want > limit {
                return Err(Error::Resource(format!("{key}={want} exceeds the limit {limit}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let b = Bounds::default().with_overrides("points=8, levels=10").unwrap();
        assert_eq!(b.points, 8);
        assert_eq!(b.levels, 10);
        assert_eq!(b.cohen_index, 5);
    }

    #[test]
    fn bad_overrides_rejected() {
        assert!(matches!(Bounds::default().with_overrides("points"), Err(Error::Input(_))));
        assert!(matches!(Bounds::default().with_overrides("nope=1"), Err(Error::Input(_))));
        assert!(matches!(Bounds::default().with_overrides("points=99"), Err(Error::Resource(_))));
    }

    #[test]
    fn admit_compares_fieldwise() {
        let limits = Bounds::default();
        let mut big = limits;
        big.poset = 300;
        assert!(limits.admit(&limits).is_ok());
        assert!(matches!(limits.admit(&big), Err(Error::Resource(_))));
    }
}
