//! A finite laboratory for weakly endowed forcing notions.
//!
//! Builds finite Cohen posets and measure algebras, verifies weak endowments,
//! approximates names for open covers by ground-model covers, refines them,
//! and certifies that the Rothberger, Menger and selective-screenability
//! selection principles survive the passage to every atom-determined
//! extension. All results are exact computations on finite truncations.

pub mod bounds;
pub mod cohen;
pub mod endowment;
pub mod error;
pub mod fixtures;
pub mod forcing;
pub mod generate;
pub mod instance;
pub mod measure;
pub mod names;
pub mod poset;
pub mod selftest;
pub mod preservation;
pub mod space;
pub mod topology;

pub use bounds::Bounds;
pub use cohen::{CohenCondition, CohenPoset};
pub use endowment::{dow_construct, DowTrace, EndowmentFamily, EndowmentReport};
pub use error::{Error, Result};
pub use forcing::{forces, forces_dense, Name, Statement};
pub use instance::{Forcing, InstanceFile, PosetSpec, Scenario, ScenarioPayload};
pub use measure::{MeasureCondition, MeasurePoset};
pub use poset::{Antichain, Cond, Poset, Stratification};
pub use preservation::{run_preservation, verify_certificate, Certificate, Verdict};
pub use space::{FiniteSpace, PointSet};
pub use topology::SelectionMode;
