//! Linear temporal-difference prediction on a fixed-policy Mountain Car
//! testbed, with an emphatic TD(0) learner, a Monte-Carlo ground-truth
//! oracle, a seeded experiment harness, and an analyzer for the
//! expected-update stability of TD(λ) with state-dependent λ.

pub mod env;
pub mod error;
pub mod features;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod oracle;
pub mod policies;
pub mod stability;

pub use error::{Error, Result};
