//! Gradient-based learning dynamics in two-player differentiable games.
//!
//! The crate bundles an exact derivative engine for small games, the game
//! suite, the update rules (naive, LOLA, SOS, CGD and the preference-based
//! CPBOS/PBOS), a 2×2 Nash oracle, a seeded experiment harness, a property
//! suite and SVG plotting.

pub mod derivkit;
pub mod error;
pub mod games;
pub mod harness;
pub mod learners;
pub mod nash;
pub mod plot;
pub mod record;
pub mod verify;

pub use error::{Error, Result};
