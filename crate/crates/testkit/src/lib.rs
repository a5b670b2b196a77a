//! Shared support for the integration and acceptance tests.

mod gen;
pub mod predicates;
pub mod sandbox;

use std::path::PathBuf;

pub use gen::{random_model, rng, GenConfig};

/// Directory with the shipped fixtures of the core crate.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
