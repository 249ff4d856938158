//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use izone_core::NetworkCase;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The bundled 39-bus base case.
pub fn case39() -> NetworkCase {
    izone_core::load_case(fixtures_dir().join("case39.json")).expect("fixture loads")
}
