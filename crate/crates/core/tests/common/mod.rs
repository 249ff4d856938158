#![allow(dead_code)]

use std::path::PathBuf;

use izone_core::{apply_scenario, load_case, load_scenario, NetworkCase};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn base_case() -> NetworkCase {
    load_case(fixtures().join("case39.json")).unwrap()
}

/// Scenario `n` (1 to 4) applied to the base case.
pub fn scenario(n: usize) -> NetworkCase {
    let spec = load_scenario(fixtures().join(format!("scenario{n}.json"))).unwrap();
    apply_scenario(&base_case(), &spec).unwrap()
}

pub fn all_scenarios() -> Vec<NetworkCase> {
    (1..=4).map(scenario).collect()
}

pub fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
