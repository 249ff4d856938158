//! On-disk case and scenario documents (JSON, `schema_version: 1`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    BranchRecord, BusId, BusKind, BusRecord, GeneratorRecord, GeneratorTech, NetworkCase, ScenarioSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDoc {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nominal_freq_hz: f64,
    pub buses: Vec<BusDoc>,
    pub branches: Vec<BranchDoc>,
    pub generators: Vec<GeneratorDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDoc {
    pub id: BusId,
    pub kind: BusKind,
    pub v_mag_pu: f64,
    pub v_ang_rad: f64,
    #[serde(default)]
    pub p_load_mw: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub from: BusId,
    pub to: BusId,
    pub b_pu: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub bus: BusId,
    pub h_s: f64,
    #[serde(default)]
    pub rating_mva: f64,
    pub tech: GeneratorTech,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: ScenarioSpec,
}

impl CaseDoc {
    pub fn into_case(self) -> Result<NetworkCase> {
        check_version(self.schema_version)?;
        let buses = self
            .buses
            .into_iter()
            .map(|b| BusRecord {
                id: b.id,
                kind: b.kind,
                voltage_mag: b.v_mag_pu,
                voltage_ang: b.v_ang_rad,
                load_mw: b.p_load_mw,
            })
            .collect();
        let branches = self.branches.into_iter().map(|b| BranchRecord::new(b.from, b.to, b.b_pu)).collect();
        let generators = self
            .generators
            .into_iter()
            .map(|g| GeneratorRecord { bus_id: g.bus, inertia_h: g.h_s, rating: g.rating_mva, tech: g.tech })
            .collect();
        let case = NetworkCase::new(buses, branches, generators, self.nominal_freq_hz)?;
        Ok(match self.name {
            Some(name) => case.with_name(name),
            None => case,
        })
    }

    pub fn from_case(case: &NetworkCase) -> Self {
        CaseDoc {
            schema_version: SCHEMA_VERSION,
            name: case.name().map(str::to_owned),
            nominal_freq_hz: case.nominal_freq(),
            buses: case
                .buses()
                .iter()
                .map(|b| BusDoc {
                    id: b.id,
                    kind: b.kind,
                    v_mag_pu: b.voltage_mag,
                    v_ang_rad: b.voltage_ang,
                    p_load_mw: b.load_mw,
                })
                .collect(),
            branches: case
                .branches()
                .iter()
                .map(|b| BranchDoc { from: b.from_bus, to: b.to_bus, b_pu: b.susceptance })
                .collect(),
            generators: case
                .generators()
                .iter()
                .map(|g| GeneratorDoc { bus: g.bus_id, h_s: g.inertia_h, rating_mva: g.rating, tech: g.tech })
                .collect(),
        }
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

pub fn parse_case(text: &str, origin: &Path) -> Result<NetworkCase> {
    let doc: CaseDoc = serde_json::from_str(text)
        .map_err(|e| Error::Parse { path: origin.to_owned(), message: e.to_string() })?;
    doc.into_case()
}

/// Read and validate a case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase> {
    let path = path.as_ref();
    parse_case(&read(path)?, path)
}

pub fn parse_scenario(text: &str, origin: &Path) -> Result<ScenarioSpec> {
    let doc: ScenarioDoc = serde_json::from_str(text)
        .map_err(|e| Error::Parse { path: origin.to_owned(), message: e.to_string() })?;
    check_version(doc.schema_version)?;
    Ok(doc.spec)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    parse_scenario(&read(path)?, path)
}

pub fn case_to_json(case: &NetworkCase) -> String {
    serde_json::to_string_pretty(&CaseDoc::from_case(case)).expect("case document serializes")
}
