//! Case to zones in one call, plus the generator-inertia sweep.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{build_laplacian, BusId, NetworkCase};
use crate::spectral::{
    eigensystem, extend_dnw, kron_reduce, merw_dnw, DnwVector, EigenSystem, PartitionedLaplacian,
    ReducedDynamics,
};
use crate::zoning::{auto_k_init, build_features, weighted_kmeans, AutoK, FeatureMatrix, ZoningResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZoningConfig {
    /// Number of slow modes used as features.
    pub r: usize,
    /// Relative spread improvement below which seeding stops.
    pub tau: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub include_rigid: bool,
}

impl Default for ZoningConfig {
    fn default() -> Self {
        ZoningConfig { r: 2, tau: 0.15, seed: 42, max_iter: 300, include_rigid: false }
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub laplacian: PartitionedLaplacian,
    pub reduced: ReducedDynamics,
    pub eigen: EigenSystem,
    /// DNW over all buses.
    pub dnw: DnwVector,
    pub features: FeatureMatrix,
    pub init: AutoK,
    pub zones: ZoningResult,
}

pub fn reduce_case(case: &NetworkCase) -> Result<(PartitionedLaplacian, ReducedDynamics)> {
    let pl = build_laplacian(case);
    let rd = kron_reduce(&pl, case.generators(), case.nominal_freq())?;
    Ok((pl, rd))
}

/// DNW over all buses of a case.
pub fn case_dnw(case: &NetworkCase) -> Result<DnwVector> {
    let (pl, rd) = reduce_case(case)?;
    extend_dnw(&merw_dnw(&rd)?, &pl)
}

pub fn analyze(case: &NetworkCase, cfg: &ZoningConfig) -> Result<Analysis> {
    if !(cfg.tau.is_finite() && cfg.tau >= 0.0) {
        return Err(Error::invalid("tau", format!("must be non-negative, got {}", cfg.tau)));
    }
    let (pl, rd) = reduce_case(case)?;
    let es = eigensystem(&rd)?;
    let dnw = extend_dnw(&merw_dnw(&rd)?, &pl)?;
    let features = build_features(&es, &pl, &dnw, cfg.r, cfg.include_rigid)?;
    let init = auto_k_init(&features, cfg.tau, cfg.seed)?;
    let zones = weighted_kmeans(&features, &init.centroids, &dnw, cfg.max_iter)?;
    Ok(Analysis { laplacian: pl, reduced: rd, eigen: es, dnw, features, init, zones })
}

/// `from, from + step, ...` up to and including `to`.
pub fn h_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(Error::invalid("h_from", format!("need h_from < h_to, got {from} and {to}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("h_step", format!("must be positive, got {step}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub h: f64,
    pub case: NetworkCase,
    pub analysis: Analysis,
}

/// Re-run the zoning pipeline with the inertia of `bus` set to each value.
pub fn sweep_inertia(
    case: &NetworkCase,
    bus: BusId,
    values: &[f64],
    cfg: &ZoningConfig,
) -> Result<Vec<SweepPoint>> {
    if case.generator(bus).is_none() {
        return Err(Error::NoGenerator(bus));
    }
    values
        .iter()
        .map(|&h| {
            let varied = case.modified(|_, gens| {
                for g in gens.iter_mut().filter(|g| g.bus_id == bus) {
                    g.inertia_h = h;
                }
            })?;
            let analysis = analyze(&varied, cfg)?;
            Ok(SweepPoint { h, case: varied, analysis })
        })
        .collect()
}
