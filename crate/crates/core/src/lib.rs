//! Inertia zoning of power networks: synchronizing-power Laplacian, Kron
//! reduction, dynamic nodal weights from a maximal entropy random walk,
//! weighted kmeans++ zoning, eigen-perturbation sensitivity and a linear
//! swing simulator.

pub mod case_file;
pub mod error;
pub mod network;
pub mod pipeline;
pub mod report;
pub mod sensitivity;
pub mod spectral;
pub mod swing;
pub mod synth;
pub mod zoning;

pub use case_file::{load_case, load_scenario, parse_case, parse_scenario, SCHEMA_VERSION};
pub use error::{Error, Result};
pub use network::{
    apply_scenario, build_laplacian, sync_coefficient, Addition, BranchRecord, BusId, BusKind, BusRecord,
    GeneratorRecord, GeneratorTech, LoadRedistribution, NetworkCase, Replacement, ScenarioSpec,
};
pub use pipeline::{analyze, Analysis, SweepPoint, ZoningConfig};
pub use sensitivity::{
    first_order_eigs, one_at_a_time, one_at_a_time_with, Parameter, PerturbationMode, PerturbationSpec,
    SensitivityReport, Targets,
};
pub use spectral::{
    eigensystem, extend_dnw, kron_reduce, merw_dnw, DnwVector, EigenSystem, PartitionedLaplacian,
    ReducedDynamics, MERW_OPERATOR,
};
pub use swing::{
    coherence_score, simulate, CoherenceScore, DisturbanceKind, DisturbanceSpec, SimConfig, Trajectory,
};
pub use zoning::{auto_k_init, build_features, weighted_kmeans, AutoK, FeatureMatrix, ZoningResult};
