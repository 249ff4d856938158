//! First-order eigen-perturbation of the DNW operator under changes in
//! voltage magnitude, voltage angle, and inertia.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{build_laplacian, BusId, NetworkCase};
use crate::spectral::{kron_reduce, EigenSystem, ReducedDynamics};

/// Relative eigenvalue gap below which first-order theory is rejected.
pub const DEGENERACY_TOL: f64 = 1e-8;
const RATIO_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    VoltageMag,
    VoltageAng,
    Inertia,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::VoltageMag, Parameter::VoltageAng, Parameter::Inertia];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::VoltageMag => "voltage_mag",
            Parameter::VoltageAng => "voltage_ang",
            Parameter::Inertia => "inertia",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Perturbation(format!("unknown parameter '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Targets {
    /// Every bus (voltage) or every generator (inertia).
    All,
    /// Every generator bus.
    Generators,
    Buses(Vec<BusId>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Scale the targeted values by `1 + magnitude`.
    #[default]
    Relative,
    /// Add `magnitude` to the targeted values.
    Absolute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    pub parameter: Parameter,
    pub magnitude: f64,
    pub targets: Targets,
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn relative(parameter: Parameter, magnitude: f64, targets: Targets) -> Self {
        PerturbationSpec { parameter, magnitude, targets, mode: PerturbationMode::Relative }
    }

    pub fn with_mode(self, mode: PerturbationMode) -> Self {
        PerturbationSpec { mode, ..self }
    }

    fn apply(&self, value: f64) -> f64 {
        match self.mode {
            PerturbationMode::Relative => value * (1.0 + self.magnitude),
            PerturbationMode::Absolute => value + self.magnitude,
        }
    }
}

/// Which matrix of the reduced dynamics is differentiated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Operator {
    /// `lm_red` itself.
    Dynamics,
    /// `|lm_red|`, the matrix the DNW random walk runs on.
    #[default]
    Merw,
}

impl Operator {
    pub fn matrix(self, rd: &ReducedDynamics) -> DMatrix<f64> {
        match self {
            Operator::Dynamics => rd.lm_red.clone(),
            Operator::Merw => rd.merw_operator(),
        }
    }

    pub fn eigensystem(self, rd: &ReducedDynamics) -> Result<EigenSystem> {
        match self {
            Operator::Dynamics => EigenSystem::of_scaled(&rd.l_red, &rd.m_diag),
            Operator::Merw => EigenSystem::of_scaled(&rd.l_red.abs(), &rd.m_diag),
        }
    }
}

pub fn reduce(case: &NetworkCase) -> Result<ReducedDynamics> {
    let pl = build_laplacian(case);
    kron_reduce(&pl, case.generators(), case.nominal_freq())
}

/// Copy of `case` with the targeted parameter perturbed.
pub fn perturb_case(case: &NetworkCase, spec: &PerturbationSpec) -> Result<NetworkCase> {
    if !(spec.magnitude.is_finite() && spec.magnitude > 0.0) {
        return Err(Error::Perturbation(format!("magnitude must be positive, got {}", spec.magnitude)));
    }
    let targets: Vec<BusId> = match &spec.targets {
        Targets::All if spec.parameter == Parameter::Inertia => case.generator_buses(),
        Targets::All => case.buses().iter().map(|b| b.id).collect(),
        Targets::Generators => case.generator_buses(),
        Targets::Buses(list) => {
            for &b in list {
                case.bus(b).ok_or(Error::UnknownBus(b))?;
                if spec.parameter == Parameter::Inertia && case.generator(b).is_none() {
                    return Err(Error::NoGenerator(b));
                }
            }
            list.clone()
        }
    };
    case.modified(|buses, generators| match spec.parameter {
        Parameter::Inertia => generators
            .iter_mut()
            .filter(|g| targets.contains(&g.bus_id))
            .for_each(|g| g.inertia_h = spec.apply(g.inertia_h)),
        Parameter::VoltageMag => buses
            .iter_mut()
            .filter(|b| targets.contains(&b.id))
            .for_each(|b| b.voltage_mag = spec.apply(b.voltage_mag)),
        Parameter::VoltageAng => buses
            .iter_mut()
            .filter(|b| targets.contains(&b.id))
            .for_each(|b| b.voltage_ang = spec.apply(b.voltage_ang)),
    })
}

/// Forward difference `(A(perturbed) - A(base)) / magnitude` through the
/// full Laplacian and Kron pipeline.
pub fn perturbation_matrix(
    case: &NetworkCase,
    spec: &PerturbationSpec,
    operator: Operator,
) -> Result<DMatrix<f64>> {
    let base = operator.matrix(&reduce(case)?);
    let perturbed = operator.matrix(&reduce(&perturb_case(case, spec)?)?);
    Ok((perturbed - base) / spec.magnitude)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrder {
    /// First-order eigenvalue variations, aligned with the base eigenvalues.
    pub lambda1: DVector<f64>,
    /// First-order right eigenvector variations (columns).
    pub u1: DMatrix<f64>,
}

/// `lambda1 = diag(W* A1 U)`, `U1 = -U (Y o (W* A1 U))` with
/// `Y_ij = 1 / (lambda_i - lambda_j)` off the diagonal and 0 on it.
pub fn first_order_eigs(es: &EigenSystem, a1: &DMatrix<f64>) -> Result<FirstOrder> {
    let n = es.len();
    let radius = es.eigenvalues.amax();
    let threshold = DEGENERACY_TOL * radius;
    for i in 1..n {
        let (a, b) = (es.eigenvalues[i - 1], es.eigenvalues[i]);
        if (b - a).abs() < threshold {
            return Err(Error::DegenerateSpectrum { a, b, threshold });
        }
    }
    let projected = &es.left * a1 * &es.right;
    let lambda1 = projected.diagonal();
    let mut weighted = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weighted[(i, j)] = projected[(i, j)] / (es.eigenvalues[i] - es.eigenvalues[j]);
            }
        }
    }
    let u1 = -(&es.right * weighted);
    Ok(FirstOrder { lambda1, u1 })
}

/// `sum |U1[:, m] / U[:, m]|` over the column of the largest eigenvalue.
pub fn u1var_metric(es: &EigenSystem, fo: &FirstOrder) -> Result<f64> {
    let m = es.len() - 1;
    let base = es.right.column(m);
    let var = fo.u1.column(m);
    let mut total = 0.0;
    for (i, (&b, &v)) in base.iter().zip(var.iter()).enumerate() {
        if b.abs() < RATIO_FLOOR {
            return Err(Error::IllPosedRatio { index: i, value: b });
        }
        total += (v / b).abs();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub parameter: Parameter,
    pub epsilon: f64,
    /// How the targets were perturbed, e.g. `all` or `each_generator`.
    pub targets: String,
    pub lambda1: Vec<f64>,
    #[serde(skip)]
    pub u1: DMatrix<f64>,
    pub u1var: f64,
    /// Per-target u1var for one-at-a-time studies.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_target: Vec<(BusId, f64)>,
}

fn describe(targets: &Targets) -> String {
    match targets {
        Targets::All => "all".into(),
        Targets::Generators => "generators".into(),
        Targets::Buses(list) => list.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
    }
}

/// Joint perturbation of all targets, evaluated on the MERW operator.
pub fn analyze(case: &NetworkCase, spec: &PerturbationSpec) -> Result<SensitivityReport> {
    let es = Operator::Merw.eigensystem(&reduce(case)?)?;
    let a1 = perturbation_matrix(case, spec, Operator::Merw)?;
    let fo = first_order_eigs(&es, &a1)?;
    let u1var = u1var_metric(&es, &fo)?;
    Ok(SensitivityReport {
        parameter: spec.parameter,
        epsilon: spec.magnitude,
        targets: describe(&spec.targets),
        lambda1: fo.lambda1.iter().copied().collect(),
        u1: fo.u1,
        u1var,
        per_target: Vec::new(),
    })
}

/// Perturb each generator bus on its own and average. Uniform scaling of
/// every inertia (or every voltage magnitude) leaves the eigenvectors
/// unchanged, so a joint perturbation says nothing about DNW sensitivity.
pub fn one_at_a_time(case: &NetworkCase, parameter: Parameter, epsilon: f64) -> Result<SensitivityReport> {
    one_at_a_time_with(case, parameter, epsilon, PerturbationMode::Relative)
}

/// [`one_at_a_time`] with an explicit perturbation mode.
pub fn one_at_a_time_with(
    case: &NetworkCase,
    parameter: Parameter,
    epsilon: f64,
    mode: PerturbationMode,
) -> Result<SensitivityReport> {
    let es = Operator::Merw.eigensystem(&reduce(case)?)?;
    let n = es.len();
    let mut lambda_sum = DVector::zeros(n);
    let mut u1_sum = DMatrix::zeros(n, n);
    let mut per_target = Vec::new();
    for bus in case.generator_buses() {
        let spec = PerturbationSpec::relative(parameter, epsilon, Targets::Buses(vec![bus])).with_mode(mode);
        let a1 = perturbation_matrix(case, &spec, Operator::Merw)?;
        let fo = first_order_eigs(&es, &a1)?;
        per_target.push((bus, u1var_metric(&es, &fo)?));
        lambda_sum += &fo.lambda1;
        u1_sum += &fo.u1;
    }
    let count = per_target.len() as f64;
    let u1var = per_target.iter().map(|(_, v)| v).sum::<f64>() / count;
    Ok(SensitivityReport {
        parameter,
        epsilon,
        targets: "each_generator".into(),
        lambda1: (lambda_sum / count).iter().copied().collect(),
        u1: u1_sum / count,
        u1var,
        per_target,
    })
}
