//! Linearized multi-machine swing dynamics on the reduced network:
//! `d(dw)/dt = -lm_red dd - damping dw + p(t) / m`, `d(dd)/dt = dw`,
//! integrated with classical RK4.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BusId;
use crate::spectral::{eigensystem, ReducedDynamics};
use crate::zoning::ZoningResult;

/// Post-disturbance window required for coherence scoring (s).
pub const MIN_COHERENCE_WINDOW: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    AngleImpulse,
    PowerStep,
}

impl fmt::Display for DisturbanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisturbanceKind::AngleImpulse => "angle_impulse",
            DisturbanceKind::PowerStep => "power_step",
        })
    }
}

impl FromStr for DisturbanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle_impulse" => Ok(DisturbanceKind::AngleImpulse),
            "power_step" => Ok(DisturbanceKind::PowerStep),
            other => Err(Error::Disturbance(format!("unknown kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub bus_id: BusId,
    pub kind: DisturbanceKind,
    /// Per-unit power (power_step) or angle in rad (angle_impulse).
    pub size: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.size.is_finite() && self.size != 0.0) {
            return Err(Error::Disturbance(format!("size must be nonzero, got {}", self.size)));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start < self.t_end) {
            return Err(Error::Disturbance(format!(
                "need t_start < t_end, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        if self.t_start < 0.0 {
            return Err(Error::Disturbance("t_start must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Uniform speed damping (1/s).
    pub damping: f64,
    /// Keep every n-th step in the trajectory.
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 1e-3, horizon: 10.0, damping: 0.0, record_every: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub gen_order: Vec<BusId>,
    pub times: Vec<f64>,
    /// Angle deviations, one trace per generator.
    pub delta: Vec<Vec<f64>>,
    /// Speed deviations, one trace per generator.
    pub omega: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_at(&self, step: usize) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_iterator(self.delta.len(), self.delta.iter().map(|t| t[step])),
            DVector::from_iterator(self.omega.len(), self.omega.iter().map(|t| t[step])),
        )
    }
}

/// Largest stable RK4 step, `2 / sqrt(lambda_max)`; infinite with no
/// restoring torque.
pub fn stability_limit(rd: &ReducedDynamics) -> Result<f64> {
    let es = eigensystem(rd)?;
    let lambda_max = es.eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(if lambda_max > 0.0 { 2.0 / lambda_max.sqrt() } else { f64::INFINITY })
}

/// `sum m_i dw_i^2 / 2 + dd' l_red dd / 2`.
pub fn energy(rd: &ReducedDynamics, delta: &DVector<f64>, omega: &DVector<f64>) -> f64 {
    let kinetic: f64 = omega.iter().zip(rd.m_diag.iter()).map(|(w, m)| 0.5 * m * w * w).sum();
    kinetic + 0.5 * delta.dot(&(&rd.l_red * delta))
}

struct Forcing {
    per_mass: DVector<f64>,
    t_start: f64,
    t_end: f64,
}

impl Forcing {
    /// Held constant over a step, keyed on the step midpoint.
    fn over(&self, t: f64, h: f64) -> Option<&DVector<f64>> {
        let mid = t + h / 2.0;
        (mid >= self.t_start && mid < self.t_end).then_some(&self.per_mass)
    }
}

fn integrate(
    rd: &ReducedDynamics,
    cfg: &SimConfig,
    mut delta: DVector<f64>,
    mut omega: DVector<f64>,
    forcing: Option<&Forcing>,
    impulse: Option<(usize, f64, f64)>,
) -> Result<Trajectory> {
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::Disturbance(format!("dt must be positive, got {}", cfg.dt)));
    }
    let limit = stability_limit(rd)?;
    if cfg.dt >= limit {
        return Err(Error::UnstableStep { dt: cfg.dt, limit });
    }
    let n = rd.n_gen();
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let stride = cfg.record_every.max(1);
    let deriv = |p: Option<&DVector<f64>>, d: &DVector<f64>, w: &DVector<f64>| {
        let mut dw = -(&rd.lm_red * d) - w * cfg.damping;
        if let Some(p) = p {
            dw += p;
        }
        (w.clone(), dw)
    };

    let mut tr = Trajectory {
        gen_order: rd.gen_order.clone(),
        times: Vec::with_capacity(steps / stride + 1),
        delta: vec![Vec::with_capacity(steps / stride + 1); n],
        omega: vec![Vec::with_capacity(steps / stride + 1); n],
    };
    let mut impulse_pending = impulse;
    let h = cfg.dt;
    for step in 0..=steps {
        let t = step as f64 * h;
        if let Some((i, size, t0)) = impulse_pending {
            if t + 1e-12 >= t0 {
                delta[i] = size;
                impulse_pending = None;
            }
        }
        if step % stride == 0 || step == steps {
            tr.times.push(t);
            for i in 0..n {
                tr.delta[i].push(delta[i]);
                tr.omega[i].push(omega[i]);
            }
        }
        if step == steps {
            break;
        }
        let p = forcing.and_then(|f| f.over(t, h));
        let (k1d, k1w) = deriv(p, &delta, &omega);
        let (k2d, k2w) = deriv(p, &(&delta + &k1d * (h / 2.0)), &(&omega + &k1w * (h / 2.0)));
        let (k3d, k3w) = deriv(p, &(&delta + &k2d * (h / 2.0)), &(&omega + &k2w * (h / 2.0)));
        let (k4d, k4w) = deriv(p, &(&delta + &k3d * h), &(&omega + &k3w * h));
        delta += (k1d + k2d * 2.0 + k3d * 2.0 + k4d) * (h / 6.0);
        omega += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (h / 6.0);
    }
    Ok(tr)
}

/// Free response from an initial state.
pub fn simulate_free(
    rd: &ReducedDynamics,
    delta0: DVector<f64>,
    omega0: DVector<f64>,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    integrate(rd, cfg, delta0, omega0, None, None)
}

/// Response to a disturbance from rest. Power steps at load buses act on
/// the generators through the Kron distribution factors.
pub fn simulate(rd: &ReducedDynamics, d: &DisturbanceSpec, cfg: &SimConfig) -> Result<Trajectory> {
    d.validate()?;
    if cfg.horizon < d.t_end {
        return Err(Error::Disturbance(format!(
            "horizon {} s ends before the disturbance ({} s)",
            cfg.horizon, d.t_end
        )));
    }
    let n = rd.n_gen();
    let zero = DVector::zeros(n);
    match d.kind {
        DisturbanceKind::PowerStep => {
            let factors = rd.injection_factors(d.bus_id).ok_or(Error::UnknownBus(d.bus_id))?;
            let forcing = Forcing {
                per_mass: factors.component_div(&rd.m_diag) * d.size,
                t_start: d.t_start,
                t_end: d.t_end,
            };
            integrate(rd, cfg, zero.clone(), zero, Some(&forcing), None)
        }
        DisturbanceKind::AngleImpulse => {
            let i = rd.gen_order.iter().position(|&b| b == d.bus_id).ok_or_else(|| {
                Error::Disturbance(format!("angle impulse needs a generator bus, got {}", d.bus_id))
            })?;
            integrate(rd, cfg, zero.clone(), zero, None, Some((i, d.size, d.t_start)))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CoherenceScore {
    /// Mean Pearson correlation of speed traces within zones.
    pub intra: Option<f64>,
    /// Mean Pearson correlation across zones.
    pub inter: Option<f64>,
    pub intra_pairs: usize,
    pub inter_pairs: usize,
    /// Zones with fewer than two scored generators.
    pub singleton_zones: Vec<usize>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let denom = (saa * sbb).sqrt();
    (denom > 0.0).then(|| sab / denom)
}

/// Mean speed correlation of generator pairs in the same zone versus
/// different zones over `t >= window_start`, excluding the disturbed bus.
pub fn coherence_score(
    tr: &Trajectory,
    zr: &ZoningResult,
    disturbed: Option<BusId>,
    window_start: f64,
) -> Result<CoherenceScore> {
    let end = tr.times.last().copied().unwrap_or(0.0);
    if end - window_start < MIN_COHERENCE_WINDOW - 1e-9 {
        return Err(Error::Disturbance(format!(
            "coherence needs at least {MIN_COHERENCE_WINDOW} s after the disturbance, have {}",
            end - window_start
        )));
    }
    let first = tr.times.partition_point(|&t| t < window_start - 1e-12);
    let scored: Vec<(usize, usize)> = tr
        .gen_order
        .iter()
        .enumerate()
        .filter(|(_, &b)| Some(b) != disturbed)
        .map(|(i, &b)| zr.zone_of(b).map(|z| (i, z)).ok_or(Error::UnknownBus(b)))
        .collect::<Result<_>>()?;

    let mut score = CoherenceScore::default();
    let (mut intra_sum, mut inter_sum) = (0.0, 0.0);
    for (a, &(i, zi)) in scored.iter().enumerate() {
        for &(j, zj) in &scored[a + 1..] {
            let Some(r) = pearson(&tr.omega[i][first..], &tr.omega[j][first..]) else {
                continue;
            };
            if zi == zj {
                intra_sum += r;
                score.intra_pairs += 1;
            } else {
                inter_sum += r;
                score.inter_pairs += 1;
            }
        }
    }
    score.intra = (score.intra_pairs > 0).then(|| intra_sum / score.intra_pairs as f64);
    score.inter = (score.inter_pairs > 0).then(|| inter_sum / score.inter_pairs as f64);
    for z in 0..zr.k {
        if scored.iter().filter(|(_, zz)| *zz == z).count() < 2 {
            score.singleton_zones.push(z);
        }
    }
    Ok(score)
}
