//! Inertia zoning: per-bus features from slow-mode eigenvectors and DNW,
//! farthest-point initialization with automatic zone count, DNW-weighted
//! kmeans, and the spatial equivalent points and distances of the zones.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::BusId;
use crate::spectral::{DnwVector, EigenSystem, PartitionedLaplacian};

/// Eigenvalues below this fraction of the spectral radius count as the
/// rigid-body mode.
pub const RIGID_MODE_TOL: f64 = 1e-8;
/// Columns whose spread is below this (relative) collapse to 0.5.
const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    /// `N x (r + 1)`: r slow-mode columns then the DNW column, each in [0, 1].
    pub data: DMatrix<f64>,
    /// Bus id of each row.
    pub bus_order: Vec<BusId>,
    pub r: usize,
}

impl FeatureMatrix {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.row_iter().map(|row| row.iter().copied().collect()).collect()
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }
}

/// Select the `r` slowest modes (optionally keeping the rigid-body mode) and
/// assemble the normalized feature matrix over all buses.
pub fn build_features(
    es: &EigenSystem,
    pl: &PartitionedLaplacian,
    dnw: &DnwVector,
    r: usize,
    include_rigid: bool,
) -> Result<FeatureMatrix> {
    let ng = es.len();
    let radius = es.eigenvalues.amax();
    let modes: Vec<usize> =
        (0..ng).filter(|&j| include_rigid || es.eigenvalues[j].abs() >= RIGID_MODE_TOL * radius).collect();
    if r == 0 || r > modes.len() {
        return Err(Error::ModeCount { r, max: modes.len() });
    }

    let ext = pl.load_extension()?;
    let bus_order = pl.bus_order();
    let n = bus_order.len();
    let nk = ext.nrows();
    let mut data = DMatrix::zeros(n, r + 1);
    for (col, &j) in modes.iter().take(r).enumerate() {
        let mut u = es.right.column(j).into_owned();
        let lead = u.iamax();
        if u[lead] < 0.0 {
            u = -u;
        }
        let loads = &ext * &u;
        data.view_mut((0, col), (ng, 1)).copy_from(&u);
        data.view_mut((ng, col), (nk, 1)).copy_from(&loads);
    }
    if dnw.all_weights.len() != n {
        return Err(Error::invalid(
            "dnw",
            format!("expected {n} nodal weights, got {}", dnw.all_weights.len()),
        ));
    }
    for (i, bus) in bus_order.iter().enumerate() {
        data[(i, r)] = dnw.weight(*bus).ok_or(Error::UnknownBus(*bus))?;
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features", "non-finite entry"));
    }
    for mut column in data.column_iter_mut() {
        normalize_column(column.as_mut_slice());
    }
    Ok(FeatureMatrix { data, bus_order, r })
}

fn normalize_column(col: &mut [f64]) {
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = min.abs().max(max.abs()).max(f64::MIN_POSITIVE);
    if max - min <= DEGENERATE_SPREAD * scale {
        col.iter_mut().for_each(|v| *v = 0.5);
    } else {
        col.iter_mut().for_each(|v| *v = (*v - min) / (max - min));
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Row indices ascending by bus id.
fn canonical_order(buses: &[BusId]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..buses.len()).collect();
    idx.sort_by_key(|&i| buses[i]);
    idx
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoK {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Bus id of the data row each centroid was taken from.
    pub centroid_buses: Vec<BusId>,
    /// `S_i`: largest distance from a row to its nearest centroid after
    /// `i` centroids.
    pub spreads: Vec<f64>,
}

/// Farthest-point seeding that stops once adding a centroid no longer
/// shrinks the spread by at least `tau` (relative).
pub fn auto_k_init(fm: &FeatureMatrix, tau: f64, seed: u64) -> Result<AutoK> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be positive, got {tau}")));
    }
    if fm.is_empty() {
        return Err(Error::invalid("features", "no rows"));
    }
    let rows = fm.rows();
    let order = canonical_order(&fm.bus_order);
    let n = rows.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = order[rng.random_range(0..n)];
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = rows.iter().map(|x| dist(x, &rows[first])).collect();
    let spread = |d: &[f64]| d.iter().copied().fold(0.0, f64::max);
    let mut spreads = vec![spread(&nearest)];

    while chosen.len() < n && *spreads.last().unwrap() > 0.0 {
        let mut far = order[0];
        for &i in &order {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        chosen.push(far);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist(&rows[i], &rows[far]));
        }
        spreads.push(spread(&nearest));
        let prev = spreads[spreads.len() - 2];
        let cur = spreads[spreads.len() - 1];
        if (prev - cur) / prev < tau {
            break;
        }
    }

    Ok(AutoK {
        k: chosen.len(),
        centroids: chosen.iter().map(|&i| rows[i].clone()).collect(),
        centroid_buses: chosen.iter().map(|&i| fm.bus_order[i]).collect(),
        spreads,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansOutcome {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Weighted within-cluster squared distance after each update.
    pub cost_history: Vec<f64>,
}

impl KMeansOutcome {
    pub fn cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(0.0)
    }
}

/// Weighted within-cluster cost `sum_i w_i |x_i - c_{z_i}|^2`.
pub fn weighted_cost(
    points: &[Vec<f64>],
    weights: &[f64],
    assignment: &[usize],
    centroids: &[Vec<f64>],
) -> f64 {
    points.iter().zip(weights).zip(assignment).map(|((x, w), &z)| w * sq_dist(x, &centroids[z])).sum()
}

/// Weighted mean of each cluster's members.
pub fn weighted_means(
    points: &[Vec<f64>],
    weights: &[f64],
    assignment: &[usize],
    k: usize,
    previous: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut mass = vec![0.0; k];
    for ((x, &w), &z) in points.iter().zip(weights).zip(assignment) {
        mass[z] += w;
        for (s, v) in sums[z].iter_mut().zip(x) {
            *s += w * v;
        }
    }
    sums.into_iter()
        .zip(mass)
        .zip(previous)
        .map(|((s, m), prev)| if m > 0.0 { s.into_iter().map(|v| v / m).collect() } else { prev.clone() })
        .collect()
}

fn nearest_assignment(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, cent) in centroids.iter().enumerate() {
                let d = sq_dist(x, cent);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Give each empty cluster the row farthest from its own centroid, taken
/// from clusters that can spare one.
fn repair_empty(points: &[Vec<f64>], centroids: &mut [Vec<f64>], assignment: &mut [usize]) {
    let k = centroids.len();
    for c in 0..k {
        let mut sizes = vec![0usize; k];
        assignment.iter().for_each(|&z| sizes[z] += 1);
        if sizes[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in points.iter().enumerate() {
            let z = assignment[i];
            if sizes[z] < 2 {
                continue;
            }
            let d = sq_dist(x, &centroids[z]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            assignment[i] = c;
            centroids[c] = points[i].clone();
        }
    }
}

/// Single-point moves that lower the weighted cost with centroids
/// recomputed. Returns whether any move was made.
fn refine_single_moves(
    points: &[Vec<f64>],
    weights: &[f64],
    assignment: &mut [usize],
    centroids: &mut Vec<Vec<f64>>,
) -> bool {
    let k = centroids.len();
    let mut moved = false;
    for i in 0..points.len() {
        let mut mass = vec![0.0; k];
        let mut sizes = vec![0usize; k];
        for (&z, &w) in assignment.iter().zip(weights) {
            mass[z] += w;
            sizes[z] += 1;
        }
        let from = assignment[i];
        if sizes[from] < 2 {
            continue;
        }
        let w = weights[i];
        let cost = weighted_cost(points, weights, assignment, centroids);
        let removal = w * mass[from] / (mass[from] - w) * sq_dist(&points[i], &centroids[from]);
        let mut best: Option<(usize, f64)> = None;
        for to in (0..k).filter(|&c| c != from) {
            let gain = w * mass[to] / (mass[to] + w) * sq_dist(&points[i], &centroids[to]) - removal;
            if best.is_none_or(|(_, g)| gain < g) {
                best = Some((to, gain));
            }
        }
        if let Some((to, gain)) = best {
            if gain < -1e-12 * cost {
                assignment[i] = to;
                *centroids = weighted_means(points, weights, assignment, k, centroids);
                moved = true;
            }
        }
    }
    moved
}

/// Lloyd iterations with weighted centroids, followed by single-point
/// improvement passes until neither changes the assignment. Input weights
/// are rescaled so the largest is 1.
pub fn weighted_kmeans_points(
    points: &[Vec<f64>],
    weights: &[f64],
    init: &[Vec<f64>],
    max_iter: usize,
) -> Result<KMeansOutcome> {
    if points.len() != weights.len() {
        return Err(Error::invalid("weights", "length differs from point count"));
    }
    if init.is_empty() {
        return Err(Error::invalid("init", "no initial centroids"));
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!("weights[{i}]"), format!("must be positive, got {w}")));
    }
    let top = weights.iter().copied().fold(0.0, f64::max);
    let weights: Vec<f64> = weights.iter().map(|w| w / top).collect();
    let k = init.len();

    let mut centroids = init.to_vec();
    let mut assignment = nearest_assignment(points, &centroids);
    repair_empty(points, &mut centroids, &mut assignment);
    centroids = weighted_means(points, &weights, &assignment, k, &centroids);
    let mut cost_history = vec![weighted_cost(points, &weights, &assignment, &centroids)];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut next = nearest_assignment(points, &centroids);
        repair_empty(points, &mut centroids, &mut next);
        if next == assignment {
            let moved = refine_single_moves(points, &weights, &mut assignment, &mut centroids);
            cost_history.push(weighted_cost(points, &weights, &assignment, &centroids));
            if !moved {
                converged = true;
                break;
            }
            continue;
        }
        assignment = next;
        centroids = weighted_means(points, &weights, &assignment, k, &centroids);
        cost_history.push(weighted_cost(points, &weights, &assignment, &centroids));
    }

    Ok(KMeansOutcome { assignment, centroids, iterations, converged, cost_history })
}

/// Unweighted kmeans with the same iteration scheme.
pub fn kmeans_points(points: &[Vec<f64>], init: &[Vec<f64>], max_iter: usize) -> Result<KMeansOutcome> {
    weighted_kmeans_points(points, &vec![1.0; points.len()], init, max_iter)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZoningResult {
    pub k: usize,
    /// Bus ids ascending; `assignment[i]` is the zone of `bus_order[i]`.
    pub bus_order: Vec<BusId>,
    pub assignment: Vec<usize>,
    /// Spatial equivalent point (weighted centroid) of each zone.
    pub seps: Vec<Vec<f64>>,
    pub system_sep: Vec<f64>,
    pub sed: Vec<f64>,
    /// Summed nodal weight per zone.
    pub zone_weight: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ZoningResult {
    pub fn zone_of(&self, bus: BusId) -> Option<usize> {
        self.bus_order.iter().position(|&b| b == bus).map(|i| self.assignment[i])
    }

    pub fn members(&self, zone: usize) -> Vec<BusId> {
        self.bus_order.iter().zip(&self.assignment).filter(|(_, &z)| z == zone).map(|(&b, _)| b).collect()
    }
}

/// Cluster buses with weights `1 / DNW`, label zones by their lowest bus id,
/// and fill in SEPs, the system SEP and SEDs.
pub fn weighted_kmeans(
    fm: &FeatureMatrix,
    init: &[Vec<f64>],
    dnw: &DnwVector,
    max_iter: usize,
) -> Result<ZoningResult> {
    let order = canonical_order(&fm.bus_order);
    let rows = fm.rows();
    let bus_order: Vec<BusId> = order.iter().map(|&i| fm.bus_order[i]).collect();
    let points: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let mut weights = Vec::with_capacity(points.len());
    for &bus in &bus_order {
        let pi = dnw.weight(bus).ok_or(Error::UnknownBus(bus))?;
        if !(pi.is_finite() && pi > 0.0) {
            return Err(Error::NonPositiveWeight { bus, value: pi });
        }
        weights.push(1.0 / pi);
    }

    let out = weighted_kmeans_points(&points, &weights, init, max_iter)?;

    // Relabel by first appearance in bus-id order; drop zones left empty.
    let mut relabel = vec![usize::MAX; init.len()];
    let mut next = 0;
    for &z in &out.assignment {
        if relabel[z] == usize::MAX {
            relabel[z] = next;
            next += 1;
        }
    }
    let assignment: Vec<usize> = out.assignment.iter().map(|&z| relabel[z]).collect();
    let mut seps = vec![Vec::new(); next];
    for (old, &new) in relabel.iter().enumerate() {
        if new != usize::MAX {
            seps[new] = out.centroids[old].clone();
        }
    }

    let zr = ZoningResult {
        k: next,
        bus_order,
        assignment,
        seps,
        system_sep: Vec::new(),
        sed: Vec::new(),
        zone_weight: Vec::new(),
        iterations: out.iterations,
        converged: out.converged,
    };
    system_sep_and_sed(zr, dnw)
}

/// Zone weights, the zone-weighted system SEP, and SED of every zone.
pub fn system_sep_and_sed(mut zr: ZoningResult, dnw: &DnwVector) -> Result<ZoningResult> {
    let mut zone_weight = vec![0.0; zr.k];
    for (&bus, &z) in zr.bus_order.iter().zip(&zr.assignment) {
        zone_weight[z] += dnw.weight(bus).ok_or(Error::UnknownBus(bus))?;
    }
    zr.zone_weight = zone_weight;
    let (system_sep, sed) = sep_distances(&zr.seps, &zr.zone_weight);
    zr.system_sep = system_sep;
    zr.sed = sed;
    Ok(zr)
}

/// System SEP as the weighted mean of zone SEPs, and normalized distances.
pub fn sep_distances(seps: &[Vec<f64>], zone_weight: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = seps.first().map_or(0, Vec::len);
    let total: f64 = zone_weight.iter().sum();
    let mut center = vec![0.0; dim];
    for (sep, &w) in seps.iter().zip(zone_weight) {
        for (c, v) in center.iter_mut().zip(sep) {
            *c += w * v;
        }
    }
    center.iter_mut().for_each(|c| *c /= total);
    if seps.len() < 2 {
        return (center, vec![0.0; seps.len()]);
    }
    let d: Vec<f64> = seps.iter().map(|s| dist(s, &center)).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let sed = if max > 0.0 { d.iter().map(|v| v / max).collect() } else { vec![0.0; d.len()] };
    (center, sed)
}
