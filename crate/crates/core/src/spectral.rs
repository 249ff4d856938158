//! Kron reduction of the synchronizing-power Laplacian, eigensystems of the
//! reduced generator dynamics, and Dynamic Nodal Weights from a maximal
//! entropy random walk.
//!
//! The MERW operator is the element-wise absolute value of `lm_red`: the
//! reduced dynamics matrix has Laplacian sign structure, and the random walk
//! needs a non-negative irreducible matrix for a positive Perron pair.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::network::{connected_components, BusId, GeneratorRecord};

/// Name recorded in output metadata for the operator the random walk runs on.
pub const MERW_OPERATOR: &str = "abs_lm_red";

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 10_000;

/// Full Laplacian ordered generators-first, with its four blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedLaplacian {
    full: DMatrix<f64>,
    p_gg: DMatrix<f64>,
    p_gk: DMatrix<f64>,
    p_kg: DMatrix<f64>,
    p_kk: DMatrix<f64>,
    gen_order: Vec<BusId>,
    load_order: Vec<BusId>,
}

impl PartitionedLaplacian {
    pub fn from_full(full: DMatrix<f64>, gen_order: Vec<BusId>, load_order: Vec<BusId>) -> Self {
        let ng = gen_order.len();
        let nk = load_order.len();
        assert_eq!(full.nrows(), ng + nk);
        assert_eq!(full.ncols(), ng + nk);
        PartitionedLaplacian {
            p_gg: full.view((0, 0), (ng, ng)).into_owned(),
            p_gk: full.view((0, ng), (ng, nk)).into_owned(),
            p_kg: full.view((ng, 0), (nk, ng)).into_owned(),
            p_kk: full.view((ng, ng), (nk, nk)).into_owned(),
            full,
            gen_order,
            load_order,
        }
    }

    pub fn full(&self) -> &DMatrix<f64> {
        &self.full
    }
    pub fn p_gg(&self) -> &DMatrix<f64> {
        &self.p_gg
    }
    pub fn p_gk(&self) -> &DMatrix<f64> {
        &self.p_gk
    }
    pub fn p_kg(&self) -> &DMatrix<f64> {
        &self.p_kg
    }
    pub fn p_kk(&self) -> &DMatrix<f64> {
        &self.p_kk
    }
    pub fn gen_order(&self) -> &[BusId] {
        &self.gen_order
    }
    pub fn load_order(&self) -> &[BusId] {
        &self.load_order
    }

    /// All buses, generators first.
    pub fn bus_order(&self) -> Vec<BusId> {
        self.gen_order.iter().chain(self.load_order.iter()).copied().collect()
    }

    /// Load-bus response to generator-bus quantities: `-P_kk^{-1} P_kG`,
    /// computed by factorization. Shape `N_k x N_g`.
    pub fn load_extension(&self) -> Result<DMatrix<f64>> {
        let nk = self.load_order.len();
        let ng = self.gen_order.len();
        if nk == 0 {
            return Ok(DMatrix::zeros(0, ng));
        }
        if let Some(island) = self.isolated_loads() {
            return Err(Error::SingularLoadBlock { island });
        }
        let lu = self.p_kk.clone().lu();
        let x = lu
            .solve(&self.p_kg)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularLoadBlock { island: self.load_order.clone() })?;
        Ok(-x)
    }

    /// Load buses that cannot reach any generator bus through the network.
    fn isolated_loads(&self) -> Option<Vec<BusId>> {
        let nk = self.load_order.len();
        let mut edges = Vec::new();
        for i in 0..nk {
            for j in (i + 1)..nk {
                if self.p_kk[(i, j)] != 0.0 {
                    edges.push((self.load_order[i], self.load_order[j]));
                }
            }
        }
        let pos = |b: BusId| self.load_order.iter().position(|&x| x == b).unwrap();
        let mut island = Vec::new();
        for comp in connected_components(&self.load_order, &edges) {
            let touches_gen = comp.iter().any(|&b| self.p_kg.row(pos(b)).iter().any(|&v| v != 0.0));
            if !touches_gen {
                island.extend(comp);
            }
        }
        if island.is_empty() {
            None
        } else {
            island.sort_unstable();
            Some(island)
        }
    }
}

/// Generator-only dynamics after eliminating the load buses.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDynamics {
    pub gen_order: Vec<BusId>,
    pub load_order: Vec<BusId>,
    /// Schur complement `P_GG - P_Gk P_kk^{-1} P_kG`.
    pub l_red: DMatrix<f64>,
    /// `M^{-1} l_red`.
    pub lm_red: DMatrix<f64>,
    /// `M_i = 2 H_i / (2 pi f_n)`.
    pub m_diag: DVector<f64>,
    /// `-P_kk^{-1} P_kG`, shape `N_k x N_g`.
    pub load_extension: DMatrix<f64>,
}

impl ReducedDynamics {
    /// Build from a reduced Laplacian directly (no load buses).
    pub fn from_parts(gen_order: Vec<BusId>, l_red: DMatrix<f64>, m_diag: DVector<f64>) -> Self {
        let ng = gen_order.len();
        let lm_red = scale_rows(&l_red, &m_diag);
        ReducedDynamics {
            gen_order,
            load_order: Vec::new(),
            l_red,
            lm_red,
            m_diag,
            load_extension: DMatrix::zeros(0, ng),
        }
    }

    pub fn n_gen(&self) -> usize {
        self.gen_order.len()
    }

    /// Element-wise `|lm_red|`, the MERW operator.
    pub fn merw_operator(&self) -> DMatrix<f64> {
        self.lm_red.abs()
    }

    /// Generator-bus injections equivalent to a unit injection at `bus`.
    pub fn injection_factors(&self, bus: BusId) -> Option<DVector<f64>> {
        if let Some(i) = self.gen_order.iter().position(|&b| b == bus) {
            let mut v = DVector::zeros(self.n_gen());
            v[i] = 1.0;
            return Some(v);
        }
        let k = self.load_order.iter().position(|&b| b == bus)?;
        Some(self.load_extension.row(k).transpose())
    }
}

fn scale_rows(l: &DMatrix<f64>, m: &DVector<f64>) -> DMatrix<f64> {
    let mut out = l.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row /= m[i];
    }
    out
}

/// Eliminate the load buses and scale by the inverse inertia matrix.
pub fn kron_reduce(
    pl: &PartitionedLaplacian,
    gens: &[GeneratorRecord],
    nominal_freq: f64,
) -> Result<ReducedDynamics> {
    let ext = pl.load_extension()?;
    let l_red = pl.p_gg() + pl.p_gk() * &ext;
    let mut m = DVector::zeros(pl.gen_order().len());
    for (i, bus) in pl.gen_order().iter().enumerate() {
        let g = gens.iter().find(|g| g.bus_id == *bus).ok_or(Error::NoGenerator(*bus))?;
        m[i] = 2.0 * g.inertia_h / (2.0 * std::f64::consts::PI * nominal_freq);
    }
    let lm_red = scale_rows(&l_red, &m);
    Ok(ReducedDynamics {
        gen_order: pl.gen_order().to_vec(),
        load_order: pl.load_order().to_vec(),
        l_red,
        lm_red,
        m_diag: m,
        load_extension: ext,
    })
}

/// Real eigendecomposition of a matrix similar to a symmetric one.
/// Eigenvalues ascend; right vectors are unit columns with their
/// largest-magnitude entry positive; `left * right = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    /// Columns are right eigenvectors (U).
    pub right: DMatrix<f64>,
    /// Rows are left eigenvectors (W*).
    pub left: DMatrix<f64>,
}

impl EigenSystem {
    /// Eigensystem of `diag(m)^{-1} l` for symmetric `l` and positive `m`.
    pub fn of_scaled(l: &DMatrix<f64>, m: &DVector<f64>) -> Result<Self> {
        let n = l.nrows();
        let sqrt_m = m.map(f64::sqrt);
        let mut s = l.clone();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] /= sqrt_m[i] * sqrt_m[j];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
            Error::NoConvergence { what: "symmetric eigensolver", iterations: 10_000, residual: s.norm() }
        })?;

        let scale = eig.eigenvalues.amax().max(1.0);
        let argmax = |j: usize| eig.eigenvectors.column(j).iamax();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
            if (la - lb).abs() <= 1e-12 * scale {
                argmax(a).cmp(&argmax(b))
            } else {
                la.total_cmp(&lb)
            }
        });

        let mut values = DVector::zeros(n);
        let mut right = DMatrix::zeros(n, n);
        let mut left = DMatrix::zeros(n, n);
        for (col, &j) in idx.iter().enumerate() {
            values[col] = eig.eigenvalues[j];
            let v = eig.eigenvectors.column(j);
            let mut u = v.component_div(&sqrt_m);
            let norm = u.norm();
            u /= norm;
            let sign = if u[u.iamax()] < 0.0 { -1.0 } else { 1.0 };
            u *= sign;
            right.set_column(col, &u);
            let w = v.component_mul(&sqrt_m) * (sign * norm);
            left.set_row(col, &w.transpose());
        }
        Ok(EigenSystem { eigenvalues: values, right, left })
    }

    pub fn from_symmetric(a: &DMatrix<f64>) -> Result<Self> {
        Self::of_scaled(a, &DVector::from_element(a.nrows(), 1.0))
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `|A u - lambda u|` over all pairs.
    pub fn max_residual(&self, a: &DMatrix<f64>) -> f64 {
        (0..self.len())
            .map(|j| {
                let u = self.right.column(j);
                (a * u - u * self.eigenvalues[j]).amax()
            })
            .fold(0.0, f64::max)
    }
}

/// Eigensystem of `lm_red` via the symmetric similarity transform.
pub fn eigensystem(rd: &ReducedDynamics) -> Result<EigenSystem> {
    EigenSystem::of_scaled(&rd.l_red, &rd.m_diag)
}

/// Eigensystem of the MERW operator `|lm_red|`.
pub fn merw_eigensystem(rd: &ReducedDynamics) -> Result<EigenSystem> {
    EigenSystem::of_scaled(&rd.l_red.abs(), &rd.m_diag)
}

/// Dynamic Nodal Weights. `all_weights` is index-aligned with `bus_order`
/// (generators first); before extension it covers generators only.
#[derive(Clone, Debug, PartialEq)]
pub struct DnwVector {
    pub gen_order: Vec<BusId>,
    pub bus_order: Vec<BusId>,
    pub gen_weights: DVector<f64>,
    pub all_weights: DVector<f64>,
    pub perron_value: f64,
    /// Right Perron vector, unit 2-norm, strictly positive.
    pub perron_vector: DVector<f64>,
    /// Left Perron vector, scaled so `left . right = 1`.
    pub left_vector: DVector<f64>,
    /// MERW transition matrix `P_ij = A_ij u_j / (lambda u_i)`.
    pub transition: DMatrix<f64>,
}

impl DnwVector {
    pub fn weight(&self, bus: BusId) -> Option<f64> {
        self.bus_order.iter().position(|&b| b == bus).map(|i| self.all_weights[i])
    }
}

/// Perron pair of a non-negative matrix by shifted power iteration,
/// polished with shifted inverse iteration.
pub fn perron_pair(a: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = a.nrows();
    // Gershgorin lower bound; shifting it to zero keeps the spectrum of the
    // iterated matrix non-negative so the Perron root strictly dominates.
    let lower = (0..n)
        .map(|i| a[(i, i)] - (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let shift = (-lower).max(0.0);
    let shifted = a + DMatrix::identity(n, n) * shift;

    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut delta = f64::INFINITY;
    let mut converged = false;
    for _ in 0..PERRON_MAX_ITER {
        let mut y = &shifted * &x;
        let norm = y.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        y /= norm;
        delta = (&y - &x).amax();
        x = y;
        if delta < PERRON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "Perron power iteration",
            iterations: PERRON_MAX_ITER,
            residual: delta,
        });
    }

    let rayleigh = |x: &DVector<f64>| x.dot(&(a * x)) / x.dot(x);
    let lambda = rayleigh(&x);
    let sigma = lambda * (1.0 + 1e-6) + 1e-300;
    let lu = (a - DMatrix::identity(n, n) * sigma).lu();
    for _ in 0..3 {
        let Some(mut y) = lu.solve(&x) else { break };
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        y /= norm;
        if y.sum() < 0.0 {
            y = -y;
        }
        x = y;
    }
    if x[0] < 0.0 {
        x = -x;
    }
    Ok((rayleigh(&x), x))
}

pub(crate) fn irreducibility_check(a: &DMatrix<f64>, order: &[BusId]) -> Result<()> {
    let n = a.nrows();
    let tiny = a.amax() * 1e-14;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (a[(i, j)] > tiny || a[(j, i)] > tiny) {
                edges.push((order[i], order[j]));
            }
        }
    }
    let components = connected_components(order, &edges);
    if components.len() > 1 {
        return Err(Error::Reducible { components });
    }
    Ok(())
}

/// Generator-bus DNW from the maximal entropy random walk on `|lm_red|`.
pub fn merw_dnw(rd: &ReducedDynamics) -> Result<DnwVector> {
    let a = rd.merw_operator();
    irreducibility_check(&a, &rd.gen_order)?;

    let (_, u) = perron_pair(&a)?;
    let (_, mut w) = perron_pair(&a.transpose())?;
    let lambda = w.dot(&(&a * &u)) / w.dot(&u);
    w /= w.dot(&u);

    let n = a.nrows();
    let mut transition = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            transition[(i, j)] = a[(i, j)] * u[j] / (lambda * u[i]);
        }
    }
    let mut pi = u.component_mul(&w);
    pi /= pi.sum();

    Ok(DnwVector {
        gen_order: rd.gen_order.clone(),
        bus_order: rd.gen_order.clone(),
        gen_weights: pi.clone(),
        all_weights: pi,
        perron_value: lambda,
        perron_vector: u,
        left_vector: w,
        transition,
    })
}

/// Extend generator DNW to load buses through the network structure.
pub fn extend_dnw(dnw: &DnwVector, pl: &PartitionedLaplacian) -> Result<DnwVector> {
    let ext = pl.load_extension()?;
    let loads = &ext * &dnw.gen_weights;
    let ng = dnw.gen_weights.len();
    let mut all = DVector::zeros(ng + loads.len());
    all.rows_mut(0, ng).copy_from(&dnw.gen_weights);
    all.rows_mut(ng, loads.len()).copy_from(&loads);
    Ok(DnwVector { bus_order: pl.bus_order(), all_weights: all, ..dnw.clone() })
}
