//! Network case model: buses, branches, generators and the solved
//! pre-disturbance operating point, plus scenario overlays and assembly of
//! the synchronizing-power Laplacian.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PartitionedLaplacian;

pub type BusId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorTech {
    Synchronous,
    DfigWtg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusRecord {
    pub id: BusId,
    pub kind: BusKind,
    /// Internal EMF for generator buses, terminal voltage for load buses (p.u.).
    pub voltage_mag: f64,
    /// Pre-disturbance angle (rad).
    pub voltage_ang: f64,
    /// Active load at the bus (MW). Reporting only.
    pub load_mw: f64,
}

impl BusRecord {
    pub fn new(id: BusId, kind: BusKind, voltage_mag: f64, voltage_ang: f64) -> Self {
        BusRecord { id, kind, voltage_mag, voltage_ang, load_mw: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorRecord {
    pub bus_id: BusId,
    /// Inertia constant H (s).
    pub inertia_h: f64,
    pub rating: f64,
    pub tech: GeneratorTech,
}

impl GeneratorRecord {
    pub fn synchronous(bus_id: BusId, inertia_h: f64) -> Self {
        GeneratorRecord { bus_id, inertia_h, rating: 0.0, tech: GeneratorTech::Synchronous }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchRecord {
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Susceptance of the transfer admittance (p.u.).
    pub susceptance: f64,
}

impl BranchRecord {
    pub fn new(from_bus: BusId, to_bus: BusId, susceptance: f64) -> Self {
        BranchRecord { from_bus, to_bus, susceptance }
    }
}

/// A validated network case. Buses are kept sorted by id, branches are
/// normalized to `from_bus < to_bus` with parallel branches merged, and
/// generators are sorted by bus id.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCase {
    name: Option<String>,
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    generators: Vec<GeneratorRecord>,
    nominal_freq: f64,
    index: BTreeMap<BusId, usize>,
}

impl NetworkCase {
    pub fn new(
        buses: Vec<BusRecord>,
        branches: Vec<BranchRecord>,
        generators: Vec<GeneratorRecord>,
        nominal_freq: f64,
    ) -> Result<Self> {
        if !(nominal_freq.is_finite() && nominal_freq > 0.0) {
            return Err(Error::invalid("nominal_freq_hz", format!("must be positive, got {nominal_freq}")));
        }

        let mut index = BTreeMap::new();
        for (pos, bus) in buses.iter().enumerate() {
            let field = format!("buses[{pos}] (bus {})", bus.id);
            if index.insert(bus.id, pos).is_some() {
                return Err(Error::invalid(field, "duplicate bus id"));
            }
            if !(bus.voltage_mag.is_finite() && bus.voltage_mag > 0.0) {
                return Err(Error::invalid(
                    format!("{field}.v_mag_pu"),
                    format!("must be positive, got {}", bus.voltage_mag),
                ));
            }
            if !bus.voltage_ang.is_finite() {
                return Err(Error::invalid(format!("{field}.v_ang_rad"), "must be finite"));
            }
            if !bus.load_mw.is_finite() {
                return Err(Error::invalid(format!("{field}.p_load_mw"), "must be finite"));
            }
        }
        let mut buses = buses;
        buses.sort_by_key(|b| b.id);
        let index: BTreeMap<BusId, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();

        let mut merged: BTreeMap<(BusId, BusId), f64> = BTreeMap::new();
        for (pos, br) in branches.iter().enumerate() {
            let field = format!("branches[{pos}] ({}-{})", br.from_bus, br.to_bus);
            if br.from_bus == br.to_bus {
                return Err(Error::invalid(field, "from and to bus must differ"));
            }
            for end in [br.from_bus, br.to_bus] {
                if !index.contains_key(&end) {
                    return Err(Error::invalid(field, format!("unknown bus {end}")));
                }
            }
            if !(br.susceptance.is_finite() && br.susceptance != 0.0) {
                return Err(Error::invalid(
                    format!("{field}.b_pu"),
                    format!("must be finite and nonzero, got {}", br.susceptance),
                ));
            }
            let key = (br.from_bus.min(br.to_bus), br.from_bus.max(br.to_bus));
            *merged.entry(key).or_insert(0.0) += br.susceptance;
        }
        let mut normalized = Vec::with_capacity(merged.len());
        for ((a, b), susceptance) in merged {
            if susceptance == 0.0 {
                return Err(Error::invalid(
                    format!("branches {a}-{b}"),
                    "parallel branches sum to zero susceptance",
                ));
            }
            normalized.push(BranchRecord::new(a, b, susceptance));
        }

        let mut seen: BTreeMap<BusId, usize> = BTreeMap::new();
        for (pos, gen) in generators.iter().enumerate() {
            let field = format!("generators[{pos}] (bus {})", gen.bus_id);
            let Some(&bus_pos) = index.get(&gen.bus_id) else {
                return Err(Error::invalid(field, "unknown bus"));
            };
            if buses[bus_pos].kind != BusKind::Generator {
                return Err(Error::invalid(field, "bus is not of kind generator"));
            }
            if !(gen.inertia_h.is_finite() && gen.inertia_h > 0.0) {
                return Err(Error::invalid(
                    format!("{field}.h_s"),
                    format!("inertia constant must be positive, got {}", gen.inertia_h),
                ));
            }
            if seen.insert(gen.bus_id, pos).is_some() {
                return Err(Error::invalid(field, "bus has more than one generator record"));
            }
        }
        let gen_buses: Vec<BusId> =
            buses.iter().filter(|b| b.kind == BusKind::Generator).map(|b| b.id).collect();
        for id in &gen_buses {
            if !seen.contains_key(id) {
                return Err(Error::invalid(format!("bus {id}"), "generator bus has no generator record"));
            }
        }
        if gen_buses.len() < 2 {
            return Err(Error::invalid(
                "buses",
                format!("at least 2 generator buses required, found {}", gen_buses.len()),
            ));
        }
        let mut generators = generators;
        generators.sort_by_key(|g| g.bus_id);

        let ids: Vec<BusId> = buses.iter().map(|b| b.id).collect();
        let edges: Vec<(BusId, BusId)> = normalized.iter().map(|b| (b.from_bus, b.to_bus)).collect();
        let components = connected_components(&ids, &edges);
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }

        Ok(NetworkCase { name: None, buses, branches: normalized, generators, nominal_freq, index })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn buses(&self) -> &[BusRecord] {
        &self.buses
    }

    pub fn branches(&self) -> &[BranchRecord] {
        &self.branches
    }

    pub fn generators(&self) -> &[GeneratorRecord] {
        &self.generators
    }

    pub fn nominal_freq(&self) -> f64 {
        self.nominal_freq
    }

    pub fn bus(&self, id: BusId) -> Option<&BusRecord> {
        self.index.get(&id).map(|&i| &self.buses[i])
    }

    pub fn generator(&self, bus: BusId) -> Option<&GeneratorRecord> {
        self.generators.iter().find(|g| g.bus_id == bus)
    }

    pub fn generator_buses(&self) -> Vec<BusId> {
        self.buses_of(BusKind::Generator)
    }

    pub fn load_buses(&self) -> Vec<BusId> {
        self.buses_of(BusKind::Load)
    }

    fn buses_of(&self, kind: BusKind) -> Vec<BusId> {
        self.buses.iter().filter(|b| b.kind == kind).map(|b| b.id).collect()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.load_mw).sum()
    }

    /// Merged susceptance between two buses, if a branch exists.
    pub fn susceptance(&self, a: BusId, b: BusId) -> Option<f64> {
        let key = (a.min(b), a.max(b));
        self.branches
            .binary_search_by(|br| (br.from_bus, br.to_bus).cmp(&key))
            .ok()
            .map(|i| self.branches[i].susceptance)
    }

    /// Decompose into raw records (e.g. to build a modified case).
    pub fn into_parts(self) -> (Vec<BusRecord>, Vec<BranchRecord>, Vec<GeneratorRecord>, f64) {
        (self.buses, self.branches, self.generators, self.nominal_freq)
    }

    fn rebuild(&self, buses: Vec<BusRecord>, generators: Vec<GeneratorRecord>) -> Result<NetworkCase> {
        let mut case = NetworkCase::new(buses, self.branches.clone(), generators, self.nominal_freq)?;
        case.name = self.name.clone();
        Ok(case)
    }

    /// Copy of this case with the given transformation applied to the raw
    /// records, re-validated.
    pub fn modified(
        &self,
        f: impl FnOnce(&mut Vec<BusRecord>, &mut Vec<GeneratorRecord>),
    ) -> Result<NetworkCase> {
        let mut buses = self.buses.clone();
        let mut generators = self.generators.clone();
        f(&mut buses, &mut generators);
        self.rebuild(buses, generators)
    }
}

/// Connected components of an undirected graph, each sorted, ordered by
/// smallest member.
pub(crate) fn connected_components(nodes: &[BusId], edges: &[(BusId, BusId)]) -> Vec<Vec<BusId>> {
    let pos: BTreeMap<BusId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        if let (Some(&ia), Some(&ib)) = (pos.get(&a), pos.get(&b)) {
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<BusId>> = BTreeMap::new();
    for (i, &node) in nodes.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(node);
    }
    let mut out: Vec<Vec<BusId>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    out.sort_by_key(|g| g[0]);
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadRedistribution {
    #[default]
    None,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub bus: BusId,
    pub h_s: f64,
    pub tech: GeneratorTech,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Addition {
    pub bus: BusId,
    pub rating_mw: f64,
    pub h_s: f64,
    #[serde(default = "default_addition_tech")]
    pub tech: GeneratorTech,
}

fn default_addition_tech() -> GeneratorTech {
    GeneratorTech::DfigWtg
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub replacements: Vec<Replacement>,
    #[serde(default)]
    pub additions: Vec<Addition>,
    #[serde(default)]
    pub load_redistribution: LoadRedistribution,
}

/// Overlay a scenario on a base case. Replacements swap inertia and
/// technology in place; additions turn a load bus into a generator bus.
/// With uniform redistribution the added rating is spread evenly over all
/// remaining load buses as extra load.
pub fn apply_scenario(base: &NetworkCase, spec: &ScenarioSpec) -> Result<NetworkCase> {
    for r in &spec.replacements {
        if base.bus(r.bus).is_none() {
            return Err(Error::UnknownBus(r.bus));
        }
        if base.generator(r.bus).is_none() {
            return Err(Error::NoGenerator(r.bus));
        }
    }
    for a in &spec.additions {
        let bus = base.bus(a.bus).ok_or(Error::UnknownBus(a.bus))?;
        if bus.kind == BusKind::Generator {
            return Err(Error::GeneratorExists(a.bus));
        }
        if !(a.rating_mw.is_finite() && a.rating_mw >= 0.0) {
            return Err(Error::invalid(
                format!("additions (bus {}).rating_mw", a.bus),
                format!("must be non-negative, got {}", a.rating_mw),
            ));
        }
    }

    base.modified(|buses, generators| {
        for r in &spec.replacements {
            if let Some(g) = generators.iter_mut().find(|g| g.bus_id == r.bus) {
                g.inertia_h = r.h_s;
                g.tech = r.tech;
            }
        }
        for a in &spec.additions {
            if let Some(b) = buses.iter_mut().find(|b| b.id == a.bus) {
                b.kind = BusKind::Generator;
            }
            generators.push(GeneratorRecord {
                bus_id: a.bus,
                inertia_h: a.h_s,
                rating: a.rating_mw,
                tech: a.tech,
            });
        }
        if spec.load_redistribution == LoadRedistribution::Uniform {
            let offset: f64 = spec.additions.iter().map(|a| a.rating_mw).sum();
            let n_load = buses.iter().filter(|b| b.kind == BusKind::Load).count();
            if n_load > 0 {
                let share = offset / n_load as f64;
                for b in buses.iter_mut().filter(|b| b.kind == BusKind::Load) {
                    b.load_mw += share;
                }
            }
        }
    })
}

/// Synchronizing power coefficient between two buses.
pub fn sync_coefficient(case: &NetworkCase, i: BusId, j: BusId) -> Result<f64> {
    let bi = case.bus(i).ok_or(Error::UnknownBus(i))?;
    let bj = case.bus(j).ok_or(Error::UnknownBus(j))?;
    if i != j {
        return Ok(case.susceptance(i, j).map(|b| -coupling(bi, bj, b)).unwrap_or(0.0));
    }
    let mut diag = 0.0;
    for br in case.branches() {
        let other = if br.from_bus == i {
            br.to_bus
        } else if br.to_bus == i {
            br.from_bus
        } else {
            continue;
        };
        let bo = case.bus(other).ok_or(Error::UnknownBus(other))?;
        diag += coupling(bi, bo, br.susceptance);
    }
    Ok(diag)
}

fn coupling(a: &BusRecord, b: &BusRecord, susceptance: f64) -> f64 {
    a.voltage_mag * b.voltage_mag * susceptance * (a.voltage_ang - b.voltage_ang).cos()
}

/// Assemble the full synchronizing-power Laplacian, generators first then
/// loads, each ascending by id.
pub fn build_laplacian(case: &NetworkCase) -> PartitionedLaplacian {
    let gen_order = case.generator_buses();
    let load_order = case.load_buses();
    let pos: BTreeMap<BusId, usize> =
        gen_order.iter().chain(load_order.iter()).enumerate().map(|(i, &b)| (b, i)).collect();
    let n = pos.len();
    let mut full = DMatrix::<f64>::zeros(n, n);
    for br in case.branches() {
        let (Some(a), Some(b)) = (case.bus(br.from_bus), case.bus(br.to_bus)) else {
            continue;
        };
        let off = -coupling(a, b, br.susceptance);
        let (i, j) = (pos[&br.from_bus], pos[&br.to_bus]);
        full[(i, j)] += off;
        full[(j, i)] += off;
    }
    for i in 0..n {
        let off_sum: f64 = (0..n).filter(|&j| j != i).map(|j| full[(i, j)]).sum();
        full[(i, i)] = -off_sum;
    }
    PartitionedLaplacian::from_full(full, gen_order, load_order)
}
