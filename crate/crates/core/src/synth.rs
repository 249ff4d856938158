//! Random connected cases for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{BranchRecord, BusId, BusKind, BusRecord, GeneratorRecord, NetworkCase};

/// A connected case with `n` buses of which `n_gen` host generators.
/// Angles stay within 0.3 rad so every branch couples positively.
pub fn random_case(seed: u64, n_gen: usize, n: usize) -> NetworkCase {
    assert!(n_gen >= 2 && n_gen <= n, "need 2 <= n_gen <= n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<BusId> = (1..=n as BusId).collect();
    ids.shuffle(&mut rng);
    let gen_ids = &ids[..n_gen];

    let buses: Vec<BusRecord> = (1..=n as BusId)
        .map(|id| {
            let kind = if gen_ids.contains(&id) { BusKind::Generator } else { BusKind::Load };
            let mut b = BusRecord::new(id, kind, rng.random_range(0.95..1.1), rng.random_range(-0.3..0.3));
            if kind == BusKind::Load {
                b.load_mw = rng.random_range(10.0..200.0);
            }
            b
        })
        .collect();

    let mut branches = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        branches.push(BranchRecord::new(ids[i], ids[j], rng.random_range(2.0..20.0)));
    }
    let extra = rng.random_range(0..=n / 2);
    for _ in 0..extra {
        let a = rng.random_range(1..=n as BusId);
        let b = rng.random_range(1..=n as BusId);
        if a != b {
            branches.push(BranchRecord::new(a, b, rng.random_range(2.0..20.0)));
        }
    }

    let mut gens: Vec<BusId> = gen_ids.to_vec();
    gens.sort_unstable();
    let generators =
        gens.into_iter().map(|bus| GeneratorRecord::synchronous(bus, rng.random_range(2.0..10.0))).collect();

    NetworkCase::new(buses, branches, generators, 60.0).expect("random case is valid")
}

/// Random case with sizes drawn from `n_gen in [2, max_gen]`, `n in [n_gen + 1, max_n]`.
pub fn random_sized_case(seed: u64, max_gen: usize, max_n: usize) -> NetworkCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n_gen = rng.random_range(2..=max_gen);
    let n = rng.random_range((n_gen + 1).max(3)..=max_n.max(n_gen + 1));
    random_case(seed, n_gen, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_determinism() {
        let a = random_case(7, 3, 12);
        assert_eq!(a.buses().len(), 12);
        assert_eq!(a.generators().len(), 3);
        assert_eq!(a, random_case(7, 3, 12));
        for seed in 0..50 {
            let c = random_sized_case(seed, 10, 30);
            assert!((3..=30).contains(&c.buses().len()));
            assert!((2..=10).contains(&c.generators().len()));
        }
    }
}
