mod common;

use common::{all_scenarios, base_case};
use izone_core::pipeline::{case_dnw, reduce_case};
use izone_core::spectral::perron_pair;
use izone_core::synth::random_sized_case;
use izone_core::{merw_dnw, DnwVector, NetworkCase};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

fn check_dnw(d: &DnwVector) {
    let p = &d.transition;
    for i in 0..p.nrows() {
        let s: f64 = p.row(i).sum();
        assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
        assert!(p.row(i).iter().all(|&v| v >= 0.0));
    }
    let pi = &d.gen_weights;
    assert!(pi.iter().all(|&v| v > 0.0));
    assert!((pi.sum() - 1.0).abs() < 1e-12, "{}", pi.sum());
    let drift = p.transpose() * pi - pi;
    assert!(drift.amax() < 1e-10, "stationarity residual {}", drift.amax());
}

/// Dominant eigenvector by repeated squaring, an oracle independent of the
/// iteration used in the library.
fn perron_by_squaring(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a + DMatrix::identity(n, n) * a.amax();
    for _ in 0..60 {
        m = &m * &m;
        m /= m.amax();
    }
    let mut v = m * DVector::from_element(n, 1.0);
    v /= v.norm();
    v
}

#[test]
fn fixture_invariants() {
    for case in all_scenarios() {
        let (_, rd) = reduce_case(&case).unwrap();
        check_dnw(&merw_dnw(&rd).unwrap());
    }
}

#[test]
fn random_case_invariants() {
    for seed in 0..100 {
        let case = random_sized_case(seed, 10, 30);
        let (_, rd) = reduce_case(&case).unwrap();
        check_dnw(&merw_dnw(&rd).unwrap());
    }
}

#[test]
fn perron_vector_matches_squaring_oracle() {
    for case in all_scenarios() {
        let (_, rd) = reduce_case(&case).unwrap();
        let a = rd.merw_operator();
        let (lambda, u) = perron_pair(&a).unwrap();
        let oracle = perron_by_squaring(&a);
        let u = &u / u.norm();
        assert!((&u - &oracle).amax() < 1e-9, "{}", (&u - &oracle).amax());
        assert!(((&a * &u) - &u * lambda).amax() < 1e-9 * lambda);
    }
}

#[test]
fn uniform_inertia_gives_squared_symmetric_eigenvector() {
    let case = base_case().modified(|_, gens| gens.iter_mut().for_each(|g| g.inertia_h = 4.0)).unwrap();
    let (_, rd) = reduce_case(&case).unwrap();
    let a = rd.merw_operator();
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top).map(|x| x * x);
    let d = merw_dnw(&rd).unwrap();
    assert!((&d.gen_weights - &v).amax() < 1e-10);
}

#[test]
fn load_weights_are_convex_combinations() {
    let case = base_case();
    let d = case_dnw(&case).unwrap();
    let (lo, hi) = d.gen_weights.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    for bus in case.load_buses() {
        let w = d.weight(bus).unwrap();
        assert!(w >= lo - 1e-12 && w <= hi + 1e-12, "bus {bus}: {w}");
    }
}

fn scaled(case: &NetworkCase, susceptance: f64, inertia: f64) -> NetworkCase {
    let (buses, branches, gens, f) = case.clone().into_parts();
    let branches = branches
        .into_iter()
        .map(|mut b| {
            b.susceptance *= susceptance;
            b
        })
        .collect();
    let gens = gens
        .into_iter()
        .map(|mut g| {
            g.inertia_h *= inertia;
            g
        })
        .collect();
    NetworkCase::new(buses, branches, gens, f).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dnw_is_scale_invariant(seed in any::<u64>(), b in 0.1f64..10.0, h in 0.1f64..10.0) {
        let case = random_sized_case(seed, 10, 30);
        let base = case_dnw(&case).unwrap();
        let other = case_dnw(&scaled(&case, b, h)).unwrap();
        prop_assert!((&base.all_weights - &other.all_weights).amax() < 1e-9);
    }

    #[test]
    fn merw_invariants_hold(seed in any::<u64>()) {
        let case = random_sized_case(seed, 10, 30);
        let (_, rd) = reduce_case(&case).unwrap();
        check_dnw(&merw_dnw(&rd).unwrap());
    }
}
