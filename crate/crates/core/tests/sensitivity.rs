mod common;

use std::time::Instant;

use common::base_case;
use izone_core::sensitivity::{
    analyze, first_order_eigs, perturb_case, perturbation_matrix, reduce, u1var_metric, Operator,
};
use izone_core::{one_at_a_time, Parameter, PerturbationSpec, Targets};
use izone_core::{EigenSystem, NetworkCase};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn eig(case: &NetworkCase) -> EigenSystem {
    Operator::Merw.eigensystem(&reduce(case).unwrap()).unwrap()
}

/// Largest gap between the perturbed spectrum and its first-order prediction.
fn residual(case: &NetworkCase, base: &EigenSystem, spec: &PerturbationSpec) -> f64 {
    let a1 = perturbation_matrix(case, spec, Operator::Merw).unwrap();
    let fo = first_order_eigs(base, &a1).unwrap();
    let exact = eig(&perturb_case(case, spec).unwrap()).eigenvalues;
    let predicted = &base.eigenvalues + fo.lambda1 * spec.magnitude;
    (exact - predicted).amax()
}

#[test]
fn eigenvalue_residual_is_second_order() {
    let case = base_case();
    let base = eig(&case);
    for p in Parameter::ALL {
        let r: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&e| residual(&case, &base, &PerturbationSpec::relative(p, e, Targets::Buses(vec![30]))))
            .collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "{p}: residuals {r:?}");
        }
    }
}

#[test]
fn sensitivity_rank_holds() {
    let case = base_case();
    let t = Instant::now();
    let u: Vec<f64> = [Parameter::Inertia, Parameter::VoltageMag, Parameter::VoltageAng]
        .iter()
        .map(|&p| one_at_a_time(&case, p, 0.2).unwrap().u1var)
        .collect();
    assert!(u[0] > u[1] && u[1] > u[2], "{u:?}");
    assert!(t.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn uniform_scaling_leaves_eigenvectors_alone() {
    let case = base_case();
    for p in [Parameter::Inertia, Parameter::VoltageMag] {
        let spec = PerturbationSpec::relative(p, 0.2, Targets::All);
        let r = analyze(&case, &spec).unwrap();
        assert!(r.u1var < 1e-8, "{p}: {}", r.u1var);
    }
}

#[test]
fn uniform_angles_are_insensitive() {
    let case = base_case().modified(|buses, _| buses.iter_mut().for_each(|b| b.voltage_ang = 0.1)).unwrap();
    let r = analyze(&case, &PerturbationSpec::relative(Parameter::VoltageAng, 0.2, Targets::All)).unwrap();
    assert_eq!(r.u1var, 0.0);
    assert!(r.lambda1.iter().all(|&v| v == 0.0));
}

#[test]
fn zero_epsilon_is_rejected() {
    let case = base_case();
    assert!(one_at_a_time(&case, Parameter::Inertia, 0.0).is_err());
}

#[test]
fn u1var_reported_matches_recomputation() {
    let case = base_case();
    let base = eig(&case);
    let spec = PerturbationSpec::relative(Parameter::Inertia, 0.2, Targets::Buses(vec![34]));
    let a1 = perturbation_matrix(&case, &spec, Operator::Merw).unwrap();
    let fo = first_order_eigs(&base, &a1).unwrap();
    let report = one_at_a_time(&case, Parameter::Inertia, 0.2).unwrap();
    let listed = report.per_target.iter().find(|(b, _)| *b == 34).unwrap().1;
    assert_eq!(listed, u1var_metric(&base, &fo).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The first-order maps are linear in the perturbation matrix.
    #[test]
    fn first_order_is_linear(bus in 0usize..10, c in -3.0f64..3.0) {
        let case = base_case();
        let base = eig(&case);
        let gens = case.generator_buses();
        let spec = PerturbationSpec::relative(Parameter::Inertia, 0.05, Targets::Buses(vec![gens[bus]]));
        let a1 = perturbation_matrix(&case, &spec, Operator::Merw).unwrap();
        let one = first_order_eigs(&base, &a1).unwrap();
        let scaled = first_order_eigs(&base, &(&a1 * c)).unwrap();
        let tol = 1e-9 * (1.0 + one.lambda1.amax());
        prop_assert!(((&one.lambda1 * c) - &scaled.lambda1).amax() < tol);
        let du: DMatrix<f64> = &one.u1 * c - &scaled.u1;
        prop_assert!(du.amax() < 1e-9 * (1.0 + one.u1.amax()));
    }
}
