//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use izone_core::pipeline::{reduce_case, sweep_inertia};
use izone_core::sensitivity::{first_order_eigs, perturb_case, perturbation_matrix, reduce, Operator};
use izone_core::swing::{energy, simulate_free};
use izone_core::synth::random_sized_case;
use izone_core::zoning::{kmeans_points, weighted_cost, weighted_kmeans_points, weighted_means};
use izone_core::{
    analyze, apply_scenario, build_laplacian, coherence_score, extend_dnw, load_case, load_scenario,
    merw_dnw, one_at_a_time, simulate, BusId, DisturbanceKind, DisturbanceSpec, DnwVector, EigenSystem,
    NetworkCase, Parameter, PerturbationSpec, ReducedDynamics, SimConfig, Targets, ZoningConfig,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn scenario(n: usize) -> NetworkCase {
    let base = load_case(fixtures().join("case39.json")).expect("base case");
    let spec = load_scenario(fixtures().join(format!("scenario{n}.json"))).expect("scenario");
    apply_scenario(&base, &spec).expect("overlay")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn merw_checks(d: &DnwVector) -> (f64, f64, f64, bool) {
    let p = &d.transition;
    let stochastic = (0..p.nrows()).map(|i| (p.row(i).sum() - 1.0).abs()).fold(0.0, f64::max);
    let pi = &d.gen_weights;
    let stationary = (p.transpose() * pi - pi).amax();
    let normalized = (pi.sum() - 1.0).abs();
    let positive = pi.iter().all(|&v| v > 0.0) && p.iter().all(|&v| v >= 0.0);
    (stochastic, stationary, normalized, positive)
}

fn criterion_merw() -> Check {
    let mut cases: Vec<(String, NetworkCase)> =
        (1..=4).map(|s| (format!("scenario {s}"), scenario(s))).collect();
    for seed in 0..100 {
        cases.push((format!("random seed {seed}"), random_sized_case(seed, 10, 30)));
    }
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (name, case) in &cases {
        let (_, rd) = reduce_case(case).map_err(|e| format!("{name}: {e}"))?;
        let d = merw_dnw(&rd).map_err(|e| format!("{name}: {e}"))?;
        let (s, st, n, pos) = merw_checks(&d);
        ensure(s < 1e-12, || format!("{name}: row sum error {s:e}"))?;
        ensure(st < 1e-10, || format!("{name}: stationarity error {st:e}"))?;
        ensure(n < 1e-12, || format!("{name}: sum error {n:e}"))?;
        ensure(pos, || format!("{name}: nonpositive entry"))?;
        worst = (worst.0.max(s), worst.1.max(st), worst.2.max(n));
    }
    Ok(format!(
        "{} cases; max row-sum err {:.1e}, stationarity {:.1e}, sum {:.1e}",
        cases.len(),
        worst.0,
        worst.1,
        worst.2
    ))
}

fn star_mesh(full: &DMatrix<f64>, ng: usize) -> DMatrix<f64> {
    let mut l = full.clone();
    for k in (ng..full.nrows()).rev() {
        let mut next = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                next[(i, j)] = l[(i, j)] - l[(i, k)] * l[(k, j)] / l[(k, k)];
            }
        }
        l = next;
    }
    l
}

fn criterion_laplacian() -> Check {
    let mut cases: Vec<NetworkCase> = (1..=4).map(scenario).collect();
    cases.extend((0..20).map(|s| random_sized_case(1000 + s, 10, 30)));
    let (mut sym, mut rows, mut red_rows, mut schur) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (idx, case) in cases.iter().enumerate() {
        let pl = build_laplacian(case);
        let l = pl.full();
        sym = sym.max(max_abs(&(l - l.transpose())));
        rows = rows.max((0..l.nrows()).map(|i| l.row(i).sum().abs()).fold(0.0, f64::max));
        let (_, rd) = reduce_case(case).map_err(|e| e.to_string())?;
        red_rows = red_rows.max((0..rd.n_gen()).map(|i| rd.l_red.row(i).sum().abs()).fold(0.0, f64::max));
        if idx >= 4 {
            schur = schur.max(max_abs(&(&rd.l_red - star_mesh(l, rd.n_gen()))));
        }
    }
    ensure(sym < 1e-12, || format!("asymmetry {sym:e}"))?;
    ensure(rows < 1e-10, || format!("row sum {rows:e}"))?;
    ensure(red_rows < 1e-10, || format!("reduced row sum {red_rows:e}"))?;
    ensure(schur < 1e-8, || format!("Schur oracle gap {schur:e}"))?;
    Ok(format!(
        "asymmetry {sym:.1e}, row sums {rows:.1e}, reduced row sums {red_rows:.1e}, Schur gap {schur:.1e} on 20 random cases"
    ))
}

fn single_move_optimal(points: &[Vec<f64>], weights: &[f64], assignment: &[usize], k: usize) -> bool {
    let top = weights.iter().copied().fold(0.0, f64::max);
    let w: Vec<f64> = weights.iter().map(|v| v / top).collect();
    let zero = vec![vec![0.0; points[0].len()]; k];
    let cents = weighted_means(points, &w, assignment, k, &zero);
    let cost = weighted_cost(points, &w, assignment, &cents);
    for i in 0..points.len() {
        let from = assignment[i];
        if assignment.iter().filter(|&&z| z == from).count() < 2 {
            continue;
        }
        for to in (0..k).filter(|&c| c != from) {
            let mut moved = assignment.to_vec();
            moved[i] = to;
            let c2 = weighted_means(points, &w, &moved, k, &cents);
            if weighted_cost(points, &w, &moved, &c2) < cost * (1.0 - 1e-9) {
                return false;
            }
        }
    }
    true
}

fn criterion_clustering() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut instances, mut runs) = (0usize, 0usize);
    for n in 2..=8usize {
        for k in 1..=n.min(3) {
            for _ in 0..4 {
                let points: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
                let init = points[..k].to_vec();
                for _ in 0..25 {
                    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                    let out = weighted_kmeans_points(&points, &w, &init, 500).map_err(|e| e.to_string())?;
                    ensure(out.converged, || format!("n={n} k={k} did not converge"))?;
                    ensure(single_move_optimal(&points, &w, &out.assignment, k), || {
                        format!("n={n} k={k}: improving single move exists")
                    })?;
                    runs += 1;
                }
                let c = rng.random_range(0.01..100.0);
                let uniform =
                    weighted_kmeans_points(&points, &vec![c; n], &init, 500).map_err(|e| e.to_string())?;
                let plain = kmeans_points(&points, &init, 500).map_err(|e| e.to_string())?;
                ensure(uniform == plain, || format!("n={n} k={k}: uniform weights differ from unweighted"))?;
                instances += 1;
            }
        }
    }
    Ok(format!("{instances} instances, {runs} weighted runs locally optimal; uniform weights identical to unweighted"))
}

fn eig(case: &NetworkCase) -> Result<EigenSystem, String> {
    Operator::Merw.eigensystem(&reduce(case).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn criterion_perturbation() -> Check {
    let case = scenario(1);
    let base = eig(&case)?;
    let mut notes = Vec::new();
    for p in Parameter::ALL {
        let mut res = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let spec = PerturbationSpec::relative(p, eps, Targets::Buses(vec![30]));
            let a1 = perturbation_matrix(&case, &spec, Operator::Merw).map_err(|e| e.to_string())?;
            let fo = first_order_eigs(&base, &a1).map_err(|e| e.to_string())?;
            let exact = eig(&perturb_case(&case, &spec).map_err(|e| e.to_string())?)?.eigenvalues;
            res.push((exact - (&base.eigenvalues + fo.lambda1 * eps)).amax());
        }
        let ratios = [res[0] / res[1], res[1] / res[2]];
        ensure(ratios.iter().all(|r| (3.0..=5.0).contains(r)), || {
            format!("{p}: residual ratios {ratios:?}")
        })?;
        notes.push(format!("{p} {:.2}/{:.2}", ratios[0], ratios[1]));
    }
    let hand = EigenSystem::from_symmetric(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0])))
        .map_err(|e| e.to_string())?;
    let fo = first_order_eigs(&hand, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
        .map_err(|e| e.to_string())?;
    let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0]);
    ensure(fo.u1 == expected, || format!("hand example U1 = {}", fo.u1))?;
    Ok(format!("residual ratios {}; hand example exact", notes.join(", ")))
}

fn criterion_sensitivity_rank() -> Check {
    let case = scenario(1);
    let t = Instant::now();
    let mut u = Vec::new();
    for p in [Parameter::Inertia, Parameter::VoltageMag, Parameter::VoltageAng] {
        u.push(one_at_a_time(&case, p, 0.2).map_err(|e| e.to_string())?.u1var);
    }
    let secs = t.elapsed().as_secs_f64();
    let detail =
        format!("inertia {:.4} > voltage_mag {:.4} > voltage_ang {:.4} in {secs:.3} s", u[0], u[1], u[2]);
    ensure(u[0] > u[1] && u[1] > u[2], || detail.clone())?;
    ensure(secs < 10.0, || detail.clone())?;
    Ok(detail)
}

fn criterion_zone_count() -> Check {
    let cfg = ZoningConfig::default();
    let k1 = analyze(&scenario(1), &cfg).map_err(|e| e.to_string())?.zones.k;
    let k2 = analyze(&scenario(2), &cfg).map_err(|e| e.to_string())?.zones.k;
    let detail = format!("k(scenario 1) = {k1}, k(scenario 2) = {k2}");
    ensure(k1 > k2, || detail.clone())?;
    Ok(detail)
}

fn criterion_sed() -> Check {
    let zr = analyze(&scenario(1), &ZoningConfig::default()).map_err(|e| e.to_string())?.zones;
    let heaviest =
        (0..zr.k).max_by(|&a, &b| zr.zone_weight[a].total_cmp(&zr.zone_weight[b])).ok_or("no zones")?;
    let closest = (0..zr.k).min_by(|&a, &b| zr.sed[a].total_cmp(&zr.sed[b])).ok_or("no zones")?;
    let detail = format!(
        "heaviest zone {heaviest} (weight {:.4}, SED {:.4}); minimum SED zone {closest}",
        zr.zone_weight[heaviest], zr.sed[heaviest]
    );
    ensure(heaviest == closest, || detail.clone())?;
    Ok(detail)
}

/// Per-bus relative DNW change `(max - min) / value at the first H`, plus
/// the absolute range.
fn sweep_change(case: &NetworkCase, bus: BusId, watch: &[BusId]) -> Result<Vec<(f64, f64)>, String> {
    let values = [2.0, 3.0, 4.0, 5.0, 6.0];
    let points = sweep_inertia(case, bus, &values, &ZoningConfig::default()).map_err(|e| e.to_string())?;
    Ok(watch
        .iter()
        .map(|&b| {
            let series: Vec<f64> =
                points.iter().map(|p| p.analysis.dnw.weight(b).unwrap_or(f64::NAN)).collect();
            let max = series.iter().copied().fold(f64::MIN, f64::max);
            let min = series.iter().copied().fold(f64::MAX, f64::min);
            ((max - min) / series[0], max - min)
        })
        .collect())
}

fn criterion_sweep() -> Check {
    let watch = [33, 34, 20];
    let s4 = sweep_change(&scenario(4), 19, &watch)?;
    let s3 = sweep_change(&scenario(3), 28, &watch)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, bus) in watch.iter().enumerate() {
        ok &= s4[i].0 > s3[i].0;
        parts.push(format!(
            "bus {bus}: rel {:.3} vs {:.3} (abs {:.4} vs {:.4})",
            s4[i].0, s3[i].0, s4[i].1, s3[i].1
        ));
    }
    let detail = format!("sweep 19 on scenario 4 vs sweep 28 on scenario 3; {}", parts.join("; "));
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn criterion_performance() -> Check {
    let case = scenario(1);
    let (pl, rd) = reduce_case(&case).map_err(|e| e.to_string())?;
    let mut dnw_times = Vec::new();
    for _ in 0..100 {
        let t = Instant::now();
        let d = merw_dnw(&rd).map_err(|e| e.to_string())?;
        let all = extend_dnw(&d, &pl).map_err(|e| e.to_string())?;
        std::hint::black_box(all);
        dnw_times.push(t.elapsed().as_secs_f64());
    }
    let mut zone_times = Vec::new();
    for _ in 0..10 {
        let t = Instant::now();
        std::hint::black_box(analyze(&case, &ZoningConfig::default()).map_err(|e| e.to_string())?);
        zone_times.push(t.elapsed().as_secs_f64());
    }
    let (dnw, zones) = (median(dnw_times), median(zone_times));
    let detail = format!("DNW median {:.3} ms, zones pipeline median {:.1} ms", dnw * 1e3, zones * 1e3);
    ensure(dnw < 0.010 && zones < 0.5, || detail.clone())?;
    Ok(detail)
}

fn criterion_simulation() -> Check {
    let m = 10.0 / (100.0 * PI);
    let rd = ReducedDynamics::from_parts(
        vec![1, 2],
        DMatrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5]),
        DVector::from_element(2, m),
    );
    let cfg = SimConfig::default();
    let tr = simulate_free(&rd, DVector::from_vec(vec![1e-3, -1e-3]), DVector::zeros(2), &cfg)
        .map_err(|e| e.to_string())?;
    let (d, w) = tr.state_at(0);
    let e0 = energy(&rd, &d, &w);
    let drift = (0..tr.len())
        .map(|k| {
            let (d, w) = tr.state_at(k);
            ((energy(&rd, &d, &w) - e0) / e0).abs()
        })
        .fold(0.0, f64::max);
    ensure(drift < 1e-6, || format!("energy drift {drift:e}"))?;

    let a = analyze(&scenario(1), &ZoningConfig::default()).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for bus in [4, 15, 16, 21, 26] {
        let d = DisturbanceSpec {
            bus_id: bus,
            kind: DisturbanceKind::PowerStep,
            size: 0.1,
            t_start: 0.0,
            t_end: 0.1,
        };
        let tr = simulate(&a.reduced, &d, &cfg).map_err(|e| e.to_string())?;
        let s = coherence_score(&tr, &a.zones, Some(bus), d.t_end).map_err(|e| e.to_string())?;
        let (intra, inter) = (s.intra.ok_or("no intra pairs")?, s.inter.ok_or("no inter pairs")?);
        ensure(intra > inter, || format!("bus {bus}: intra {intra:.3} <= inter {inter:.3}"))?;
        parts.push(format!("{bus}: {intra:.3}/{inter:.3}"));
    }
    Ok(format!("2-gen energy drift {drift:.1e}; intra/inter {}", parts.join(", ")))
}

fn run_zones(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_izone"))
        .args(["zones", "--case"])
        .arg(fixtures().join("case39.json"))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())
}

fn criterion_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_zones(&a)?;
    run_zones(&b)?;
    for name in ["zones.json", "zones.csv", "zones.svg"] {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok("zones.json, zones.csv, zones.svg byte-identical across two runs".into())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("MERW invariants", criterion_merw),
        ("Laplacian and Kron reduction", criterion_laplacian),
        ("small-instance clustering oracle", criterion_clustering),
        ("perturbation order", criterion_perturbation),
        ("sensitivity rank", criterion_sensitivity_rank),
        ("scenario zone count", criterion_zone_count),
        ("SED of heaviest zone", criterion_sed),
        ("inertia sweep", criterion_sweep),
        ("performance", criterion_performance),
        ("simulation validation", criterion_simulation),
        ("determinism", criterion_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
