//! Release acceptance suite. Each test covers one criterion, prints a
//! single `acceptance N (...): PASS/FAIL` line (visible with
//! `--nocapture`), and asserts the same condition so `cargo test` fails
//! when a criterion is not met.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use defosc::{
    c_coefficient, detailed_balance_residual, equilibrium_energy, evolve_populations,
    mean_number_closed_form, mean_number_rhs, operator_form_rhs, partition_function,
    steady_populations, thermal_boltzmann, BathModel, Deformation, DensityMatrix, FullGenerator,
    IntegratorConfig, OscillatorModel, PopulationDist, PopulationGenerator, TruncationPolicy,
};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tempfile::TempDir;

fn identity_model(omega: f64, n_max: usize) -> OscillatorModel {
    OscillatorModel::new(omega, Deformation::Identity, n_max).unwrap()
}

fn q_model(omega: f64, tau: f64, n_max: usize) -> OscillatorModel {
    OscillatorModel::new(omega, Deformation::Q { tau }, n_max).unwrap()
}

/// Hermitian unit-trace matrix supported away from the truncation edge.
fn interior_state(dim: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (2, dim - 2);
    let mut m = Array2::<Complex64>::zeros((dim, dim));
    for i in lo..hi {
        for j in i..hi {
            if i == j {
                m[[i, i]] = Complex64::new(rng.random_range(0.05..1.0), 0.0);
            } else {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[[i, j]] = c;
                m[[j, i]] = c.conj();
            }
        }
    }
    let trace: f64 = (lo..hi).map(|i| m[[i, i]].re).sum();
    m.mapv_inplace(|v| v / trace);
    m
}

fn random_diagonal(dim: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Array1::from_shape_fn(dim, |_| rng.random_range(0.01..1.0));
    let total = p.sum();
    p.mapv_inplace(|v| v / total);
    p
}

fn report(number: usize, title: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {number} ({title}): {verdict} — {detail}");
}

#[test]
fn acceptance_1_undeformed_decay_law() {
    let lambda = 0.5;
    let model = identity_model(1.0, 16);
    let bath = BathModel::thermal(lambda, 0.0, 1.0).unwrap();
    let p0 = PopulationDist::delta(model.dim(), 3).unwrap();
    let cfg = IntegratorConfig::rk4(0.005, 4.0, 100);

    let started = Instant::now();
    let traj =
        evolve_populations(&model, &bath, &p0, &cfg, TruncationPolicy::Reflecting).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let mut worst = 0.0f64;
    for (t, mean) in traj.times.iter().zip(&traj.mean_n) {
        let exact = 3.0 * (-2.0 * lambda * t).exp();
        worst = worst.max((mean - exact).abs() / exact);
    }
    let ok = worst <= 1e-6 && elapsed < 1.0;
    report(
        1,
        "undeformed decay law",
        ok,
        &format!("max rel err {worst:.3e} (tol 1e-6), {:.0} ms", elapsed * 1e3),
    );
    assert!(ok, "rel err {worst:.3e}, elapsed {elapsed:.3} s");
}

#[test]
fn acceptance_2_deformed_mean_field() {
    let (n0, lambda, tau) = (3.0, 0.5, 0.05);
    let model = q_model(1.0, tau, 32);
    let bath = BathModel::thermal(lambda, 0.0, 1.0).unwrap();
    let p0 = PopulationDist::delta(model.dim(), 3).unwrap();
    let cfg = IntegratorConfig::rk4(0.002, 4.0, 100);
    let traj =
        evolve_populations(&model, &bath, &p0, &cfg, TruncationPolicy::Reflecting).unwrap();

    let mut worst = 0.0f64;
    for (t, mean) in traj.times.iter().zip(&traj.mean_n) {
        let reference = mean_number_closed_form(n0, lambda, tau, *t);
        worst = worst.max((mean - reference).abs() / reference);
    }
    let evolution_ok = worst <= 1e-2;

    // The closed form must satisfy dx/dt = −2λ(x + g(x³ − x)), g = τ²/6.
    // Richardson-extrapolated central differences are accurate to ~1e-12
    // here, so 1e-9 tests the formula and not the differentiation.
    let cf = |t: f64| mean_number_closed_form(n0, lambda, tau, t);
    let g = tau * tau / 6.0;
    let mut worst_ode = 0.0f64;
    for &t in &[0.3, 1.0, 2.5, 3.7] {
        let x = cf(t);
        let rhs = -2.0 * lambda * (x + g * (x * x * x - x));
        let h = 1e-4;
        let diff = |h: f64| (cf(t + h) - cf(t - h)) / (2.0 * h);
        let deriv = (4.0 * diff(h / 2.0) - diff(h)) / 3.0;
        worst_ode = worst_ode.max((deriv - rhs).abs());
    }
    let ode_ok = worst_ode <= 1e-9;

    let ok = evolution_ok && ode_ok;
    report(
        2,
        "deformed mean-field decay",
        ok,
        &format!("max rel err {worst:.3e} (tol 1e-2), ODE defect {worst_ode:.3e} (tol 1e-9)"),
    );
    assert!(ok, "rel err {worst:.3e}, ODE defect {worst_ode:.3e}");
}

#[test]
fn acceptance_3_relaxation_to_steady_state() {
    let model = q_model(1.0, 0.1, 20);
    let bath = BathModel::thermal(1.0, 1.0, 1.0).unwrap();

    let steady = steady_populations(&model, &bath).unwrap();
    let tail = steady.values()[model.n_max()];
    let tail_ok = tail < 1e-12;

    let p0 = PopulationDist::delta(model.dim(), 5).unwrap();
    let cfg = IntegratorConfig::rk4(0.004, 40.0, 100);
    let traj =
        evolve_populations(&model, &bath, &p0, &cfg, TruncationPolicy::Reflecting).unwrap();
    let final_p = traj.final_state.populations();
    let l1: f64 = final_p.iter().zip(steady.values()).map(|(a, b)| (a - b).abs()).sum();
    let l1_ok = l1 <= 1e-8;

    let residual = detailed_balance_residual(&model, &bath, &steady).unwrap();
    let residual_ok = residual <= 1e-14;

    let mut spread = 0.0f64;
    for &lam in &[0.3, 3.0] {
        let other =
            steady_populations(&model, &BathModel::thermal(lam, 1.0, 1.0).unwrap()).unwrap();
        for (a, b) in other.values().iter().zip(steady.values()) {
            spread = spread.max((a - b).abs());
        }
    }
    let independence_ok = spread <= 1e-12;

    let ok = tail_ok && l1_ok && residual_ok && independence_ok;
    report(
        3,
        "relaxation to the thermal steady state",
        ok,
        &format!(
            "tail {tail:.3e}, L1 after relaxation {l1:.3e} (tol 1e-8), \
             balance residual {residual:.3e} (tol 1e-14), coupling spread {spread:.3e} (tol 1e-12)"
        ),
    );
    assert!(ok, "tail {tail:.3e}, L1 {l1:.3e}, residual {residual:.3e}, spread {spread:.3e}");
}

#[test]
fn acceptance_4_partition_function_and_boltzmann() {
    let model = identity_model(1.0, 40);

    // 28 levels leave a geometric tail just under 1e-12, so the reported
    // bound is dominated by truncation and not by rounding noise; the
    // extra 1e-14 allows for f64 accumulation in the 28-term sum.
    let partition = partition_function(&model, 1.0, 28).unwrap();
    let exact = 1.0 / (2.0 * 0.5f64.sinh());
    let gap = (partition.value - exact).abs();
    let bound_ok = partition.tail_bound <= 1e-12;
    let value_ok = gap <= partition.tail_bound + 1e-14;

    let bath = BathModel::thermal(0.7, 1.0, 1.0).unwrap();
    let steady = steady_populations(&model, &bath).unwrap();
    let boltzmann = thermal_boltzmann(&model, 1.0).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in steady.values().iter().zip(boltzmann.values()) {
        worst = worst.max((a - b).abs());
    }
    let boltzmann_ok = worst <= 1e-12;

    let ok = bound_ok && value_ok && boltzmann_ok;
    report(
        4,
        "partition function with tail bound",
        ok,
        &format!(
            "Z = {:.15} vs {exact:.15}, gap {gap:.3e} ≤ bound {:.3e} + 1e-14, \
             steady-vs-Boltzmann {worst:.3e} (tol 1e-12)",
            partition.value, partition.tail_bound
        ),
    );
    assert!(ok, "gap {gap:.3e}, bound {:.3e}, boltzmann {worst:.3e}", partition.tail_bound);
}

#[test]
fn acceptance_5_equilibrium_energy_curvature() {
    // E(τ) = E(0) + a·τ² + b·τ⁴ + …  Two second-difference quotients at
    // h and 2h use only τ ∈ {h, 2h, 4h} and extrapolate to a with O(h⁴)
    // error, avoiding the τ = 0 evaluation entirely.
    let energy = |tau: f64| equilibrium_energy(&q_model(1.0, tau, 8), 1.0).unwrap().energy_numeric;
    let second = |h: f64| (energy(2.0 * h) - energy(h)) / (3.0 * h * h);
    let curvature = (4.0 * second(0.01) - second(0.02)) / 3.0;
    let target = 0.5 * c_coefficient(1.0).unwrap();
    let rel = ((curvature - target) / target).abs();
    let curvature_ok = rel <= 1e-2;

    let cold = c_coefficient(50.0).unwrap().abs();
    let cold_ok = cold < 1e-18;

    let ground = equilibrium_energy(&q_model(1.0, 0.1, 8), 0.0).unwrap().energy_numeric;
    let ground_ok = ground == 0.5;

    let ok = curvature_ok && cold_ok && ground_ok;
    report(
        5,
        "equilibrium-energy curvature in tau",
        ok,
        &format!(
            "extrapolated {curvature:.6} vs {target:.6} (rel {rel:.3e}, tol 1e-2), \
             c(50) = {cold:.3e}, E(T=0) = {ground}"
        ),
    );
    assert!(ok, "rel {rel:.3e}, cold {cold:.3e}, ground {ground}");
}

#[test]
fn acceptance_6_generator_agrees_with_operator_form() {
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for &tau in &[0.0, 0.1] {
        for &temperature in &[0.0, 1.0] {
            let model = q_model(1.0, tau, 12);
            let bath = BathModel::thermal(0.8, temperature, 1.0).unwrap();
            let generator = FullGenerator::new(&model, &bath).unwrap();
            for seed in 0..25u64 {
                let rho = interior_state(model.dim(), 0xC6_0000 + seed);
                let ours = generator.apply(&rho).unwrap();
                let reference = operator_form_rhs(&model, &bath, &rho).unwrap();
                for (x, y) in ours.iter().zip(reference.iter()) {
                    worst = worst.max((x - y).norm());
                }
                checked += 1;
            }
        }
    }
    let agreement_ok = checked == 100 && worst <= 1e-12;

    let mut worst_diag = 0.0f64;
    for &tau in &[0.0, 0.1] {
        let model = q_model(1.0, tau, 12);
        let bath = BathModel::thermal(0.8, 1.0, 1.0).unwrap();
        let full = FullGenerator::new(&model, &bath).unwrap();
        let pops = PopulationGenerator::new(&model, &bath, TruncationPolicy::Drop).unwrap();
        for seed in 0..10u64 {
            let p = random_diagonal(model.dim(), 0xD1A6 + seed);
            let rho = Array2::from_diag(&p.mapv(|v| Complex64::new(v, 0.0)));
            let image = full.apply(&rho).unwrap();
            let dp = pops.apply(&p).unwrap();
            for n in 0..model.dim() {
                worst_diag = worst_diag.max((image[[n, n]].re - dp[n]).abs());
            }
        }
    }
    let diagonal_ok = worst_diag <= 1e-14;

    let ok = agreement_ok && diagonal_ok;
    report(
        6,
        "element-wise vs operator-form generator",
        ok,
        &format!(
            "{checked} states, max deviation {worst:.3e} (tol 1e-12), \
             diagonal reduction {worst_diag:.3e} (tol 1e-14)"
        ),
    );
    assert!(ok, "checked {checked}, worst {worst:.3e}, diagonal {worst_diag:.3e}");
}

#[test]
fn acceptance_7_structural_identities() {
    let mut worst_trace = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut worst_flow = 0.0f64;
    for &tau in &[0.0, 0.1] {
        for &temperature in &[0.0, 1.0] {
            let model = q_model(1.0, tau, 12);
            let bath = BathModel::thermal(0.8, temperature, 1.0).unwrap();
            let generator = FullGenerator::new(&model, &bath).unwrap();
            let d = model.dim();
            for seed in 0..5u64 {
                let raw = interior_state(d, 0xC7_0000 + seed);
                let image = generator.apply(&raw).unwrap();

                let trace: Complex64 = image.diag().iter().sum();
                worst_trace = worst_trace.max(trace.norm());

                for i in 0..d {
                    for j in 0..d {
                        worst_herm =
                            worst_herm.max((image[[i, j]] - image[[j, i]].conj()).norm());
                    }
                }

                let rho = DensityMatrix::new(raw).unwrap();
                let predicted = mean_number_rhs(&model, &bath, &rho).unwrap();
                let observed: f64 =
                    image.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum();
                worst_flow = worst_flow.max((predicted - observed).abs());
            }
        }
    }
    let trace_ok = worst_trace <= 1e-12;
    let herm_ok = worst_herm <= 1e-12;
    let flow_ok = worst_flow <= 1e-10;

    let custom = Deformation::Custom { phi: vec![0.0, 1.0, 2.3, 3.9, 5.8, 8.1, 10.7] };
    let models = [
        identity_model(1.3, 10),
        q_model(0.7, 0.3, 10),
        OscillatorModel::new(1.1, custom, 4).unwrap(),
    ];
    let mut worst_gap = 0.0f64;
    for model in &models {
        for n in 1..=model.n_max() {
            let gap = model.energy_level(n).unwrap() - model.energy_level(n - 1).unwrap();
            let target = model.omega() * model.omega_shift(n - 1);
            worst_gap = worst_gap.max((gap - target).abs());
        }
    }
    let gap_ok = worst_gap <= 1e-13;

    let ok = trace_ok && herm_ok && flow_ok && gap_ok;
    report(
        7,
        "trace, Hermiticity, number flow, level spacing",
        ok,
        &format!(
            "trace {worst_trace:.3e} (tol 1e-12), Hermiticity {worst_herm:.3e} (tol 1e-12), \
             flow {worst_flow:.3e} (tol 1e-10), spacing {worst_gap:.3e} (tol 1e-13)"
        ),
    );
    assert!(
        ok,
        "trace {worst_trace:.3e}, herm {worst_herm:.3e}, flow {worst_flow:.3e}, gap {worst_gap:.3e}"
    );
}

fn run_cli(config: &Path, out: &Path) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_defosc"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path
}

/// summary.json with the wall-clock timing nulled out, for comparison.
fn summary_without_timings(out: &Path) -> Value {
    let mut v: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    v["timings"] = Value::Null;
    v
}

#[test]
fn acceptance_8_byte_identical_reruns() {
    let dir = TempDir::new().unwrap();
    let evolve = json!({
        "oscillator": {"omega": 1.0, "deformation": {"kind": "q", "tau": 0.1}, "n_max": 8},
        "bath": {"kind": "thermal", "lambda": 0.5, "temperature": 1.0},
        "run": {
            "mode": "evolve",
            "initial_state": {"kind": "fock", "n": 3},
            "integrator": {"method": "rk45-adaptive", "t_final": 2.0, "samples": 20},
            "snapshots": true
        }
    });
    let config = write_config(dir.path(), "evolve.json", &evolve);
    let (out_a, out_b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_cli(&config, &out_a).status.success());
    assert!(run_cli(&config, &out_b).status.success());

    let trajectory_ok = fs::read(out_a.join("trajectory.csv")).unwrap()
        == fs::read(out_b.join("trajectory.csv")).unwrap();
    let snapshots_ok = fs::read(out_a.join("snapshots.json")).unwrap()
        == fs::read(out_b.join("snapshots.json")).unwrap();
    let summary_ok = summary_without_timings(&out_a) == summary_without_timings(&out_b);

    let steady = json!({
        "oscillator": {"omega": 1.0, "deformation": {"kind": "q", "tau": 0.1}, "n_max": 12},
        "bath": {"kind": "thermal", "lambda": 0.5, "temperature": 1.0},
        "run": {"mode": "steady"}
    });
    let config = write_config(dir.path(), "steady.json", &steady);
    let (out_c, out_d) = (dir.path().join("c"), dir.path().join("d"));
    assert!(run_cli(&config, &out_c).status.success());
    assert!(run_cli(&config, &out_d).status.success());
    let steady_ok =
        fs::read(out_c.join("steady.csv")).unwrap() == fs::read(out_d.join("steady.csv")).unwrap();

    let ok = trajectory_ok && snapshots_ok && summary_ok && steady_ok;
    report(
        8,
        "byte-identical reruns",
        ok,
        &format!(
            "trajectory {trajectory_ok}, snapshots {snapshots_ok}, \
             summary {summary_ok}, steady {steady_ok}"
        ),
    );
    assert!(ok, "trajectory {trajectory_ok}, snapshots {snapshots_ok}, summary {summary_ok}, steady {steady_ok}");
}
