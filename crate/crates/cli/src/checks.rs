//! Self-check suite: exercises the library's structural invariants on
//! the configured model/bath pair and reports one result per check.
//! Random inputs are drawn from a fixed seed so repeated runs agree.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use defosc::{
    detailed_balance_residual, mean_number_rhs, operator_form_rhs, steady_populations,
    thermal_boltzmann, validate_bath, BathModel, DensityMatrix, FullGenerator, OscillatorModel,
    PopulationGenerator, TruncationPolicy,
};

const SEED: u64 = 0x00de_f05c;
const STATES_PER_CHECK: usize = 4;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl CheckResult {
    fn pass(name: &'static str, residual: f64, detail: impl Into<String>) -> Self {
        CheckResult { name, passed: true, skipped: false, detail: detail.into(), residual: Some(residual) }
    }

    fn fail(name: &'static str, residual: f64, detail: impl Into<String>) -> Self {
        CheckResult { name, passed: false, skipped: false, detail: detail.into(), residual: Some(residual) }
    }

    fn graded(name: &'static str, residual: f64, tol: f64) -> Self {
        if residual <= tol {
            Self::pass(name, residual, format!("within {tol:.1e}"))
        } else {
            Self::fail(name, residual, format!("exceeds {tol:.1e}"))
        }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Self {
        CheckResult { name, passed: true, skipped: true, detail: detail.into(), residual: None }
    }

    /// One human-readable status line.
    pub fn line(&self) -> String {
        let status = if self.skipped {
            "skip"
        } else if self.passed {
            "pass"
        } else {
            "FAIL"
        };
        match self.residual {
            Some(r) => format!("check {}: {status} (residual {r:.3e}; {})", self.name, self.detail),
            None => format!("check {}: {status} ({})", self.name, self.detail),
        }
    }
}

/// Runs every check. Skipped checks count as passed for exit purposes;
/// their detail says why they did not apply.
pub fn run_suite(model: &OscillatorModel, bath: &BathModel) -> Vec<CheckResult> {
    vec![
        check_spectrum_spacing(model),
        check_shift_positivity(model),
        check_bath_margin(model, bath),
        check_trace_preservation(model, bath),
        check_hermiticity(model, bath),
        check_operator_form(model, bath),
        check_population_decoupling(model, bath),
        check_reflecting_conservation(model, bath),
        check_steady_stationarity(model, bath),
        check_detailed_balance(model, bath),
        check_boltzmann_consistency(model, bath),
        check_mean_number_flow(model, bath),
    ]
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|c| c.passed)
}

/// Hermitian unit-trace state supported away from the truncation edge.
fn interior_state(dim: usize, rng: &mut ChaCha8Rng) -> Array2<Complex64> {
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

/// Reason the random-state checks cannot run, if any: interior support
/// needs at least one level inside 2..dim−2.
fn needs_interior(model: &OscillatorModel) -> Option<String> {
    (model.dim() < 5).then(|| "n_max < 4 leaves no interior levels".to_string())
}

fn check_spectrum_spacing(model: &OscillatorModel) -> CheckResult {
    let spectrum = model.spectrum();
    let mut worst = 0.0f64;
    for n in 1..=model.n_max() {
        let gap = spectrum[n] - spectrum[n - 1];
        let shift = model.omega() * model.omega_shift(n - 1);
        worst = worst.max((gap - shift).abs() / (1.0 + shift.abs()));
    }
    CheckResult::graded("spectrum-spacing", worst, 1e-13)
}

fn check_shift_positivity(model: &OscillatorModel) -> CheckResult {
    match (0..=model.n_max()).map(|n| model.omega_shift(n)).fold(f64::INFINITY, f64::min) {
        m if m > 0.0 => CheckResult::pass("shift-positivity", m, "min Ω(n) over the basis"),
        m => CheckResult::fail("shift-positivity", m, "Ω(n) must stay positive"),
    }
}

fn check_bath_margin(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    let report = validate_bath(bath, model);
    if report.all_passed() {
        let margin = report
            .checks
            .iter()
            .filter_map(|c| c.rate_margin)
            .fold(f64::INFINITY, f64::min);
        CheckResult::pass("bath-rate-margin", margin, "min 2D₊(Ω(n)) − λ over the basis")
    } else {
        let first = report.violations().next().expect("violations exist");
        CheckResult::fail(
            "bath-rate-margin",
            first.rate_margin.unwrap_or(f64::NEG_INFINITY),
            format!("level {} violates the margin at Ω = {}", first.n, first.omega_value),
        )
    }
}

fn generator_residual(
    model: &OscillatorModel,
    bath: &BathModel,
    mut per_state: impl FnMut(&Array2<Complex64>, &Array2<Complex64>) -> f64,
) -> Result<f64, String> {
    let generator = FullGenerator::new(model, bath).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..STATES_PER_CHECK {
        let rho = interior_state(model.dim(), &mut rng);
        let out = generator.apply(&rho).map_err(|e| e.to_string())?;
        worst = worst.max(per_state(&rho, &out));
    }
    Ok(worst)
}

fn check_trace_preservation(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    if let Some(skip) = needs_interior(model) {
        return CheckResult::skip("generator-trace", skip);
    }
    match generator_residual(model, bath, |_, out| out.diag().iter().sum::<Complex64>().norm()) {
        Ok(worst) => CheckResult::graded("generator-trace", worst, 1e-12),
        Err(e) => CheckResult::skip("generator-trace", e),
    }
}

fn check_hermiticity(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    if let Some(skip) = needs_interior(model) {
        return CheckResult::skip("generator-hermiticity", skip);
    }
    let defect = |out: &Array2<Complex64>| {
        let d = out.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((out[[i, j]] - out[[j, i]].conj()).norm());
            }
        }
        worst
    };
    match generator_residual(model, bath, |_, out| defect(out)) {
        Ok(worst) => CheckResult::graded("generator-hermiticity", worst, 1e-12),
        Err(e) => CheckResult::skip("generator-hermiticity", e),
    }
}

fn check_operator_form(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    if let Some(skip) = needs_interior(model) {
        return CheckResult::skip("operator-form-agreement", skip);
    }
    let result = generator_residual(model, bath, |rho, out| {
        let reference = operator_form_rhs(model, bath, rho).expect("dimensions match");
        let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
        out.iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / (1.0 + scale)
    });
    match result {
        Ok(worst) => CheckResult::graded("operator-form-agreement", worst, 1e-12),
        Err(e) => CheckResult::skip("operator-form-agreement", e),
    }
}

fn check_population_decoupling(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    if bath.has_cross_terms() {
        return CheckResult::skip(
            "population-decoupling",
            "cross terms couple diagonals to coherences for this bath",
        );
    }
    let generator = match FullGenerator::new(model, bath) {
        Ok(g) => g,
        Err(e) => return CheckResult::skip("population-decoupling", e.to_string()),
    };
    let pops = match PopulationGenerator::new(model, bath, TruncationPolicy::Drop) {
        Ok(g) => g,
        Err(e) => return CheckResult::skip("population-decoupling", e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..STATES_PER_CHECK {
        let mut p = Array1::from_shape_fn(model.dim(), |_| rng.random_range(0.01..1.0));
        let total = p.sum();
        p.mapv_inplace(|v| v / total);
        let rho = Array2::from_diag(&p.mapv(|v| Complex64::new(v, 0.0)));
        let full = generator.apply(&rho).expect("dimensions match");
        let dp = pops.apply(&p).expect("dimensions match");
        for n in 0..model.dim() {
            worst = worst.max((full[[n, n]].re - dp[n]).abs());
            worst = worst.max(full[[n, n]].im.abs());
        }
    }
    CheckResult::graded("population-decoupling", worst, 1e-14)
}

fn check_reflecting_conservation(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    match PopulationGenerator::new(model, bath, TruncationPolicy::Reflecting) {
        Ok(g) => {
            let worst = g.column_sums().iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
            CheckResult::graded("reflecting-conservation", worst, 0.0)
        }
        Err(e) => CheckResult::skip("reflecting-conservation", e.to_string()),
    }
}

fn check_steady_stationarity(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    let p = match steady_populations(model, bath) {
        Ok(p) => p,
        Err(e) => return CheckResult::skip("steady-stationarity", e.to_string()),
    };
    let generator = match PopulationGenerator::new(model, bath, TruncationPolicy::Reflecting) {
        Ok(g) => g,
        Err(e) => return CheckResult::skip("steady-stationarity", e.to_string()),
    };
    let dp = generator.apply(p.values()).expect("dimensions match");
    let (t_plus, t_minus) = generator.rates();
    let scale = t_plus
        .iter()
        .zip(t_minus)
        .map(|(a, b)| a.abs() + b.abs())
        .fold(0.0, f64::max);
    let worst = dp.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / (1.0 + scale);
    CheckResult::graded("steady-stationarity", worst, 1e-12)
}

fn check_detailed_balance(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    let p = match steady_populations(model, bath) {
        Ok(p) => p,
        Err(e) => return CheckResult::skip("detailed-balance", e.to_string()),
    };
    match detailed_balance_residual(model, bath, &p) {
        Ok(residual) => CheckResult::graded("detailed-balance", residual, 1e-13),
        Err(e) => CheckResult::skip("detailed-balance", e.to_string()),
    }
}

fn check_boltzmann_consistency(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    let temperature = match bath.temperature() {
        Some(t) if t > 0.0 => t,
        Some(_) => return CheckResult::skip("boltzmann-consistency", "T = 0 pins the ground state"),
        None => return CheckResult::skip("boltzmann-consistency", "thermal baths only"),
    };
    let steady = match steady_populations(model, bath) {
        Ok(p) => p,
        Err(e) => return CheckResult::skip("boltzmann-consistency", e.to_string()),
    };
    let reference = match thermal_boltzmann(model, temperature) {
        Ok(p) => p,
        Err(e) => return CheckResult::skip("boltzmann-consistency", e.to_string()),
    };
    let worst = steady
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    CheckResult::graded("boltzmann-consistency", worst, 1e-12)
}

fn check_mean_number_flow(model: &OscillatorModel, bath: &BathModel) -> CheckResult {
    if !bath.is_thermal() {
        return CheckResult::skip("mean-number-flow", "thermal baths only");
    }
    if let Some(skip) = needs_interior(model) {
        return CheckResult::skip("mean-number-flow", skip);
    }
    let generator = match FullGenerator::new(model, bath) {
        Ok(g) => g,
        Err(e) => return CheckResult::skip("mean-number-flow", e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..STATES_PER_CHECK {
        let raw = interior_state(model.dim(), &mut rng);
        let out = generator.apply(&raw).expect("dimensions match");
        let from_output: f64 = out.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum();
        let rho = match DensityMatrix::new(raw) {
            Ok(r) => r,
            Err(e) => return CheckResult::skip("mean-number-flow", e.to_string()),
        };
        match mean_number_rhs(model, bath, &rho) {
            Ok(direct) => worst = worst.max((direct - from_output).abs()),
            Err(e) => return CheckResult::skip("mean-number-flow", e.to_string()),
        }
    }
    CheckResult::graded("mean-number-flow", worst, 1e-10)
}
