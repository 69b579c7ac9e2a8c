//! Time evolution and expectation-value laws.
//!
//! Density matrices evolve under the full banded generator (drop
//! truncation); populations evolve under the birth–death generator with
//! a selectable truncation convention. Both integrations record, per
//! sample: ⟨N⟩, ⟨H⟩, the trace (ΣP for populations), the trace leak
//! 1 − tr, and the smallest eigenvalue (smallest population), plus
//! optional state snapshots.
//!
//! Alongside the integrators, this module carries three analytic laws
//! used as cross-checks and diagnostics:
//!
//! * the moment law d⟨N⟩/dt = Σ P(n)(t₊(n) − t₋(n)) for thermal baths,
//!   which reduces to −2λ⟨φ(N)⟩ at T = 0;
//! * the small-deformation closed form for ⟨N(t)⟩ under a T = 0 bath
//!   (exact solution of the mean-field cubic rate equation), with its
//!   further first-order expansion reported as a secondary diagnostic;
//! * the T = 0 coherence laws for d⟨a⟩/dt and d⟨Ω(N)a⟩/dt.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::algebra::OscillatorModel;
use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::liouvillian::{
    energy_raw, mean_number_raw, min_eigenvalue_raw, trace_re, DensityMatrix, FullGenerator,
    PopulationDist, PopulationGenerator, TransitionRates, TruncationPolicy,
};
use crate::ode;

/// Default relative tolerance of the adaptive method.
pub const DEFAULT_RTOL: f64 = 1e-8;
/// Default absolute tolerance of the adaptive method.
pub const DEFAULT_ATOL: f64 = 1e-10;

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classic RK4 with a fixed step; samples land on the nearest step
    /// node and the node time is reported.
    Rk4Fixed { dt: f64 },
    /// Dormand–Prince 5(4) with PI step control; samples are evaluated
    /// exactly at the requested times via dense output.
    Rk45Adaptive { rtol: f64, atol: f64 },
}

/// Time span, sampling plan, and scheme for one evolution.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_final: f64,
    /// Strictly increasing sample times within [0, t_final].
    pub sample_times: Vec<f64>,
    /// Record full state snapshots at every sample.
    pub record_snapshots: bool,
}

/// `intervals + 1` uniformly spaced times from 0 to t_final inclusive.
pub fn uniform_sample_times(t_final: f64, intervals: usize) -> Vec<f64> {
    let intervals = intervals.max(1);
    (0..=intervals).map(|j| t_final * (j as f64 / intervals as f64)).collect()
}

impl IntegratorConfig {
    /// Fixed-step configuration sampling `intervals + 1` uniform times.
    pub fn rk4(dt: f64, t_final: f64, intervals: usize) -> Self {
        Self {
            method: Method::Rk4Fixed { dt },
            t_final,
            sample_times: uniform_sample_times(t_final, intervals),
            record_snapshots: false,
        }
    }

    /// Adaptive configuration sampling `intervals + 1` uniform times.
    pub fn rk45(rtol: f64, atol: f64, t_final: f64, intervals: usize) -> Self {
        Self {
            method: Method::Rk45Adaptive { rtol, atol },
            t_final,
            sample_times: uniform_sample_times(t_final, intervals),
            record_snapshots: false,
        }
    }

    /// Replaces the sampling plan.
    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    /// Toggles snapshot recording.
    pub fn with_snapshots(mut self, record: bool) -> Self {
        self.record_snapshots = record;
        self
    }

    /// Checks positivity of the scheme parameters and the sampling plan.
    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4Fixed { dt } => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "dt",
                        reason: format!("must be > 0 and finite, got {dt}"),
                    });
                }
            }
            Method::Rk45Adaptive { rtol, atol } => {
                if !(rtol > 0.0) || !(atol > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "tolerances",
                        reason: format!("rtol and atol must be > 0, got ({rtol}, {atol})"),
                    });
                }
            }
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_final",
                reason: format!("must be > 0 and finite, got {}", self.t_final),
            });
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter {
                name: "sample_times",
                reason: "must contain at least one time".to_string(),
            });
        }
        if self.sample_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "sample_times",
                reason: "must be strictly increasing".to_string(),
            });
        }
        let (first, last) =
            (self.sample_times[0], *self.sample_times.last().expect("non-empty"));
        if first < 0.0 || last > self.t_final {
            return Err(Error::InvalidParameter {
                name: "sample_times",
                reason: format!("must lie within [0, {}], got [{first}, {last}]", self.t_final),
            });
        }
        Ok(())
    }
}

/// Per-sample state snapshots.
#[derive(Debug, Clone)]
pub enum Snapshots {
    Density(Vec<Array2<Complex64>>),
    Populations(Vec<Array1<f64>>),
}

/// State at the end of an evolution (unvalidated: the drop truncation
/// may have leaked a small amount of trace).
#[derive(Debug, Clone)]
pub enum FinalState {
    Density(Array2<Complex64>),
    Populations(Array1<f64>),
}

impl FinalState {
    /// Diagonal of the final state.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            FinalState::Density(m) => m.diag().iter().map(|z| z.re).collect(),
            FinalState::Populations(p) => p.to_vec(),
        }
    }
}

/// Sampled observables of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub energy: Vec<f64>,
    /// tr ρ, or Σ P for population evolutions.
    pub trace: Vec<f64>,
    /// 1 − trace: what the drop truncation lost through the top level.
    pub trace_leak: Vec<f64>,
    /// Smallest eigenvalue of ρ (positivity monitor), or the smallest
    /// population for population evolutions.
    pub min_eig: Vec<f64>,
    pub snapshots: Option<Snapshots>,
    pub final_state: FinalState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evolves a density matrix under the full generator (drop truncation).
pub fn evolve_density(
    model: &OscillatorModel,
    bath: &BathModel,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: rho0.dim() });
    }
    let generator = FullGenerator::new(model, bath)?;
    let mut times = Vec::new();
    let mut mean_n = Vec::new();
    let mut energy = Vec::new();
    let mut trace = Vec::new();
    let mut trace_leak = Vec::new();
    let mut min_eig = Vec::new();
    let mut snaps: Vec<Array2<Complex64>> = Vec::new();
    let record = |t: f64, y: &Array2<Complex64>| {
        times.push(t);
        mean_n.push(mean_number_raw(y));
        energy.push(energy_raw(model, y));
        let tr = trace_re(y);
        trace.push(tr);
        trace_leak.push(1.0 - tr);
        min_eig.push(min_eigenvalue_raw(y));
        if cfg.record_snapshots {
            snaps.push(y.clone());
        }
    };
    let deriv = |y: &Array2<Complex64>, dy: &mut Array2<Complex64>| {
        generator.apply_into(y, dy).expect("dimensions fixed at construction");
    };
    let final_state = match cfg.method {
        Method::Rk4Fixed { dt } => {
            ode::integrate_rk4(deriv, rho0.matrix(), dt, cfg.t_final, &cfg.sample_times, record)?
        }
        Method::Rk45Adaptive { rtol, atol } => ode::integrate_rk45(
            deriv,
            rho0.matrix(),
            rtol,
            atol,
            cfg.t_final,
            &cfg.sample_times,
            record,
        )?,
    };
    Ok(Trajectory {
        times,
        mean_n,
        energy,
        trace,
        trace_leak,
        min_eig,
        snapshots: cfg.record_snapshots.then_some(Snapshots::Density(snaps)),
        final_state: FinalState::Density(final_state),
    })
}

/// Evolves a population vector under the birth–death generator.
pub fn evolve_populations(
    model: &OscillatorModel,
    bath: &BathModel,
    p0: &PopulationDist,
    cfg: &IntegratorConfig,
    policy: TruncationPolicy,
) -> Result<Trajectory> {
    cfg.validate()?;
    if p0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: p0.dim() });
    }
    let generator = PopulationGenerator::new(model, bath, policy)?;
    let mut times = Vec::new();
    let mut mean_n = Vec::new();
    let mut energy = Vec::new();
    let mut trace = Vec::new();
    let mut trace_leak = Vec::new();
    let mut min_eig = Vec::new();
    let mut snaps: Vec<Array1<f64>> = Vec::new();
    let record = |t: f64, p: &Array1<f64>| {
        times.push(t);
        mean_n.push(p.iter().enumerate().map(|(n, v)| n as f64 * v).sum());
        energy.push(
            p.iter()
                .enumerate()
                .map(|(n, v)| model.omega() / 2.0 * (model.phi(n + 1) + model.phi(n)) * v)
                .sum(),
        );
        let total: f64 = p.sum();
        trace.push(total);
        trace_leak.push(1.0 - total);
        min_eig.push(p.iter().copied().fold(f64::INFINITY, f64::min));
        if cfg.record_snapshots {
            snaps.push(p.clone());
        }
    };
    let deriv = |p: &Array1<f64>, dp: &mut Array1<f64>| {
        generator.apply_into(p, dp).expect("dimensions fixed at construction");
    };
    let final_state = match cfg.method {
        Method::Rk4Fixed { dt } => {
            ode::integrate_rk4(deriv, p0.values(), dt, cfg.t_final, &cfg.sample_times, record)?
        }
        Method::Rk45Adaptive { rtol, atol } => ode::integrate_rk45(
            deriv,
            p0.values(),
            rtol,
            atol,
            cfg.t_final,
            &cfg.sample_times,
            record,
        )?,
    };
    Ok(Trajectory {
        times,
        mean_n,
        energy,
        trace,
        trace_leak,
        min_eig,
        snapshots: cfg.record_snapshots.then_some(Snapshots::Populations(snaps)),
        final_state: FinalState::Populations(final_state),
    })
}

fn require_thermal(bath: &BathModel) -> Result<()> {
    if !bath.is_thermal() {
        return Err(Error::NonThermalBath { label: bath.label().to_string() });
    }
    Ok(())
}

fn mean_number_flow(model: &OscillatorModel, bath: &BathModel, populations: &[f64]) -> Result<f64> {
    let rates = TransitionRates::build(model, bath)?;
    Ok(populations
        .iter()
        .enumerate()
        .map(|(n, p)| p * (rates.t_plus(n) - rates.t_minus(n)))
        .sum())
}

/// d⟨N⟩/dt from the thermal moment law,
/// λ Σ P(n) [(coth(ωΩ(n)/2T) − 1)φ(n+1) − (coth(ωΩ(n−1)/2T) + 1)φ(n)],
/// evaluated through the transition rates (identical term by term). At
/// T = 0 this is −2λ⟨φ(N)⟩.
pub fn mean_number_rhs(model: &OscillatorModel, bath: &BathModel, rho: &DensityMatrix) -> Result<f64> {
    require_thermal(bath)?;
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: rho.dim() });
    }
    mean_number_flow(model, bath, &rho.populations())
}

/// [`mean_number_rhs`] for a population vector.
pub fn mean_number_rhs_populations(
    model: &OscillatorModel,
    bath: &BathModel,
    p: &PopulationDist,
) -> Result<f64> {
    require_thermal(bath)?;
    if p.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: p.dim() });
    }
    mean_number_flow(model, bath, p.values().as_slice().expect("contiguous"))
}

/// Small-deformation closed form for ⟨N(t)⟩ under a T = 0 bath:
///
/// ```text
/// ⟨N(t)⟩ = n₀ √k e^{−2λkt} / √(k + g n₀² (1 − e^{−4λkt})),
/// k = 1 − τ²/6,  g = τ²/6,
/// ```
///
/// the exact solution of the mean-field rate equation
/// dx/dt = −2λ(x + g(x³ − x)) with x(0) = n₀ (the cubic term coming
/// from ⟨N³⟩ ≈ ⟨N⟩³). τ = 0 reduces to n₀ e^{−2λt}.
pub fn mean_number_closed_form(n0: f64, lambda: f64, tau: f64, t: f64) -> f64 {
    let g = tau * tau / 6.0;
    let k = 1.0 - g;
    let decay = (-2.0 * lambda * k * t).exp();
    n0 * k.sqrt() * decay / (k + g * n0 * n0 * (1.0 - decay * decay)).sqrt()
}

/// First-order expansion of [`mean_number_closed_form`] in τ², reported
/// as a diagnostic only:
/// n₀ e^{−2λkt} (1 − (τ²/12) n₀² (1 − e^{−4λkt})).
pub fn mean_number_closed_form_expanded(n0: f64, lambda: f64, tau: f64, t: f64) -> f64 {
    let g = tau * tau / 6.0;
    let k = 1.0 - g;
    let decay = (-2.0 * lambda * k * t).exp();
    n0 * decay * (1.0 - tau * tau / 12.0 * n0 * n0 * (1.0 - decay * decay))
}

/// ⟨X(N)a⟩ = Σ_{j≥1} √j X(j−1) ρ_{j,j−1} for a level function X.
fn lowering_expectation(rho: &Array2<Complex64>, x: impl Fn(usize) -> f64) -> Complex64 {
    let d = rho.nrows();
    (1..d).map(|j| rho[[j, j - 1]] * ((j as f64).sqrt() * x(j - 1))).sum()
}

/// n·f(n)·f(n+1) = √(φ(n)·φ(n+1)·n/(n+1)), zero at n = 0.
fn cross_phi(model: &OscillatorModel, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (model.phi(n) * model.phi(n + 1) * (n as f64 / (n + 1) as f64)).sqrt()
    }
}

/// T = 0 coherence laws: (d⟨a⟩/dt, d⟨Ω(N)a⟩/dt), with
///
/// ```text
/// d⟨a⟩/dt     = −iω⟨Ω(N)a⟩ − λ⟨(φ(N+1) + φ(N) − 2N f(N) f(N+1)) a⟩,
/// d⟨Ω(N)a⟩/dt = −iω⟨Ω²(N)a⟩
///               − λ⟨(Ω(N)(φ(N+1) + φ(N)) − 2Ω(N−1) N f(N) f(N+1)) a⟩.
/// ```
///
/// For the identity deformation both collapse to the damped-oscillator
/// law d⟨a⟩/dt = −(iω + λ)⟨a⟩. Requires a thermal bath at exactly T = 0.
pub fn coherence_rhs(
    model: &OscillatorModel,
    bath: &BathModel,
    rho: &DensityMatrix,
) -> Result<(Complex64, Complex64)> {
    require_thermal(bath)?;
    let temperature = bath.temperature().expect("thermal bath");
    if temperature != 0.0 {
        return Err(Error::NonzeroTemperature { temperature });
    }
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: rho.dim() });
    }
    let omega = model.omega();
    let lambda = bath.lambda();
    let i = Complex64::new(0.0, 1.0);
    let m = rho.matrix();

    let omega_a = lowering_expectation(m, |k| model.omega_shift(k));
    let damp_a =
        lowering_expectation(m, |k| model.phi(k + 1) + model.phi(k) - 2.0 * cross_phi(model, k));
    let d_mean_a = -i * omega * omega_a - lambda * damp_a;

    let omega2_a = lowering_expectation(m, |k| {
        let w = model.omega_shift(k);
        w * w
    });
    let damp_omega_a = lowering_expectation(m, |k| {
        let mut v = model.omega_shift(k) * (model.phi(k + 1) + model.phi(k));
        if k >= 1 {
            v -= 2.0 * model.omega_shift(k - 1) * cross_phi(model, k);
        }
        v
    });
    let d_mean_omega_a = -i * omega * omega2_a - lambda * damp_omega_a;

    Ok((d_mean_a, d_mean_omega_a))
}
