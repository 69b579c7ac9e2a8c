//! Dissipative generator of the damped deformed oscillator.
//!
//! Three views of the same dynamics live here:
//!
//! * [`FullGenerator`] — the number-basis right-hand side dρ/dt for a
//!   full density matrix, applied as a sparse banded action (the
//!   generator couples ρ_mn only to neighbors with |Δm|, |Δn| ≤ 2);
//! * [`PopulationGenerator`] — the classical birth–death restriction to
//!   the diagonal P(n) = ρ_nn, with upward rates
//!   t₊(n) = φ(n+1)(2D₊(Ω(n)) − λ) and downward rates
//!   t₋(n) = φ(n)(2D₊(Ω(n−1)) + λ);
//! * [`operator_form_rhs`] — the operator form of the master equation,
//!   assembled from explicit matrix products and used purely as a
//!   differential-testing oracle for the banded kernel.
//!
//! Truncation: the full equation uses the drop convention (out-of-range
//! matrix elements read as zero), which leaks a small amount of trace
//! through the top level; the leak is reported by the dynamics layer
//! rather than hidden. The population equation additionally offers a
//! reflecting convention (t₊(n_max) = 0) that conserves ΣP exactly.
//!
//! When D₋ ≡ D_pq ≡ 0 (every thermal bath), diagonals couple only among
//! themselves; the diagonal of the full generator is then evaluated
//! through the same precomputed rate arrays as the population generator,
//! so the two restrictions agree to the last bit.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::OscillatorModel;
use crate::bath::BathModel;
use crate::error::{Error, Result};

/// Dimension at or above which generator application parallelizes over
/// matrix rows.
const PARALLEL_DIM_THRESHOLD: usize = 64;

/// How the truncated top level is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// Out-of-range elements read as zero; upward loss from the top
    /// level remains, so a small trace leak is possible.
    Drop,
    /// The upward rate out of the top level is set to zero; total
    /// population is conserved exactly (population equation only).
    Reflecting,
}

fn complex_matrix_trace(m: &Array2<Complex64>) -> Complex64 {
    m.diag().sum()
}

pub(crate) fn trace_re(m: &Array2<Complex64>) -> f64 {
    complex_matrix_trace(m).re
}

pub(crate) fn mean_number_raw(m: &Array2<Complex64>) -> f64 {
    m.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum()
}

pub(crate) fn energy_raw(model: &OscillatorModel, m: &Array2<Complex64>) -> f64 {
    m.diag()
        .iter()
        .enumerate()
        .map(|(n, z)| model.omega() / 2.0 * (model.phi(n + 1) + model.phi(n)) * z.re)
        .sum()
}

pub(crate) fn hermiticity_defect_raw(m: &Array2<Complex64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub(crate) fn min_eigenvalue_raw(m: &Array2<Complex64>) -> f64 {
    let d = m.nrows();
    let dm = DMatrix::from_row_slice(d, d, m.as_slice().expect("standard layout"));
    dm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Validated quantum state on the truncated basis: Hermitian and unit
/// trace to 1e−12. Positivity is monitored (minimum eigenvalue), not
/// enforced, because the deformed evolution is not guaranteed completely
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Array2<Complex64>,
}

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;

    /// Validates Hermiticity and unit trace.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: data.nrows(), actual: data.ncols() });
        }
        let defect = hermiticity_defect_raw(&data);
        if defect > Self::HERMITICITY_TOL {
            return Err(Error::NotHermitian { defect, tol: Self::HERMITICITY_TOL });
        }
        let trace = complex_matrix_trace(&data);
        if (trace.re - 1.0).abs() > Self::TRACE_TOL || trace.im.abs() > Self::TRACE_TOL {
            return Err(Error::NotUnitTrace { trace: trace.re, tol: Self::TRACE_TOL });
        }
        Ok(Self { data })
    }

    /// Pure number state |n⟩⟨n| on a dim-dimensional basis.
    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::LevelOutOfRange { n, n_max: dim.saturating_sub(1) });
        }
        let mut data = Array2::zeros((dim, dim));
        data[[n, n]] = Complex64::new(1.0, 0.0);
        Ok(Self { data })
    }

    /// Diagonal mixture with the given populations.
    pub fn from_populations(p: &PopulationDist) -> Self {
        let d = p.dim();
        let mut data = Array2::zeros((d, d));
        for (n, &v) in p.values().iter().enumerate() {
            data[[n, n]] = Complex64::new(v, 0.0);
        }
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.data
    }

    /// Diagonal entries (real parts).
    pub fn populations(&self) -> Vec<f64> {
        self.data.diag().iter().map(|z| z.re).collect()
    }

    /// Re tr ρ.
    pub fn trace(&self) -> f64 {
        trace_re(&self.data)
    }

    /// ⟨N⟩ = Σ n ρ_nn.
    pub fn mean_number(&self) -> f64 {
        mean_number_raw(&self.data)
    }

    /// ⟨H⟩ = Σ E_n ρ_nn.
    pub fn energy(&self, model: &OscillatorModel) -> Result<f64> {
        if model.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: self.dim() });
        }
        Ok(energy_raw(model, &self.data))
    }

    /// max |ρ_mn − ρ*_nm|.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect_raw(&self.data)
    }

    /// Smallest eigenvalue (positivity diagnostic).
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue_raw(&self.data)
    }
}

/// Validated classical distribution over number states: entries ≥ 0,
/// Σ P = 1 to 1e−12.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationDist {
    p: Array1<f64>,
}

impl PopulationDist {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(p: Array1<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter {
                name: "populations",
                reason: "must be non-empty".to_string(),
            });
        }
        if let Some((n, &value)) = p.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativePopulation { n, value });
        }
        let sum: f64 = p.sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::NotNormalized { sum, tol: Self::SUM_TOL });
        }
        Ok(Self { p })
    }

    /// δ_{n,k} distribution.
    pub fn delta(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::LevelOutOfRange { n, n_max: dim.saturating_sub(1) });
        }
        let mut p = Array1::zeros(dim);
        p[n] = 1.0;
        Ok(Self { p })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.p
    }

    pub fn into_values(self) -> Array1<f64> {
        self.p
    }

    /// ⟨N⟩ = Σ n P(n).
    pub fn mean_number(&self) -> f64 {
        self.p.iter().enumerate().map(|(n, v)| n as f64 * v).sum()
    }

    /// ⟨H⟩ = Σ E_n P(n).
    pub fn energy(&self, model: &OscillatorModel) -> Result<f64> {
        if model.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: self.dim() });
        }
        Ok(self
            .p
            .iter()
            .enumerate()
            .map(|(n, v)| model.omega() / 2.0 * (model.phi(n + 1) + model.phi(n)) * v)
            .sum())
    }
}

/// Level transition rates of the birth–death restriction:
/// t₊(n) = φ(n+1)(2D₊(Ω(n)) − λ), t₋(n) = φ(n)(2D₊(Ω(n−1)) + λ), with
/// t₋(0) = 0 identically (the φ(0) factor vanishes, so Ω(−1) is never
/// evaluated).
#[derive(Debug, Clone)]
pub struct TransitionRates {
    t_plus: Vec<f64>,
    t_minus: Vec<f64>,
}

impl TransitionRates {
    /// Rates for every level 0..=n_max.
    pub fn build(model: &OscillatorModel, bath: &BathModel) -> Result<Self> {
        let d = model.dim();
        let lambda = bath.lambda();
        let mut t_plus = Vec::with_capacity(d);
        let mut t_minus = Vec::with_capacity(d);
        for n in 0..d {
            t_plus.push(model.phi(n + 1) * (2.0 * bath.d_plus(model.omega_shift(n))? - lambda));
            t_minus.push(if n == 0 {
                0.0
            } else {
                model.phi(n) * (2.0 * bath.d_plus(model.omega_shift(n - 1))? + lambda)
            });
        }
        Ok(Self { t_plus, t_minus })
    }

    pub fn t_plus(&self, n: usize) -> f64 {
        self.t_plus[n]
    }

    pub fn t_minus(&self, n: usize) -> f64 {
        self.t_minus[n]
    }

    pub fn len(&self) -> usize {
        self.t_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_plus.is_empty()
    }
}

/// Rates (t₊(n), t₋(n)) for a single level 0 ≤ n ≤ n_max.
pub fn transition_rates(model: &OscillatorModel, bath: &BathModel, n: usize) -> Result<(f64, f64)> {
    if n > model.n_max() {
        return Err(Error::LevelOutOfRange { n, n_max: model.n_max() });
    }
    let lambda = bath.lambda();
    let t_plus = model.phi(n + 1) * (2.0 * bath.d_plus(model.omega_shift(n))? - lambda);
    let t_minus = if n == 0 {
        0.0
    } else {
        model.phi(n) * (2.0 * bath.d_plus(model.omega_shift(n - 1))? + lambda)
    };
    Ok((t_plus, t_minus))
}

/// Precomputed banded action of the full number-basis generator.
///
/// All level-dependent coefficients (φ, √φ, the diffusion values at the
/// shifted frequencies, damping sums, and the birth–death rates used for
/// the decoupled diagonal) are evaluated once at construction; `apply`
/// is then a pure function of ρ.
#[derive(Debug, Clone)]
pub struct FullGenerator {
    dim: usize,
    omega: f64,
    lambda: f64,
    /// φ(k), 0 ≤ k ≤ dim + 1.
    phi: Vec<f64>,
    /// √φ(k), 0 ≤ k ≤ dim − 1 (largest index entering band products).
    sqrt_phi: Vec<f64>,
    /// φ(k) + φ(k+1), 0 ≤ k ≤ dim − 1 (unitary phase).
    eh: Vec<f64>,
    /// D₊(Ω(k)), D₋(Ω(k)), D_pq(Ω(k)), 0 ≤ k ≤ dim − 1.
    dp: Vec<f64>,
    dm: Vec<f64>,
    dpq: Vec<f64>,
    /// Per-level damping: φ(k+1)(D₊(Ω(k)) − λ/2) + φ(k)(D₊(Ω(k−1)) + λ/2).
    damp_level: Vec<f64>,
    /// Birth–death rates shared verbatim with [`PopulationGenerator`].
    t_plus: Vec<f64>,
    t_minus: Vec<f64>,
    /// Whether any D₋/D_pq coefficient is nonzero; when false the
    /// diagonal is evaluated through t_plus/t_minus.
    has_cross: bool,
}

impl FullGenerator {
    pub fn new(model: &OscillatorModel, bath: &BathModel) -> Result<Self> {
        let d = model.dim();
        let lambda = bath.lambda();
        let phi: Vec<f64> = (0..=d + 1).map(|k| model.phi(k)).collect();
        let sqrt_phi: Vec<f64> = (0..d).map(|k| phi[k].sqrt()).collect();
        let eh: Vec<f64> = (0..d).map(|k| phi[k] + phi[k + 1]).collect();
        let mut dp = Vec::with_capacity(d);
        let mut dm = Vec::with_capacity(d);
        let mut dpq = Vec::with_capacity(d);
        for k in 0..d {
            let x = model.omega_shift(k);
            dp.push(bath.d_plus(x)?);
            dm.push(bath.d_minus(x)?);
            dpq.push(bath.d_pq(x)?);
        }
        let damp_level: Vec<f64> = (0..d)
            .map(|k| {
                let mut v = phi[k + 1] * (dp[k] - lambda / 2.0);
                if k >= 1 {
                    v += phi[k] * (dp[k - 1] + lambda / 2.0);
                }
                v
            })
            .collect();
        let rates = TransitionRates::build(model, bath)?;
        let has_cross = dm.iter().any(|v| *v != 0.0) || dpq.iter().any(|v| *v != 0.0);
        Ok(Self {
            dim: d,
            omega: model.omega(),
            lambda,
            phi,
            sqrt_phi,
            eh,
            dp,
            dm,
            dpq,
            damp_level,
            t_plus: rates.t_plus,
            t_minus: rates.t_minus,
            has_cross,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether D₋/D_pq couple diagonals to off-diagonals anywhere.
    pub fn has_cross_terms(&self) -> bool {
        self.has_cross
    }

    /// dρ/dt for a raw state matrix.
    pub fn apply(&self, rho: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        let mut out = Array2::zeros((self.dim, self.dim));
        self.apply_into(rho, &mut out)?;
        Ok(out)
    }

    /// dρ/dt written into a preallocated output.
    pub fn apply_into(&self, rho: &Array2<Complex64>, out: &mut Array2<Complex64>) -> Result<()> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: rho.nrows() });
        }
        if out.nrows() != self.dim || out.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: out.nrows() });
        }
        let d = self.dim;
        let rho_s = rho.as_slice().ok_or(Error::InvalidParameter {
            name: "rho",
            reason: "matrix must be in standard layout".to_string(),
        })?;
        // out is freshly sized (d, d) or caller-allocated; standard layout
        // is guaranteed for owned arrays created by this crate.
        let out_s = out.as_slice_mut().ok_or(Error::InvalidParameter {
            name: "out",
            reason: "matrix must be in standard layout".to_string(),
        })?;
        if d >= PARALLEL_DIM_THRESHOLD {
            out_s
                .par_chunks_mut(d)
                .enumerate()
                .for_each(|(m, row)| self.rhs_row(rho_s, m, row));
        } else {
            for (m, row) in out_s.chunks_mut(d).enumerate() {
                self.rhs_row(rho_s, m, row);
            }
        }
        Ok(())
    }

    /// One output row of the banded kernel.
    fn rhs_row(&self, rho: &[Complex64], m: usize, out_row: &mut [Complex64]) {
        let d = self.dim;
        let at = |r: usize, c: usize| rho[r * d + c];
        let lambda = self.lambda;
        for (n, slot) in out_row.iter_mut().enumerate() {
            if !self.has_cross && m == n {
                // Decoupled diagonal: identical arithmetic to the
                // population generator, so the two restrictions agree
                // bit for bit.
                let mut acc = -(self.t_plus[n] + self.t_minus[n]) * at(n, n);
                if n >= 1 {
                    acc += self.t_plus[n - 1] * at(n - 1, n - 1);
                }
                if n + 1 < d {
                    acc += self.t_minus[n + 1] * at(n + 1, n + 1);
                }
                *slot = acc;
                continue;
            }

            // Unitary phase −i(ω/2)(φ(m)+φ(m+1)−φ(n)−φ(n+1))ρ_mn,
            // then the damping sum on the same element.
            let phase = -self.omega / 2.0 * (self.eh[m] - self.eh[n]);
            let mut acc = Complex64::new(0.0, phase) * at(m, n);
            acc -= (self.damp_level[m] + self.damp_level[n]) * at(m, n);

            // Gain from one level up: √(φ(m+1)φ(n+1))(D₊(Ω(m))+D₊(Ω(n))+λ).
            if m + 1 < d && n + 1 < d {
                acc += self.sqrt_phi_prod(m + 1, n + 1)
                    * (self.dp[m] + self.dp[n] + lambda)
                    * at(m + 1, n + 1);
            }
            // Gain from one level down: √(φ(m)φ(n))(D₊(Ω(m−1))+D₊(Ω(n−1))−λ).
            if m >= 1 && n >= 1 {
                acc += self.sqrt_phi_prod(m, n)
                    * (self.dp[m - 1] + self.dp[n - 1] - lambda)
                    * at(m - 1, n - 1);
            }

            if self.has_cross {
                // Counter-rotating couplings carrying D₋ and D_pq.
                if m + 1 < d && n >= 1 {
                    let coef = Complex64::new(
                        self.dm[m] + self.dm[n - 1],
                        -(self.dpq[m] + self.dpq[n - 1]),
                    );
                    acc -= self.sqrt_phi_prod(m + 1, n) * coef * at(m + 1, n - 1);
                }
                if m >= 1 && n + 1 < d {
                    let coef = Complex64::new(
                        self.dm[m - 1] + self.dm[n],
                        self.dpq[m - 1] + self.dpq[n],
                    );
                    acc -= self.sqrt_phi_prod(m, n + 1) * coef * at(m - 1, n + 1);
                }
                if m + 2 < d {
                    let coef = Complex64::new(self.dm[m + 1], -self.dpq[m + 1]);
                    acc += self.sqrt_phi_prod(m + 1, m + 2) * coef * at(m + 2, n);
                }
                if n + 2 < d {
                    let coef = Complex64::new(self.dm[n + 1], self.dpq[n + 1]);
                    acc += self.sqrt_phi_prod(n + 1, n + 2) * coef * at(m, n + 2);
                }
                if m >= 2 {
                    let coef = Complex64::new(self.dm[m - 2], self.dpq[m - 2]);
                    acc += self.sqrt_phi_prod(m - 1, m) * coef * at(m - 2, n);
                }
                if n >= 2 {
                    let coef = Complex64::new(self.dm[n - 2], -self.dpq[n - 2]);
                    acc += self.sqrt_phi_prod(n - 1, n) * coef * at(m, n - 2);
                }
            }

            *slot = acc;
        }
    }

    /// √(φ(i)φ(j)) with both indices < dim.
    fn sqrt_phi_prod(&self, i: usize, j: usize) -> f64 {
        self.sqrt_phi[i] * self.sqrt_phi[j]
    }

    /// Rates of the diagonal restriction (drop convention).
    pub fn rates(&self) -> (&[f64], &[f64]) {
        (&self.t_plus, &self.t_minus)
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }
}

/// dρ/dt for a validated density matrix (drop truncation).
pub fn apply_full_generator(
    model: &OscillatorModel,
    bath: &BathModel,
    rho: &DensityMatrix,
) -> Result<Array2<Complex64>> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: rho.dim() });
    }
    FullGenerator::new(model, bath)?.apply(rho.matrix())
}

/// Tridiagonal birth–death generator for populations:
/// dP(n)/dt = t₊(n−1)P(n−1) + t₋(n+1)P(n+1) − (t₊(n)+t₋(n))P(n).
#[derive(Debug, Clone)]
pub struct PopulationGenerator {
    t_plus: Vec<f64>,
    t_minus: Vec<f64>,
    policy: TruncationPolicy,
}

impl PopulationGenerator {
    pub fn new(model: &OscillatorModel, bath: &BathModel, policy: TruncationPolicy) -> Result<Self> {
        let rates = TransitionRates::build(model, bath)?;
        let mut t_plus = rates.t_plus;
        if policy == TruncationPolicy::Reflecting {
            *t_plus.last_mut().expect("dim >= 3") = 0.0;
        }
        Ok(Self { t_plus, t_minus: rates.t_minus, policy })
    }

    pub fn dim(&self) -> usize {
        self.t_plus.len()
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    /// Rates actually used (after any reflecting adjustment).
    pub fn rates(&self) -> (&[f64], &[f64]) {
        (&self.t_plus, &self.t_minus)
    }

    /// dP/dt for a raw population vector.
    pub fn apply(&self, p: &Array1<f64>) -> Result<Array1<f64>> {
        let mut out = Array1::zeros(self.dim());
        self.apply_into(p, &mut out)?;
        Ok(out)
    }

    /// dP/dt written into a preallocated output.
    pub fn apply_into(&self, p: &Array1<f64>, out: &mut Array1<f64>) -> Result<()> {
        let d = self.dim();
        if p.len() != d || out.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: p.len() });
        }
        for n in 0..d {
            let mut acc = -(self.t_plus[n] + self.t_minus[n]) * p[n];
            if n >= 1 {
                acc += self.t_plus[n - 1] * p[n - 1];
            }
            if n + 1 < d {
                acc += self.t_minus[n + 1] * p[n + 1];
            }
            out[n] = acc;
        }
        Ok(())
    }

    /// Column sums of the generator matrix; identically zero for the
    /// reflecting convention. Gains are accumulated in the same order as
    /// the diagonal loss term so interior columns cancel exactly.
    pub fn column_sums(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| {
                let mut gain = 0.0;
                if j + 1 < d {
                    gain += self.t_plus[j];
                }
                if j >= 1 {
                    gain += self.t_minus[j];
                }
                gain - (self.t_plus[j] + self.t_minus[j])
            })
            .collect()
    }

    /// Dense matrix form, for inspection and small-dimension tests.
    pub fn to_dense(&self) -> Array2<f64> {
        let d = self.dim();
        let mut g = Array2::zeros((d, d));
        for n in 0..d {
            g[[n, n]] = -(self.t_plus[n] + self.t_minus[n]);
            if n >= 1 {
                g[[n, n - 1]] = self.t_plus[n - 1];
            }
            if n + 1 < d {
                g[[n, n + 1]] = self.t_minus[n + 1];
            }
        }
        g
    }
}

/// Birth–death generator with the requested truncation convention.
pub fn build_population_generator(
    model: &OscillatorModel,
    bath: &BathModel,
    policy: TruncationPolicy,
) -> Result<PopulationGenerator> {
    PopulationGenerator::new(model, bath, policy)
}

/// Master-equation right-hand side assembled from explicit operator
/// products:
///
/// ```text
/// dρ/dt = −i[H,ρ] + X + X†,
/// X = [[D₊(Ω(N))·A, ρ], A†] − [[A†·(D₋(Ω(N)) + i·D_pq(Ω(N))), ρ], A†]
///     − (λ/2)[A†, {A, ρ}],
/// ```
///
/// with A the deformed lowering operator. Slower than the banded kernel
/// and valid on Hermitian states; used as a cross-validation oracle.
pub fn operator_form_rhs(
    model: &OscillatorModel,
    bath: &BathModel,
    rho: &Array2<Complex64>,
) -> Result<Array2<Complex64>> {
    let d = model.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: rho.nrows() });
    }
    let (a, adag, _) = model.ladder_matrices();
    let h = model.hamiltonian_matrix();
    let mut dp_diag: Array2<Complex64> = Array2::zeros((d, d));
    let mut dmq_diag: Array2<Complex64> = Array2::zeros((d, d));
    for n in 0..d {
        let x = model.omega_shift(n);
        dp_diag[[n, n]] = Complex64::new(bath.d_plus(x)?, 0.0);
        dmq_diag[[n, n]] = Complex64::new(bath.d_minus(x)?, bath.d_pq(x)?);
    }

    let comm = |x: &Array2<Complex64>, y: &Array2<Complex64>| x.dot(y) - y.dot(x);
    let acomm = |x: &Array2<Complex64>, y: &Array2<Complex64>| x.dot(y) + y.dot(x);
    let adjoint = |x: &Array2<Complex64>| x.t().mapv(|z| z.conj());

    let dpa = dp_diag.dot(&a);
    let adag_dmq = adag.dot(&dmq_diag);
    let x = comm(&comm(&dpa, rho), &adag) - comm(&comm(&adag_dmq, rho), &adag)
        - comm(&adag, &acomm(&a, rho)).mapv(|z| z * (bath.lambda() / 2.0));

    let unitary = comm(&h, rho).mapv(|z| z * Complex64::new(0.0, -1.0));
    Ok(unitary + &x + adjoint(&x))
}
