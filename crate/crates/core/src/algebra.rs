//! Deformed oscillator algebra on a truncated Fock basis.
//!
//! A deformation replaces the ladder operators a, a† by A = a·f(N) and
//! A† = f(N)a†, where f is a positive function of the number operator.
//! Every formula in this crate accesses f only through the product
//! φ(n) = n·f²(n), which is finite at n = 0 and singles out the physical
//! content of the deformation:
//!
//! * identity:      φ(n) = n (ordinary oscillator),
//! * q-deformation: φ(n) = [n] = sinh(nτ)/sinh(τ) with τ = ln q,
//! * custom:        φ supplied as an explicit table.
//!
//! The Hamiltonian H = (ω/2)(AA† + A†A) is diagonal in the number basis
//! with eigenvalues E_n = (ω/2)(φ(n+1) + φ(n)), and the level-dependent
//! frequency shift Ω(n) = (φ(n+2) − φ(n))/2 controls which argument the
//! environment coefficients are evaluated at. Natural units ħ = k = m = 1
//! are used throughout the crate.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The q-deformed integer [n] = sinh(nτ)/sinh(τ).
///
/// Continuous at τ = 0, where it equals n, and even in τ (so q and 1/q
/// describe the same deformation). [1] = 1 for every τ.
pub fn bracket(tau: f64, n: u32) -> f64 {
    if tau == 0.0 {
        return f64::from(n);
    }
    (f64::from(n) * tau).sinh() / tau.sinh()
}

/// Deformation function, accessed through φ(n) = n·f²(n).
#[derive(Debug, Clone, PartialEq)]
pub enum Deformation {
    /// φ(n) = n.
    Identity,
    /// φ(n) = [n] with τ = ln q; `tau = 0` reproduces the identity.
    Q { tau: f64 },
    /// Explicit φ table indexed by n. Must satisfy φ(0) = 0 and
    /// φ(n) > 0 for n ≥ 1, and be long enough for every consumer
    /// (an `OscillatorModel` with truncation n_max needs n_max + 3
    /// entries so that Ω(n_max) is defined).
    Custom { phi: Vec<f64> },
}

impl Deformation {
    /// φ(n). Errors only when a custom table is too short.
    pub fn phi(&self, n: usize) -> Result<f64> {
        match self {
            Deformation::Identity => Ok(n as f64),
            Deformation::Q { tau } => Ok(bracket(*tau, n as u32)),
            Deformation::Custom { phi } => {
                phi.get(n).copied().ok_or(Error::PhiIndexOutOfRange { n, len: phi.len() })
            }
        }
    }

    /// Frequency shift Ω(n) = (φ(n+2) − φ(n))/2; identically 1 for the
    /// identity deformation.
    pub fn omega_shift(&self, n: usize) -> Result<f64> {
        Ok((self.phi(n + 2)? - self.phi(n)?) / 2.0)
    }

    /// τ of the q-case, 0 for the identity, `None` for custom tables.
    pub fn tau(&self) -> Option<f64> {
        match self {
            Deformation::Identity => Some(0.0),
            Deformation::Q { tau } => Some(*tau),
            Deformation::Custom { .. } => None,
        }
    }

    /// Whether φ can be evaluated at arbitrarily large n (identity and
    /// q-case) as opposed to being limited by a table.
    pub fn is_unbounded(&self) -> bool {
        !matches!(self, Deformation::Custom { .. })
    }

    fn validate_custom(&self, needed_len: usize) -> Result<()> {
        if let Deformation::Custom { phi } = self {
            if phi.len() < needed_len {
                return Err(Error::InvalidPhiTable {
                    reason: format!("table has {} entries, needs {needed_len}", phi.len()),
                });
            }
            if phi[0] != 0.0 {
                return Err(Error::InvalidPhiTable {
                    reason: format!("phi(0) = {} but must be 0", phi[0]),
                });
            }
            if let Some(k) = phi[1..].iter().position(|v| !(*v > 0.0)) {
                return Err(Error::InvalidPhiTable {
                    reason: format!("phi({}) = {} but must be > 0", k + 1, phi[k + 1]),
                });
            }
        }
        Ok(())
    }
}

/// A deformed oscillator with frequency ω on the truncated basis
/// |0⟩..|n_max⟩ (dimension d = n_max + 1).
///
/// φ(0..=n_max+2) is cached at construction, so that all boundary
/// coefficients up to Ω(n_max) are available without further table
/// lookups.
#[derive(Debug, Clone)]
pub struct OscillatorModel {
    omega: f64,
    deformation: Deformation,
    n_max: usize,
    phi: Vec<f64>,
}

impl OscillatorModel {
    /// Builds a model. Requires ω > 0 and n_max ≥ 2 (the dissipative
    /// generator couples ρ_{m±2,n}, so smaller bases are degenerate);
    /// custom φ tables are validated here.
    pub fn new(omega: f64, deformation: Deformation, n_max: usize) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be > 0, got {omega}"),
            });
        }
        if n_max < 2 {
            return Err(Error::InvalidParameter {
                name: "n_max",
                reason: format!("must be >= 2, got {n_max}"),
            });
        }
        if !deformation.tau().map_or(true, f64::is_finite) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: "must be finite".to_string(),
            });
        }
        deformation.validate_custom(n_max + 3)?;
        let phi = (0..=n_max + 2).map(|n| deformation.phi(n)).collect::<Result<Vec<_>>>()?;
        Ok(Self { omega, deformation, n_max, phi })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn deformation(&self) -> &Deformation {
        &self.deformation
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Basis dimension d = n_max + 1.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Cached φ(n) for 0 ≤ n ≤ n_max + 2.
    ///
    /// # Panics
    /// If n > n_max + 2; callers inside the crate stay within the cache
    /// by construction.
    pub fn phi(&self, n: usize) -> f64 {
        self.phi[n]
    }

    /// Ω(n) = (φ(n+2) − φ(n))/2 for 0 ≤ n ≤ n_max.
    pub fn omega_shift(&self, n: usize) -> f64 {
        (self.phi[n + 2] - self.phi[n]) / 2.0
    }

    /// E_n = (ω/2)(φ(n+1) + φ(n)) for 0 ≤ n ≤ n_max.
    pub fn energy_level(&self, n: usize) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::LevelOutOfRange { n, n_max: self.n_max });
        }
        Ok(self.omega / 2.0 * (self.phi[n + 1] + self.phi[n]))
    }

    /// All levels E_0..E_{n_max}.
    pub fn spectrum(&self) -> Vec<f64> {
        (0..=self.n_max)
            .map(|n| self.omega / 2.0 * (self.phi[n + 1] + self.phi[n]))
            .collect()
    }

    /// Matrix realizations (A, A†, N) on the truncated basis:
    /// A[n−1, n] = √φ(n), A† its conjugate transpose, N = diag(n).
    pub fn ladder_matrices(&self) -> (Array2<Complex64>, Array2<Complex64>, Array2<Complex64>) {
        let d = self.dim();
        let mut a = Array2::zeros((d, d));
        let mut adag = Array2::zeros((d, d));
        let mut nop = Array2::zeros((d, d));
        for n in 1..d {
            let amp = Complex64::new(self.phi[n].sqrt(), 0.0);
            a[[n - 1, n]] = amp;
            adag[[n, n - 1]] = amp;
        }
        for n in 0..d {
            nop[[n, n]] = Complex64::new(n as f64, 0.0);
        }
        (a, adag, nop)
    }

    /// H = diag(E_n); equals (ω/2)(AA† + A†A) away from the truncation
    /// boundary.
    pub fn hamiltonian_matrix(&self) -> Array2<Complex64> {
        let d = self.dim();
        let mut h = Array2::zeros((d, d));
        for n in 0..d {
            h[[n, n]] = Complex64::new(self.omega / 2.0 * (self.phi[n + 1] + self.phi[n]), 0.0);
        }
        h
    }
}
