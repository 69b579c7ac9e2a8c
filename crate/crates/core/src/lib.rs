//! Damped deformed quantum harmonic oscillator on a truncated Fock basis.
//!
//! The crate models an oscillator whose ladder operators are deformed by
//! a function f of the number operator (A = a·f(N)) and which is coupled
//! to an environment described by diffusion coefficients and a constant
//! dissipation rate λ. It provides, in natural units (ħ = k = m = 1):
//!
//! * [`algebra`] — deformation functions φ(n) = n·f²(n), the deformed
//!   spectrum, and ladder/Hamiltonian matrices on |0⟩..|n_max⟩;
//! * [`bath`] — thermal, constant, and tabulated environment
//!   coefficients D_pp, D_qq, D_pq and the derived combinations D_±;
//! * [`liouvillian`] — the dissipative generator for density matrices
//!   and its classical birth–death restriction to populations;
//! * [`dynamics`] — fixed-step RK4 and adaptive RK45 time evolution with
//!   sampled observables, plus closed-form and moment-equation
//!   diagnostics;
//! * [`stationary`] — steady-state populations, detailed balance,
//!   partition functions, and equilibrium-energy summaries.

pub mod algebra;
pub mod bath;
pub mod dynamics;
pub mod error;
pub mod liouvillian;
mod ode;
pub mod stationary;

pub use algebra::{bracket, Deformation, OscillatorModel};
pub use bath::{coth, validate_bath, BathCheck, BathModel, CoefficientTable, ValidationReport};
pub use dynamics::{
    coherence_rhs, evolve_density, evolve_populations, mean_number_closed_form,
    mean_number_closed_form_expanded, mean_number_rhs, mean_number_rhs_populations,
    uniform_sample_times, FinalState, IntegratorConfig, Method, Snapshots, Trajectory,
    DEFAULT_ATOL, DEFAULT_RTOL,
};
pub use error::{Error, Result};
pub use liouvillian::{
    apply_full_generator, build_population_generator, operator_form_rhs, transition_rates,
    DensityMatrix, FullGenerator, PopulationDist, PopulationGenerator, TransitionRates,
    TruncationPolicy,
};
pub use stationary::{
    c_coefficient, detailed_balance_residual, equilibrium_energy, partition_function,
    steady_populations, thermal_boltzmann, EquilibriumReport, PartitionResult,
};
