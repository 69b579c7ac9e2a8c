//! Steady states, detailed balance, partition functions, and
//! equilibrium-energy summaries.
//!
//! The birth–death equation has the product-form fixed point
//!
//! ```text
//! P_ss(n) ∝ Π_{k=1..n} (2D₊(Ω(k−1)) − λ) / (2D₊(Ω(k−1)) + λ),
//! ```
//!
//! which for a thermal bath collapses to the deformed Boltzmann
//! distribution P(n) ∝ e^{−E_n/T}. Infinite sums of the untruncated
//! problem are replaced by truncated sums carrying explicit tail
//! estimates; T = 0 is always an exact branch (δ_{n,0}, E = ω/2) so no
//! overflowing exponential is evaluated.

use ndarray::Array1;

use crate::algebra::OscillatorModel;
use crate::bath::{coth, BathModel};
use crate::error::{Error, Result};
use crate::liouvillian::{PopulationDist, TransitionRates};

/// Largest basis size the auto-extended equilibrium sums will grow to.
const MAX_AUTO_LEVELS: usize = 4096;

/// Relative tail mass below which the auto-extended sums stop.
const AUTO_TAIL: f64 = 1e-12;

/// E_n for arbitrary n through the deformation itself (not limited to
/// the model's cached range).
fn energy_at(model: &OscillatorModel, n: usize) -> Result<f64> {
    let def = model.deformation();
    Ok(model.omega() / 2.0 * (def.phi(n + 1)? + def.phi(n)?))
}

/// Steady state of the population equation on the truncated basis,
/// from the product form, normalized. Fails when some ratio is negative
/// (the bath cannot support nonnegative populations) or when all rates
/// vanish (λ = 0 for a thermal bath leaves no relaxation at all).
pub fn steady_populations(model: &OscillatorModel, bath: &BathModel) -> Result<PopulationDist> {
    let d = model.dim();
    let lambda = bath.lambda();
    let mut p = Array1::zeros(d);
    p[0] = 1.0;
    let mut weight = 1.0f64;
    for n in 1..d {
        let d_plus = bath.d_plus(model.omega_shift(n - 1))?;
        let up = 2.0 * d_plus - lambda;
        let down = 2.0 * d_plus + lambda;
        if down == 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: "all transition rates vanish; no steady state to select".to_string(),
            });
        }
        let ratio = up / down;
        if ratio < 0.0 {
            return Err(Error::NegativeSteadyRatio { n, ratio });
        }
        weight *= ratio;
        p[n] = weight;
    }
    let total = p.sum();
    p.mapv_inplace(|v| v / total);
    PopulationDist::new(p)
}

/// max_n |t₋(n)P(n) − t₊(n−1)P(n−1)| over n ≥ 1, divided by the largest
/// flux magnitude (0 when every flux vanishes). The steady state makes
/// this vanish identically.
pub fn detailed_balance_residual(
    model: &OscillatorModel,
    bath: &BathModel,
    p: &PopulationDist,
) -> Result<f64> {
    if p.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: p.dim() });
    }
    let rates = TransitionRates::build(model, bath)?;
    let values = p.values();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for n in 1..model.dim() {
        let down_flux = rates.t_minus(n) * values[n];
        let up_flux = rates.t_plus(n - 1) * values[n - 1];
        worst = worst.max((down_flux - up_flux).abs());
        scale = scale.max(down_flux.abs()).max(up_flux.abs());
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// Deformed Boltzmann distribution P(n) ∝ e^{−E_n/T} on the truncated
/// basis. T = 0 returns δ_{n,0} exactly; T < 0 is rejected.
pub fn thermal_boltzmann(model: &OscillatorModel, temperature: f64) -> Result<PopulationDist> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must be >= 0, got {temperature}"),
        });
    }
    let d = model.dim();
    if temperature == 0.0 {
        return PopulationDist::delta(d, 0);
    }
    let e0 = model.energy_level(0)?;
    let mut p = Array1::zeros(d);
    for n in 0..d {
        // exponents relative to E_0 avoid underflow at low temperature
        p[n] = (-(model.energy_level(n)? - e0) / temperature).exp();
    }
    let total = p.sum();
    p.mapv_inplace(|v| v / total);
    PopulationDist::new(p)
}

/// Truncated partition sum with a geometric tail bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    /// Σ_{n<terms_used} e^{−E_n/T}.
    pub value: f64,
    pub terms_used: usize,
    /// Geometric bound on the dropped tail, from the last two terms'
    /// ratio; valid when level spacings keep growing past the cut.
    pub tail_bound: f64,
}

/// Partial partition sum Z ≈ Σ e^{−E_n/T} over `n_terms` levels.
/// Requires T > 0 and n_terms ≥ 2; fails when the last two terms do not
/// decay (tail ratio ≥ 1), since then no geometric bound exists.
pub fn partition_function(
    model: &OscillatorModel,
    temperature: f64,
    n_terms: usize,
) -> Result<PartitionResult> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must be > 0, got {temperature}"),
        });
    }
    if n_terms < 2 {
        return Err(Error::InvalidParameter {
            name: "n_terms",
            reason: format!("needs at least 2 terms for a tail estimate, got {n_terms}"),
        });
    }
    let mut value = 0.0f64;
    let mut prev = 0.0f64;
    let mut last = 0.0f64;
    for n in 0..n_terms {
        let term = (-energy_at(model, n)? / temperature).exp();
        value += term;
        prev = last;
        last = term;
    }
    if last == 0.0 {
        // terms underflowed: the rest of the sum is zero at f64 precision
        return Ok(PartitionResult { value, terms_used: n_terms, tail_bound: 0.0 });
    }
    let ratio = last / prev;
    if !(ratio < 1.0) {
        return Err(Error::NonDecayingPartitionTerms { ratio, terms: n_terms });
    }
    Ok(PartitionResult { value, terms_used: n_terms, tail_bound: last * ratio / (1.0 - ratio) })
}

/// Deformation-sensitivity coefficient of the equilibrium energy,
///
/// ```text
/// c(β) = e^β/(e^β−1)² · [(e^β+1)/(e^β−1) − β(e^{2β}+4e^β+1)/(e^β−1)²],
/// ```
///
/// evaluated through u = e^{−β} so large β neither overflows nor
/// cancels: c = u/(1−u)²·[(1+u)/(1−u) − β(1+4u+u²)/(1−u)²]. Behaves
/// like −4/β³ as β → 0 and vanishes as β → ∞.
pub fn c_coefficient(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("must be > 0, got {beta}"),
        });
    }
    let u = (-beta).exp();
    let one_minus_u = -f64::exp_m1(-beta);
    let pref = u / (one_minus_u * one_minus_u);
    let bracket_term = (1.0 + u) / one_minus_u
        - beta * (1.0 + 4.0 * u + u * u) / (one_minus_u * one_minus_u);
    Ok(pref * bracket_term)
}

/// Equilibrium energy, numerically and in the small-deformation formula.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Σ E_n e^{−E_n/T} / Σ e^{−E_n/T}, auto-extending the basis for
    /// unbounded deformations until the tail is negligible.
    pub energy_numeric: f64,
    /// (ω/2)(coth(ω/2T) + τ²·c(ω/T)); τ is taken as 0 for the identity
    /// and for custom tables (which carry no τ).
    pub energy_smalltau: f64,
    /// c(ω/T) entering the small-τ formula (0 in the T = 0 branch).
    pub c_coefficient: f64,
    /// ω/T (∞ in the T = 0 branch).
    pub beta: f64,
}

impl EquilibriumReport {
    /// energy_numeric − energy_smalltau.
    pub fn difference(&self) -> f64 {
        self.energy_numeric - self.energy_smalltau
    }
}

/// Long-time energy ⟨H⟩ in the thermal state at the given temperature.
/// T = 0 is the exact ground-state branch; T > 0 compares the Boltzmann
/// average against the small-deformation closed formula.
pub fn equilibrium_energy(model: &OscillatorModel, temperature: f64) -> Result<EquilibriumReport> {
    if !(temperature >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must be >= 0, got {temperature}"),
        });
    }
    let omega = model.omega();
    if temperature == 0.0 {
        let e0 = model.energy_level(0)?;
        return Ok(EquilibriumReport {
            energy_numeric: e0,
            energy_smalltau: e0,
            c_coefficient: 0.0,
            beta: f64::INFINITY,
        });
    }

    let beta = omega / temperature;
    let c = c_coefficient(beta)?;
    let tau = model.deformation().tau().unwrap_or(0.0);
    let energy_smalltau = omega / 2.0 * (coth(omega / (2.0 * temperature)) + tau * tau * c);

    let e0 = model.energy_level(0)?;
    let mut weight_sum = 0.0f64;
    let mut energy_sum = 0.0f64;
    let mut prev_w = 0.0f64;
    let mut n = 0usize;
    loop {
        let e_n = energy_at(model, n)?;
        let w = (-(e_n - e0) / temperature).exp();
        weight_sum += w;
        energy_sum += e_n * w;
        let past_basis = n >= model.n_max();
        if past_basis {
            let ratio = w / prev_w;
            let tail = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
            if tail < AUTO_TAIL * weight_sum || !model.deformation().is_unbounded() {
                break;
            }
            if n + 1 >= MAX_AUTO_LEVELS {
                break;
            }
        }
        prev_w = w;
        n += 1;
    }

    Ok(EquilibriumReport {
        energy_numeric: energy_sum / weight_sum,
        energy_smalltau,
        c_coefficient: c,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Deformation;
    use crate::liouvillian::{PopulationGenerator, TruncationPolicy};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array1;

    fn q_model(tau: f64, n_max: usize) -> OscillatorModel {
        OscillatorModel::new(1.0, Deformation::Q { tau }, n_max).unwrap()
    }

    #[test]
    fn steady_identity_thermal_ratios_are_boltzmann() {
        let model = OscillatorModel::new(1.0, Deformation::Identity, 14).unwrap();
        let bath = BathModel::thermal(0.7, 1.0, 1.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        let v = p.values();
        for n in 0..14 {
            assert_relative_eq!(v[n + 1] / v[n], (-1.0f64).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn steady_zero_temperature_is_exact_ground_state() {
        let model = q_model(0.2, 10);
        let bath = BathModel::thermal(0.9, 0.0, 1.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        assert_eq!(p.values()[0], 1.0);
        for n in 1..=10 {
            assert_eq!(p.values()[n], 0.0);
        }
    }

    #[test]
    fn steady_q_case_ratios_follow_level_spacing() {
        let model = q_model(0.3, 12);
        let temperature = 1.4;
        let bath = BathModel::thermal(0.5, temperature, 1.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        let v = p.values();
        for n in 1..=12 {
            let gap = model.energy_level(n).unwrap() - model.energy_level(n - 1).unwrap();
            assert_relative_eq!(v[n] / v[n - 1], (-gap / temperature).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn steady_state_annihilates_population_generator() {
        let model = q_model(0.1, 16);
        let bath = BathModel::thermal(1.0, 1.0, 1.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        let gen = PopulationGenerator::new(&model, &bath, TruncationPolicy::Reflecting).unwrap();
        let dp = gen.apply(p.values()).unwrap();
        for v in dp.iter() {
            assert!(v.abs() <= 1e-12, "steady state must be stationary, got {v}");
        }
    }

    #[test]
    fn steady_rejects_rateless_thermal_bath() {
        let model = q_model(0.1, 6);
        let bath = BathModel::thermal(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            steady_populations(&model, &bath),
            Err(Error::InvalidParameter { name: "lambda", .. })
        ));
    }

    #[test]
    fn steady_rejects_negative_ratio() {
        // d_plus = λ/4 < λ/2 makes every up-rate negative
        let model = OscillatorModel::new(1.0, Deformation::Identity, 6).unwrap();
        let bath = BathModel::constant(1.0, 1.0, 0.125, 0.125, 0.0).unwrap();
        assert!(matches!(
            steady_populations(&model, &bath),
            Err(Error::NegativeSteadyRatio { n: 1, .. })
        ));
    }

    #[test]
    fn steady_constant_bath_without_dissipation_is_uniform() {
        // λ = 0 with nonzero diffusion: every ratio is exactly 1
        let model = OscillatorModel::new(1.0, Deformation::Identity, 4).unwrap();
        let bath = BathModel::constant(0.0, 1.0, 0.5, 0.5, 0.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        for v in p.values() {
            assert_eq!(*v, 0.2);
        }
    }

    #[test]
    fn detailed_balance_of_steady_state() {
        let model = q_model(0.25, 14);
        let bath = BathModel::thermal(0.8, 1.2, 1.0).unwrap();
        let p = steady_populations(&model, &bath).unwrap();
        assert!(detailed_balance_residual(&model, &bath, &p).unwrap() <= 1e-14);
    }

    #[test]
    fn detailed_balance_flags_non_steady_states() {
        let model = OscillatorModel::new(1.0, Deformation::Identity, 7).unwrap();
        let bath = BathModel::thermal(0.8, 1.0, 1.0).unwrap();
        let uniform = PopulationDist::new(Array1::from_elem(8, 0.125)).unwrap();
        assert!(detailed_balance_residual(&model, &bath, &uniform).unwrap() > 0.1);
    }

    #[test]
    fn boltzmann_matches_steady_state_independent_of_lambda() {
        let model = q_model(0.1, 20);
        let temperature = 1.0;
        let boltzmann = thermal_boltzmann(&model, temperature).unwrap();
        for lambda in [0.3, 1.0, 3.0] {
            let bath = BathModel::thermal(lambda, temperature, 1.0).unwrap();
            let steady = steady_populations(&model, &bath).unwrap();
            for (a, b) in steady.values().iter().zip(boltzmann.values()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn boltzmann_identity_is_geometric() {
        let model = OscillatorModel::new(1.0, Deformation::Identity, 12).unwrap();
        let p = thermal_boltzmann(&model, 0.8).unwrap();
        let v = p.values();
        for n in 0..12 {
            assert_relative_eq!(v[n + 1] / v[n], (-1.0 / 0.8f64).exp(), max_relative = 1e-13);
        }
    }

    #[test]
    fn boltzmann_temperature_branches() {
        let model = q_model(0.2, 8);
        let frozen = thermal_boltzmann(&model, 0.0).unwrap();
        assert_eq!(frozen.values()[0], 1.0);
        assert!(thermal_boltzmann(&model, -0.5).is_err());
    }

    #[test]
    fn partition_identity_frozen_value() {
        // Z = 1/(2 sinh(ω/2T)) at ω = 1, T = 1
        let model = OscillatorModel::new(1.0, Deformation::Identity, 4).unwrap();
        let z = partition_function(&model, 1.0, 60).unwrap();
        let exact = 0.959_517_375_667_471_9;
        assert!(z.tail_bound < 1e-12);
        assert!((z.value - exact).abs() <= z.tail_bound + 1e-15);
        assert_eq!(z.terms_used, 60);
    }

    #[test]
    fn partition_tail_bound_covers_more_terms() {
        let model = q_model(0.1, 4);
        let short = partition_function(&model, 1.0, 12).unwrap();
        let long = partition_function(&model, 1.0, 48).unwrap();
        assert!(
            (long.value - short.value).abs() <= short.tail_bound,
            "tail bound {} must cover the remainder {}",
            short.tail_bound,
            (long.value - short.value).abs()
        );
    }

    #[test]
    fn partition_q_deformation_lowers_the_sum() {
        let identity = OscillatorModel::new(1.0, Deformation::Identity, 4).unwrap();
        let q = q_model(0.1, 4);
        let zi = partition_function(&identity, 1.0, 60).unwrap();
        let zq = partition_function(&q, 1.0, 60).unwrap();
        assert!(zq.value < zi.value, "deformed levels sit higher, so Z must shrink");
    }

    #[test]
    fn partition_low_temperature_recovers_ground_energy() {
        let model = OscillatorModel::new(1.0, Deformation::Identity, 4).unwrap();
        let temperature = 0.01;
        let z = partition_function(&model, temperature, 8).unwrap();
        assert_relative_eq!(-temperature * z.value.ln(), 0.5, max_relative = 1e-6);
    }

    #[test]
    fn partition_rejects_bad_inputs() {
        let model = OscillatorModel::new(1.0, Deformation::Identity, 4).unwrap();
        assert!(partition_function(&model, 0.0, 10).is_err());
        assert!(partition_function(&model, -1.0, 10).is_err());
        assert!(partition_function(&model, 1.0, 1).is_err());
        // energies that fall at the end make the tail ratio ≥ 1
        let falling = OscillatorModel::new(
            1.0,
            Deformation::Custom { phi: vec![0.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.25] },
            4,
        )
        .unwrap();
        assert!(matches!(
            partition_function(&falling, 1.0, 5),
            Err(Error::NonDecayingPartitionTerms { .. })
        ));
    }

    #[test]
    fn c_coefficient_frozen_and_limits() {
        assert_relative_eq!(
            c_coefficient(1.0).unwrap(),
            -4.014_218_029_511_773,
            max_relative = 1e-14
        );
        // small β: c ≈ −4/β³
        let beta = 1e-3;
        assert_relative_eq!(
            c_coefficient(beta).unwrap() * beta.powi(3),
            -4.0,
            max_relative = 1e-12
        );
        // large β: c → 0
        assert!(c_coefficient(50.0).unwrap().abs() < 1e-18);
        assert!(c_coefficient(500.0).unwrap().abs() < 1e-200);
        assert!(c_coefficient(0.0).is_err());
        assert!(c_coefficient(-1.0).is_err());
    }

    #[test]
    fn equilibrium_zero_temperature_branch() {
        let model = q_model(0.3, 8);
        let report = equilibrium_energy(&model, 0.0).unwrap();
        assert_eq!(report.energy_numeric, 0.5);
        assert_eq!(report.energy_smalltau, 0.5);
        assert_eq!(report.c_coefficient, 0.0);
        assert!(report.beta.is_infinite());
    }

    #[test]
    fn equilibrium_identity_matches_coth_law() {
        // ω = 1, T = 1 → E = (1/2)coth(1/2)
        let model = OscillatorModel::new(1.0, Deformation::Identity, 6).unwrap();
        let report = equilibrium_energy(&model, 1.0).unwrap();
        let exact = 1.081_976_706_869_326_4;
        assert_relative_eq!(report.energy_numeric, exact, max_relative = 1e-10);
        assert_relative_eq!(report.energy_smalltau, exact, max_relative = 1e-14);
        assert_eq!(report.beta, 1.0);
    }

    #[test]
    fn equilibrium_small_tau_formula_tracks_numeric_average() {
        let model = q_model(0.01, 8);
        let report = equilibrium_energy(&model, 1.0).unwrap();
        // the τ² term is ~2e−4; the τ⁴ remainder must be far smaller
        assert!(report.difference().abs() < 1e-6, "difference {}", report.difference());
        assert!(report.energy_numeric >= 0.5);
    }

    #[test]
    fn equilibrium_rejects_negative_temperature() {
        let model = q_model(0.1, 6);
        assert!(equilibrium_energy(&model, -0.1).is_err());
    }

    #[test]
    fn level_spacing_identity_links_spectrum_and_shift() {
        // E_n − E_{n−1} = ω·Ω(n−1) for every deformation
        let models = [
            OscillatorModel::new(1.3, Deformation::Identity, 9).unwrap(),
            OscillatorModel::new(0.7, Deformation::Q { tau: 0.4 }, 9).unwrap(),
            OscillatorModel::new(1.0, Deformation::Custom {
                phi: vec![0.0, 1.0, 2.5, 3.1, 4.9, 5.2, 7.0, 8.1, 9.9, 11.0, 12.5, 13.0],
            }, 9)
            .unwrap(),
        ];
        for model in &models {
            for n in 1..=9 {
                let gap = model.energy_level(n).unwrap() - model.energy_level(n - 1).unwrap();
                assert_abs_diff_eq!(
                    gap,
                    model.omega() * model.omega_shift(n - 1),
                    epsilon = 1e-13
                );
            }
        }
    }
}
