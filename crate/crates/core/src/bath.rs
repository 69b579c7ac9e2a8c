//! Environment coefficient models.
//!
//! The environment enters the master equation through diffusion
//! coefficients D_pp, D_qq, D_pq evaluated at level-dependent frequency
//! arguments Ω(n), together with a constant dissipation rate λ. All
//! generator formulas consume the combinations
//!
//! ```text
//! D_±(x) = (1/2)(ω·D_qq(x) ± D_pp(x)/ω)
//! ```
//!
//! The thermal preset ties the coefficients to a heat bath at
//! temperature T:
//!
//! ```text
//! ω·D_qq(x) = D_pp(x)/ω = (λ/2)·coth(ωx/(2T)),   D_pq = 0,
//! ```
//!
//! so D_+(x) = (λ/2)·coth(ωx/(2T)), D_− ≡ D_pq ≡ 0. At T = 0 the
//! analytic limit coth → 1 is taken exactly: D_+ = λ/2 for every
//! argument and no overflowing exponential is ever evaluated.
//!
//! Custom baths are supported as constant coefficients or as tabulated
//! (x, value) pairs with linear interpolation (clamped to the endpoint
//! values outside the tabulated range).

use crate::algebra::OscillatorModel;
use crate::error::{Error, Result};

/// Hyperbolic cotangent for y > 0, in a form that is stable for small y
/// and clamps the overflow region: y > 700 returns exactly 1.
pub fn coth(y: f64) -> f64 {
    if y > 700.0 {
        return 1.0;
    }
    1.0 + 2.0 / f64::exp_m1(2.0 * y)
}

/// Tabulated scalar coefficient with linear interpolation between nodes
/// and flat extrapolation outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl CoefficientTable {
    /// Builds a table from (x, value) pairs. Requires at least one pair,
    /// finite entries, and strictly increasing x.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter {
                name: "coefficient_table",
                reason: "needs at least one (x, value) pair".to_string(),
            });
        }
        for (x, v) in &points {
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "coefficient_table",
                    reason: format!("non-finite entry ({x}, {v})"),
                });
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter {
                name: "coefficient_table",
                reason: "x nodes must be strictly increasing".to_string(),
            });
        }
        let (xs, values) = points.into_iter().unzip();
        Ok(Self { xs, values })
    }

    /// Constant table (a single node).
    pub fn constant(value: f64) -> Self {
        Self { xs: vec![0.0], values: vec![value] }
    }

    /// Linear interpolation, clamped to the end values outside the range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        // xs strictly increasing and x strictly inside the range
        let hi = self.xs.partition_point(|&node| node < x);
        let (x0, x1) = (self.xs[hi - 1], self.xs[hi]);
        let (v0, v1) = (self.values[hi - 1], self.values[hi]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }
}

/// Functional form of the diffusion coefficients.
#[derive(Debug, Clone)]
enum BathKind {
    Thermal { temperature: f64 },
    Constant { dpp: f64, dqq: f64, dpq: f64 },
    Table { dpp: CoefficientTable, dqq: CoefficientTable, dpq: CoefficientTable },
}

/// Dissipation rate λ plus diffusion coefficients D_pp, D_qq, D_pq as
/// functions of the frequency argument, in natural units.
#[derive(Debug, Clone)]
pub struct BathModel {
    lambda: f64,
    omega: f64,
    kind: BathKind,
    label: String,
}

impl BathModel {
    /// Heat bath at temperature T ≥ 0 coupled with rate λ ≥ 0 to an
    /// oscillator of frequency ω > 0.
    pub fn thermal(lambda: f64, temperature: f64, omega: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be >= 0, got {lambda}"),
            });
        }
        if !(temperature >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be >= 0, got {temperature}"),
            });
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be > 0, got {omega}"),
            });
        }
        Ok(Self {
            lambda,
            omega,
            kind: BathKind::Thermal { temperature },
            label: format!("thermal(lambda={lambda}, T={temperature})"),
        })
    }

    /// Constant diffusion coefficients; dpp and dqq must be ≥ 0.
    pub fn constant(lambda: f64, omega: f64, dpp: f64, dqq: f64, dpq: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be >= 0, got {lambda}"),
            });
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be > 0, got {omega}"),
            });
        }
        if !(dpp >= 0.0) || !(dqq >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "diffusion",
                reason: format!("dpp and dqq must be >= 0, got dpp={dpp}, dqq={dqq}"),
            });
        }
        Ok(Self {
            lambda,
            omega,
            kind: BathKind::Constant { dpp, dqq, dpq },
            label: "constant".to_string(),
        })
    }

    /// Tabulated diffusion coefficients; every dpp/dqq node value must
    /// be ≥ 0.
    pub fn from_tables(
        lambda: f64,
        omega: f64,
        dpp: CoefficientTable,
        dqq: CoefficientTable,
        dpq: CoefficientTable,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be >= 0, got {lambda}"),
            });
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("must be > 0, got {omega}"),
            });
        }
        for (name, table) in [("dpp", &dpp), ("dqq", &dqq)] {
            if let Some(v) = table.values().iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::InvalidParameter {
                    name: "diffusion",
                    reason: format!("{name} table contains negative value {v}"),
                });
            }
        }
        Ok(Self { lambda, omega, kind: BathKind::Table { dpp, dqq, dpq }, label: label.into() })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_thermal(&self) -> bool {
        matches!(self.kind, BathKind::Thermal { .. })
    }

    /// Bath temperature for thermal baths, `None` otherwise.
    pub fn temperature(&self) -> Option<f64> {
        match self.kind {
            BathKind::Thermal { temperature } => Some(temperature),
            _ => None,
        }
    }

    /// Whether D_− or D_pq can be nonzero anywhere. When false, the
    /// master equation decouples into independent diagonal-offset
    /// sectors and the diagonal reduces to the classical birth–death
    /// equation.
    pub fn has_cross_terms(&self) -> bool {
        match &self.kind {
            BathKind::Thermal { .. } => false,
            BathKind::Constant { dpp, dqq, dpq } => {
                *dpq != 0.0 || self.omega * dqq - dpp / self.omega != 0.0
            }
            BathKind::Table { dpp, dqq, dpq } => {
                let dpq_zero = dpq.values().iter().all(|v| *v == 0.0);
                let dminus_zero = dpp.nodes() == dqq.nodes()
                    && dpp
                        .values()
                        .iter()
                        .zip(dqq.values())
                        .all(|(p, q)| self.omega * q - p / self.omega == 0.0);
                !(dpq_zero && dminus_zero)
            }
        }
    }

    fn check_argument(&self, x: f64) -> Result<()> {
        if let BathKind::Thermal { temperature } = self.kind {
            if temperature > 0.0 && x <= 0.0 {
                return Err(Error::NonPositiveCothArgument { x });
            }
        }
        Ok(())
    }

    /// D_pp(x).
    pub fn dpp(&self, x: f64) -> Result<f64> {
        self.check_argument(x)?;
        Ok(match &self.kind {
            BathKind::Thermal { temperature } => {
                self.omega * self.lambda / 2.0 * self.thermal_coth(x, *temperature)
            }
            BathKind::Constant { dpp, .. } => *dpp,
            BathKind::Table { dpp, .. } => dpp.eval(x),
        })
    }

    /// D_qq(x).
    pub fn dqq(&self, x: f64) -> Result<f64> {
        self.check_argument(x)?;
        Ok(match &self.kind {
            BathKind::Thermal { temperature } => {
                self.lambda / (2.0 * self.omega) * self.thermal_coth(x, *temperature)
            }
            BathKind::Constant { dqq, .. } => *dqq,
            BathKind::Table { dqq, .. } => dqq.eval(x),
        })
    }

    /// D_pq(x); identically 0 for thermal baths.
    pub fn d_pq(&self, x: f64) -> Result<f64> {
        self.check_argument(x)?;
        Ok(match &self.kind {
            BathKind::Thermal { .. } => 0.0,
            BathKind::Constant { dpq, .. } => *dpq,
            BathKind::Table { dpq, .. } => dpq.eval(x),
        })
    }

    /// D_+(x) = (1/2)(ω·D_qq(x) + D_pp(x)/ω). The thermal branch
    /// evaluates (λ/2)·coth(ωx/(2T)) directly, so T = 0 gives exactly
    /// λ/2 and the λ factor cancels exactly in rate ratios.
    pub fn d_plus(&self, x: f64) -> Result<f64> {
        self.check_argument(x)?;
        Ok(match &self.kind {
            BathKind::Thermal { temperature } => {
                self.lambda / 2.0 * self.thermal_coth(x, *temperature)
            }
            BathKind::Constant { dpp, dqq, .. } => (self.omega * dqq + dpp / self.omega) / 2.0,
            BathKind::Table { dpp, dqq, .. } => {
                (self.omega * dqq.eval(x) + dpp.eval(x) / self.omega) / 2.0
            }
        })
    }

    /// D_−(x) = (1/2)(ω·D_qq(x) − D_pp(x)/ω); identically 0 for thermal
    /// baths.
    pub fn d_minus(&self, x: f64) -> Result<f64> {
        self.check_argument(x)?;
        Ok(match &self.kind {
            BathKind::Thermal { .. } => 0.0,
            BathKind::Constant { dpp, dqq, .. } => (self.omega * dqq - dpp / self.omega) / 2.0,
            BathKind::Table { dpp, dqq, .. } => {
                (self.omega * dqq.eval(x) - dpp.eval(x) / self.omega) / 2.0
            }
        })
    }

    fn thermal_coth(&self, x: f64, temperature: f64) -> f64 {
        if temperature == 0.0 {
            1.0
        } else {
            coth(self.omega * x / (2.0 * temperature))
        }
    }
}

/// One per-level result of [`validate_bath`].
#[derive(Debug, Clone)]
pub struct BathCheck {
    /// Level index n.
    pub n: usize,
    /// Frequency argument Ω(n) the coefficients are probed at.
    pub omega_value: f64,
    /// Ω(n) > 0, required for thermal coefficients to be defined.
    pub omega_positive: bool,
    /// 2·D_+(Ω(n)) − λ, the emission/absorption rate margin that must be
    /// ≥ 0 for nonnegative steady-state populations. `None` when Ω(n) ≤ 0
    /// and the coefficient cannot be evaluated.
    pub rate_margin: Option<f64>,
}

impl BathCheck {
    pub fn passed(&self) -> bool {
        self.omega_positive && self.rate_margin.is_some_and(|m| m >= 0.0)
    }
}

/// Per-level validity report for a bath/oscillator pair.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<BathCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(BathCheck::passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BathCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Checks, for every level n ≤ n_max, that Ω(n) > 0 and that the upward
/// rate coefficient 2·D_+(Ω(n)) − λ is nonnegative. Violations are
/// reported, never raised.
pub fn validate_bath(bath: &BathModel, model: &OscillatorModel) -> ValidationReport {
    let checks = (0..=model.n_max())
        .map(|n| {
            let omega_value = model.omega_shift(n);
            let omega_positive = omega_value > 0.0;
            let rate_margin = bath
                .d_plus(omega_value)
                .ok()
                .filter(|_| omega_positive)
                .map(|dp| 2.0 * dp - bath.lambda());
            BathCheck { n, omega_value, omega_positive, rate_margin }
        })
        .collect();
    ValidationReport { checks }
}
