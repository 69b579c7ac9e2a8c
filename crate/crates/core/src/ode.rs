//! Explicit Runge–Kutta drivers over abstract state containers.
//!
//! Both generators in this crate are autonomous linear maps, so the
//! drivers integrate dy/dt = f(y) with f supplied as a closure writing
//! its result into a preallocated buffer. Two schemes are offered:
//!
//! * classic fixed-step RK4, sampling requested times at the nearest
//!   step node (the node time is what gets reported);
//! * Dormand–Prince 5(4) with PI step-size control and the standard
//!   quartic dense-output interpolant, sampling exactly at the
//!   requested times.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Hard cap on adaptive steps before giving up.
const MAX_STEPS: usize = 1_000_000;

/// Minimal state-vector interface the drivers need.
pub(crate) trait OdeState: Clone {
    /// self += a·rhs.
    fn add_scaled(&mut self, a: f64, rhs: &Self);
    /// self = rhs.
    fn assign_from(&mut self, rhs: &Self);
    /// self *= a.
    fn scale(&mut self, a: f64);
    /// self += rhs.
    fn add(&mut self, rhs: &Self);
    /// Weighted RMS of self against the scale atol + rtol·max(|y0|, |y1|)
    /// taken elementwise.
    fn error_norm(&self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64;
}

impl OdeState for Array1<f64> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.scaled_add(a, rhs);
    }

    fn assign_from(&mut self, rhs: &Self) {
        self.assign(rhs);
    }

    fn scale(&mut self, a: f64) {
        self.mapv_inplace(|v| v * a);
    }

    fn add(&mut self, rhs: &Self) {
        *self += rhs;
    }

    fn error_norm(&self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in self.iter().zip(y0).zip(y1) {
            let sc = atol + rtol * a.abs().max(b.abs());
            let r = e / sc;
            acc += r * r;
        }
        (acc / self.len() as f64).sqrt()
    }
}

impl OdeState for Array2<Complex64> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.scaled_add(Complex64::new(a, 0.0), rhs);
    }

    fn assign_from(&mut self, rhs: &Self) {
        self.assign(rhs);
    }

    fn scale(&mut self, a: f64) {
        self.mapv_inplace(|z| z * a);
    }

    fn add(&mut self, rhs: &Self) {
        *self += rhs;
    }

    fn error_norm(&self, y0: &Self, y1: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in self.iter().zip(y0).zip(y1) {
            let sc = atol + rtol * a.norm().max(b.norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        (acc / self.len() as f64).sqrt()
    }
}

/// One classic RK4 step of size h, in place.
fn rk4_step<S: OdeState>(
    deriv: &mut impl FnMut(&S, &mut S),
    y: &mut S,
    h: f64,
    k: &mut [S; 4],
    tmp: &mut S,
) {
    let [k1, k2, k3, k4] = k;
    deriv(y, k1);
    tmp.assign_from(y);
    tmp.add_scaled(h / 2.0, k1);
    deriv(tmp, k2);
    tmp.assign_from(y);
    tmp.add_scaled(h / 2.0, k2);
    deriv(tmp, k3);
    tmp.assign_from(y);
    tmp.add_scaled(h, k3);
    deriv(tmp, k4);
    y.add_scaled(h / 6.0, k1);
    y.add_scaled(h / 3.0, k2);
    y.add_scaled(h / 3.0, k3);
    y.add_scaled(h / 6.0, k4);
}

/// Fixed-step RK4 from t = 0 to t_final on the grid {0, dt, 2dt, …},
/// with a final partial step onto t_final when needed. Each requested
/// sample time is mapped to its nearest grid node and `on_sample`
/// receives the node time; duplicate node hits are reported once.
/// Returns the final state.
pub(crate) fn integrate_rk4<S: OdeState>(
    mut deriv: impl FnMut(&S, &mut S),
    y0: &S,
    dt: f64,
    t_final: f64,
    sample_times: &[f64],
    mut on_sample: impl FnMut(f64, &S),
) -> Result<S> {
    let n_full = (t_final / dt).floor() as usize;
    let rem = t_final - n_full as f64 * dt;
    let has_partial = rem > dt * 1e-12;
    let last_node = n_full + usize::from(has_partial);
    let node_time = |k: usize| if k <= n_full { k as f64 * dt } else { t_final };

    let mut targets: Vec<usize> = sample_times
        .iter()
        .map(|&s| {
            let k = ((s / dt).round() as usize).min(n_full);
            if has_partial && (t_final - s).abs() < (s - node_time(k)).abs() {
                last_node
            } else {
                k
            }
        })
        .collect();
    targets.dedup();

    let mut y = y0.clone();
    let mut k = [y0.clone(), y0.clone(), y0.clone(), y0.clone()];
    let mut tmp = y0.clone();
    let mut next = 0usize;
    for node in 0..=last_node {
        if next < targets.len() && targets[next] == node {
            on_sample(node_time(node), &y);
            next += 1;
        }
        if node == last_node {
            break;
        }
        let h = if node + 1 <= n_full { dt } else { rem };
        rk4_step(&mut deriv, &mut y, h, &mut k, &mut tmp);
    }
    Ok(y)
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Embedded error coefficients (5th order minus 4th order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients for the quartic interpolant.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;
// PI step-size controller.
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 5.0; // hnew ≥ h/5
const FAC_GROW_MAX: f64 = 0.1; // hnew ≤ 10·h

/// Starting step size from the standard curvature probe.
fn initial_step<S: OdeState>(
    deriv: &mut impl FnMut(&S, &mut S),
    y0: &S,
    f0: &S,
    rtol: f64,
    atol: f64,
    t_final: f64,
    tmp: &mut S,
    f1: &mut S,
) -> f64 {
    let d0 = y0.error_norm(y0, y0, atol, rtol);
    let d1 = f0.error_norm(y0, y0, atol, rtol);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * (d0 / d1) };
    h0 = h0.min(t_final);
    tmp.assign_from(y0);
    tmp.add_scaled(h0, f0);
    deriv(tmp, f1);
    f1.add_scaled(-1.0, f0);
    let d2 = f1.error_norm(y0, y0, atol, rtol) / h0;
    let der12 = d1.max(d2);
    let h1 =
        if der12 <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    (100.0 * h0).min(h1).min(t_final)
}

/// Adaptive Dormand–Prince 5(4) from t = 0 to t_final. Samples are
/// evaluated exactly at the requested times through the dense-output
/// interpolant of the step containing them. Returns the final state.
pub(crate) fn integrate_rk45<S: OdeState>(
    mut deriv: impl FnMut(&S, &mut S),
    y0: &S,
    rtol: f64,
    atol: f64,
    t_final: f64,
    sample_times: &[f64],
    mut on_sample: impl FnMut(f64, &S),
) -> Result<S> {
    let mut si = 0usize;
    while si < sample_times.len() && sample_times[si] <= 0.0 {
        on_sample(sample_times[si], y0);
        si += 1;
    }

    let mut y = y0.clone();
    let mut y_new = y0.clone();
    let mut tmp = y0.clone();
    let mut cont = y0.clone();
    let mut k1 = y0.clone();
    let mut k2 = y0.clone();
    let mut k3 = y0.clone();
    let mut k4 = y0.clone();
    let mut k5 = y0.clone();
    let mut k6 = y0.clone();
    let mut k7 = y0.clone();
    let mut err_state = y0.clone();
    let (mut rc1, mut rc2, mut rc3, mut rc4, mut rc5) =
        (y0.clone(), y0.clone(), y0.clone(), y0.clone(), y0.clone());

    deriv(&y, &mut k1);
    let mut h = initial_step(&mut deriv, &y, &k1, rtol, atol, t_final, &mut tmp, &mut k2);
    let mut t = 0.0f64;
    let mut facold = 1e-4f64;
    let mut rejected = false;
    let mut nstep = 0usize;

    while t < t_final {
        nstep += 1;
        if nstep > MAX_STEPS {
            return Err(Error::TooManySteps { t, max_steps: MAX_STEPS });
        }
        if 0.1 * h.abs() <= t.abs() * f64::EPSILON {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if t + 1.01 * h >= t_final {
            h = t_final - t;
            last = true;
        }

        tmp.assign_from(&y);
        tmp.add_scaled(h * A21, &k1);
        deriv(&tmp, &mut k2);

        tmp.assign_from(&y);
        tmp.add_scaled(h * A31, &k1);
        tmp.add_scaled(h * A32, &k2);
        deriv(&tmp, &mut k3);

        tmp.assign_from(&y);
        tmp.add_scaled(h * A41, &k1);
        tmp.add_scaled(h * A42, &k2);
        tmp.add_scaled(h * A43, &k3);
        deriv(&tmp, &mut k4);

        tmp.assign_from(&y);
        tmp.add_scaled(h * A51, &k1);
        tmp.add_scaled(h * A52, &k2);
        tmp.add_scaled(h * A53, &k3);
        tmp.add_scaled(h * A54, &k4);
        deriv(&tmp, &mut k5);

        tmp.assign_from(&y);
        tmp.add_scaled(h * A61, &k1);
        tmp.add_scaled(h * A62, &k2);
        tmp.add_scaled(h * A63, &k3);
        tmp.add_scaled(h * A64, &k4);
        tmp.add_scaled(h * A65, &k5);
        deriv(&tmp, &mut k6);

        y_new.assign_from(&y);
        y_new.add_scaled(h * A71, &k1);
        y_new.add_scaled(h * A73, &k3);
        y_new.add_scaled(h * A74, &k4);
        y_new.add_scaled(h * A75, &k5);
        y_new.add_scaled(h * A76, &k6);
        deriv(&y_new, &mut k7);

        err_state.assign_from(&k1);
        err_state.scale(E1);
        err_state.add_scaled(E3, &k3);
        err_state.add_scaled(E4, &k4);
        err_state.add_scaled(E5, &k5);
        err_state.add_scaled(E6, &k6);
        err_state.add_scaled(E7, &k7);
        err_state.scale(h);
        let err = err_state.error_norm(&y, &y_new, atol, rtol);

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // the controller mixes this error with the previous accepted one
            let fac = (fac11 / facold.powf(BETA) / SAFE)
                .clamp(FAC_GROW_MAX, FAC_SHRINK_MAX);
            facold = err.max(1e-4);
            let t_new = if last { t_final } else { t + h };

            if si < sample_times.len() && sample_times[si] <= t_new {
                // dense-output coefficients for this step
                rc1.assign_from(&y);
                rc2.assign_from(&y_new);
                rc2.add_scaled(-1.0, &y); // dy
                rc3.assign_from(&k1);
                rc3.scale(h);
                rc3.add_scaled(-1.0, &rc2); // h·k1 − dy
                rc4.assign_from(&rc2);
                rc4.add_scaled(-h, &k7);
                rc4.add_scaled(-1.0, &rc3); // dy − h·k7 − rc3
                rc5.assign_from(&k1);
                rc5.scale(D1);
                rc5.add_scaled(D3, &k3);
                rc5.add_scaled(D4, &k4);
                rc5.add_scaled(D5, &k5);
                rc5.add_scaled(D6, &k6);
                rc5.add_scaled(D7, &k7);
                rc5.scale(h);
                while si < sample_times.len() && sample_times[si] <= t_new {
                    let theta = ((sample_times[si] - t) / h).clamp(0.0, 1.0);
                    cont.assign_from(&rc5);
                    cont.scale(1.0 - theta);
                    cont.add(&rc4);
                    cont.scale(theta);
                    cont.add(&rc3);
                    cont.scale(1.0 - theta);
                    cont.add(&rc2);
                    cont.scale(theta);
                    cont.add(&rc1);
                    on_sample(sample_times[si], &cont);
                    si += 1;
                }
            }

            k1.assign_from(&k7); // FSAL
            y.assign_from(&y_new);
            t = t_new;
            if last {
                break;
            }
            let mut h_new = h / fac;
            if rejected {
                h_new = h_new.min(h);
            }
            rejected = false;
            h = h_new;
        } else {
            h /= FAC_SHRINK_MAX.min(fac11 / SAFE);
            rejected = true;
        }
    }
    Ok(y)
}
