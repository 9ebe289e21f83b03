//! Adaptive explicit Runge-Kutta integration for complex-valued ODE systems.
//!
//! Dormand-Prince 5(4) embedded pair with proportional step control and
//! first-same-as-last reuse. The systems integrated here (damped amplitude
//! equations, single-excitation Schrödinger dynamics) are non-stiff over the
//! parameter ranges of interest, so an explicit scheme is appropriate.
//! Integration direction follows the sign of `t_final - t0`, so trajectories
//! can be run backwards.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Right-hand side of dy/dt = f(t, y) over a complex state vector.
pub trait OdeRhs<S: Scalar> {
    fn eval(&self, t: S, y: &[Complex<S>], dydt: &mut [Complex<S>]);
}

impl<S: Scalar, F> OdeRhs<S> for F
where
    F: Fn(S, &[Complex<S>], &mut [Complex<S>]),
{
    fn eval(&self, t: S, y: &[Complex<S>], dydt: &mut [Complex<S>]) {
        self(t, y, dydt)
    }
}

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<S> {
    /// Relative tolerance on each component.
    pub rtol: S,
    /// Absolute tolerance on each component.
    pub atol: S,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the RHS magnitude.
    pub first_step: Option<S>,
}

impl<S: Scalar> Default for OdeOptions<S> {
    fn default() -> Self {
        OdeOptions {
            rtol: S::of(1e-10),
            atol: S::of(1e-14),
            max_steps: 20_000_000,
            first_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// b - b*: weights of the embedded error estimate (stage 7 = FSAL).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates `rhs` from `(t0, y0)` to `t_final`, calling `on_step(t, y)`
/// after the initial state and every accepted step. Returns the final state.
pub fn integrate<S: Scalar>(
    rhs: &dyn OdeRhs<S>,
    t0: S,
    y0: &[Complex<S>],
    t_final: S,
    opts: &OdeOptions<S>,
    mut on_step: impl FnMut(S, &[Complex<S>]),
) -> Result<(Vec<Complex<S>>, OdeStats)> {
    let dim = y0.len();
    let span = t_final - t0;
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    on_step(t, &y);
    if span == S::zero() {
        return Ok((y, stats));
    }
    let dir = if span > S::zero() { S::one() } else { -S::one() };

    let mut k: Vec<Vec<Complex<S>>> = vec![vec![Complex::new(S::zero(), S::zero()); dim]; 7];
    let mut y_stage = vec![Complex::new(S::zero(), S::zero()); dim];
    let mut y_new = vec![Complex::new(S::zero(), S::zero()); dim];

    let mut k0 = vec![Complex::new(S::zero(), S::zero()); dim];
    rhs.eval(t, &y, &mut k0);
    stats.rhs_evals += 1;

    // start at a hundredth of the span; the controller shrinks a bad guess
    // within a few rejections
    let mut h = opts
        .first_step
        .map(|h| h.abs() * dir)
        .unwrap_or(span * S::of(0.01));

    let order_exp = S::of(-0.2);
    loop {
        let h_floor = t.abs().max(span.abs()) * S::epsilon() * S::of(16.0);
        // done, or within endpoint-rounding of done
        if (t_final - t) * dir <= h_floor {
            return Ok((y, stats));
        }
        if stats.steps_accepted + stats.steps_rejected >= opts.max_steps {
            return Err(Error::Integration(format!(
                "step budget {} exhausted at t = {t} (h = {h})",
                opts.max_steps
            )));
        }
        // don't overshoot the endpoint
        if (t + h - t_final) * dir > S::zero() {
            h = t_final - t;
        }
        if h.abs() < h_floor {
            return Err(Error::Integration(format!(
                "step size underflow: |h| = {} below floor {} at t = {t} after {} accepted / {} rejected steps",
                h.abs(),
                h_floor,
                stats.steps_accepted,
                stats.steps_rejected
            )));
        }

        k[0].copy_from_slice(&k0);
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = Complex::new(S::zero(), S::zero());
                for (j, row) in A[stage].iter().enumerate().take(stage + 1) {
                    let a = S::of(*row);
                    if a != S::zero() {
                        acc += k[j][i] * a;
                    }
                }
                y_stage[i] = y[i] + acc * h;
            }
            let t_stage = t + h * S::of(C[stage]);
            let (head, tail) = k.split_at_mut(stage + 1);
            let _ = head;
            rhs.eval(t_stage, &y_stage, &mut tail[0]);
            stats.rhs_evals += 1;
        }
        // 5th-order solution is the last stage combination (A[5] = b)
        for i in 0..dim {
            let mut acc = Complex::new(S::zero(), S::zero());
            for (j, row) in A[5].iter().enumerate() {
                let a = S::of(*row);
                if a != S::zero() {
                    acc += k[j][i] * a;
                }
            }
            y_new[i] = y[i] + acc * h;
        }

        // error estimate over all seven stages (k[6] = f(t+h, y_new))
        let mut err_sq = S::zero();
        for i in 0..dim {
            let mut acc = Complex::new(S::zero(), S::zero());
            for (j, e) in E.iter().enumerate() {
                let e = S::of(*e);
                if e != S::zero() {
                    acc += k[j][i] * e;
                }
            }
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            let r = (acc * h).norm() / scale;
            err_sq += r * r;
        }
        let err = (err_sq / S::from_count(dim as u64)).sqrt();

        if err <= S::one() {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k0.copy_from_slice(&k[6]);
            stats.steps_accepted += 1;
            on_step(t, &y);
        } else {
            stats.steps_rejected += 1;
        }

        let factor = if err == S::zero() {
            S::of(5.0)
        } else {
            (S::of(0.9) * err.powf(order_exp)).max(S::of(0.2)).min(S::of(5.0))
        };
        h *= factor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type C64 = Complex<f64>;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let lambda = 3.7;
        let rhs = move |_t: f64, y: &[C64], dydt: &mut [C64]| {
            dydt[0] = -y[0] * lambda;
        };
        let (y, _) = integrate(
            &rhs,
            0.0,
            &[C64::new(1.0, 0.0)],
            2.0,
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0].re, (-lambda * 2.0f64).exp(), max_relative = 1e-9);
        assert!(y[0].im.abs() < 1e-14);
    }

    #[test]
    fn rotation_preserves_modulus() {
        // y' = i*w*y  ->  |y| constant, phase w*t
        let w = 5.0;
        let rhs = move |_t: f64, y: &[C64], dydt: &mut [C64]| {
            dydt[0] = C64::new(0.0, w) * y[0];
        };
        let (y, _) = integrate(
            &rhs,
            0.0,
            &[C64::new(1.0, 0.0)],
            3.0,
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0].norm(), 1.0, max_relative = 1e-9);
        let mut expected = (w * 3.0f64).rem_euclid(2.0 * std::f64::consts::PI);
        if expected > std::f64::consts::PI {
            expected -= 2.0 * std::f64::consts::PI;
        }
        assert_relative_eq!(y[0].arg(), expected, max_relative = 1e-8);
    }

    #[test]
    fn backward_integration_recovers_initial_state() {
        let rhs = move |t: f64, y: &[C64], dydt: &mut [C64]| {
            dydt[0] = C64::new(0.0, 1.0) * y[0] * t.cos();
            dydt[1] = -y[1] * 0.3 + y[0] * 0.1;
        };
        let y0 = [C64::new(0.8, 0.1), C64::new(0.0, -0.4)];
        let opts = OdeOptions::default();
        let (y1, _) = integrate(&rhs, 0.0, &y0, 5.0, &opts, |_, _| {}).unwrap();
        let (back, _) = integrate(&rhs, 5.0, &y1, 0.0, &opts, |_, _| {}).unwrap();
        for (b, a) in back.iter().zip(&y0) {
            assert!((b - a).norm() < 1e-9);
        }
    }

    #[test]
    fn step_budget_reported() {
        let rhs = move |_t: f64, y: &[C64], dydt: &mut [C64]| {
            dydt[0] = y[0];
        };
        let opts = OdeOptions {
            max_steps: 3,
            ..OdeOptions::default()
        };
        let err = integrate(&rhs, 0.0, &[C64::new(1.0, 0.0)], 100.0, &opts, |_, _| {});
        assert!(err.is_err());
    }

    #[test]
    fn trajectory_times_are_monotone() {
        let rhs = move |_t: f64, y: &[C64], dydt: &mut [C64]| {
            dydt[0] = -y[0];
        };
        let mut times = Vec::new();
        integrate(
            &rhs,
            0.0,
            &[C64::new(1.0, 0.0)],
            1.0,
            &OdeOptions::default(),
            |t, _| times.push(t),
        )
        .unwrap();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*times.last().unwrap(), 1.0);
        assert_eq!(times[0], 0.0);
    }
}
