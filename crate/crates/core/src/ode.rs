//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step before the integration is declared stiff, relative to the span.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            min_step_fraction: 1e-14,
            max_steps: 50_000_000,
        }
    }
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `times[0]` through every later entry of
/// `times`, calling `observe(t, y)` at each one (including the first).
///
/// Steps are clipped so that every requested time is hit exactly.
pub fn integrate<F, O>(rhs: F, y0: Vec<C>, times: &[f64], tol: &Tolerances, initial_step: f64, mut observe: O) -> Result<Vec<C>>
where
    F: Fn(f64, &[C], &mut [C]) -> Result<()>,
    O: FnMut(f64, &[C]) -> Result<()>,
{
    let dim = y0.len();
    let Some((&t_start, rest)) = times.split_first() else {
        return Ok(y0);
    };
    let span = times.last().copied().unwrap_or(t_start) - t_start;
    let min_step = (tol.min_step_fraction * span.abs()).max(f64::MIN_POSITIVE);

    let mut y = y0;
    let mut t = t_start;
    observe(t, &y)?;

    let mut k: [Vec<C>; 7] = std::array::from_fn(|_| vec![C::default(); dim]);
    let mut stage = vec![C::default(); dim];
    let mut y_new = vec![C::default(); dim];
    rhs(t, &y, &mut k[0])?;

    let mut h = if initial_step > 0.0 {
        initial_step
    } else {
        span.abs().max(1e-12) * 1e-3
    };
    let mut steps = 0usize;
    let mut err_prev = 1e-4_f64;

    for &target in rest {
        while t < target {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::Integration {
                    time: t,
                    reason: format!("exceeded {} steps", tol.max_steps),
                });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let combo = |out: &mut [C], y: &[C], terms: &[(f64, &[C])]| {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = C::default();
                    for (w, kv) in terms {
                        acc += kv[i] * *w;
                    }
                    *o = y[i] + acc * step;
                }
            };

            let (k0, rest_k) = k.split_at_mut(1);
            let k0 = &k0[0];
            combo(&mut stage, &y, &[(A21, k0)]);
            rhs(t + C2 * step, &stage, &mut rest_k[0])?;
            combo(&mut stage, &y, &[(A31, k0), (A32, &rest_k[0])]);
            rhs(t + C3 * step, &stage, &mut rest_k[1])?;
            combo(&mut stage, &y, &[(A41, k0), (A42, &rest_k[0]), (A43, &rest_k[1])]);
            rhs(t + C4 * step, &stage, &mut rest_k[2])?;
            combo(
                &mut stage,
                &y,
                &[(A51, k0), (A52, &rest_k[0]), (A53, &rest_k[1]), (A54, &rest_k[2])],
            );
            rhs(t + C5 * step, &stage, &mut rest_k[3])?;
            combo(
                &mut stage,
                &y,
                &[
                    (A61, k0),
                    (A62, &rest_k[0]),
                    (A63, &rest_k[1]),
                    (A64, &rest_k[2]),
                    (A65, &rest_k[3]),
                ],
            );
            rhs(t + step, &stage, &mut rest_k[4])?;
            combo(
                &mut y_new,
                &y,
                &[(B1, k0), (B3, &rest_k[1]), (B4, &rest_k[2]), (B5, &rest_k[3]), (B6, &rest_k[4])],
            );
            rhs(t + step, &y_new, &mut rest_k[5])?;

            let mut err = 0.0f64;
            for i in 0..dim {
                let e =
                    (k0[i] * E1 + rest_k[1][i] * E3 + rest_k[2][i] * E4 + rest_k[3][i] * E5 + rest_k[4][i] * E6 + rest_k[5][i] * E7) * step;
                let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }

            if err <= 1.0 || step <= min_step {
                if step <= min_step && err > 1.0 {
                    return Err(Error::Integration {
                        time: t,
                        reason: format!("step size {step:e} underflowed with error ratio {err:e}"),
                    });
                }
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                // PI controller (Hairer & Wanner, II.4).
                let err_c = err.max(1e-10);
                let factor = (0.9 * err_c.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
                err_prev = err_c;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        observe(t, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase() {
        // dy/dt = -i ω y has y(t) = e^{-iωt}.
        let omega = 3.0;
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let mut seen = Vec::new();
        let y = integrate(
            |_, y, out| {
                out[0] = y[0] * C::new(0.0, -omega);
                Ok(())
            },
            vec![C::new(1.0, 0.0)],
            &times,
            &Tolerances::default(),
            0.0,
            |t, y| {
                seen.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), times.len());
        for (t, v) in seen {
            let exact = C::new(0.0, -omega * t).exp();
            assert!((v - exact).norm() < 1e-9, "t={t}");
        }
        assert!((y[0] - C::new(0.0, -omega * 5.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // dy/dt = 2t y, y = exp(t^2).
        let y = integrate(
            |t, y, out| {
                out[0] = y[0] * (2.0 * t);
                Ok(())
            },
            vec![C::new(1.0, 0.0)],
            &[0.0, 1.0],
            &Tolerances::default(),
            0.0,
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0].re - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn step_budget_exhaustion_is_an_error() {
        let tol = Tolerances {
            max_steps: 3,
            ..Tolerances::default()
        };
        let res = integrate(
            |_, y, out| {
                out[0] = y[0] * C::new(0.0, -1000.0);
                Ok(())
            },
            vec![C::new(1.0, 0.0)],
            &[0.0, 10.0],
            &tol,
            0.0,
            |_, _| Ok(()),
        );
        assert!(matches!(res, Err(Error::Integration { .. })));
    }
}
