//! Adaptive Dormand–Prince 5(4) integration of `−u'' + q u = z u`.
//!
//! The equation is linear, so the state is renormalized after every accepted
//! step; callers only ever use ratios such as `u'(0)/u(0)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 2];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs<Q: Fn(f64) -> f64>(q: &Q, z: Complex64, t: f64, y: &State) -> State {
    [y[1], (q(t) - z) * y[0]]
}

fn norm(y: &State) -> f64 {
    (y[0].norm_sqr() + y[1].norm_sqr()).sqrt()
}

/// Integrate from `t0` to `t1` (either direction). `q` must be smooth on the
/// open interval; split at kinks with [`shoot_piecewise`].
pub fn shoot<Q: Fn(f64) -> f64>(
    q: &Q,
    z: Complex64,
    t0: f64,
    t1: f64,
    y0: State,
    opts: OdeOptions,
) -> Result<State> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let scale0 = norm(&y0);
    if !(scale0 > 0.0 && scale0.is_finite()) {
        return Err(Error::Solver(
            "initial state must be finite and nonzero".into(),
        ));
    }
    let mut y = [y0[0] / scale0, y0[1] / scale0];
    // Start from a step resolving one oscillation of e^{i√z t}.
    let freq = z.norm().sqrt() + 1.0;
    let mut h = dir * (span.abs() / 16.0).min(0.05 / freq);
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];

    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys[0] += kj[0] * (h * a);
                    ys[1] += kj[1] * (h * a);
                }
            }
            k[s] = rhs(q, z, t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for s in 0..7 {
            for i in 0..2 {
                y5[i] += k[s][i] * (h * B5[s]);
                err[i] += k[s][i] * (h * (B5[s] - B4[s]));
            }
        }
        let mut ratio: f64 = 0.0;
        for i in 0..2 {
            let sc = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            ratio = ratio.max(err[i].norm() / sc);
        }
        if !ratio.is_finite() {
            return Err(Error::Solver(format!("non-finite state at t = {t}")));
        }
        if ratio <= 1.0 {
            t += h;
            let s = norm(&y5);
            y = [y5[0] / s, y5[1] / s];
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::Solver(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Solver(format!(
        "exceeded {} steps integrating from {t0} to {t1}",
        opts.max_steps
    )))
}

/// [`shoot`] with the interval split at the given breakpoints.
pub fn shoot_piecewise<Q: Fn(f64) -> f64>(
    q: &Q,
    z: Complex64,
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    y0: State,
    opts: OdeOptions,
) -> Result<State> {
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    if t1 < t0 {
        cuts.reverse();
    }
    let mut t = t0;
    let mut y = y0;
    for c in cuts.into_iter().chain(std::iter::once(t1)) {
        y = shoot(q, z, t, c, y, opts)?;
        t = c;
    }
    Ok(y)
}
