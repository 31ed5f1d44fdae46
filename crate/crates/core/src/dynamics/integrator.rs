//! Fehlberg 7(8) embedded Runge-Kutta pair with PI step-size control.
//!
//! The solution is advanced with the 8th-order weights (local
//! extrapolation); the difference to the 7th-order weights drives the step
//! controller. Stage evaluations that leave the domain (a wall or `r <= 0`)
//! reject the step and shrink it.

use crate::error::{Error, Result};

pub(crate) const STAGES: usize = 13;

// Stage nodes; unused by the autonomous stepper but checked against `A` in tests.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

pub(crate) const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
    [1.0 / 36.0, 1.0 / 12.0, 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0., 0., 0., 0., 0., 0., 0., 0., 0.],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0., 0., 0., 0., 0., 0., 0., 0.],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0., 0., 0., 0., 0., 0., 0.],
    [-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0, 0., 0., 0., 0., 0., 0.],
    [31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0, 0., 0., 0., 0., 0.],
    [2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0, 0., 0., 0., 0.],
    [
        -91.0 / 108.0,
        0.0,
        0.0,
        23.0 / 108.0,
        -976.0 / 135.0,
        311.0 / 54.0,
        -19.0 / 60.0,
        17.0 / 6.0,
        -1.0 / 12.0,
        0.,
        0.,
        0.,
    ],
    [
        2383.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -301.0 / 82.0,
        2133.0 / 4100.0,
        45.0 / 82.0,
        45.0 / 164.0,
        18.0 / 41.0,
        0.,
        0.,
    ],
    [3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0, 0.],
    [
        -1777.0 / 4100.0,
        0.0,
        0.0,
        -341.0 / 164.0,
        4496.0 / 1025.0,
        -289.0 / 82.0,
        2193.0 / 4100.0,
        51.0 / 82.0,
        33.0 / 164.0,
        12.0 / 41.0,
        0.0,
        1.0,
    ],
];

/// 8th-order weights.
pub(crate) const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

/// 7th-order weights.
pub(crate) const B7: [f64; STAGES] = [
    41.0 / 840.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    41.0 / 840.0,
    0.0,
    0.0,
];

pub type State = [f64; 4];

/// Step-control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Mixed absolute/relative local error target.
    pub tol: f64,
    /// Upper bound on accepted step length.
    pub max_step: f64,
    /// Abort after this many attempted steps.
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_step: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-3).contains(&self.tol) {
            return Err(Error::Domain(format!(
                "integrator tolerance {:e} outside [1e-14, 1e-3]",
                self.tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::Domain("max_step must be positive".into()));
        }
        Ok(())
    }
}

/// One Fehlberg step. Returns the 8th-order update and the error estimate.
pub(crate) fn rk78_step<F>(f: &F, y: &State, k0: &State, h: f64) -> Result<(State, State)>
where
    F: Fn(&State) -> Result<State>,
{
    let mut k = [[0.0; 4]; STAGES];
    k[0] = *k0;
    for s in 1..STAGES {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..4 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(&ys)?;
    }
    let mut y8 = *y;
    let mut err = [0.0; 4];
    for s in 0..STAGES {
        for i in 0..4 {
            y8[i] += h * B8[s] * k[s][i];
            err[i] += h * (B8[s] - B7[s]) * k[s][i];
        }
    }
    Ok((y8, err))
}

// Below 0.8 the PI controller stops hovering at the rejection threshold.
const SAFETY: f64 = 0.75;

fn error_norm(err: &State, y0: &State, y1: &State, tol: f64) -> f64 {
    (0..4)
        .map(|i| err[i].abs() / (tol * (1.0 + y0[i].abs().max(y1[i].abs()))))
        .fold(0.0, f64::max)
}

/// Accepted-step callback: `(t, state)`.
pub(crate) fn drive<F, G>(
    f: &F,
    y0: State,
    t0: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut on_accept: G,
) -> Result<(State, usize, usize)>
where
    F: Fn(&State) -> Result<State>,
    G: FnMut(f64, &State),
{
    cfg.validate()?;
    let span = t_end - t0;
    if span < 0.0 {
        return Err(Error::Domain("integration span must be non-negative".into()));
    }
    if span == 0.0 {
        return Ok((y0, 0, 0));
    }
    let fail = |t: f64, y: &State, reason: String| Error::Integration { t, state: *y, reason };

    let mut y = y0;
    let mut t = t0;
    let mut k0 = f(&y).map_err(|e| fail(t, &y, e.to_string()))?;
    // Initial step from the order-8 error scaling of the derivative magnitude.
    let scale = (0..4).map(|i| k0[i].abs() / (1.0 + y[i].abs())).fold(0.0, f64::max);
    let mut h = if scale > 0.0 { 0.5 * cfg.tol.powf(1.0 / 8.0) / scale } else { span };
    h = h.min(span).min(cfg.max_step);
    let mut prev_err = 1.0_f64;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let min_step = 1e-14 * (1.0 + t0.abs().max(t_end.abs()));

    while t < t_end {
        if accepted + rejected >= cfg.max_steps {
            return Err(fail(t, &y, format!("step budget {} exhausted", cfg.max_steps)));
        }
        let last = t + h >= t_end;
        let step = if last { t_end - t } else { h };
        match rk78_step(f, &y, &k0, step) {
            Ok((y_new, err)) => {
                let en = error_norm(&err, &y, &y_new, cfg.tol);
                let k_new = if en <= 1.0 { f(&y_new).ok() } else { None };
                if let (true, Some(k_new)) = (en <= 1.0, k_new) {
                    t = if last { t_end } else { t + step };
                    y = y_new;
                    k0 = k_new;
                    accepted += 1;
                    on_accept(t, &y);
                    let en = en.max(1e-10);
                    let fac = SAFETY * en.powf(-0.7 / 8.0) * prev_err.powf(0.4 / 8.0);
                    h = (step * fac.clamp(0.2, 5.0)).min(cfg.max_step);
                    prev_err = en;
                } else {
                    rejected += 1;
                    let fac = if en.is_finite() && en > 1.0 { (0.9 * en.powf(-1.0 / 8.0)).max(0.2) } else { 0.25 };
                    h = step * fac;
                }
            }
            Err(_) => {
                rejected += 1;
                h = step * 0.25;
            }
        }
        if h < min_step && t < t_end {
            return Err(fail(t, &y, format!("step size underflow ({h:e})")));
        }
    }
    Ok((y, accepted, rejected))
}
