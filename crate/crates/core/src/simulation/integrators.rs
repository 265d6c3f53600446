//! Explicit Runge–Kutta integrators on fixed-size state vectors.

use nalgebra::SVector;

use super::{SimConfig, SimError};

/// Growth/shrink clamp applied to the adaptive step factor.
pub const MIN_STEP_FACTOR: f64 = 0.2;
pub const MAX_STEP_FACTOR: f64 = 5.0;
pub const SAFETY: f64 = 0.9;
/// Steps below this fraction of the span are treated as stiffness.
pub const MIN_STEP_FRACTION: f64 = 1e-14;

fn checked<const N: usize>(
    t: f64,
    state: &SVector<f64, N>,
    d: SVector<f64, N>,
) -> Result<SVector<f64, N>, SimError> {
    if d.iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(SimError::NonFinite {
            t,
            state: state.iter().copied().collect(),
        })
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(
    f: &mut F,
    state: &SVector<f64, N>,
    t: f64,
    dt: f64,
) -> Result<SVector<f64, N>, SimError>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, SimError>,
{
    let mut eval = |t: f64, y: &SVector<f64, N>| -> Result<SVector<f64, N>, SimError> {
        let d = f(t, y)?;
        checked(t, y, d)
    };
    let k1 = eval(t, state)?;
    let y2 = state + k1 * (0.5 * dt);
    let k2 = eval(t + 0.5 * dt, &y2)?;
    let y3 = state + k2 * (0.5 * dt);
    let k3 = eval(t + 0.5 * dt, &y3)?;
    let y4 = state + k3 * dt;
    let k4 = eval(t + dt, &y4)?;
    Ok(state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Fixed-step RK4 over `[t0, t1]`; the last step is shortened to land on `t1`.
pub fn rk4_integrate<const N: usize, F, O>(
    f: &mut F,
    state0: SVector<f64, N>,
    (t0, t1): (f64, f64),
    dt: f64,
    mut observer: O,
) -> Result<SVector<f64, N>, SimError>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, SimError>,
    O: FnMut(f64, &SVector<f64, N>),
{
    let n = ((t1 - t0) / dt).ceil().max(1.0) as usize;
    let mut y = state0;
    let mut t = t0;
    for i in 1..=n {
        let next = if i == n { t1 } else { t0 + i as f64 * dt };
        y = rk4_step(f, &y, t, next - t)?;
        t = next;
        observer(t, &y);
    }
    Ok(y)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration<const N: usize> {
    pub state: SVector<f64, N>,
    pub accepted: usize,
    pub rejected: usize,
}

// Fehlberg 4(5) tableau.
const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [
        -8.0 / 27.0,
        2.0,
        -3544.0 / 2565.0,
        1859.0 / 4104.0,
        -11.0 / 40.0,
    ],
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -0.2,
    0.0,
];

/// Runge–Kutta–Fehlberg 4(5) with local extrapolation.
///
/// The step starts at the full span and is controlled by the mixed
/// absolute/relative max-norm of the embedded error estimate. A failing
/// derivative evaluation inside a trial step rejects that step; the error is
/// only returned once the step can no longer shrink. `observer` sees every
/// accepted step, and the last one lands exactly on `t1`.
pub fn rkf45_integrate<const N: usize, F, O>(
    f: &mut F,
    state0: SVector<f64, N>,
    (t0, t1): (f64, f64),
    cfg: &SimConfig,
    mut observer: O,
) -> Result<Integration<N>, SimError>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, SimError>,
    O: FnMut(f64, &SVector<f64, N>),
{
    cfg.validate()?;
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "integration span must be positive, got [{t0}, {t1}]"
        )));
    }
    let min_step = MIN_STEP_FRACTION * span;

    let mut t = t0;
    let mut y = state0;
    let mut h = span;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut attempts = 0;

    while t < t1 {
        if attempts >= cfg.max_steps {
            return Err(SimError::MaxStepsExceeded {
                t,
                max_steps: cfg.max_steps,
            });
        }
        attempts += 1;
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        match fehlberg_trial(f, t, &y, h) {
            Ok((y5, y4)) => {
                let err = (0..N)
                    .map(|i| {
                        let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y5[i].abs());
                        (y5[i] - y4[i]).abs() / scale
                    })
                    .fold(0.0f64, f64::max);
                if err.is_nan() {
                    return Err(SimError::NonFinite {
                        t,
                        state: y.iter().copied().collect(),
                    });
                }
                if err <= 1.0 {
                    t = if last { t1 } else { t + h };
                    y = y5;
                    accepted += 1;
                    observer(t, &y);
                    let factor = if err == 0.0 {
                        MAX_STEP_FACTOR
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_STEP_FACTOR, MAX_STEP_FACTOR)
                    };
                    h *= factor;
                } else {
                    rejected += 1;
                    h *= (SAFETY * err.powf(-0.2)).clamp(MIN_STEP_FACTOR, 1.0);
                }
            }
            Err(e) => {
                rejected += 1;
                if h <= min_step {
                    return Err(e);
                }
                h *= MIN_STEP_FACTOR;
            }
        }
        if t < t1 && h < min_step {
            return Err(SimError::StepUnderflow { t, step: h });
        }
    }
    Ok(Integration {
        state: y,
        accepted,
        rejected,
    })
}

fn fehlberg_trial<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &SVector<f64, N>,
    h: f64,
) -> Result<(SVector<f64, N>, SVector<f64, N>), SimError>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, SimError>,
{
    let mut k = [SVector::<f64, N>::zeros(); 6];
    for s in 0..6 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            if A[s][j] != 0.0 {
                ys += kj * (h * A[s][j]);
            }
        }
        let ts = t + C[s] * h;
        k[s] = checked(ts, &ys, f(ts, &ys)?)?;
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for s in 0..6 {
        y5 += k[s] * (h * B5[s]);
        y4 += k[s] * (h * B4[s]);
    }
    Ok((y5, y4))
}
