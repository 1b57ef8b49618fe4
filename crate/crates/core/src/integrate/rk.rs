//! Dormand–Prince 5(4) with PI step-size control.

use crate::error::{Error, Result};

/// Mixed absolute/relative tolerance applied per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Tolerance {
    pub fn new(atol: f64, rtol: f64) -> Self {
        Self { atol, rtol }
    }

    pub fn uniform(tol: f64) -> Self {
        Self { atol: tol, rtol: tol }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub tol: Tolerance,
    /// Upper bound on |h|; `f64::INFINITY` for none.
    pub h_max: f64,
    pub max_steps: usize,
}

impl RkOptions {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub fevals: usize,
    /// Sum of accepted local error estimates (max-norm, absolute).
    pub err_sum: f64,
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.17;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// Returns the state at `t1`. Fails with [`Error::Stiffness`] when the step
/// size underflows.
pub fn dopri5<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &RkOptions,
) -> Result<([f64; N], RkStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut stats = RkStats::default();
    if t1 == t0 {
        return Ok((y0, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let tol = opts.tol;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.fevals += 1;

    // initial step from the derivative scale
    let d0 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let d1 = k1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let sc = tol.atol + tol.rtol * d0;
    let mut h = if d1 > 0.0 { 0.01 * sc.powf(0.2) / (d1 / sc.max(1e-300)).powf(0.2).max(1e-12) } else { 1e-3 };
    h = h.clamp(1e-6 * span.min(1.0), span).min(opts.h_max);
    let mut err_prev: f64 = 1e-4;

    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Stiffness {
                at: t,
                detail: format!("step budget {} exhausted", opts.max_steps),
            });
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stiffness {
                at: t,
                detail: format!("step size {h:e} underflow"),
            });
        }
        let hs = dir * h;

        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + hs, &y_new);
        stats.fevals += 6;

        let mut err: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
            err_abs = err_abs.max(e.abs());
        }
        if !err.is_finite() {
            h *= FAC_MIN;
            stats.rejected += 1;
            continue;
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            stats.err_sum += err_abs;
            let err_c = err.max(1e-10);
            let fac = (SAFETY * err_c.powf(-ALPHA) * err_prev.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
            err_prev = err_c;
            h = (h * fac).min(opts.h_max);
            if last {
                break;
            }
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
            h *= fac;
        }
    }
    Ok((y, stats))
}
