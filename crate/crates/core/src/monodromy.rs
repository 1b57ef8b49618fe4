//! Monodromy of the linear system around the unit circle and the
//! rotation number read off its projectivization.
//!
//! On `z = e^{iτ}` the system becomes
//! `d/dτ (u, v) = [[−i(l + 2μ cos τ), 1/(2ω)], [1/(2ω), 0]] (u, v)` and
//! `v/u = e^{iφ}` solves the torus equation, so the Möbius action of the
//! fundamental matrix on the unit circle is the Poincaré map.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{transport, Frame, LinearSystem, PathSeg, TaylorOptions};
use crate::mat2::{Mat2C, C64};
use crate::params::{Precision, SystemParams};
use crate::torus::{rho_direct, RhoEstimate, RhoMethod};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    #[serde(rename = "M")]
    pub m: Mat2C,
    #[serde(rename = "Mtilde")]
    pub mtilde: Mat2C,
    /// `tr M̃`.
    pub trace: C64,
    /// `|det M − e^{−2πil}|`
    pub det_residual: f64,
    /// `|Im tr M̃|`
    pub im_trace_residual: f64,
}

impl MonodromyResult {
    pub fn real_trace(&self) -> f64 {
        self.trace.re
    }

    /// `|tr M̃| − 2`; positive inside a phase-lock area.
    pub fn margin(&self) -> f64 {
        self.trace.re.abs() - 2.0
    }

    /// Distance of `M̃` from `±Id`, the sign chosen by the trace.
    pub fn distance_from_scalar(&self) -> f64 {
        let s = if self.trace.re >= 0.0 { 1.0 } else { -1.0 };
        (self.mtilde - Mat2C::identity().scale(C64::new(s, 0.0))).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LockKind {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockClass {
    pub kind: LockKind,
    /// `|tr M̃| − 2`
    pub margin: f64,
}

impl LockClass {
    pub fn from_margin(margin: f64, tol_boundary: f64) -> Self {
        let kind = if margin > tol_boundary {
            LockKind::Inside
        } else if margin < -tol_boundary {
            LockKind::Outside
        } else {
            LockKind::Boundary
        };
        LockClass { kind, margin }
    }
}

/// Default width of the boundary band around `|tr M̃| = 2`.
pub fn default_tol_boundary(trace: f64) -> f64 {
    1e-8 * trace.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyOptions {
    pub tol: f64,
    pub precision: Precision,
    /// Base point angle `τ₀`; the loop runs from `e^{iτ₀}` counterclockwise.
    pub base_angle: f64,
}

impl MonodromyOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            precision: Precision::Standard,
            base_angle: 0.0,
        }
    }

    fn taylor(&self, sample_spacing: Option<f64>) -> TaylorOptions {
        TaylorOptions {
            tol: (self.tol * 1e-3).clamp(1e-16, 1e-10),
            precision: self.precision,
            sample_spacing,
            ..TaylorOptions::default()
        }
    }
}

/// Fundamental matrix sampled densely along one loop.
struct Loop {
    result: MonodromyResult,
    /// `W(τ)` at increasing `τ`, starting with the identity.
    samples: Vec<Mat2C>,
    /// Estimated absolute error of `tr M̃`.
    trace_err: f64,
}

fn validate_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn run_loop(p: &SystemParams, opts: &MonodromyOptions, sampled: bool) -> Result<Loop> {
    validate_tol(opts.tol)?;
    let d = p.derive()?;
    let sys = LinearSystem::new(&d);
    let spacing = sampled.then(|| 0.5 / (1.0 / d.omega + d.l.abs() + 2.0 * d.mu.abs()));
    let path = PathSeg::arc(1.0, opts.base_angle, opts.base_angle + TWO_PI);
    let mut samples = Vec::new();
    let (frame, rep) = transport(&sys, &path, &Frame::identity(), &opts.taylor(spacing), |_, _, f| {
        if sampled {
            samples.push(f.matrix());
        }
    })?;
    let m = frame.matrix();
    if !m.is_finite() {
        return Err(Error::Stiffness {
            at: TWO_PI,
            detail: "monodromy overflow".into(),
        });
    }
    let phase = Complex64::from_polar(1.0, PI * d.l);
    let mtilde = m.scale(phase);
    let trace = mtilde.trace();
    let det_residual = (m.det() - Complex64::from_polar(1.0, -TWO_PI * d.l)).norm();
    let scale = m.norm().max(1.0);
    // rounding in det is relative to ‖M‖², so the check is scaled accordingly
    if det_residual > 100.0 * opts.tol * scale * scale {
        return Err(Error::Accuracy(format!(
            "det M residual {det_residual:e} exceeds 100·tol·‖M‖² at {p:?}"
        )));
    }
    let trace_err = scale * (1e-14 + rep.trunc_estimate) + det_residual / scale;
    Ok(Loop {
        result: MonodromyResult {
            m,
            mtilde,
            trace,
            det_residual,
            im_trace_residual: trace.im.abs(),
        },
        samples,
        trace_err,
    })
}

/// Monodromy after one counterclockwise loop `z = e^{iτ}`, `τ: 0 → 2π`,
/// starting from the identity at `z = 1`.
pub fn monodromy(p: &SystemParams, tol: f64) -> Result<MonodromyResult> {
    monodromy_with(p, &MonodromyOptions::new(tol))
}

pub fn monodromy_with(p: &SystemParams, opts: &MonodromyOptions) -> Result<MonodromyResult> {
    Ok(run_loop(p, opts, false)?.result)
}

pub fn phase_lock_test(p: &SystemParams, tol: f64) -> Result<LockClass> {
    let m = monodromy(p, tol)?;
    Ok(LockClass::from_margin(m.margin(), default_tol_boundary(m.trace.re)))
}

pub fn phase_lock_test_with(p: &SystemParams, tol: f64, tol_boundary: f64) -> Result<LockClass> {
    let m = monodromy(p, tol)?;
    Ok(LockClass::from_margin(m.margin(), tol_boundary))
}

/// Lifted phase change of the trajectory with `v/u = phi0_unit` at the base
/// point, read from the sampled fundamental matrices.
fn lifted_winding(samples: &[Mat2C], phi0: C64) -> (f64, f64) {
    let mut total = 0.0;
    let mut prev = phi0;
    for w in samples.iter().skip(1) {
        let u = w.get(0, 0) + w.get(0, 1) * phi0;
        let v = w.get(1, 0) + w.get(1, 1) * phi0;
        let cur = v / u;
        total += (cur / prev).arg();
        prev = cur;
    }
    (total, prev.arg())
}

/// Projective rotation data of one loop without any fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationClass {
    pub rho: f64,
    /// `rho` error estimate from conditioning of the trace.
    pub error_bound: f64,
    /// Integer part recovered from the winding.
    pub n: i64,
    /// `|tr M̃| ≥ 2`
    pub locked: bool,
    pub margin: f64,
}

fn classify_loop(lp: &Loop) -> RotationClass {
    let m = &lp.result.m;
    let tr = lp.result.trace.re;
    let margin = lp.result.margin();
    let [e0, e1] = m.eigenvalues();
    let theta_err = |sin_theta: f64| (lp.trace_err / (2.0 * sin_theta.abs()).max(1e-300)).min((2.0 * lp.trace_err).sqrt());

    if margin < 0.0 {
        // elliptic: fixed point strictly inside the disk
        let mut best = None;
        for (this, other) in [(e0, e1), (e1, e0)] {
            let ev = m.eigenvector(this);
            if ev[0].norm() == 0.0 {
                continue;
            }
            let pfix = ev[1] / ev[0];
            if pfix.norm() < 1.0 && best.is_none_or(|(q, _): (C64, C64)| pfix.norm() < q.norm()) {
                best = Some((pfix, other / this));
            }
        }
        if let Some((pfix, mult)) = best {
            let alpha = mult.arg();
            let phi0 = C64::new(1.0, 0.0);
            let (dphi, phi_end) = lifted_winding(&lp.samples, phi0);
            let h = |x: f64| 2.0 * (C64::new(1.0, 0.0) - pfix * Complex64::from_polar(1.0, -x)).arg();
            let raw = (dphi + h(phi_end) - h(0.0)) / TWO_PI;
            let frac = alpha / TWO_PI;
            let n = (raw - frac).round();
            let rho = n + frac;
            let sin_theta = (1.0 - (tr / 2.0).powi(2)).max(0.0).sqrt();
            let err = (rho - raw).abs() + theta_err(sin_theta) / PI;
            return RotationClass {
                rho,
                error_bound: err,
                n: n as i64,
                locked: false,
                margin,
            };
        }
    }
    // hyperbolic or parabolic (or an elliptic case whose fixed point could
    // not be resolved): start on a fixed point on the circle
    let ev = m.eigenvector(e1);
    let start = if ev[0].norm() > 0.0 { ev[1] / ev[0] } else { C64::new(1.0, 0.0) };
    let start = start / start.norm();
    let (dphi, _) = lifted_winding(&lp.samples, start);
    let rho = dphi / TWO_PI;
    let n = rho.round();
    if margin > lp.trace_err && (rho - n).abs() < 0.25 {
        return RotationClass {
            rho: n,
            error_bound: lp.trace_err,
            n: n as i64,
            locked: true,
            margin,
        };
    }
    RotationClass {
        rho,
        error_bound: (rho - n).abs() + theta_err(0.0) / PI,
        n: n as i64,
        locked: margin >= 0.0,
        margin,
    }
}

/// Rotation data from a single sampled loop; no fallback near `|tr M̃| = 2`.
pub fn rotation_class(p: &SystemParams, tol: f64) -> Result<RotationClass> {
    let lp = run_loop(p, &MonodromyOptions::new(tol), true)?;
    Ok(classify_loop(&lp))
}

/// Rotation number from the projectivized monodromy.
///
/// The fractional part comes from the multiplier `e^{iα}` at the interior
/// fixed point `p` of the disk automorphism; the exact lift is obtained by
/// conjugating with `H(x) = x + 2 Arg(1 − p e^{−ix})`, which turns the
/// Poincaré map into the rigid rotation by `α`. Within `tol_boundary` of
/// `|tr M̃| = 2` the result is compared with orbit averaging on a bounded
/// budget and the tighter estimate is kept.
pub fn rho_mobius(p: &SystemParams, tol: f64) -> Result<RhoEstimate> {
    Ok(rho_and_lock(p, tol)?.0)
}

/// [`rho_mobius`] together with the lock classification of the same loop.
pub fn rho_and_lock(p: &SystemParams, tol: f64) -> Result<(RhoEstimate, LockClass)> {
    let lp = run_loop(p, &MonodromyOptions::new(tol), true)?;
    let rc = classify_loop(&lp);
    let tol_boundary = default_tol_boundary(lp.result.trace.re);
    let lock = LockClass::from_margin(rc.margin, tol_boundary);
    let mut est = RhoEstimate {
        rho: rc.rho,
        error_bound: rc.error_bound,
        periods_used: 1,
        method: RhoMethod::Mobius,
    };
    if rc.margin.abs() < tol_boundary && rc.error_bound > tol {
        let direct = match rho_direct(p, tol, 1 << 12) {
            Ok(d) => Some(d),
            Err(Error::Convergence { best, .. }) => Some(*best),
            Err(e) => {
                log::debug!("direct fallback failed at {p:?}: {e}");
                None
            }
        };
        if let Some(d) = direct {
            if d.error_bound < est.error_bound {
                est = d;
            }
        }
    }
    Ok((est, lock))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{dopri5, RkOptions, Tolerance};
    use proptest::prelude::*;

    /// Independent monodromy: real 4-dimensional RK integration of the
    /// pulled-back τ-system.
    fn monodromy_rk(p: &SystemParams) -> Mat2C {
        let d = p.derive().unwrap();
        let e = 1.0 / (2.0 * d.omega);
        let rhs = |tau: f64, y: &[f64; 4]| {
            let g = d.l + 2.0 * d.mu * tau.cos();
            // u' = −i g u + e v ; v' = e u
            let (ur, ui, vr, vi) = (y[0], y[1], y[2], y[3]);
            [g * ui + e * vr, -g * ur + e * vi, e * ur, e * ui]
        };
        let mut opts = RkOptions::new(Tolerance::uniform(1e-13));
        opts.h_max = 0.05;
        let (c0, _) = dopri5(rhs, 0.0, [1.0, 0.0, 0.0, 0.0], TWO_PI, &opts).unwrap();
        let (c1, _) = dopri5(rhs, 0.0, [0.0, 0.0, 1.0, 0.0], TWO_PI, &opts).unwrap();
        Mat2C::from_columns([C64::new(c0[0], c0[1]), C64::new(c0[2], c0[3])], [C64::new(c1[0], c1[1]), C64::new(c1[2], c1[3])])
    }

    #[test]
    fn matches_real_rk_integration() {
        for &(o, b, a) in &[(2.0, 2.0, 2.0), (1.0, 0.3, 3.1), (0.5, 1.7, 1.2), (0.7, -1.4, 4.0)] {
            let p = SystemParams::new(o, b, a);
            let m = monodromy(&p, 1e-12).unwrap().m;
            let r = monodromy_rk(&p);
            assert!((m - r).norm() < 1e-8 * r.norm(), "{p:?}: {:e}", (m - r).norm());
        }
    }

    #[test]
    fn trace_examples() {
        let g = monodromy(&SystemParams::new(2.0, 5f64.sqrt(), 0.0), 1e-12).unwrap();
        assert!(g.margin().abs() < 1e-9, "{}", g.margin());
        for a in [0.5, 1.7, 3.0, 6.4, 11.0] {
            let m = monodromy(&SystemParams::new(2.0, 0.0, a), 1e-12).unwrap();
            assert!(m.margin() > -1e-9, "A = {a}: {}", m.margin());
        }
    }

    #[test]
    fn lock_test_examples() {
        assert_eq!(phase_lock_test(&SystemParams::new(2.0, 2.0, 2.0), 1e-12).unwrap().kind, LockKind::Inside);
        assert_eq!(phase_lock_test(&SystemParams::new(1.0, 0.5, 0.0), 1e-12).unwrap().kind, LockKind::Inside);
        let c = phase_lock_test(&SystemParams::new(2.0, 2.0, 1.0), 1e-12).unwrap();
        assert_eq!(c.kind, LockKind::Boundary, "{c:?}");
    }

    #[test]
    fn mobius_examples() {
        let r = rho_mobius(&SystemParams::new(1.0, 0.0, 0.0), 1e-10).unwrap();
        assert!(r.rho.abs() < 1e-10);
        let r = rho_mobius(&SystemParams::new(2.0, 2.5, 0.0), 1e-10).unwrap();
        assert!((r.rho - 5.25f64.sqrt() / 2.0).abs() < 1e-10, "{r:?}");
        let r = rho_mobius(&SystemParams::new(2.0, -2.5, 0.0), 1e-10).unwrap();
        assert!((r.rho + 5.25f64.sqrt() / 2.0).abs() < 1e-10, "{r:?}");
        let r = rho_mobius(&SystemParams::new(0.5, 2.0, 0.0), 1e-10).unwrap();
        assert!((r.rho - 2.0 * 3f64.sqrt()).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn orientation_agrees_with_orbit_averaging() {
        for &(o, b, a) in &[(2.0, 1.3, 0.7), (2.0, 3.1, 1.9), (1.0, 0.4, 2.5), (0.7, 2.2, 0.9), (0.5, -1.9, 1.1)] {
            let p = SystemParams::new(o, b, a);
            let m = rho_mobius(&p, 1e-10).unwrap();
            let d = match rho_direct(&p, 1e-9, 1 << 14) {
                Ok(d) => d,
                Err(Error::Convergence { best, .. }) => *best,
                Err(e) => panic!("{e}"),
            };
            let tol = 1e-7f64.max(2.0 * d.error_bound);
            assert!((m.rho - d.rho).abs() < tol, "{p:?}: {} vs {}", m.rho, d.rho);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn det_and_trace_reality(omega in 0.3f64..3.0, b in -5.0f64..5.0, a in -6.0f64..6.0) {
            let m = monodromy(&SystemParams::new(omega, b, a), 1e-12).unwrap();
            prop_assert!((m.mtilde.det() - 1.0).norm() < 1e-9 * m.m.norm().max(1.0).powi(2));
            prop_assert!(m.im_trace_residual < 1e-10 * m.m.norm().max(1.0));
        }

        #[test]
        fn base_point_conjugation(omega in 0.5f64..3.0, b in -4.0f64..4.0, a in 0.0f64..6.0, t0 in 0.0f64..TWO_PI) {
            let p = SystemParams::new(omega, b, a);
            let m0 = monodromy(&p, 1e-12).unwrap();
            let mut o = MonodromyOptions::new(1e-12);
            o.base_angle = t0;
            let m1 = monodromy_with(&p, &o).unwrap();
            prop_assert!((m0.trace - m1.trace).norm() < 1e-9);
        }
    }
}
