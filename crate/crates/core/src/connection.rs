//! Canonical sectorial solutions at zero, the Stokes multipliers `c₀`, `c₁`
//! and the zero-infinity transition matrix `Q = (−a, b; −c, a)` on the axes
//! `B = ωl`, `l ∈ ℤ≥0`.
//!
//! The formal normal form is `diag(z^{−l} e^{μ(1/z − z)}, 1)`. The second
//! canonical solution `f₂` is the recessive one on `ℝ₊` and the first, `f₁`,
//! the recessive one on `ℝ₋`; both are seeded from the optimally truncated
//! formal series near the origin and carried outward, where they become
//! dominant, then continued along the upper unit half-circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heun::ConstrictionCandidate;
use crate::integrate::{transport, Frame, LinearSystem, PathSeg, TaylorOptions};
use crate::mat2::{vnorm, Mat2C, Vec2C, C64};
use crate::monodromy::{monodromy, phase_lock_test, LockKind};
use crate::params::{DerivedParams, Precision, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RealSide {
    RPlus,
    RMinus,
}

/// Values of the canonical solutions at `z0 = ±eps` from the formal series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSeed {
    pub z0: C64,
    /// Effective truncation order.
    pub order: usize,
    /// `H(z0)·(1, 0)` times the phase of `z0^{−l} e^{μ(1/z0 − z0)}`.
    pub f1_seed: Vec2C,
    /// `ln |z0^{−l} e^{μ(1/z0 − z0)}|`
    pub f1_log_scale: f64,
    pub f2_seed: Vec2C,
    /// Size of the smallest retained term relative to the leading one.
    pub trunc_error: f64,
    /// The terms stopped decreasing before the requested order.
    pub optimal_truncation: bool,
}

/// Columns of the formal normalizing series `H(z) = Σ H_k z^k`, `H_0 = Id`.
pub fn formal_coefficients(d: &DerivedParams, order: usize) -> (Vec<Vec2C>, Vec<Vec2C>) {
    let (l, mu) = (d.l, d.mu);
    let kappa = (C64::new(0.0, 2.0 * d.omega)).inv();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    // first column: z x' = κ y ; μ y_k = (k−1−l) y_{k−1} − μ y_{k−2} − κ x_{k−1}
    let mut c1: Vec<Vec2C> = vec![[one, zero]];
    // second column: k y_k = κ x_k ; μ x_k = −(k−1+l) x_{k−1} − μ x_{k−2} + κ y_{k−1}
    let mut c2: Vec<Vec2C> = vec![[zero, one]];
    for k in 1..=order {
        let kf = k as f64;
        let (x1, y1) = (c1[k - 1][0], c1[k - 1][1]);
        let y2m = if k >= 2 { c1[k - 2][1] } else { zero };
        let y = (y1 * (kf - 1.0 - l) - y2m * mu - kappa * x1) / mu;
        c1.push([kappa * y / kf, y]);

        let (x1, y1) = (c2[k - 1][0], c2[k - 1][1]);
        let x2m = if k >= 2 { c2[k - 2][0] } else { zero };
        let x = (-x1 * (kf - 1.0 + l) - x2m * mu + kappa * y1) / mu;
        c2.push([x, kappa * x / kf]);
    }
    (c1, c2)
}

fn truncated_sum(coef: &[Vec2C], z: C64) -> (Vec2C, usize, f64, bool) {
    let az = z.norm();
    let terms: Vec<f64> = coef.iter().enumerate().map(|(k, c)| vnorm(c) * az.powi(k as i32)).collect();
    // optimal truncation: stop before the smallest term; guard against
    // accidental cancellation by looking at its neighbours too
    let last = terms.len() - 1;
    let window = |k: usize| terms[k..=(k + 2).min(last)].iter().fold(0.0f64, |m, &t| m.max(t));
    let best = (1..=last).min_by(|&i, &j| window(i).total_cmp(&window(j))).unwrap_or(last);
    let window = window(best);
    let optimal = best < last;
    let mut s = [C64::new(0.0, 0.0); 2];
    let mut zk = C64::new(1.0, 0.0);
    for c in coef.iter().take(best) {
        s[0] += c[0] * zk;
        s[1] += c[1] * zk;
        zk *= z;
    }
    (s, best, window / terms[0], optimal)
}

fn require_mu(d: &DerivedParams) -> Result<()> {
    if !(d.mu > 0.0) {
        return Err(Error::InvalidParams(format!("connection data need A > 0, got mu = {}", d.mu)));
    }
    Ok(())
}

pub fn asymptotic_seed(d: &DerivedParams, side: RealSide, order: usize, eps: f64) -> Result<AsymptoticSeed> {
    require_mu(d)?;
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::InvalidParams(format!("seed radius must lie in (0, 0.2], got {eps}")));
    }
    let (c1, c2) = formal_coefficients(d, order.max(1));
    let z0 = match side {
        RealSide::RPlus => C64::new(eps, 0.0),
        RealSide::RMinus => C64::new(-eps, 0.0),
    };
    let (h1, k1, e1, o1) = truncated_sum(&c1, z0);
    let (h2, k2, e2, o2) = truncated_sum(&c2, z0);
    // z^{−l} on the branch with arg z ∈ [0, π] (upper half-plane)
    let log_z = C64::new(eps.ln(), if side == RealSide::RMinus { PI } else { 0.0 });
    let log_f = -log_z * d.l + z0.inv() * d.mu - z0 * d.mu;
    let phase = Complex64::from_polar(1.0, log_f.im);
    Ok(AsymptoticSeed {
        z0,
        order: k1.min(k2),
        f1_seed: [h1[0] * phase, h1[1] * phase],
        f1_log_scale: log_f.re,
        f2_seed: h2,
        trunc_error: e1.max(e2),
        optimal_truncation: o1 || o2,
    })
}

/// Seed radius with relative truncation error below `1e-16`.
pub fn choose_eps(d: &DerivedParams) -> Result<f64> {
    require_mu(d)?;
    let mut eps = (d.mu / 4.0).min(0.2);
    for _ in 0..200 {
        let s = asymptotic_seed(d, RealSide::RPlus, 80, eps)?;
        let t = asymptotic_seed(d, RealSide::RMinus, 80, eps)?;
        if s.trunc_error.max(t.trunc_error) < 1e-16 {
            return Ok(eps);
        }
        eps *= 0.8;
    }
    Err(Error::Accuracy(format!("no seed radius reaches the truncation target at {d:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Carried {
    /// The canonical solution with the exponential factor.
    First,
    Second,
}

/// Diagnostics of one transported solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub label: String,
    pub pieces: Vec<PathSeg>,
    pub length: f64,
    pub steps: usize,
    /// Largest `|det drift|` per unit length over the pieces.
    pub wronskian_drift: f64,
    /// Largest relative loss of dominance of the carried solution, as a factor.
    pub recession: f64,
}

/// Largest factor by which the carried solution loses dominance against
/// the other formal solution along the path, from `z^{−l} e^{μ(1/z − z)}`.
pub fn dominance_loss(sys: &LinearSystem, pieces: &[PathSeg], carried: Carried) -> f64 {
    let sgn = match carried {
        Carried::First => 1.0,
        Carried::Second => -1.0,
    };
    let mut best = f64::NEG_INFINITY;
    let mut drop: f64 = 0.0;
    for p in pieces {
        let n = 256;
        let len = p.length();
        for i in 0..=n {
            let z = p.point(len * i as f64 / n as f64);
            let rel = sgn * sys.dominance_log(z);
            best = best.max(rel);
            drop = drop.max(best - rel);
        }
    }
    drop.exp()
}

/// Refusal threshold for loss of dominance along a transport.
pub const MAX_RECESSION: f64 = 1e6;

fn taylor_opts(tol: f64, precision: Precision) -> TaylorOptions {
    TaylorOptions {
        tol: (tol * 1e-4).clamp(1e-16, 1e-10),
        precision,
        orthogonalize: true,
        ..TaylorOptions::default()
    }
}

/// Carries one solution along `pieces`, together with a complementary
/// column that measures the Wronskian drift. Returns the mantissa and log
/// scale at the end.
pub fn transport_solution(
    p: &SystemParams,
    start: Vec2C,
    start_log_scale: f64,
    pieces: &[PathSeg],
    carried: Carried,
    tol: f64,
    label: &str,
) -> Result<(Vec2C, f64, PathRecord)> {
    let d = p.derive()?;
    let sys = LinearSystem::new(&d);
    transport_with(&sys, start, start_log_scale, pieces, carried, tol, Precision::Standard, label)
}

#[allow(clippy::too_many_arguments)]
fn transport_with(
    sys: &LinearSystem,
    start: Vec2C,
    start_log_scale: f64,
    pieces: &[PathSeg],
    carried: Carried,
    tol: f64,
    precision: Precision,
    label: &str,
) -> Result<(Vec2C, f64, PathRecord)> {
    let recession = dominance_loss(sys, pieces, carried);
    if recession > MAX_RECESSION {
        return Err(Error::Stability { factor: recession });
    }
    let n = vnorm(&start);
    if n == 0.0 {
        return Err(Error::InvalidParams("cannot transport the zero vector".into()));
    }
    let complement = [-start[1].conj() / n, start[0].conj() / n];
    let mut frame = Frame::with_scales(vec![start, complement], vec![start_log_scale, 0.0]);
    let opts = taylor_opts(tol, precision);
    let mut rec = PathRecord {
        label: label.to_string(),
        pieces: pieces.to_vec(),
        length: 0.0,
        steps: 0,
        wronskian_drift: 0.0,
        recession,
    };
    for piece in pieces {
        let (f, rep) = transport(sys, piece, &frame, &opts, |_, _, _| {})?;
        frame = f;
        rec.length += rep.length;
        rec.steps += rep.steps;
        rec.wronskian_drift = rec.wronskian_drift.max(rep.drift_per_length().unwrap_or(0.0));
    }
    Ok((frame.cols[0], frame.log_scale[0], rec))
}

fn unscale(v: Vec2C, log_scale: f64) -> Vec2C {
    let s = log_scale.exp();
    [v[0] * s, v[1] * s]
}

/// Canonical solutions of the sector containing the upper half-plane,
/// evaluated at `z = 1` and `z = −1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFrame {
    pub params: SystemParams,
    pub l: i64,
    pub eps: f64,
    pub seed_order: usize,
    pub seed_trunc_error: f64,
    pub f1_at_1: Vec2C,
    pub f2_at_1: Vec2C,
    pub f1_at_m1: Vec2C,
    pub f2_at_m1: Vec2C,
    pub paths: Vec<PathRecord>,
    /// Largest per-length Wronskian drift over all paths.
    pub wronskian_drift: f64,
    /// `|det[f1|f2](1) − 1|`
    pub det_residual_1: f64,
    /// `|det[f1|f2](−1) − (−1)^l|`
    pub det_residual_m1: f64,
    /// Branch of `z^{−l}`: `arg z = 0` on `ℝ₊`, continued counterclockwise.
    pub branch: String,
}

impl CanonicalFrame {
    pub fn w_at_1(&self) -> Mat2C {
        Mat2C::from_columns(self.f1_at_1, self.f2_at_1)
    }

    pub fn w_at_m1(&self) -> Mat2C {
        Mat2C::from_columns(self.f1_at_m1, self.f2_at_m1)
    }
}

fn axis_params(p: &SystemParams) -> Result<(i64, DerivedParams)> {
    let l = p
        .integer_l()
        .filter(|&l| l >= 0)
        .ok_or_else(|| Error::InvalidParams(format!("connection data need B/omega in Z>=0, got B = {}", p.b)))?;
    let mut d = p.derive()?;
    require_mu(&d)?;
    d.l = l as f64;
    Ok((l, d))
}

pub fn canonical_frame(p: &SystemParams, tol: f64) -> Result<CanonicalFrame> {
    canonical_frame_with(p, tol, Precision::Standard)
}

pub fn canonical_frame_with(p: &SystemParams, tol: f64, precision: Precision) -> Result<CanonicalFrame> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let (l, d) = axis_params(p)?;
    let sys = LinearSystem::new(&d);
    let eps = choose_eps(&d)?;
    let sp = asymptotic_seed(&d, RealSide::RPlus, 80, eps)?;
    let sm = asymptotic_seed(&d, RealSide::RMinus, 80, eps)?;

    let plus = [PathSeg::segment(sp.z0, C64::new(1.0, 0.0))];
    let minus = [PathSeg::segment(sm.z0, C64::new(-1.0, 0.0))];
    let (r2, r1) = rayon::join(
        || transport_with(&sys, sp.f2_seed, 0.0, &plus, Carried::Second, tol, precision, "f2: +eps -> 1 along R+"),
        || transport_with(&sys, sm.f1_seed, sm.f1_log_scale, &minus, Carried::First, tol, precision, "f1: -eps -> -1 along R-"),
    );
    let (f2_1, s2_1, rec2) = r2?;
    let (f1_m1, s1_m1, rec1) = r1?;

    let upper_to_1 = [PathSeg::arc(1.0, PI, 0.0)];
    let upper_to_m1 = [PathSeg::arc(1.0, 0.0, PI)];
    let (a1, a2) = rayon::join(
        || transport_with(&sys, f1_m1, s1_m1, &upper_to_1, Carried::First, tol, precision, "f1: -1 -> 1 upper arc"),
        || transport_with(&sys, f2_1, s2_1, &upper_to_m1, Carried::Second, tol, precision, "f2: 1 -> -1 upper arc"),
    );
    let (f1_1, s1_1, rec3) = a1?;
    let (f2_m1, s2_m1, rec4) = a2?;

    let f1_at_1 = unscale(f1_1, s1_1);
    let f2_at_1 = unscale(f2_1, s2_1);
    let f1_at_m1 = unscale(f1_m1, s1_m1);
    let f2_at_m1 = unscale(f2_m1, s2_m1);
    let paths = vec![rec2, rec1, rec3, rec4];
    let wronskian_drift = paths.iter().map(|r| r.wronskian_drift).fold(0.0, f64::max);
    let sign_l = if l % 2 == 0 { 1.0 } else { -1.0 };
    let det1 = Mat2C::from_columns(f1_at_1, f2_at_1).det();
    let detm1 = Mat2C::from_columns(f1_at_m1, f2_at_m1).det();
    Ok(CanonicalFrame {
        params: *p,
        l,
        eps,
        seed_order: sp.order.min(sm.order),
        seed_trunc_error: sp.trunc_error.max(sm.trunc_error),
        f1_at_1,
        f2_at_1,
        f1_at_m1,
        f2_at_m1,
        paths,
        wronskian_drift,
        det_residual_1: (det1 - 1.0).norm(),
        det_residual_m1: (detm1 - sign_l).norm(),
        branch: "arg z = 0 on R+, continued counterclockwise through the upper half-plane".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionData {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    #[serde(rename = "Q")]
    pub q: Mat2C,
    /// `‖Q² − Id‖`
    pub involution_residual: f64,
    /// `|a² − bc − 1|`
    pub relation1_residual: f64,
}

impl TransitionData {
    pub fn from_frame(f: &CanonicalFrame) -> Self {
        let i = C64::new(0.0, 1.0);
        let (f11, f21) = (f.f1_at_1[0], f.f1_at_1[1]);
        let (f12, f22) = (f.f2_at_1[0], f.f2_at_1[1]);
        let b = i * (f12 * f12 + f22 * f22);
        let c = i * (f11 * f11 + f21 * f21);
        let a = -i * (f11 * f12 + f21 * f22);
        let q = Mat2C::new(-a, b, -c, a);
        TransitionData {
            a,
            b,
            c,
            q,
            involution_residual: (q * q - Mat2C::identity()).norm(),
            relation1_residual: (a * a - b * c - 1.0).norm(),
        }
    }

    /// `|Re b| / |b|`
    pub fn re_b_relative(&self) -> f64 {
        self.b.re.abs() / self.b.norm().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesPair {
    pub c0: C64,
    pub c1: C64,
    /// `(|Im c0|, |Im c1|)`
    pub reality_residuals: (f64, f64),
    /// `|a c0 c1 − (b c1 − c c0)|`
    pub relation2_residual: f64,
    /// `(−1)^l (2 + c0 c1)`
    pub trace_from_stokes: C64,
}

impl StokesPair {
    pub fn from_frame(f: &CanonicalFrame, q: &TransitionData, tol: f64) -> Result<Self> {
        let f22 = f.f2_at_1[1];
        let f11m = f.f1_at_m1[0];
        let scale1 = vnorm(&f.f2_at_1).max(f64::MIN_POSITIVE);
        let scalem = vnorm(&f.f1_at_m1).max(f64::MIN_POSITIVE);
        if f22.norm() < tol * scale1 {
            return Err(Error::DegenerateFrame(format!("f22(1) = {f22} vanishes")));
        }
        if f11m.norm() < tol * scalem {
            return Err(Error::DegenerateFrame(format!("f11(-1) = {f11m} vanishes")));
        }
        let c1 = C64::new(2.0 * f.f1_at_1[1].re, 0.0) / f22;
        let c0 = C64::new(-2.0 * f.f2_at_m1[0].re, 0.0) / f11m;
        let sign_l = if f.l % 2 == 0 { 1.0 } else { -1.0 };
        Ok(StokesPair {
            c0,
            c1,
            reality_residuals: (c0.im.abs(), c1.im.abs()),
            relation2_residual: (q.a * c0 * c1 - (q.b * c1 - q.c * c0)).norm(),
            trace_from_stokes: (c0 * c1 + 2.0) * sign_l,
        })
    }

    /// `Δ₀ = β²(4σ + c₁²) − 4`, `β = −ib`, `σ = c₁/c₀` (real parts).
    pub fn delta0(&self, q: &TransitionData) -> f64 {
        let beta = (-C64::new(0.0, 1.0) * q.b).re;
        let sigma = self.c1.re / self.c0.re;
        beta * beta * (4.0 * sigma + self.c1.re * self.c1.re) - 4.0
    }
}

/// Frame, transition matrix and Stokes multipliers from one computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionData {
    pub frame: CanonicalFrame,
    pub transition: TransitionData,
    pub stokes: StokesPair,
}

pub fn connection_data(p: &SystemParams, tol: f64) -> Result<ConnectionData> {
    let frame = canonical_frame(p, tol)?;
    let transition = TransitionData::from_frame(&frame);
    let stokes = StokesPair::from_frame(&frame, &transition, tol)?;
    Ok(ConnectionData {
        frame,
        transition,
        stokes,
    })
}

pub fn transition_matrix(p: &SystemParams, tol: f64) -> Result<TransitionData> {
    Ok(TransitionData::from_frame(&canonical_frame(p, tol)?))
}

pub fn stokes_multipliers(p: &SystemParams, tol: f64) -> Result<StokesPair> {
    Ok(connection_data(p, tol)?.stokes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstrictionSign {
    Positive,
    Negative,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub delta: f64,
    pub above: LockKind,
    pub below: LockKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrictionRecord {
    pub r: i64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub sign: ConstrictionSign,
    /// `Re(c/b)`
    pub cb_ratio: f64,
    /// `|Im(c/b)|`
    pub cb_imag: f64,
    pub xi: f64,
    pub c0: C64,
    pub c1: C64,
    pub b_coef: C64,
    pub c_coef: C64,
    /// `‖M̃ ∓ Id‖`
    pub scalar_distance: f64,
    /// Rotation number of the area at the point.
    pub area: i64,
    pub probes: Vec<Probe>,
    /// Sign from `c/b` and all probes agree.
    pub agreement: bool,
    pub branch: String,
}

pub const PROBE_LADDER: [f64; 3] = [1e-2, 3e-3, 1e-3];

/// Sign of a validated constriction from `Re(c/b)`, cross-checked by the
/// trace test just above and below it on the axis.
pub fn classify_constriction(p: &SystemParams, tol: f64) -> Result<ConstrictionRecord> {
    let data = connection_data(p, tol)?;
    let m = monodromy(p, 1e-13)?;
    let (b, c) = (data.transition.b, data.transition.c);
    let ratio = c / b;
    let scale = ratio.norm();
    if ratio.im.abs() > 1e-6 * scale.max(1e-300) && ratio.im.abs() > tol {
        return Err(Error::Inconsistency(format!(
            "c/b = {ratio} is not real at the constriction {p:?}"
        )));
    }
    let tol_sign = 1e-6 * (c.norm() + b.norm()) / 2.0;
    let predicted = if ratio.re > tol_sign {
        ConstrictionSign::Positive
    } else if ratio.re < -tol_sign {
        ConstrictionSign::Negative
    } else {
        ConstrictionSign::Undetermined
    };
    let expect = match predicted {
        ConstrictionSign::Positive => Some(LockKind::Inside),
        ConstrictionSign::Negative => Some(LockKind::Outside),
        ConstrictionSign::Undetermined => None,
    };
    let mut probes = Vec::new();
    for f in PROBE_LADDER {
        let delta = f * p.omega;
        let above = phase_lock_test(&SystemParams::new(p.omega, p.b, p.a + delta), 1e-13)?.kind;
        let below = phase_lock_test(&SystemParams::new(p.omega, p.b, p.a - delta), 1e-13)?.kind;
        probes.push(Probe { delta, above, below });
    }
    let agreement = expect.is_some_and(|k| probes.iter().all(|pr| pr.above == k && pr.below == k));
    let sign = if agreement { predicted } else { ConstrictionSign::Undetermined };
    let area = crate::monodromy::rotation_class(p, 1e-12)?.n;
    let xi = crate::heun::entire_indicator_at(p)?.xi;
    Ok(ConstrictionRecord {
        r: data.frame.l,
        b: p.b,
        a: p.a,
        sign,
        cb_ratio: ratio.re,
        cb_imag: ratio.im.abs(),
        xi,
        c0: data.stokes.c0,
        c1: data.stokes.c1,
        b_coef: b,
        c_coef: c,
        scalar_distance: m.distance_from_scalar(),
        area,
        probes,
        agreement,
        branch: data.frame.branch,
    })
}

pub fn classify_candidate(omega: f64, cand: &ConstrictionCandidate, tol: f64) -> Result<ConstrictionRecord> {
    classify_constriction(&SystemParams::new(omega, cand.b, cand.a), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    /// `None` when skipped.
    pub passed: Option<bool>,
    pub note: String,
}

impl Check {
    fn le(name: &str, residual: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            threshold,
            passed: Some(residual <= threshold),
            note: String::new(),
        }
    }

    fn skipped(name: &str, note: &str) -> Self {
        Check {
            name: name.into(),
            residual: f64::NAN,
            threshold: f64::NAN,
            passed: None,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub params: SystemParams,
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.passed == Some(false)).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Drift per unit length allowed for the determinant of transported frames.
pub const WRONSKIAN_DRIFT_MAX: f64 = 1e-9;

pub fn identity_battery(p: &SystemParams, tol: f64) -> Result<CheckReport> {
    let data = connection_data(p, tol)?;
    let m = monodromy(p, 1e-13)?;
    let (q, s) = (&data.transition, &data.stokes);
    let mut checks = vec![
        Check::le("b_imaginary", q.re_b_relative(), tol),
        Check::le("c0_real", s.reality_residuals.0, tol),
        Check::le("c1_real", s.reality_residuals.1, tol),
        Check::le("a2_bc_1", q.relation1_residual, tol),
        Check::le("q_involution", q.involution_residual, tol),
        Check::le("relation2", s.relation2_residual, 10.0 * tol),
        Check::le("wronskian_drift", data.frame.wronskian_drift, WRONSKIAN_DRIFT_MAX),
        Check::le("det_at_1", data.frame.det_residual_1, tol),
        Check::le("det_at_m1", data.frame.det_residual_m1, tol),
        Check::le("trace_real", m.im_trace_residual, tol),
        Check::le("trace_stokes", (s.trace_from_stokes - m.trace).norm(), tol * m.trace.norm().max(1.0)),
    ];
    let c0 = s.c0.re;
    if c0.abs() <= 1e-4 {
        checks.push(Check::skipped("delta0", "|c0| <= 1e-4"));
        checks.push(Check::skipped("qeq", "|c0| <= 1e-4"));
    } else {
        if data.frame.l >= 1 {
            checks.push(Check::le("delta0", s.delta0(q), 10.0 * tol));
        } else {
            let mut c = Check::le("delta0", s.delta0(q), 10.0 * tol);
            c.passed = None;
            c.note = "l = 0: inequality stated for l >= 1, reported only".into();
            checks.push(c);
        }
        let i = C64::new(0.0, 1.0);
        let beta = -i * q.b;
        let gamma = -i * q.c;
        let c1 = s.c1;
        let sigma = c1 / s.c0;
        let terms = [
            gamma * gamma,
            beta * (sigma * 2.0 + c1 * c1) * gamma,
            beta * beta * sigma * sigma,
            c1 * c1,
        ];
        let res = terms[0] - terms[1] + terms[2] + terms[3];
        let scale = terms.iter().map(|t| t.norm()).fold(1.0, f64::max);
        checks.push(Check::le("qeq", res.norm() / scale, 10.0 * tol));
    }
    Ok(CheckReport { params: *p, checks })
}
