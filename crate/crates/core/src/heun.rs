//! Series solutions of the special double confluent Heun equation
//!
//! ```text
//! z²E'' + ((l+1)z + μ(1 − z²))E' + (λ − μ(l+1)z)E = 0
//! ```
//!
//! and of its conjugate (`l → −l`), polynomial solutions of the conjugate
//! equation, and detection of entire solutions by backward recursion.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monodromy::{monodromy, phase_lock_test, rotation_class, LockKind};
use crate::params::{DerivedParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeunVariant {
    Heun,
    ConjugateHeun,
}

fn require_mu(d: &DerivedParams) -> Result<()> {
    if d.mu == 0.0 || !d.mu.is_finite() {
        return Err(Error::InvalidParams("series recurrence needs mu != 0".into()));
    }
    Ok(())
}

/// `a_{k+1} = [−(k(k+l)+λ) a_k + μ(k+l) a_{k−1}] / (μ(k+1))`
pub fn recurrence_step_heun(k: usize, a_k: f64, a_km1: f64, d: &DerivedParams) -> Result<f64> {
    require_mu(d)?;
    let kf = k as f64;
    Ok((-(kf * (kf + d.l) + d.lambda) * a_k + d.mu * (kf + d.l) * a_km1) / (d.mu * (kf + 1.0)))
}

/// `a_{k+1} = −[(k(k−l)+λ) a_k + μ(l−k) a_{k−1}] / (μ(k+1))`
pub fn recurrence_step_conjugate(k: usize, a_k: f64, a_km1: f64, d: &DerivedParams) -> Result<f64> {
    require_mu(d)?;
    let kf = k as f64;
    Ok(-((kf * (kf - d.l) + d.lambda) * a_k + d.mu * (d.l - kf) * a_km1) / (d.mu * (kf + 1.0)))
}

/// Taylor coefficients `a_0..=a_K` at `z = 0`, normalized by `a_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeunRecurrence {
    pub variant: HeunVariant,
    pub derived: DerivedParams,
    pub coeffs: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
}

impl HeunRecurrence {
    pub fn new(variant: HeunVariant, derived: DerivedParams, k: usize) -> Result<Self> {
        require_mu(&derived)?;
        let step = match variant {
            HeunVariant::Heun => recurrence_step_heun,
            HeunVariant::ConjugateHeun => recurrence_step_conjugate,
        };
        let mut coeffs = Vec::with_capacity(k + 1);
        coeffs.push(1.0);
        for n in 0..k {
            let prev = if n == 0 { 0.0 } else { coeffs[n - 1] };
            let next = step(n, coeffs[n], prev, &derived)?;
            coeffs.push(next);
        }
        Ok(Self {
            variant,
            derived,
            coeffs,
            k,
        })
    }

    /// `l` as it enters the equation: `l` or `−l` for the conjugate.
    pub fn signed_l(&self) -> f64 {
        match self.variant {
            HeunVariant::Heun => self.derived.l,
            HeunVariant::ConjugateHeun => -self.derived.l,
        }
    }

    /// Coefficients of `z^k`, `k < K`, after substituting the truncated
    /// series into the equation, divided by `max |a_k|`.
    pub fn residuals(&self) -> Vec<f64> {
        let (l, mu, lam) = (self.signed_l(), self.derived.mu, self.derived.lambda);
        let a = &self.coeffs;
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (0..self.k)
            .map(|k| {
                let kf = k as f64;
                let am1 = if k == 0 { 0.0 } else { a[k - 1] };
                // z²E'' + (l+1)zE' + λE  contributes (k(k−1) + (l+1)k + λ) a_k
                // μE' contributes μ(k+1)a_{k+1}; −μz²E' − μ(l+1)zE gives −μ(k−1+l+1)a_{k−1}
                let r = (kf * (kf - 1.0) + (l + 1.0) * kf + lam) * a[k] + mu * (kf + 1.0) * a[k + 1]
                    - mu * (kf + l) * am1;
                r.abs() / scale
            })
            .collect()
    }
}

/// Polynomial in `λ`, ascending coefficients.
fn poly_mul_linear(p: &[f64], c0: f64, c1: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (i, &v) in p.iter().enumerate() {
        out[i] += c0 * v;
        out[i + 1] += c1 * v;
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_eval(p: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for &c in p.iter().rev() {
        dv = dv * x + v;
        v = v * x + c;
    }
    (v, dv)
}

/// A real root of `P_l` mapped to the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyRoot {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

/// `P_l(λ)` with `μ² = 1/(4ω²) − λ` substituted, so that it depends on `λ`
/// alone; it is `μ^l a_l` of the conjugate recurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCondition {
    pub l: usize,
    pub omega: f64,
    /// Ascending coefficients in `λ`.
    pub coeffs: Vec<f64>,
    /// All real roots.
    pub roots: Vec<f64>,
    /// Roots with `λ < 1/(4ω²)`, i.e. with real `μ > 0`; ordered by `A`.
    pub admissible: Vec<PolyRoot>,
}

impl PolyCondition {
    pub fn eval(&self, lambda: f64) -> f64 {
        poly_eval(&self.coeffs, lambda).0
    }
}

/// Real roots of a polynomial: companion-matrix eigenvalues, Newton-polished.
fn real_roots(p: &[f64]) -> Vec<f64> {
    let mut p = p.to_vec();
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = p[n];
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        c[(i, n - 1)] = -p[i] / lead;
    }
    let scale = p.iter().map(|x| (x / lead).abs()).fold(1.0, f64::max);
    let mut roots: Vec<f64> = c
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * z.norm().max(1.0) * scale.sqrt())
        .map(|z| {
            let mut x = z.re;
            for _ in 0..8 {
                let (v, dv) = poly_eval(&p, x);
                if dv == 0.0 {
                    break;
                }
                let dx = v / dv;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1e-300) {
                    break;
                }
            }
            x
        })
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    roots
}

pub fn polynomial_condition(l: usize, omega: f64) -> Result<PolyCondition> {
    if l == 0 {
        return Err(Error::InvalidParams("polynomial condition needs l >= 1".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
    }
    let q = 1.0 / (4.0 * omega * omega);
    let lf = l as f64;
    // (k+1) b_{k+1} = −(k(k−l) + λ) b_k − (q − λ)(l − k) b_{k−1}
    let mut prev: Vec<f64> = vec![0.0];
    let mut cur: Vec<f64> = vec![1.0];
    for k in 0..l {
        let kf = k as f64;
        let t1 = poly_mul_linear(&cur, -kf * (kf - lf), -1.0);
        let t2 = poly_mul_linear(&prev, -q * (lf - kf), lf - kf);
        let next: Vec<f64> = poly_add(&t1, &t2).into_iter().map(|c| c / (kf + 1.0)).collect();
        prev = cur;
        cur = next;
    }
    let roots = real_roots(&cur);
    let mut admissible: Vec<PolyRoot> = roots
        .iter()
        .filter(|&&lam| lam < q)
        .map(|&lam| {
            let mu = (q - lam).sqrt();
            PolyRoot {
                lambda: lam,
                mu,
                a: 2.0 * omega * mu,
            }
        })
        .collect();
    admissible.sort_by(|a, b| a.a.total_cmp(&b.a));
    Ok(PolyCondition {
        l,
        omega,
        coeffs: cur,
        roots,
        admissible,
    })
}

/// Entire-solution indicator on an axis.
///
/// `xi` is the normalized Casoratian `f_k m_{k+1} − f_{k+1} m_k` of the
/// solution `f` obeying the boundary relation `μ a_1 + λ a_0 = 0` and the
/// minimal solution `m`, taken at the turning point `k*` of the recurrence.
/// The Casoratian alternates in sign along `k` with positive ratio
/// magnitudes and equals `(μ m_1 + λ m_0)/μ` at `k = 0`, so `xi` vanishes exactly when the Heun equation has an entire
/// solution, while forward recursion below `k*` and backward recursion above
/// it are both stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntireIndicator {
    pub xi: f64,
    #[serde(rename = "K_used")]
    pub k_used: usize,
    /// Growth `max |f_k| / |f_0|` over `k ≤ k*`, the amplification a direct
    /// backward evaluation down to `k = 0` would suffer.
    pub condition_estimate: f64,
}

fn turning_point(d: &DerivedParams) -> usize {
    // k(k + l) + λ = 0
    if d.lambda >= 0.0 {
        return 0;
    }
    let k = 0.5 * (-d.l + (d.l * d.l - 4.0 * d.lambda).sqrt());
    k.round() as usize
}

fn miller(d: &DerivedParams, k: usize, stop: usize) -> (f64, f64) {
    let (l, mu, lam) = (d.l, d.mu, d.lambda);
    let mut a_next = 0.0; // m_{K+1}
    let mut a_cur = 1.0; // m_K
    for n in (stop + 1..=k).rev() {
        let nf = n as f64;
        let a_prev = (mu * (nf + 1.0) * a_next + (nf * (nf + l) + lam) * a_cur) / (mu * (nf + l));
        a_next = a_cur;
        a_cur = a_prev;
        let s = a_cur.abs().max(a_next.abs());
        if s > 1e150 {
            a_cur /= s;
            a_next /= s;
        }
    }
    (a_cur, a_next)
}

fn forward(d: &DerivedParams, stop: usize) -> (f64, f64, f64) {
    let (l, mu, lam) = (d.l, d.mu, d.lambda);
    let mut prev = 1.0;
    let mut cur = -lam / mu;
    let mut log_growth = 0.0f64;
    let mut max_log = 0.0f64;
    for n in 1..=stop {
        let nf = n as f64;
        let next = (-(nf * (nf + l) + lam) * cur + mu * (nf + l) * prev) / (mu * (nf + 1.0));
        prev = cur;
        cur = next;
        let s = prev.abs().max(cur.abs());
        max_log = max_log.max(log_growth + s.ln());
        if s > 1e150 {
            prev /= s;
            cur /= s;
            log_growth += s.ln();
        }
    }
    (prev, cur, max_log.max(0.0))
}

fn indicator_at(d: &DerivedParams, k: usize) -> EntireIndicator {
    let ks = turning_point(d).min(k.saturating_sub(2));
    let (m0, m1) = miller(d, k, ks);
    let (f0, f1, growth) = forward(d, ks);
    // C_k = −(k+l)/(k+1) C_{k−1}
    let sign = if ks % 2 == 0 { 1.0 } else { -1.0 };
    let cas = sign * (f0 * m1 - f1 * m0);
    EntireIndicator {
        xi: cas / (f0.hypot(f1) * m0.hypot(m1)),
        k_used: k,
        condition_estimate: growth.exp(),
    }
}

pub fn default_start_order(d: &DerivedParams) -> usize {
    let est = 8.0 * d.mu.abs() + 4.0 * d.lambda.abs().sqrt() + 2.0 * d.l.abs();
    50usize.max(est.ceil() as usize)
}

/// Miller backward recursion from order `k` (doubled until `xi` settles).
pub fn entire_indicator(d: &DerivedParams, k: usize) -> Result<EntireIndicator> {
    if !(d.mu > 0.0) {
        return Err(Error::InvalidParams("entire indicator needs mu > 0".into()));
    }
    if d.l < 0.0 || (d.l - d.l.round()).abs() > 1e-10 {
        return Err(Error::InvalidParams(format!("entire indicator needs integer l >= 0, got {}", d.l)));
    }
    let mut k = k.max(8);
    let k_max = 64 * k;
    let mut cur = indicator_at(d, k);
    loop {
        let next = indicator_at(d, 2 * k);
        let delta = (next.xi - cur.xi).abs();
        if delta <= 1e-10 + 1e-8 * next.xi.abs() {
            return Ok(next);
        }
        k *= 2;
        if k >= k_max {
            return Err(Error::Truncation { k_max: 2 * k, delta });
        }
        cur = next;
    }
}

/// Indicator at `(B, A) = (ωl, A)` with the default start order.
pub fn entire_indicator_at(p: &SystemParams) -> Result<EntireIndicator> {
    let d = p.derive()?;
    entire_indicator(&d, default_start_order(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CandidateStatus {
    /// `M̃ = ±Id` confirmed.
    Validated,
    Suspect,
}

/// A zero of the entire-solution indicator on an axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstrictionCandidate {
    pub r: i64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub xi: f64,
    /// `‖M̃ ∓ Id‖`
    pub scalar_distance: f64,
    /// `tr M̃`
    pub trace: f64,
    /// Rotation number of the area the point belongs to.
    pub area: i64,
    pub status: CandidateStatus,
}

/// Indicator values on a uniform grid of the axis, evaluated in parallel.
fn scan(omega: f64, r: i64, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&a| Ok(entire_indicator_at(&SystemParams::on_axis(omega, r, a))?.xi))
        .collect()
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, mut flo: f64, tol: f64) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ordinates on `B = ωr` where the Heun equation has an entire solution,
/// each validated against the monodromy (`M̃ = ±Id` within `tol`).
pub fn find_constrictions_on_axis(
    r: i64,
    omega: f64,
    a_range: (f64, f64),
    tol: f64,
) -> Result<Vec<ConstrictionCandidate>> {
    if r < 0 {
        return Err(Error::InvalidParams("constriction scan needs r >= 0".into()));
    }
    let (a0, a1) = a_range;
    if !(a0 > 0.0) {
        return Err(Error::InvalidParams(format!("A range must lie in (0, inf), got {a_range:?}")));
    }
    if a1 <= a0 {
        return Ok(Vec::new());
    }
    let step = 0.05 * omega;
    let n = ((a1 - a0) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (a0 + i as f64 * step).min(a1)).collect();
    let xs = scan(omega, r, &grid)?;
    let brackets: Vec<(f64, f64, f64)> = (0..n)
        .filter(|&i| xs[i] == 0.0 || (xs[i] > 0.0) != (xs[i + 1] > 0.0))
        .map(|i| (grid[i], grid[i + 1], xs[i]))
        .collect();
    let f = |a: f64| Ok(entire_indicator_at(&SystemParams::on_axis(omega, r, a))?.xi);
    let mut out: Vec<ConstrictionCandidate> = brackets
        .par_iter()
        .map(|&(lo, hi, flo)| {
            let a = if flo == 0.0 { lo } else { bisect(f, lo, hi, flo, 1e-10)? };
            let p = SystemParams::on_axis(omega, r, a);
            let xi = entire_indicator_at(&p)?.xi;
            let m = monodromy(&p, 1e-13)?;
            let dist = m.distance_from_scalar();
            let area = rotation_class(&p, 1e-12)?.n;
            Ok(ConstrictionCandidate {
                r,
                b: p.b,
                a,
                xi,
                scalar_distance: dist,
                trace: m.trace.re,
                area,
                status: if dist < tol { CandidateStatus::Validated } else { CandidateStatus::Suspect },
            })
        })
        .collect::<Result<_>>()?;
    out.dedup_by(|x, y| (x.a - y.a).abs() < 1e-8);
    Ok(out)
}

/// A non-constriction boundary point on `B = ωr` from a root of `P_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleIntersectionRecord {
    pub r: i64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub lambda: f64,
    /// `|tr M̃| − 2`
    pub margin: f64,
    pub lock: LockKind,
    pub xi: f64,
    /// Integer rotation number of the area whose boundary contains the point.
    pub area: i64,
    /// Maximal-ordinate point of `∂L_r ∩ Λ_r`; the ray above it starts here.
    pub higher: bool,
}

impl SimpleIntersectionRecord {
    /// A boundary point of `L_r` itself (rather than of `L_{r−2k}`).
    pub fn is_simple(&self) -> bool {
        self.area == self.r && self.lock == LockKind::Boundary
    }
}

/// Roots of `P_r` that pass the boundary and non-constriction filters.
///
/// All admissible roots are returned with their area so that boundary points
/// of lower areas on the same axis stay visible; [`SimpleIntersectionRecord::is_simple`]
/// selects the simple intersections of `L_r`.
pub fn find_simple_intersections(r: i64, omega: f64) -> Result<Vec<SimpleIntersectionRecord>> {
    if r < 1 {
        return Err(Error::InvalidParams("simple intersections need r >= 1".into()));
    }
    let pc = polynomial_condition(r as usize, omega)?;
    let mut out: Vec<SimpleIntersectionRecord> = pc
        .admissible
        .par_iter()
        .map(|root| {
            let p = SystemParams::on_axis(omega, r, root.a);
            let lock = phase_lock_test(&p, 1e-13)?;
            let ind = entire_indicator_at(&p)?;
            let area = rotation_class(&p, 1e-12)?.n;
            Ok(SimpleIntersectionRecord {
                r,
                b: p.b,
                a: root.a,
                lambda: root.lambda,
                margin: lock.margin,
                lock: lock.kind,
                xi: ind.xi,
                area,
                higher: false,
            })
        })
        .collect::<Result<_>>()?;
    out.retain(|s| s.lock == LockKind::Boundary && s.xi.abs() > 1e-8);
    if let Some(top) = out
        .iter_mut()
        .filter(|s| s.area == r)
        .max_by(|x, y| x.a.total_cmp(&y.a))
    {
        top.higher = true;
    }
    if !out.iter().any(|s| s.is_simple()) {
        log::warn!("no simple intersection of L_{r} found on its axis for omega = {omega}");
    }
    Ok(out)
}
