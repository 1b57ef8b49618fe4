//! Taylor-series continuation of the linear system
//!
//! ```text
//! u' = z⁻² ( −(l z + μ(1 + z²)) u + z/(2iω) v )
//! v' = u / (2iω z)
//! ```
//!
//! along straight segments and circular arcs avoiding `z = 0`. Coefficients
//! at the expansion point `z0` come from multiplying through by `z²` and
//! matching powers of `t = z − z0`:
//!
//! ```text
//! z0²(k+1) w_{k+1} = P0 w_k + P1 w_{k−1} + P2 w_{k−2} − 2 z0 k w_k − (k−1) w_{k−1}
//! ```
//!
//! where `P(z) = P0 + P1 t + P2 t²` is the polynomial numerator matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{vnorm, Mat2C, Vec2C, C64, I};
use crate::params::{DerivedParams, Precision};

/// Coefficients of the linear system for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct LinearSystem {
    pub l: f64,
    pub mu: f64,
    /// `1/(2iω)`
    pub kappa: C64,
}

impl LinearSystem {
    pub fn new(d: &DerivedParams) -> Self {
        Self {
            l: d.l,
            mu: d.mu,
            kappa: (I * (2.0 * d.omega)).inv(),
        }
    }

    /// Right-hand-side matrix `A(z)` with `w' = A(z) w`.
    pub fn matrix(&self, z: C64) -> Mat2C {
        let z2 = z * z;
        let p00 = -(z * self.l + self.mu + z2 * self.mu);
        let kz = self.kappa * z;
        Mat2C::new(p00, kz, kz, C64::new(0.0, 0.0)).scale(z2.inv())
    }

    /// `−l log z + μ/z − μ z`, the antiderivative of `tr A`; `log z` is
    /// supplied by the caller so the branch follows the path.
    pub fn trace_primitive(&self, z: C64, log_z: C64) -> C64 {
        -log_z * self.l + z.inv() * self.mu - z * self.mu
    }

    /// Log-modulus of the formal exponential factor `z^{−l} e^{μ(1/z − z)}`.
    pub fn dominance_log(&self, z: C64) -> f64 {
        -self.l * z.norm().ln() + self.mu * (z.inv() - z).re
    }

    /// Max-row-sum norm of `A(z0)`; the local exponential rate.
    fn rate(&self, z0: C64) -> f64 {
        let a = self.matrix(z0);
        let r0 = a.get(0, 0).norm() + a.get(0, 1).norm();
        let r1 = a.get(1, 0).norm() + a.get(1, 1).norm();
        r0.max(r1)
    }

    /// Taylor coefficients `w_0..=w_order` of the solution through `w` at `z0`.
    fn coefficients(&self, z0: C64, w: &Vec2C, order: usize, out: &mut Vec<Vec2C>) {
        out.clear();
        out.push(*w);
        let zero = C64::new(0.0, 0.0);
        let p00 = -(z0 * self.l + self.mu + z0 * z0 * self.mu);
        let p10 = -(z0 * (2.0 * self.mu) + self.l);
        let kz0 = self.kappa * z0;
        let k = self.kappa;
        let z0sq_inv = (z0 * z0).inv();
        let two_z0 = z0 * 2.0;
        for n in 0..order {
            let wn = out[n];
            let wm1 = if n >= 1 { out[n - 1] } else { [zero, zero] };
            let um2 = if n >= 2 { out[n - 2][0] } else { zero };
            let nf = n as f64;
            let u = p00 * wn[0] + kz0 * wn[1] + p10 * wm1[0] + k * wm1[1]
                - um2 * self.mu
                - two_z0 * nf * wn[0]
                - wm1[0] * (nf - 1.0);
            let v = kz0 * wn[0] + k * wm1[0] - two_z0 * nf * wn[1] - wm1[1] * (nf - 1.0);
            let s = z0sq_inv / (nf + 1.0);
            out.push([u * s, v * s]);
        }
    }
}

/// A piece of an integration path.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PathSeg {
    Segment { from: C64, to: C64 },
    /// Circle of `radius` about the origin, angle running from `from_angle`
    /// to `to_angle` (counterclockwise when increasing).
    Arc { radius: f64, from_angle: f64, to_angle: f64 },
}

impl PathSeg {
    pub fn segment(from: C64, to: C64) -> Self {
        PathSeg::Segment { from, to }
    }

    pub fn arc(radius: f64, from_angle: f64, to_angle: f64) -> Self {
        PathSeg::Arc { radius, from_angle, to_angle }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathSeg::Segment { from, to } => (to - from).norm(),
            PathSeg::Arc { radius, from_angle, to_angle } => radius * (to_angle - from_angle).abs(),
        }
    }

    /// Point at arclength `s`.
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            PathSeg::Segment { from, to } => {
                let len = (to - from).norm();
                if len == 0.0 {
                    from
                } else {
                    from + (to - from) * (s / len)
                }
            }
            PathSeg::Arc { radius, from_angle, to_angle } => {
                let dir = (to_angle - from_angle).signum();
                Complex64::from_polar(radius, from_angle + dir * s / radius)
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        match *self {
            PathSeg::Segment { to, .. } => to,
            PathSeg::Arc { radius, to_angle, .. } => Complex64::from_polar(radius, to_angle),
        }
    }

    /// Change of `arg z` along the path.
    pub fn arg_change(&self) -> f64 {
        match *self {
            PathSeg::Segment { from, to } => (to / from).arg(),
            PathSeg::Arc { from_angle, to_angle, .. } => to_angle - from_angle,
        }
    }

    /// Smallest `|z|` on the path.
    pub fn min_modulus(&self) -> f64 {
        match *self {
            PathSeg::Segment { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return from.norm();
                }
                let t = (-(from.conj() * d).re / len2).clamp(0.0, 1.0);
                (from + d * t).norm()
            }
            PathSeg::Arc { radius, .. } => radius,
        }
    }
}

/// Solution columns, each stored as a unit-norm mantissa and a log scale so
/// that exponentially large or small solutions stay representable.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub cols: Vec<Vec2C>,
    pub log_scale: Vec<f64>,
}

impl Frame {
    pub fn from_columns(cols: Vec<Vec2C>) -> Self {
        let mut f = Frame {
            log_scale: vec![0.0; cols.len()],
            cols,
        };
        f.renormalize();
        f
    }

    pub fn with_scales(cols: Vec<Vec2C>, log_scale: Vec<f64>) -> Self {
        let mut f = Frame { cols, log_scale };
        f.renormalize();
        f
    }

    pub fn identity() -> Self {
        let m = Mat2C::identity();
        Frame::from_columns(vec![m.column(0), m.column(1)])
    }

    fn shear(&mut self) {
        if self.cols.len() != 2 {
            return;
        }
        let (a, b) = (self.cols[0], self.cols[1]);
        let proj = a[0].conj() * b[0] + a[1].conj() * b[1];
        // a multiple of column 0 is removed from column 1; with unit-norm
        // mantissas this is a constant-coefficient combination of solutions
        self.cols[1] = [b[0] - a[0] * proj, b[1] - a[1] * proj];
        self.renormalize();
    }

    fn renormalize(&mut self) {
        for (c, s) in self.cols.iter_mut().zip(self.log_scale.iter_mut()) {
            let n = vnorm(c);
            if n > 0.0 && n.is_finite() {
                c[0] /= n;
                c[1] /= n;
                *s += n.ln();
            }
        }
    }

    /// Column `j` with its scale applied.
    pub fn column(&self, j: usize) -> Vec2C {
        let s = self.log_scale[j].exp();
        [self.cols[j][0] * s, self.cols[j][1] * s]
    }

    /// The 2×2 fundamental matrix (requires two columns).
    pub fn matrix(&self) -> Mat2C {
        Mat2C::from_columns(self.column(0), self.column(1))
    }

    /// `log det` of the two-column frame, principal branch on the mantissa.
    pub fn log_det(&self) -> C64 {
        let m = Mat2C::from_columns(self.cols[0], self.cols[1]);
        m.det().ln() + (self.log_scale[0] + self.log_scale[1])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TaylorOptions {
    /// Local relative truncation tolerance per step.
    pub tol: f64,
    pub order: usize,
    pub precision: Precision,
    /// Largest `h · ‖A(z0)‖` allowed in one step.
    pub stiff_cap: f64,
    /// Largest step as a fraction of the distance `|z0|` to the singularity.
    pub radius_frac: f64,
    /// If set, the observer also sees points at most this far apart.
    pub sample_spacing: Option<f64>,
    /// Shear the second column against the first after every step, keeping
    /// a two-column frame well conditioned without changing its determinant
    /// or its first column.
    pub orthogonalize: bool,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            order: 30,
            precision: Precision::Standard,
            stiff_cap: 3.0,
            radius_frac: 0.5,
            sample_spacing: None,
            orthogonalize: false,
        }
    }
}

impl TaylorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TransportReport {
    pub steps: usize,
    pub length: f64,
    /// `|det(end)/det(start) / exp(∫ tr A) − 1|` for two-column frames.
    pub wronskian_drift: Option<f64>,
    /// Sum of the per-step truncation estimates.
    pub trunc_estimate: f64,
}

impl TransportReport {
    pub fn drift_per_length(&self) -> Option<f64> {
        self.wronskian_drift
            .map(|d| if self.length > 0.0 { d / self.length } else { d })
    }
}

fn two_sum(a: C64, b: C64) -> (C64, C64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn eval(coef: &[Vec2C], t: C64, precision: Precision) -> Vec2C {
    match precision {
        Precision::Standard => {
            let mut acc = *coef.last().unwrap();
            for w in coef.iter().rev().skip(1) {
                acc = [acc[0] * t + w[0], acc[1] * t + w[1]];
            }
            acc
        }
        Precision::Compensated => {
            let mut sum = [C64::new(0.0, 0.0); 2];
            let mut comp = [C64::new(0.0, 0.0); 2];
            let mut tp = C64::new(1.0, 0.0);
            for w in coef {
                for i in 0..2 {
                    let (s, e) = two_sum(sum[i], w[i] * tp);
                    sum[i] = s;
                    comp[i] += e;
                }
                tp *= t;
            }
            [sum[0] + comp[0], sum[1] + comp[1]]
        }
    }
}

/// Transports `frame` along `path`; `observe(s, z, frame)` is called at the
/// start, after every step, and at intermediate sample points.
pub fn transport<F>(
    sys: &LinearSystem,
    path: &PathSeg,
    frame: &Frame,
    opts: &TaylorOptions,
    mut observe: F,
) -> Result<(Frame, TransportReport)>
where
    F: FnMut(f64, C64, &Frame),
{
    let len = path.length();
    let mut report = TransportReport {
        length: len,
        ..Default::default()
    };
    if path.min_modulus() <= 0.0 {
        return Err(Error::InvalidParams("path passes through the singular point z = 0".into()));
    }
    let mut cur = frame.clone();
    let ncols = cur.cols.len();
    observe(0.0, path.start(), &cur);
    if len == 0.0 {
        if ncols == 2 {
            report.wronskian_drift = Some(0.0);
        }
        return Ok((cur, report));
    }

    let log_det0 = (ncols == 2).then(|| cur.log_det());
    let order = opts.order.max(4);
    let mut coef: Vec<Vec<Vec2C>> = vec![Vec::with_capacity(order + 1); ncols];
    let mut s = 0.0;
    let mut z0 = path.start();

    while s < len {
        let r = z0.norm();
        let mut h = (opts.radius_frac * r).min(opts.stiff_cap / sys.rate(z0));
        for (j, c) in coef.iter_mut().enumerate() {
            sys.coefficients(z0, &cur.cols[j], order, c);
            let w0 = vnorm(&c[0]).max(1e-300);
            for k in [order - 1, order] {
                let wk = vnorm(&c[k]) / w0;
                if wk > 0.0 {
                    h = h.min(0.9 * (opts.tol / wk).powf(1.0 / k as f64));
                }
            }
        }
        if !(h > 1e-14 * r) {
            return Err(Error::Stiffness {
                at: s,
                detail: format!("taylor step {h:e} at z = {z0}"),
            });
        }
        let last = s + h >= len;
        let s_next = if last { len } else { s + h };
        let z1 = if last { path.end() } else { path.point(s_next) };

        if let Some(dx) = opts.sample_spacing {
            let n_sub = ((s_next - s) / dx).ceil() as usize;
            for i in 1..n_sub {
                let si = s + (s_next - s) * i as f64 / n_sub as f64;
                let zi = path.point(si);
                let cols = coef.iter().map(|c| eval(c, zi - z0, opts.precision)).collect();
                let f = Frame::with_scales(cols, cur.log_scale.clone());
                observe(si, zi, &f);
            }
        }

        let t = z1 - z0;
        for (j, c) in coef.iter().enumerate() {
            cur.cols[j] = eval(c, t, opts.precision);
            let w0 = vnorm(&c[0]).max(1e-300);
            report.trunc_estimate += vnorm(&c[order]) / w0 * t.norm().powi(order as i32);
        }
        cur.renormalize();
        if opts.orthogonalize {
            cur.shear();
        }
        if cur.cols.iter().any(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(Error::Stiffness {
                at: s_next,
                detail: "non-finite state".into(),
            });
        }
        report.steps += 1;
        s = s_next;
        z0 = z1;
        observe(s, z0, &cur);
    }

    if let Some(ld0) = log_det0 {
        let start = path.start();
        let end = path.end();
        let log_start = C64::new(start.norm().ln(), start.arg());
        let log_end = C64::new(end.norm().ln(), start.arg() + path.arg_change());
        let expected = sys.trace_primitive(end, log_end) - sys.trace_primitive(start, log_start);
        let d = cur.log_det() - ld0 - expected;
        report.wronskian_drift = Some((d.exp() - 1.0).norm());
    }
    Ok((cur, report))
}

/// Transports along a chain of segments, returning per-piece reports.
pub fn transport_chain(
    sys: &LinearSystem,
    pieces: &[PathSeg],
    frame: &Frame,
    opts: &TaylorOptions,
) -> Result<(Frame, Vec<TransportReport>)> {
    let mut cur = frame.clone();
    let mut reports = Vec::with_capacity(pieces.len());
    for p in pieces {
        let (next, rep) = transport(sys, p, &cur, opts, |_, _, _| {})?;
        cur = next;
        reports.push(rep);
    }
    Ok((cur, reports))
}
