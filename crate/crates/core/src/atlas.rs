//! Parameter-plane products: grid sweeps, boundary curves, the Bessel
//! comparison, ray and garland checks and the constriction catalog.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::connection::{classify_constriction, stokes_multipliers, ConstrictionRecord};
use crate::error::{Error, Result};
use crate::heun::{find_constrictions_on_axis, find_simple_intersections, CandidateStatus, SimpleIntersectionRecord};
use crate::monodromy::{phase_lock_test, rho_and_lock, rotation_class, LockKind};
use crate::params::SystemParams;
use crate::torus::{rho_direct, RhoMethod};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub b_min: f64,
    pub b_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub nb: usize,
    pub na: usize,
}

impl GridSpec {
    pub fn new(b_range: (f64, f64), a_range: (f64, f64), nb: usize, na: usize) -> Self {
        GridSpec {
            b_min: b_range.0,
            b_max: b_range.1,
            a_min: a_range.0,
            a_max: a_range.1,
            nb,
            na,
        }
    }

    /// Grid with every axis `B = ωk` and the line `A = 0` on cell edges:
    /// `ΔB = ω/m ≤ max_step`, `ΔA = ΔB`, `B` symmetric and covering
    /// `[−b_half, b_half]`, `A ∈ [0, a_max]`.
    pub fn axis_aligned(omega: f64, b_half: f64, a_max: f64, max_step: f64) -> Self {
        let m = (omega / max_step).ceil().max(1.0);
        let db = omega / m;
        let cover = |x: f64| {
            let n = (x / db).ceil() as usize;
            if (n as f64) * db < x { n + 1 } else { n }
        };
        let (nb_half, na) = (cover(b_half), cover(a_max));
        GridSpec::new((-(nb_half as f64) * db, nb_half as f64 * db), (0.0, na as f64 * db), 2 * nb_half, na)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.b_min, self.b_max, self.a_min, self.a_max].iter().all(|x| x.is_finite());
        if !finite || self.b_max <= self.b_min || self.a_max <= self.a_min {
            return Err(Error::InvalidParams(format!("empty grid ranges {self:?}")));
        }
        if self.nb < 2 || self.na < 2 {
            return Err(Error::InvalidParams(format!("grid needs nB, nA >= 2, got {} x {}", self.nb, self.na)));
        }
        Ok(())
    }

    pub fn db(&self) -> f64 {
        (self.b_max - self.b_min) / self.nb as f64
    }

    pub fn da(&self) -> f64 {
        (self.a_max - self.a_min) / self.na as f64
    }

    /// Cell centres; the range ends are cell edges.
    pub fn b_at(&self, i: usize) -> f64 {
        self.b_min + (i as f64 + 0.5) * self.db()
    }

    pub fn a_at(&self, j: usize) -> f64 {
        self.a_min + (j as f64 + 0.5) * self.da()
    }

    pub fn len(&self) -> usize {
        self.nb * self.na
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepMethod {
    Mobius,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Inside,
    Boundary,
    Outside,
    Error,
}

impl From<LockKind> for CellClass {
    fn from(k: LockKind) -> Self {
        match k {
            LockKind::Inside => CellClass::Inside,
            LockKind::Boundary => CellClass::Boundary,
            LockKind::Outside => CellClass::Outside,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub rho: f64,
    pub rho_error: f64,
    pub lock_margin: f64,
    pub class: CellClass,
    pub method: Option<RhoMethod>,
    pub error: Option<String>,
}

impl Cell {
    fn failed(e: Error) -> Self {
        Cell {
            rho: f64::NAN,
            rho_error: f64::NAN,
            lock_margin: f64::NAN,
            class: CellClass::Error,
            method: None,
            error: Some(e.to_string()),
        }
    }

    /// Integer label of a locked cell.
    pub fn area(&self) -> Option<i64> {
        (self.class == CellClass::Inside).then(|| self.rho.round() as i64)
    }
}

/// Rotation number and lock class at one parameter point.
pub fn evaluate_cell(p: &SystemParams, method: SweepMethod, tol: f64) -> Cell {
    let run = || -> Result<Cell> {
        let (mut est, lock) = rho_and_lock(p, tol)?;
        if method == SweepMethod::Direct {
            est = match rho_direct(p, tol, 1 << 14) {
                Ok(d) => d,
                Err(Error::Convergence { best, .. }) => *best,
                Err(e) => return Err(e),
            };
        }
        Ok(Cell {
            rho: est.rho,
            rho_error: est.error_bound,
            lock_margin: lock.margin,
            class: lock.kind.into(),
            method: Some(est.method),
            error: None,
        })
    };
    run().unwrap_or_else(Cell::failed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitGrid {
    pub omega: f64,
    pub spec: GridSpec,
    pub method: SweepMethod,
    pub tol: f64,
    /// Row-major with `A` as the row index: cell `(i, j)` at `j·nB + i`.
    pub cells: Vec<Cell>,
}

impl PortraitGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.spec.nb + i]
    }

    pub fn error_count(&self) -> usize {
        self.cells.iter().filter(|c| c.class == CellClass::Error).count()
    }

    /// Locked cells whose rotation number is farther than `tol` from an integer.
    pub fn quantization_violations(&self, tol: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for j in 0..self.spec.na {
            for i in 0..self.spec.nb {
                let c = self.cell(i, j);
                if c.class == CellClass::Inside && (c.rho - c.rho.round()).abs() >= tol {
                    out.push((i, j, c.rho));
                }
            }
        }
        out
    }
}

pub fn sweep(omega: f64, spec: &GridSpec, method: SweepMethod, tol: f64) -> Result<PortraitGrid> {
    spec.validate()?;
    SystemParams::new(omega, 0.0, 0.0).validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let rows: Vec<Vec<Cell>> = (0..spec.na)
        .into_par_iter()
        .map(|j| {
            let t = std::time::Instant::now();
            let a = spec.a_at(j);
            let row: Vec<Cell> = (0..spec.nb)
                .map(|i| evaluate_cell(&SystemParams::new(omega, spec.b_at(i), a), method, tol))
                .collect();
            log::debug!("unit=row j={j} A={a} cells={} ms={:.3}", spec.nb, t.elapsed().as_secs_f64() * 1e3);
            row
        })
        .collect();
    let cells = rows.into_iter().flatten().collect();
    Ok(PortraitGrid {
        omega,
        spec: *spec,
        method,
        tol,
        cells,
    })
}

/// Connected components (4-neighbour) of the locked cells labelled `r`;
/// components smaller than `min_cells` are discarded as resolution debris.
pub fn inside_components(grid: &PortraitGrid, r: i64, min_cells: usize) -> Vec<Vec<(usize, usize)>> {
    let (nb, na) = (grid.spec.nb, grid.spec.na);
    let member = |i: usize, j: usize| grid.cell(i, j).area() == Some(r);
    let mut seen = vec![false; nb * na];
    let mut out = Vec::new();
    for j0 in 0..na {
        for i0 in 0..nb {
            if seen[j0 * nb + i0] || !member(i0, j0) {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![(i0, j0)];
            seen[j0 * nb + i0] = true;
            while let Some((i, j)) = stack.pop() {
                comp.push((i, j));
                let mut nbrs = Vec::with_capacity(4);
                if i > 0 {
                    nbrs.push((i - 1, j));
                }
                if i + 1 < nb {
                    nbrs.push((i + 1, j));
                }
                if j > 0 {
                    nbrs.push((i, j - 1));
                }
                if j + 1 < na {
                    nbrs.push((i, j + 1));
                }
                for (x, y) in nbrs {
                    if !seen[y * nb + x] && member(x, y) {
                        seen[y * nb + x] = true;
                        stack.push((x, y));
                    }
                }
            }
            if comp.len() >= min_cells {
                comp.sort_unstable_by_key(|&(i, j)| (j, i));
                out.push(comp);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    #[serde(rename = "A")]
    pub a: f64,
    /// `None` where no bracket was found (a gap).
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// `||tr M̃| − 2|` at `b`.
    pub residual: f64,
    /// Final bracket width.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub r: i64,
    pub side: Side,
    pub omega: f64,
    pub samples: Vec<BoundarySample>,
}

impl BoundaryCurve {
    pub fn gaps(&self) -> usize {
        self.samples.iter().filter(|s| s.b.is_none()).count()
    }
}

/// Monotone observable of `B` on a horizontal line: the integer of a locked
/// point, the rotation number otherwise.
fn level(p: &SystemParams, tol: f64) -> Result<f64> {
    let rc = rotation_class(p, tol)?;
    Ok(if rc.locked { rc.n as f64 } else { rc.rho })
}

/// `g_{r,−}(A) = inf {B : ρ ≥ r}` and `g_{r,+}(A) = sup {B : ρ ≤ r}` by
/// bisection in the window `|B − rω| ≤ 2 + 1/(|r|ω + 1)`.
pub fn boundary_point(r: i64, side: Side, omega: f64, a: f64, tol: f64) -> Result<BoundarySample> {
    let rf = r as f64;
    let half = 2.0 + 1.0 / (rf.abs() * omega + 1.0);
    let (mut lo, mut hi) = (rf * omega - half, rf * omega + half);
    // predicate true on the right part of the window
    let pred = |b: f64| -> Result<bool> {
        let v = level(&SystemParams::new(omega, b, a), 1e-13)?;
        Ok(match side {
            Side::Minus => v >= rf,
            Side::Plus => v > rf,
        })
    };
    if pred(lo)? || !pred(hi)? {
        return Ok(BoundarySample {
            a,
            b: None,
            residual: f64::NAN,
            width: hi - lo,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the closed side of the area
    let b = match side {
        Side::Minus => hi,
        Side::Plus => lo,
    };
    let lock = phase_lock_test(&SystemParams::new(omega, b, a), 1e-13)?;
    Ok(BoundarySample {
        a,
        b: Some(b),
        residual: lock.margin.abs(),
        width: hi - lo,
    })
}

pub fn trace_boundary(r: i64, side: Side, omega: f64, a_values: &[f64], tol: f64) -> Result<BoundaryCurve> {
    SystemParams::new(omega, 0.0, 0.0).validate()?;
    if let Some(a) = a_values.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidParams(format!("boundary ordinates must be >= 0, got {a}")));
    }
    let samples = a_values
        .par_iter()
        .map(|&a| boundary_point(r, side, omega, a, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurve { r, side, omega, samples })
}

/// Uniform ordinates `a0, …, a1`.
pub fn linspace(a0: f64, a1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a0];
    }
    (0..n).map(|k| a0 + (a1 - a0) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselRow {
    #[serde(rename = "A")]
    pub a: f64,
    pub g: f64,
    pub model: f64,
    pub deviation: f64,
    /// `deviation · A / ln A`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselReport {
    pub r: i64,
    pub side: Side,
    pub omega: f64,
    pub rows: Vec<BesselRow>,
    /// `max |scaled|`
    pub constant: f64,
    /// Ratio of `max |scaled|` over the upper half of the range to that over
    /// the lower half; values well above 1 indicate a trend.
    pub trend: f64,
}

impl BesselReport {
    pub fn bounded(&self, max_trend: f64) -> bool {
        self.constant.is_finite() && self.trend <= max_trend
    }
}

/// Compares a boundary curve with `rω ∓ |J_r(−A/ω)|`, the lower and upper
/// envelopes of the two Bessel branches.
pub fn bessel_compare(curve: &BoundaryCurve) -> Result<BesselReport> {
    let omega = curve.omega;
    let rows: Vec<BesselRow> = curve
        .samples
        .iter()
        .filter_map(|s| s.b.map(|b| (s.a, b)))
        .map(|(a, g)| {
            let j = bessel_j(curve.r, -a / omega).abs();
            let model = curve.r as f64 * omega
                + match curve.side {
                    Side::Minus => -j,
                    Side::Plus => j,
                };
            let deviation = g - model;
            BesselRow {
                a,
                g,
                model,
                deviation,
                scaled: deviation * a / a.ln(),
            }
        })
        .collect();
    if rows.len() < 4 || rows.iter().any(|r| r.a < 10.0 * omega) {
        return Err(Error::Range(format!(
            "Bessel comparison needs at least 4 samples with A >= 10 omega = {}",
            10.0 * omega
        )));
    }
    let mid = 0.5 * (rows[0].a + rows[rows.len() - 1].a);
    let max_abs = |it: &mut dyn Iterator<Item = &BesselRow>| it.map(|r| r.scaled.abs()).fold(0.0f64, f64::max);
    let lower = max_abs(&mut rows.iter().filter(|r| r.a <= mid));
    let upper = max_abs(&mut rows.iter().filter(|r| r.a > mid));
    Ok(BesselReport {
        r: curve.r,
        side: curve.side,
        omega,
        constant: lower.max(upper),
        trend: upper / lower.max(f64::MIN_POSITIVE),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    #[serde(rename = "A")]
    pub a: f64,
    pub kind: LockKind,
    pub n: i64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayCheck {
    pub r: i64,
    pub omega: f64,
    /// Ordinate of the highest simple intersection.
    pub a_start: f64,
    pub a_max: f64,
    pub passed: bool,
    pub samples: Vec<RaySample>,
    pub violations: Vec<RaySample>,
}

/// Highest simple intersection of `L_r` with its axis.
pub fn higher_point(r: i64, omega: f64) -> Result<SimpleIntersectionRecord> {
    find_simple_intersections(r, omega)?
        .into_iter()
        .find(|s| s.higher)
        .ok_or_else(|| Error::Inconsistency(format!("no simple intersection of L_{r} on its axis at omega = {omega}")))
}

/// Samples `{ωr} × [A(𝒫_r), a_max]` and checks that each lies in `L_r`.
pub fn verify_ray(r: i64, omega: f64, a_max: f64, n: usize) -> Result<RayCheck> {
    if r < 1 {
        return Err(Error::InvalidParams("ray check needs r >= 1".into()));
    }
    let top = higher_point(r, omega)?;
    let a_values = if a_max <= top.a { vec![top.a] } else { linspace(top.a, a_max, n.max(2)) };
    let samples = a_values
        .par_iter()
        .map(|&a| {
            let p = SystemParams::on_axis(omega, r, a);
            let lock = phase_lock_test(&p, 1e-13)?;
            let rc = rotation_class(&p, 1e-12)?;
            Ok(RaySample {
                a,
                kind: lock.kind,
                n: rc.n,
                margin: lock.margin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<RaySample> = samples
        .iter()
        .filter(|s| s.kind == LockKind::Outside || s.n != r)
        .copied()
        .collect();
    Ok(RayCheck {
        r,
        omega,
        a_start: top.a,
        a_max,
        passed: violations.is_empty(),
        samples,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEvidence {
    pub axis: i64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub samples: usize,
    pub inside_lr: bool,
}

/// Evidence for the garland conjectures; never a proof claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarlandReport {
    pub r: i64,
    pub omega: f64,
    pub a_range: (f64, f64),
    /// Constrictions of `L_r` on its own axis.
    pub on_axis: Vec<f64>,
    /// Constrictions of `L_r` on axes `Λ_m`, `m < r`.
    pub off_axis: Vec<(i64, f64)>,
    pub segments: Vec<SegmentEvidence>,
    pub status: String,
}

pub fn garland_scan(r: i64, omega: f64, a_range: (f64, f64)) -> Result<GarlandReport> {
    if r < 0 {
        return Err(Error::InvalidParams("garland scan needs r >= 0".into()));
    }
    let mut on_axis = Vec::new();
    let mut off_axis = Vec::new();
    for m in (r % 2..=r).step_by(2) {
        for c in find_constrictions_on_axis(m, omega, a_range, 1e-6)? {
            if c.status != CandidateStatus::Validated || c.area != r {
                continue;
            }
            if m == r {
                on_axis.push(c.a);
            } else {
                off_axis.push((m, c.a));
            }
        }
    }
    let segments = on_axis
        .windows(2)
        .map(|w| {
            let pts = linspace(w[0], w[1], 9);
            let inner = &pts[1..pts.len() - 1];
            let inside = inner
                .par_iter()
                .map(|&a| {
                    let p = SystemParams::on_axis(omega, r, a);
                    Ok(phase_lock_test(&p, 1e-13)?.kind != LockKind::Outside && rotation_class(&p, 1e-12)?.n == r)
                })
                .collect::<Result<Vec<bool>>>()?;
            Ok(SegmentEvidence {
                axis: r,
                a_lo: w[0],
                a_hi: w[1],
                samples: inner.len(),
                inside_lr: inside.iter().all(|&b| b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GarlandReport {
        r,
        omega,
        a_range,
        on_axis,
        off_axis,
        segments,
        status: "conjecture evidence".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleRow {
    pub record: SimpleIntersectionRecord,
    pub c0: f64,
    pub c1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub omega: f64,
    pub r_max: i64,
    pub a_max: f64,
    pub constrictions: Vec<ConstrictionRecord>,
    pub simple_intersections: Vec<SimpleRow>,
    /// `r → (B, A)` of `𝒫_r`.
    pub higher_points: BTreeMap<i64, (f64, f64)>,
    pub ray_checks: BTreeMap<i64, bool>,
    /// Theorem-level violations.
    pub alarms: Vec<String>,
}

impl Catalog {
    /// Constriction ordinates of `L_r` (`r ≥ 0`) with `A` in `(0, a_max)`.
    pub fn constrictions_of(&self, r: i64) -> Vec<f64> {
        self.constrictions.iter().filter(|c| c.area == r).map(|c| c.a).collect()
    }
}

/// Constrictions on the axes `Λ_0 … Λ_{r_max}` belonging to `L_r`,
/// `0 ≤ r ≤ r_max`, with `A ≤ a_max`, plus the simple intersections and
/// ray checks.
pub fn build_catalog(omega: f64, r_max: i64, a_max: f64, tol: f64) -> Result<Catalog> {
    SystemParams::new(omega, 0.0, 0.0).validate()?;
    if r_max < 0 || !(a_max > 0.0) {
        return Err(Error::InvalidParams(format!("catalog needs r_max >= 0 and A_max > 0, got {r_max}, {a_max}")));
    }
    let a0 = (0.02 * omega).min(0.05 * a_max);
    let mut alarms = Vec::new();
    let mut constrictions = Vec::new();
    for l in 0..=r_max {
        let cands = find_constrictions_on_axis(l, omega, (a0, a_max), 1e-6)?;
        let recs = cands
            .par_iter()
            .filter(|c| c.status == CandidateStatus::Validated && c.area.abs() <= r_max)
            .map(|c| classify_constriction(&SystemParams::new(omega, c.b, c.a), tol))
            .collect::<Result<Vec<_>>>()?;
        for rec in recs {
            let (r, l) = (rec.area, l);
            if l > r.abs() || (r - l) % 2 != 0 {
                alarms.push(format!(
                    "constriction of L_{r} at (B, A) = ({}, {}) on the axis l = {l}",
                    rec.b, rec.a
                ));
            }
            constrictions.push(rec);
        }
    }
    constrictions.sort_by(|x, y| (x.area, x.b).partial_cmp(&(y.area, y.b)).unwrap().then(x.a.total_cmp(&y.a)));

    let mut simple_intersections = Vec::new();
    let mut higher_points = BTreeMap::new();
    let mut ray_checks = BTreeMap::new();
    for r in 1..=r_max {
        let recs = find_simple_intersections(r, omega)?;
        for rec in recs {
            if rec.higher {
                higher_points.insert(r, (rec.b, rec.a));
            }
            let s = stokes_multipliers(&SystemParams::new(omega, rec.b, rec.a), tol)?;
            if rec.is_simple() && (s.c1.norm() >= tol || s.c0.norm() <= tol) {
                alarms.push(format!(
                    "simple intersection of L_{r} at A = {} has c0 = {}, c1 = {}",
                    rec.a, s.c0, s.c1
                ));
            }
            simple_intersections.push(SimpleRow {
                record: rec,
                c0: s.c0.re,
                c1: s.c1.re,
            });
        }
        if let Some(&(_, a)) = higher_points.get(&r) {
            let ray = verify_ray(r, omega, a_max.max(a), 64)?;
            if !ray.passed {
                alarms.push(format!("ray from P_{r} leaves L_{r} at {:?}", ray.violations.first()));
            }
            ray_checks.insert(r, ray.passed);
        }
    }
    Ok(Catalog {
        omega,
        r_max,
        a_max,
        constrictions,
        simple_intersections,
        higher_points,
        ray_checks,
        alarms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCount {
    pub r: i64,
    pub found: usize,
    pub expected: usize,
    /// Constriction ordinates of `L_{|r|}` inside the window (upper half).
    pub constrictions: Vec<f64>,
}

impl ComponentCount {
    pub fn matches(&self) -> bool {
        self.found == self.expected
    }
}

/// Component count of each `L_r`, `|r| ≤ r_max`, in an upper-half window
/// `A ≥ 0`, compared with the count implied by the catalog: the `k`
/// constrictions of `L_{|r|}` below the window top split it into `k + 1`
/// pieces.
pub fn component_counts(grid: &PortraitGrid, catalog: &Catalog, r_max: i64, min_cells: usize) -> Result<Vec<ComponentCount>> {
    let (a_lo, a_hi) = (grid.spec.a_min, grid.spec.a_max);
    if a_lo != 0.0 {
        return Err(Error::Range(format!("component counts need a window starting at A = 0, got {a_lo}")));
    }
    if catalog.a_max < a_hi || (catalog.omega - grid.omega).abs() > 0.0 || catalog.r_max < r_max {
        return Err(Error::Range("catalog does not cover the grid window".into()));
    }
    Ok((-r_max..=r_max)
        .map(|r| {
            let cs: Vec<f64> = catalog.constrictions_of(r.abs()).into_iter().filter(|&a| a < a_hi).collect();
            ComponentCount {
                r,
                found: inside_components(grid, r, min_cells).len(),
                expected: cs.len() + 1,
                constrictions: cs,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_grid() {
        let g = GridSpec::axis_aligned(0.7, 3.6, 8.0, 0.025);
        assert!(g.db() <= 0.025 && (g.db() - g.da()).abs() < 1e-15);
        for k in -5..=5 {
            let x = (0.7 * k as f64 - g.b_min) / g.db();
            assert!((x - x.round()).abs() < 1e-9);
        }
        assert!(g.b_max >= 3.6 && g.a_max >= 8.0 && g.a_min == 0.0);
    }

    #[test]
    fn grid_geometry() {
        let g = GridSpec::new((-6.0, 6.0), (-12.0, 12.0), 300, 300);
        assert!((g.b_at(0) + 5.98).abs() < 1e-12);
        // axes B = 2k and A = 0 fall on cell edges
        for i in 0..300 {
            assert!(((g.b_at(i) / 2.0).fract().abs() - 0.0).abs() > 1e-6);
        }
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 1, 5).validate().is_err());
    }

    #[test]
    fn small_sweep_symmetry_and_quantization() {
        let spec = GridSpec::new((-3.0, 3.0), (-3.0, 3.0), 12, 12);
        let g = sweep(2.0, &spec, SweepMethod::Mobius, 1e-9).unwrap();
        assert_eq!(g.error_count(), 0);
        assert!(g.quantization_violations(1e-6).is_empty());
        for j in 0..12 {
            for i in 0..12 {
                let c = g.cell(i, j);
                let up = g.cell(i, 11 - j);
                let neg = g.cell(11 - i, j);
                assert!((c.rho - up.rho).abs() < 1e-6, "{i} {j}");
                assert!((c.rho + neg.rho).abs() < 1e-6, "{i} {j}");
            }
        }
        // (−1, 1) × {0} lies inside L_0
        let c = g.cell(6, 6);
        assert_eq!(c.area(), Some(0));
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let spec = GridSpec::new((0.0, 4.0), (0.0, 4.0), 8, 8);
        let a = sweep(2.0, &spec, SweepMethod::Mobius, 1e-9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sweep(2.0, &spec, SweepMethod::Mobius, 1e-9).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn growth_point_on_boundary() {
        for r in 1..=3 {
            let omega = 1.0;
            let g = (r as f64 * r as f64 * omega * omega + 1.0).sqrt();
            for side in [Side::Minus, Side::Plus] {
                let s = boundary_point(r, side, omega, 0.0, 1e-10).unwrap();
                assert!((s.b.unwrap() - g).abs() < 1e-8, "{r} {side:?} {:?}", s.b);
            }
        }
    }

    #[test]
    fn simple_point_on_first_boundary() {
        // (ω, 1) is a boundary point of L_1
        let omega = 2.0;
        let lo = boundary_point(1, Side::Minus, omega, 1.0, 1e-11).unwrap().b.unwrap();
        let hi = boundary_point(1, Side::Plus, omega, 1.0, 1e-11).unwrap().b.unwrap();
        assert!((lo - omega).abs() < 1e-8 || (hi - omega).abs() < 1e-8, "{lo} {hi}");
    }

    #[test]
    fn components_of_synthetic_grid() {
        let spec = GridSpec::new((0.0, 4.0), (0.0, 3.0), 4, 3);
        let mk = |rho: f64, class| Cell {
            rho,
            rho_error: 0.0,
            lock_margin: 1.0,
            class,
            method: None,
            error: None,
        };
        let pat = [1, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1];
        let cells = pat
            .iter()
            .map(|&x| if x == 1 { mk(2.0, CellClass::Inside) } else { mk(1.5, CellClass::Outside) })
            .collect();
        let g = PortraitGrid {
            omega: 1.0,
            spec,
            method: SweepMethod::Mobius,
            tol: 1e-9,
            cells,
        };
        // rows: 1 1 0 1 / 0 0 0 1 / 1 0 1 1
        assert_eq!(inside_components(&g, 2, 1).len(), 3);
        assert_eq!(inside_components(&g, 2, 2).len(), 2);
        assert_eq!(inside_components(&g, 1, 1).len(), 0);
    }

    #[test]
    fn ray_examples() {
        assert!(verify_ray(1, 2.0, 12.0, 24).unwrap().passed);
        assert!(verify_ray(2, 1.0, 12.0, 24).unwrap().passed);
        let top = higher_point(1, 2.0).unwrap();
        let v = verify_ray(1, 2.0, top.a, 24).unwrap();
        assert!(v.passed && v.samples.len() == 1);
    }
}
