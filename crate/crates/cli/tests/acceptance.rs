//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, Sign};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use phaselock::atlas::{
    boundary_point, build_catalog, component_counts, higher_point, sweep, verify_ray, CellClass, GridSpec, Side,
    SweepMethod,
};
use phaselock::bessel::bessel_j;
use phaselock::connection::{classify_constriction, connection_data, ConstrictionSign, PROBE_LADDER};
use phaselock::heun::{entire_indicator_at, HeunRecurrence, HeunVariant};
use phaselock::monodromy::{monodromy, phase_lock_test, rho_mobius, LockKind};
use phaselock::torus::rho_direct;
use phaselock::{Error, SystemParams};
use phaselock_cli::commands::{asymptotics_report, MAX_TREND};

type Outcome = Result<(bool, String), Error>;

fn report(results: &mut Vec<(usize, bool)>, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let (ok, detail) = match f() {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    let _ = writeln!(
        std::io::stderr(),
        "{} {id:>2} {name}: {detail} ({:.1} s)",
        if ok { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64()
    );
    results.push((id, ok));
}

fn growth_points() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for omega in [0.5, 1.0, 2.0] {
        for r in 1..=3i64 {
            let t = Instant::now();
            let exact = ((r * r) as f64 * omega * omega + 1.0).sqrt();
            for side in [Side::Minus, Side::Plus] {
                let b = boundary_point(r, side, omega, 0.0, 1e-10)?
                    .b
                    .ok_or_else(|| Error::Range(format!("no boundary for r = {r}, omega = {omega}")))?;
                worst = worst.max((b - exact).abs());
            }
            slowest = slowest.max(t.elapsed());
        }
    }
    Ok((
        worst < 1e-6 && slowest < Duration::from_secs(60),
        format!("max |B - sqrt(r^2 w^2 + 1)| = {worst:.2e}, slowest (w, r) {:.2} s", slowest.as_secs_f64()),
    ))
}

fn quantization(rng: &mut StdRng) -> Outcome {
    let spec = GridSpec::new((-6.0, 6.0), (-12.0, 12.0), 300, 300);
    let t = Instant::now();
    let g = sweep(2.0, &spec, SweepMethod::Mobius, 1e-9)?;
    let sweep_time = t.elapsed().as_secs_f64();
    let inside = g.cells.iter().filter(|c| c.class == CellClass::Inside).count();
    let viol = g.quantization_violations(1e-6).len();
    let errors = g.error_count();

    let tol = 1e-6;
    let pts: Vec<SystemParams> = (0..1000)
        .map(|_| SystemParams::new(2.0, rng.gen_range(-6.0..6.0), rng.gen_range(-12.0..12.0)))
        .collect();
    let t = Instant::now();
    for p in &pts {
        rho_mobius(p, tol)?;
    }
    let tm = t.elapsed().as_secs_f64();
    let t = Instant::now();
    for p in &pts {
        match rho_direct(p, tol, 1 << 16) {
            Ok(_) | Err(Error::Convergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let td = t.elapsed().as_secs_f64();
    let speedup = td / tm;
    Ok((
        viol == 0 && errors == 0 && inside > 0 && speedup >= 20.0,
        format!(
            "{inside} Inside cells, {viol} off-integer, {errors} errors, sweep {sweep_time:.1} s; mobius {tm:.2} s vs direct {td:.2} s on 1000 points (x{speedup:.0})"
        ),
    ))
}

fn axis_points(rng: &mut StdRng, n: usize) -> Vec<(i64, f64)> {
    (0..n).map(|_| (rng.gen_range(0..4i64), rng.gen_range(0.2..8.0))).collect()
}

fn cross_method(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = SystemParams::new(2.0, rng.gen_range(0.0..4.0), rng.gen_range(0.0..6.0));
        let m = rho_mobius(&p, 1e-9)?;
        let d = match rho_direct(&p, 1e-8, 1 << 17) {
            Ok(d) => d,
            Err(Error::Convergence { best, .. }) => *best,
            Err(e) => return Err(e),
        };
        worst = worst.max((m.rho - d.rho).abs());
    }
    let mut worst_tr = 0.0f64;
    for (l, a) in axis_points(rng, 50) {
        let p = SystemParams::on_axis(2.0, l, a);
        let tr = monodromy(&p, 1e-12)?.trace.re;
        let s = connection_data(&p, 1e-10)?.stokes;
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        worst_tr = worst_tr.max((tr - sign * (2.0 + (s.c0 * s.c1).re)).abs());
    }
    Ok((
        worst < 1e-6 && worst_tr < 1e-7,
        format!("max |rho_mobius - rho_direct| = {worst:.2e} (200 pts); max |tr - (-1)^l (2 + c0 c1)| = {worst_tr:.2e} (50 axis pts)"),
    ))
}

fn simple_intersections() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for omega in [0.3, 0.5, 0.7, 1.0, 2.0] {
        let p = SystemParams::new(omega, omega, 1.0);
        let lock = phase_lock_test(&p, 1e-13)?;
        let s = connection_data(&p, 1e-10)?.stokes;
        let xi = entire_indicator_at(&p)?.xi;
        let this = lock.kind == LockKind::Boundary
            && lock.margin.abs() < 1e-7
            && s.c1.norm() < 1e-7
            && s.c0.norm() > 1e-4
            && xi.abs() > 1e-4;
        ok &= this;
        parts.push(format!(
            "w={omega}: margin {:.1e} c1 {:.1e} c0 {:.2} xi {:.2}",
            lock.margin,
            s.c1.norm(),
            s.c0.norm(),
            xi
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn constriction_battery() -> Outcome {
    let cat = build_catalog(2.0, 3, 12.0, 1e-7)?;
    let mut bad = Vec::new();
    for c0 in &cat.constrictions {
        let c = classify_constriction(&SystemParams::new(2.0, c0.b, c0.a), 1e-10)?;
        let ratio = c.c_coef / c.b_coef;
        let probes_ok = c.probes.len() == PROBE_LADDER.len()
            && c.probes.iter().zip(PROBE_LADDER).all(|(p, f)| (p.delta - f * 2.0).abs() < 1e-15)
            && c.agreement
            && c.sign != ConstrictionSign::Undetermined;
        let pass = c.c0.norm() < 1e-7
            && c.c1.norm() < 1e-7
            && c.scalar_distance < 1e-6
            && c.b_coef.norm() > 1e-6
            && c.c_coef.norm() > 1e-6
            && ratio.im.abs() < 1e-6 * ratio.norm()
            && probes_ok;
        if !pass {
            bad.push(format!("({}, {})", c.b, c.a));
        }
    }
    let signs: Vec<String> = cat.constrictions.iter().map(|c| format!("L{}@{:.4}:{:?}", c.area, c.a, c.sign)).collect();
    Ok((
        bad.is_empty() && !cat.constrictions.is_empty(),
        format!("{} constrictions [{}], failing {:?}", cat.constrictions.len(), signs.join(" "), bad),
    ))
}

fn matrix_identities(rng: &mut StdRng) -> Outcome {
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bump = |k: &'static str, v: f64| {
        let e = worst.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    let mut l0_delta0 = f64::NEG_INFINITY;
    for omega in [0.5, 1.0, 2.0] {
        for (l, a) in axis_points(rng, 50) {
            let d = connection_data(&SystemParams::on_axis(omega, l, a), 1e-10)?;
            let (q, s) = (&d.transition, &d.stokes);
            let id = phaselock::Mat2C::identity();
            bump("Q^2-Id", (q.q * q.q - id).norm());
            bump("a^2-bc-1", (q.a * q.a - q.b * q.c - 1.0).norm());
            bump("Re b/|b|", q.b.re.abs() / q.b.norm());
            bump("Im c0", s.c0.im.abs());
            bump("Im c1", s.c1.im.abs());
            bump("relation2", (q.a * s.c0 * s.c1 - (q.b * s.c1 - q.c * s.c0)).norm());
            if s.c0.norm() > 1e-4 {
                let v = s.delta0(q);
                if l >= 1 {
                    bump("delta0", v.max(0.0));
                } else {
                    l0_delta0 = l0_delta0.max(v);
                }
            }
        }
    }
    let limits = [
        ("Q^2-Id", 1e-7),
        ("a^2-bc-1", 1e-7),
        ("Re b/|b|", 1e-7),
        ("Im c0", 1e-7),
        ("Im c1", 1e-7),
        ("relation2", 1e-6),
        ("delta0", 1e-6),
    ];
    let ok = limits.iter().all(|(k, lim)| worst.get(k).copied().unwrap_or(0.0) < *lim);
    let detail: Vec<String> = limits.iter().map(|(k, _)| format!("{k} {:.1e}", worst.get(k).copied().unwrap_or(0.0))).collect();
    Ok((ok, format!("{}; (l = 0, report only) max delta0 {l0_delta0:.2e}", detail.join(", "))))
}

fn wronskian(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    let mut paths = 0usize;
    for omega in [0.5, 1.0, 2.0] {
        for (l, a) in axis_points(rng, 20) {
            let d = connection_data(&SystemParams::on_axis(omega, l, a), 1e-10)?;
            for rec in &d.frame.paths {
                worst = worst.max(rec.wronskian_drift);
                paths += 1;
            }
        }
    }
    Ok((worst < 1e-9, format!("max drift per unit length {worst:.2e} over {paths} paths")))
}

fn heun_residuals(rng: &mut StdRng) -> Outcome {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let omega = rng.gen_range(0.3..3.0);
        let p = SystemParams::new(omega, rng.gen_range(-3.0..3.0) * omega, rng.gen_range(0.1..10.0));
        let d = p.derive()?;
        for v in [HeunVariant::Heun, HeunVariant::ConjugateHeun] {
            let s = HeunRecurrence::new(v, d, 40)?;
            for r in s.residuals() {
                worst = worst.max(r);
            }
        }
    }
    Ok((worst < 1e-10, format!("max scaled coefficient residual {worst:.2e} (100 triples, both equations, K = 40)")))
}

const PREC: u32 = 400;

fn decompose(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
    (mant as i64, exp - 1075)
}

/// Power series of `J_n(x)` in 400-bit fixed point.
fn j_oracle(n: usize, x: f64) -> f64 {
    let one = BigInt::from(1) << PREC;
    let (m, e) = decompose(x / 2.0);
    let h = BigInt::from(m) << (PREC as i64 + e) as usize;
    let h2 = (&h * &h) >> PREC as usize;
    let mut t = one;
    for k in 1..=n {
        t = ((&t * &h) >> PREC as usize) / BigInt::from(k);
    }
    let mut sum = t.clone();
    let mut k = 1u64;
    loop {
        t = -((&t * &h2) >> PREC as usize) / BigInt::from(k * (k + n as u64));
        if t.sign() == Sign::NoSign || t.bits() < 8 {
            break;
        }
        sum += &t;
        k += 1;
    }
    if sum.sign() == Sign::NoSign {
        return 0.0;
    }
    let shift = sum.bits().saturating_sub(60);
    let top: i64 = (&sum >> shift as usize).try_into().unwrap();
    top as f64 * 2f64.powi(shift as i32 - PREC as i32)
}

fn bessel_asymptotics(rng: &mut StdRng) -> Outcome {
    let mut trends = Vec::new();
    let mut ok = true;
    for r in 0..=2 {
        for side in [Side::Minus, Side::Plus] {
            let rep = asymptotics_report(2.0, r, side, 41, 1e-10)?;
            ok &= rep.bounded(MAX_TREND);
            trends.push(format!("r{r}{}:{:.2}", if side == Side::Minus { "-" } else { "+" }, rep.trend));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..400 {
        let n = rng.gen_range(0..=5usize);
        let x = rng.gen_range(0.0..30.0);
        worst = worst.max((bessel_j(n as i64, x) - j_oracle(n, x)).abs());
    }
    Ok((
        ok && worst < 1e-12,
        format!("trend (max <= {MAX_TREND}) {}; max |J - oracle| on [0, 30] {worst:.2e}", trends.join(" ")),
    ))
}

fn structural() -> Outcome {
    let windows = [(2.0, 12.0), (1.0, 10.0), (0.7, 8.0), (0.5, 7.0), (0.3, 5.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (omega, a_top) in windows {
        let spec = GridSpec::axis_aligned(omega, 3.0 * omega + 1.5, a_top, 0.02);
        let cat = build_catalog(omega, 3, spec.a_max, 1e-7)?;
        let g = sweep(omega, &spec, SweepMethod::Mobius, 1e-9)?;
        let counts = component_counts(&g, &cat, 3, 1)?;
        let good = counts.iter().all(|c| c.matches()) && g.error_count() == 0 && cat.alarms.is_empty();
        ok &= good;
        let s: Vec<String> = (0..=3)
            .map(|r| {
                let c = counts.iter().find(|c| c.r == r).unwrap();
                let m = counts.iter().find(|c| c.r == -r).unwrap();
                format!("L{r}:{}/{}/{}c", c.found, m.found, c.constrictions.len())
            })
            .collect();
        parts.push(format!("w={omega} {}", s.join(" ")));
    }
    Ok((ok, format!("components r/-r / constrictions: {}", parts.join("; "))))
}

fn rays() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for omega in [0.5, 1.0, 2.0] {
        for r in 1..=3 {
            let top = higher_point(r, omega)?.a;
            let chk = verify_ray(r, omega, top + 10.0 * omega, 64)?;
            ok &= chk.passed;
            if !chk.passed {
                parts.push(format!("w={omega} r={r} violations {:?}", chk.violations));
            }
        }
    }
    Ok((ok, if parts.is_empty() { "9 rays inside their areas".into() } else { parts.join("; ") }))
}

fn portrait_run(dir: &Path, threads: usize) -> Result<BTreeMap<String, Vec<u8>>, Error> {
    let status = Command::new(env!("CARGO_BIN_EXE_phaselock"))
        .env_remove("PHASELOCK_CACHE_DIR")
        .env("RUST_LOG", "error")
        .args(["--threads", &threads.to_string(), "portrait", "--nB", "80", "--nA", "80", "--output"])
        .arg(dir)
        .output()
        .map_err(|e| Error::Range(e.to_string()))?;
    if !status.status.success() {
        return Err(Error::Range(format!("portrait exited with {:?}", status.status.code())));
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::Range(e.to_string()))? {
        let path = entry.map_err(|e| Error::Range(e.to_string()))?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name != "manifest.json" {
            files.insert(name, std::fs::read(&path).map_err(|e| Error::Range(e.to_string()))?);
        }
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| Error::Range(e.to_string()))?;
    let one = portrait_run(&tmp.path().join("t1"), 1)?;
    let two = portrait_run(&tmp.path().join("t2"), 2)?;
    let four = portrait_run(&tmp.path().join("t4"), 4)?;
    let same = one == two && two == four && one.len() == 5;
    Ok((same, format!("{} artifacts byte-identical across 1, 2, 4 threads: {same}", one.len())))
}

#[test]
fn acceptance() {
    let mut rng = StdRng::seed_from_u64(0x5eed_2026);
    let mut results = Vec::new();
    report(&mut results, 1, "growth points", growth_points);
    report(&mut results, 2, "quantization", || quantization(&mut rng));
    report(&mut results, 3, "cross-method oracle", || cross_method(&mut rng));
    report(&mut results, 4, "simple intersection (w, 1)", simple_intersections);
    report(&mut results, 5, "constriction battery", constriction_battery);
    report(&mut results, 6, "matrix identities", || matrix_identities(&mut rng));
    report(&mut results, 7, "wronskian conservation", || wronskian(&mut rng));
    report(&mut results, 8, "heun recurrence residuals", || heun_residuals(&mut rng));
    report(&mut results, 9, "bessel asymptotics", || bessel_asymptotics(&mut rng));
    report(&mut results, 10, "structural counts", structural);
    report(&mut results, 11, "ray inclusion", rays);
    report(&mut results, 12, "determinism", determinism);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
