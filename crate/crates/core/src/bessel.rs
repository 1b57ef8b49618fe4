//! Bessel functions of the first kind `J_n(x)` for integer order.
//!
//! Power series for small arguments, Miller's backward recurrence in the
//! transition region and Hankel asymptotics for large arguments.

use std::f64::consts::PI;

const SERIES_MAX: f64 = 8.0;
const MILLER_MAX: f64 = 25.0;

/// `J_n(x)` for any integer `n` and real `x`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    // J_{−n} = (−1)^n J_n, J_n(−x) = (−1)^n J_n(x)
    let sign = if n < 0 && n % 2 != 0 { -1.0 } else { 1.0 };
    let n = n.unsigned_abs() as usize;
    let sign = if x < 0.0 && n % 2 == 1 { -sign } else { sign };
    let x = x.abs();
    let v = if x <= SERIES_MAX {
        series(n, x)
    } else if x <= MILLER_MAX || (n as f64) > x / 2.0 {
        miller(n, x)
    } else {
        hankel(n, x)
    };
    sign * v
}

fn series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut t = 1.0;
    for k in 1..=n {
        t *= h / k as f64;
    }
    let h2 = h * h;
    let mut sum = t;
    for k in 1..200 {
        t *= -h2 / (k as f64 * (k + n) as f64);
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Backward recurrence `J_{k−1} = (2k/x) J_k − J_{k+1}` normalized by
/// `J_0 + 2 Σ J_{2k} = 1`.
fn miller(n: usize, x: f64) -> f64 {
    let start = (n.max(x as usize) + 40 + (4.0 * x.sqrt()) as usize) & !1;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut want = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if k - 1 == n {
            want = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            jp1 *= 1e-250;
            j *= 1e-250;
            norm *= 1e-250;
            want *= 1e-250;
        }
    }
    norm += j;
    want / norm
}

fn hankel(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let z8 = 8.0 * x;
    // P ~ Σ (−1)^k a_{2k}/x^{2k}, Q ~ Σ (−1)^k a_{2k+1}/x^{2k+1}
    let (mut p, mut q) = (1.0, 0.0);
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let m = (2 * k - 1) as f64;
        let next = term * (mu - m * m) / (k as f64 * z8);
        if next.abs() >= last {
            break;
        }
        last = next.abs();
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
