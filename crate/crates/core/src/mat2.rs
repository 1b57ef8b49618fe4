//! 2×2 complex matrices and vectors.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// Column vector `(u, v)`.
pub type Vec2C = [C64; 2];

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn vnorm(v: &Vec2C) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2C(pub [[C64; 2]; 2]);

impl Mat2C {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2C([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Mat2C::new(one, zero, zero, one)
    }

    pub fn from_columns(c0: Vec2C, c1: Vec2C) -> Self {
        Mat2C::new(c0[0], c1[0], c0[1], c1[1])
    }

    pub fn column(&self, j: usize) -> Vec2C {
        [self.0[0][j], self.0[1][j]]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2C::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2C::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).scale(d.inv()))
    }

    pub fn apply(&self, v: &Vec2C) -> Vec2C {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    /// Eigenvalues ordered by increasing modulus.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let t = self.trace();
        let d = self.det();
        let disc = (t * t - d * 4.0).sqrt();
        // avoid cancellation: take the larger root first
        let big = if (t + disc).norm() >= (t - disc).norm() {
            (t + disc) * 0.5
        } else {
            (t - disc) * 0.5
        };
        let small = if big.norm() > 0.0 { d / big } else { C64::new(0.0, 0.0) };
        if small.norm() <= big.norm() {
            [small, big]
        } else {
            [big, small]
        }
    }

    /// An eigenvector for eigenvalue `ev`, chosen from the better conditioned
    /// of the two row-derived candidates.
    pub fn eigenvector(&self, ev: C64) -> Vec2C {
        let m = &self.0;
        let v1 = [m[0][1], ev - m[0][0]];
        let v2 = [ev - m[1][1], m[1][0]];
        if vnorm(&v1) >= vnorm(&v2) {
            v1
        } else {
            v2
        }
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    fn mul(self, o: Mat2C) -> Mat2C {
        let a = &self.0;
        let b = &o.0;
        Mat2C::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2C {
    type Output = Mat2C;
    fn add(self, o: Mat2C) -> Mat2C {
        let a = &self.0;
        let b = &o.0;
        Mat2C::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;
    fn sub(self, o: Mat2C) -> Mat2C {
        self + o.scale(C64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let m = Mat2C::new(c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0), c(-2.0, 1.0));
        let p = m * m.inverse().unwrap();
        assert!((p - Mat2C::identity()).norm() < 1e-14);
        assert!((m.det() - (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0))).norm() == 0.0);
    }

    #[test]
    fn eigenpairs() {
        let m = Mat2C::new(c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(-1.0, 0.3));
        for ev in m.eigenvalues() {
            let v = m.eigenvector(ev);
            let mv = m.apply(&v);
            let r = [mv[0] - v[0] * ev, mv[1] - v[1] * ev];
            assert!(vnorm(&r) < 1e-13 * vnorm(&v));
        }
        let [s, b] = m.eigenvalues();
        assert!(s.norm() <= b.norm());
        assert!((s * b - m.det()).norm() < 1e-14);
        assert!((s + b - m.trace()).norm() < 1e-14);
    }
}
