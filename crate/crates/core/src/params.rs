//! Parameter model: `(ω, B, A)` and the derived `(l, μ, λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic mode threaded to the complex integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Plain double precision.
    #[default]
    Standard,
    /// Double precision with error-free (two-sum) accumulation of Taylor
    /// sums and state updates.
    Compensated,
}

/// A point of the family: fixed frequency `omega`, abscissa `b`, ordinate `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

/// `l = B/ω`, `μ = A/(2ω)`, `λ = 1/(4ω²) − μ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub omega: f64,
    pub l: f64,
    pub mu: f64,
    pub lambda: f64,
}

/// Records how [`normalize_quadrant`] moved a point into `B ≥ 0, A ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryTag {
    pub flipped_b: bool,
    pub flipped_a: bool,
    pub rho_sign: i8,
}

impl SystemParams {
    pub fn new(omega: f64, b: f64, a: f64) -> Self {
        Self { omega, b, a }
    }

    /// Point on the axis `B = ωr` at ordinate `a`.
    pub fn on_axis(omega: f64, r: i64, a: f64) -> Self {
        Self { omega, b: axis(r, omega), a }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.b.is_finite() && self.a.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite parameters (omega={}, B={}, A={})",
                self.omega, self.b, self.a
            )));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!("omega must be positive, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive(self)
    }

    /// `Some(l)` when `B/ω` is an integer to within `1e-10`.
    pub fn integer_l(&self) -> Option<i64> {
        let l = self.b / self.omega;
        let n = l.round();
        ((l - n).abs() <= 1e-10 * n.abs().max(1.0)).then_some(n as i64)
    }
}

pub fn derive(p: &SystemParams) -> Result<DerivedParams> {
    p.validate()?;
    let l = p.b / p.omega;
    let mu = p.a / (2.0 * p.omega);
    let half_inv = 1.0 / (2.0 * p.omega);
    Ok(DerivedParams {
        omega: p.omega,
        l,
        mu,
        lambda: half_inv * half_inv - mu * mu,
    })
}

/// Maps any point into the closed first quadrant.
///
/// `ρ(B, A) = ρ(B, −A)` and `ρ(−B, A) = −ρ(B, A)`, so the rotation number at the
/// original point is `rho_sign` times the one at the returned point.
pub fn normalize_quadrant(p: &SystemParams) -> (SystemParams, SymmetryTag) {
    let flipped_b = p.b < 0.0;
    let flipped_a = p.a < 0.0;
    let q = SystemParams {
        omega: p.omega,
        b: p.b.abs(),
        a: p.a.abs(),
    };
    let tag = SymmetryTag {
        flipped_b,
        flipped_a,
        rho_sign: if flipped_b { -1 } else { 1 },
    };
    (q, tag)
}

/// Abscissa of the axis `Λ_r = {B = ωr}`.
pub fn axis(r: i64, omega: f64) -> f64 {
    omega * r as f64
}

impl DerivedParams {
    /// The frequency-dependent constant `1/(4ω²)`.
    pub fn quarter_inv_omega_sq(&self) -> f64 {
        let h = 1.0 / (2.0 * self.omega);
        h * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 * b.abs().max(1.0)
    }

    #[test]
    fn derive_examples() {
        let d = derive(&SystemParams::new(2.0, 2.0, 4.0)).unwrap();
        assert!(close(d.l, 1.0) && close(d.mu, 1.0) && close(d.lambda, -15.0 / 16.0));

        let d = derive(&SystemParams::new(0.5, 0.0, 0.0)).unwrap();
        assert!(close(d.l, 0.0) && close(d.mu, 0.0) && close(d.lambda, 1.0));

        let d = derive(&SystemParams::new(1.0, 3.0, 2.0)).unwrap();
        assert!(close(d.l, 3.0) && close(d.mu, 1.0) && close(d.lambda, -0.75));
    }

    #[test]
    fn derive_rejects_bad_input() {
        assert!(derive(&SystemParams::new(0.0, 1.0, 1.0)).is_err());
        assert!(derive(&SystemParams::new(-1.0, 1.0, 1.0)).is_err());
        assert!(derive(&SystemParams::new(1.0, f64::NAN, 1.0)).is_err());
        assert!(derive(&SystemParams::new(1.0, 1.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn normalize_examples() {
        let (q, t) = normalize_quadrant(&SystemParams::new(1.0, -2.0, 3.0));
        assert_eq!(q, SystemParams::new(1.0, 2.0, 3.0));
        assert_eq!(t.rho_sign, -1);

        let (q, t) = normalize_quadrant(&SystemParams::new(1.0, 2.0, -3.0));
        assert_eq!(q, SystemParams::new(1.0, 2.0, 3.0));
        assert_eq!(t.rho_sign, 1);
        assert!(t.flipped_a && !t.flipped_b);

        let p = SystemParams::new(1.0, 2.0, 3.0);
        let (q, t) = normalize_quadrant(&p);
        assert_eq!(q, p);
        assert_eq!(t.rho_sign, 1);
    }

    #[test]
    fn axis_examples() {
        assert!(close(axis(3, 0.7), 2.1));
        assert_eq!(axis(0, 2.0), 0.0);
        assert_eq!(axis(-2, 1.0), -2.0);
    }

    #[test]
    fn integer_l_detection() {
        assert_eq!(SystemParams::on_axis(0.7, 3, 1.0).integer_l(), Some(3));
        assert_eq!(SystemParams::new(2.0, 2.5, 0.0).integer_l(), None);
    }

    proptest! {
        #[test]
        fn quadrant_is_nonnegative_and_idempotent(
            omega in 0.05f64..5.0, b in -20.0f64..20.0, a in -20.0f64..20.0
        ) {
            let (q, tag) = normalize_quadrant(&SystemParams::new(omega, b, a));
            let d = derive(&q).unwrap();
            prop_assert!(d.l >= 0.0 && d.mu >= 0.0);
            let (q2, tag2) = normalize_quadrant(&q);
            prop_assert_eq!(q2, q);
            prop_assert_eq!(tag2.rho_sign, 1);
            prop_assert_eq!(tag.rho_sign == -1, tag.flipped_b);
        }

        #[test]
        fn lambda_identity(omega in 0.05f64..5.0, b in -20.0f64..20.0, a in -20.0f64..20.0) {
            let d = derive(&SystemParams::new(omega, b, a)).unwrap();
            let target = 1.0 / (4.0 * omega * omega);
            prop_assert!((d.lambda + d.mu * d.mu - target).abs() <= 1e-12 * target.max(d.mu * d.mu).max(1.0));
            prop_assert!((d.l * omega - b).abs() <= 1e-14 * b.abs().max(1.0));
            prop_assert!((2.0 * omega * d.mu - a).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }
}
