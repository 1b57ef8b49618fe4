use phaselock::monodromy::{monodromy, rho_mobius};
use phaselock::torus::rho_direct;
use phaselock::SystemParams;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rho_symmetries(omega in 0.4f64..2.5, b in -5.0f64..5.0, a in 0.05f64..8.0) {
        let r = rho_mobius(&SystemParams::new(omega, b, a), 1e-9).unwrap();
        let flip_a = rho_mobius(&SystemParams::new(omega, b, -a), 1e-9).unwrap();
        let flip_b = rho_mobius(&SystemParams::new(omega, -b, a), 1e-9).unwrap();
        let err = r.error_bound + flip_a.error_bound + flip_b.error_bound + 1e-9;
        prop_assert!((r.rho - flip_a.rho).abs() <= err);
        prop_assert!((r.rho + flip_b.rho).abs() <= err);
    }

    #[test]
    fn rho_monotone_in_b(omega in 0.5f64..2.0, b in 0.0f64..4.0, a in 0.1f64..5.0) {
        let lo = rho_mobius(&SystemParams::new(omega, b, a), 1e-9).unwrap();
        let hi = rho_mobius(&SystemParams::new(omega, b + 0.05, a), 1e-9).unwrap();
        prop_assert!(hi.rho >= lo.rho - lo.error_bound - hi.error_bound);
    }

    #[test]
    fn det_of_monodromy(omega in 0.4f64..2.5, b in -4.0f64..4.0, a in -6.0f64..6.0) {
        let m = monodromy(&SystemParams::new(omega, b, a), 1e-12).unwrap();
        prop_assert!(m.det_residual < 1e-8);
        prop_assert!(m.im_trace_residual < 1e-8);
    }
}

#[test]
fn locked_point_agrees_with_orbit_average() {
    let p = SystemParams::new(2.0, 2.0, 2.0);
    let m = rho_mobius(&p, 1e-9).unwrap();
    let d = rho_direct(&p, 1e-8, 1 << 14).unwrap();
    assert_eq!(m.rho, 1.0);
    assert!((d.rho - 1.0).abs() < 1e-8);
}
