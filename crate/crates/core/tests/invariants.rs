use approx::assert_relative_eq;
use proptest::prelude::*;
use regcoh::free_particle::{action_invert, energy_expectation, FreeFamily};
use regcoh::hilbert::{inner_product, moment_p, moment_q, norm, PhaseLabel, PhysicalParams};
use regcoh::numerics::faddeeva::faddeeva;
use regcoh::numerics::quad::integrate_adaptive;
use regcoh::weber::energy_constants;
use regcoh::Complex64;

fn unit() -> PhysicalParams {
    PhysicalParams::default()
}

fn family() -> impl Strategy<Value = FreeFamily> {
    prop_oneof![
        (-2.0..2.0f64, 0.2..3.0f64).prop_map(|(k0, w)| FreeFamily::Window { k0, k1: k0 + w }),
        (-2.0..2.0f64, 0.5..50.0f64).prop_map(|(kbar, a)| FreeFamily::Gaussian { kbar, a }),
        (-2.0..2.0f64, 0.5..3.0f64).prop_map(|(k0, w)| FreeFamily::Bump { k0, k1: k0 + w }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_identity(e in -6.0..10.0f64) {
        let c = energy_constants(e).unwrap();
        let u = (-std::f64::consts::PI * e).exp();
        prop_assert!(c.kappa > 0.0 && c.kappa < 1.0);
        prop_assert!((c.kappa * (c.kappa + 2.0 * u) - 1.0).abs() < 1e-12);
        prop_assert!(c.c0 > 0.0 && c.c0 <= (2.0 * std::f64::consts::PI).powf(-0.5) + 1e-15);
    }

    #[test]
    fn faddeeva_reflection(x in -8.0..8.0f64, y in -3.0..3.0f64) {
        let z = Complex64::new(x, y);
        let lhs = faddeeva(-z);
        let rhs = 2.0 * (-z * z).exp() - faddeeva(z);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        // w(z̄) conjugate symmetry across the real axis
        let w = faddeeva(Complex64::new(x, y.abs()));
        prop_assert!((faddeeva(Complex64::new(-x, y.abs())) - w.conj()).norm() < 1e-13);
    }

    #[test]
    fn quad_estimates(c in 0.1..5.0f64, k in -10.0..10.0f64, b in 0.5..6.0f64) {
        let tol = 1e-10;
        let r = integrate_adaptive(|x| Complex64::new(0.0, k * x).exp() * (-c * x * x).exp(), -b, b, tol).unwrap();
        prop_assert!(r.error_estimate >= 0.0);
        if r.converged {
            prop_assert!(r.error_estimate <= tol);
        }
    }

    #[test]
    fn action_round_trip(f in family(), j in 0.5..20.0f64, omega in 0.1..1.4f64) {
        let params = unit();
        match action_invert(f, j, omega, params) {
            Ok(label) => {
                let h = energy_expectation(f, label, params).unwrap();
                prop_assert!((h - omega * j).abs() <= 1e-10 * (omega * j).max(1.0));
                prop_assert!((label.q * omega.tan() - label.p).abs() < 1e-9 * (1.0 + label.p.abs()));
            }
            Err(e) => {
                let below = matches!(e, regcoh::Error::BelowGroundAction { .. });
                prop_assert!(below);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coherent_states_normalized(f in family(), q in -5.0..5.0f64, p in -3.0..3.0f64) {
        let psi = f.coherent(PhaseLabel::qp(q, p), unit()).unwrap();
        prop_assert!((norm(&psi, 1e-11).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivative_matches_differences(f in family(), q in -3.0..3.0f64, p in -2.0..2.0f64, xs in prop::collection::vec(-15.0..15.0f64, 10)) {
        let psi = f.coherent(PhaseLabel::qp(q, p), unit()).unwrap();
        for x in xs {
            let h = 1e-5;
            let fd = (psi.amplitude(x + h) - psi.amplitude(x - h)) / (2.0 * h);
            let d = psi.derivative(x);
            prop_assert!((fd - d).norm() <= 1e-6 * d.norm().max(1e-3), "x={} fd={} d={}", x, fd, d);
        }
    }

    #[test]
    fn inner_product_conjugate_symmetry(f in family(), a in (-3.0..3.0f64, -2.0..2.0f64), b in (-3.0..3.0f64, -2.0..2.0f64)) {
        let s = f.coherent(PhaseLabel::qp(a.0, a.1), unit()).unwrap();
        let t = f.coherent(PhaseLabel::qp(b.0, b.1), unit()).unwrap();
        let st = inner_product(&s, &t, 1e-11).unwrap();
        let ts = inner_product(&t, &s, 1e-11).unwrap();
        prop_assert!((st - ts.conj()).norm() < 1e-8);
        prop_assert!(st.norm() <= 1.0 + 1e-8);
    }

    #[test]
    fn gaussian_uncertainty(kbar in -2.0..2.0f64, a in 0.5..40.0f64, q in -4.0..4.0f64, p in -2.0..2.0f64, hbar in 0.3..2.0f64) {
        let params = PhysicalParams::new(hbar, 1.0, 0.0).unwrap();
        let psi = FreeFamily::Gaussian { kbar, a }.coherent(PhaseLabel::qp(q, p), params).unwrap();
        let tol = 1e-12;
        let (q1, q2) = (moment_q(&psi, 1, tol).unwrap(), moment_q(&psi, 2, tol).unwrap());
        let (p1, p2) = (moment_p(&psi, 1, hbar, tol).unwrap(), moment_p(&psi, 2, hbar, tol).unwrap());
        let product = ((q2 - q1 * q1) * (p2 - p1 * p1)).sqrt();
        prop_assert!(product - hbar / 2.0 >= -1e-9);
        prop_assert!((product - hbar / 2.0).abs() < 1e-8);
        prop_assert!((q1 - q).abs() < 1e-8 && (p1 - hbar * kbar - p).abs() < 1e-8);
    }
}

#[test]
fn gaussian_normalization_constant() {
    for a in [0.5, 1.0, 10.0, 1e4] {
        let ca = (2.0 * a / std::f64::consts::PI).powf(0.25);
        assert_relative_eq!(ca.powi(4) * std::f64::consts::PI / (2.0 * a), 1.0, epsilon = 1e-15);
    }
}
