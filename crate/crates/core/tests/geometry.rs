mod common;

use common::{annulus_green, c, disc_green};
use proptest::prelude::*;
use saitoh_core::geometry::{green, green_normal, harmonic_flux, harmonic_measure_inner, poisson_reproduce, Domain, Potential};
use saitoh_core::integration::{area_rule, boundary_rule, gauss_legendre};
use saitoh_core::C64;
use std::f64::consts::{PI, TAU};

fn ann() -> Domain {
    Domain::annulus(c(0.0, 0.0), 0.5, 1.0).unwrap()
}

fn polar(r: f64, a: f64) -> C64 {
    C64::from_polar(r, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn disc_green_matches_moebius_form(r1 in 0.0..0.95f64, a1 in 0.0..TAU, r2 in 0.0..0.95f64, a2 in 0.0..TAU) {
        let (z, t) = (polar(r1, a1), polar(r2, a2));
        prop_assume!((z - t).norm() > 1e-3);
        let g = green(&Domain::unit_disc(), z, t).unwrap();
        prop_assert!((g - disc_green(z, t)).abs() < 1e-12);
        prop_assert!(g < 0.0);
    }

    #[test]
    fn annulus_green_is_symmetric_and_negative(r1 in 0.53..0.97f64, a1 in 0.0..TAU, r2 in 0.53..0.97f64, a2 in 0.0..TAU) {
        let (z, t) = (polar(r1, a1), polar(r2, a2));
        prop_assume!((z - t).norm() > 1e-3);
        let d = ann();
        let g = green(&d, z, t).unwrap();
        prop_assert!((g - green(&d, t, z).unwrap()).abs() < 1e-12);
        prop_assert!(g < 0.0);
    }

    #[test]
    fn normal_derivative_is_positive(r in 0.55..0.95f64, a in 0.0..TAU, s in 0.0..TAU) {
        let d = ann();
        for k in 0..2 {
            let b = d.boundary_point(k, s);
            prop_assert!(green_normal(&d, &b, polar(r, a)).unwrap() > 0.0);
        }
    }

    #[test]
    fn inner_flux_is_harmonic_measure(r in 0.55..0.95f64, a in 0.0..TAU) {
        let d = ann();
        let t = polar(r, a);
        let u = Potential::zero().with_green(t, 1.0);
        let inner = harmonic_flux(&d, &u, 1, 1024).unwrap();
        prop_assert!((inner - TAU * harmonic_measure_inner(&d, t).unwrap()).abs() < 1e-9);
        prop_assert!((inner + harmonic_flux(&d, &u, 0, 1024).unwrap() - TAU).abs() < 1e-9);
    }
}

#[test]
fn annulus_green_matches_fourier_oracle() {
    let d = ann();
    for (z, t) in [(c(0.6, 0.1), c(-0.7, 0.2)), (c(0.0, 0.9), c(0.0, 0.55)), (c(0.8, -0.3), c(0.75, -0.28))] {
        let g = green(&d, z, t).unwrap();
        assert!((g - annulus_green(0.5, z, t)).abs() < 1e-10, "{z} {t}");
    }
}

#[test]
fn thin_and_thick_annuli_match_the_oracle() {
    for q in [0.1, 0.9] {
        let d = Domain::annulus(c(0.0, 0.0), q, 1.0).unwrap();
        let mid = (1.0 + q) / 2.0;
        let (z, t) = (polar(mid, 0.3), polar(mid, 2.0));
        assert!((green(&d, z, t).unwrap() - annulus_green(q, z, t)).abs() < 1e-9, "q = {q}");
    }
}

#[test]
fn poisson_reproduces_polynomials_and_laurent_terms() {
    let d = ann();
    let rule = boundary_rule(&d, 256).unwrap();
    let t = c(-0.3, 0.6);
    for k in -5i32..=9 {
        let vals: Vec<C64> = (0..rule.len()).map(|i| rule.point(i)[0].powi(k)).collect();
        let v = poisson_reproduce(&d, &rule, &vals, t).unwrap();
        assert!((v - t.powi(k)).norm() < 1e-10, "k = {k}");
    }
}

#[test]
fn quadrature_rules_integrate_exactly() {
    let (x, w) = gauss_legendre(10).unwrap();
    let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
    assert!((moment - 2.0 / 19.0).abs() < 1e-14);
    // ∫_annulus |z|^4 dA = 2π (1 - q^6)/6.
    let a = area_rule(&ann(), 12, 16).unwrap();
    let v = a.integrate_real(|z| z[0].norm().powi(4));
    assert!((v - TAU * (1.0 - 0.5f64.powi(6)) / 6.0).abs() < 1e-13);
    let b = boundary_rule(&ann(), 64).unwrap();
    assert!((b.integrate_real(|_| 1.0) - 3.0 * PI).abs() < 1e-13);
}
