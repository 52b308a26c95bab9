mod common;

use std::cmp::Ordering;
use std::f64::consts::PI;

use common::{c, dense_jet_kernel, random_jet_instance, rel_err};
use proptest::prelude::*;
use saitoh_core::geometry::{Domain, Potential};
use saitoh_core::kernels::jets::{box_orders, graded_lex_cmp, graded_orders};
use saitoh_core::kernels::{constrained_min_norm, kernel_eval, orthonormalize, JetIdeal};
use saitoh_core::products::{Assembly, Measure, ProductSpaceSpec, Resolution};
use saitoh_core::weights::{CFunction, WeightField};
use saitoh_core::C64;

fn disc_space(measure: Measure, cfun: CFunction, degree: u32) -> ProductSpaceSpec {
    let f = WeightField::planar(Domain::unit_disc(), c(0.0, 0.0), 1.0).with_c(cfun);
    ProductSpaceSpec::new(f, measure, false, Resolution::new(degree, 4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn disc_kernels_match_closed_forms(zr in 0.0..0.5f64, za in 0.0..6.3f64, wr in 0.0..0.5f64, wa in 0.0..6.3f64) {
        let (z, w) = (C64::from_polar(zr, za), C64::from_polar(wr, wa));
        let one = c(1.0, 0.0);
        let s = disc_space(Measure::PlanarBoundary, CFunction::One, 48).tensor_onb().unwrap();
        let b = disc_space(Measure::PlanarArea, CFunction::One, 48).tensor_onb().unwrap();
        let szego = one / (one - z * w.conj());
        let bergman = one / ((one - z * w.conj()).powi(2) * PI);
        prop_assert!((s.kernel(&[z], &[w]) - szego).norm() < 1e-10);
        prop_assert!((b.kernel(&[z], &[w]) - bergman).norm() < 1e-10);
    }

    #[test]
    fn weighted_bergman_value_at_origin(eps in 0.0..3.0f64) {
        // ρ = c(-2 log|z|) = |z|^{2ε}, so ∫ρ dA = π/(1 + ε).
        let mut spec = disc_space(Measure::PlanarArea, CFunction::ExpDecay { eps }, 8);
        // r^{1+2ε} is not smooth at 0 for fractional ε; Gauss-Legendre needs many radii.
        spec.resolution = spec.resolution.with_area_nodes(96, 16);
        let b = spec.tensor_onb().unwrap();
        let v = b.kernel(&[c(0.0, 0.0)], &[c(0.0, 0.0)]).re;
        prop_assert!(rel_err(v, (1.0 + eps) / PI) < 1e-8, "{v}");
    }

    #[test]
    fn kernels_are_hermitian_and_positive(zr in 0.55..0.95f64, za in 0.0..6.3f64, wr in 0.55..0.95f64, wa in 0.0..6.3f64, a in -0.5..0.5f64) {
        let ann = Domain::annulus(c(0.0, 0.0), 0.5, 1.0).unwrap();
        let mut f = WeightField::planar(ann, c(0.75, 0.0), 1.0);
        f.factors[0].phi = Potential::zero().with_log(c(0.0, 0.0), a).with_poly(vec![c(0.0, 0.0), c(0.2, 0.1)]);
        let (z, w) = (C64::from_polar(zr, za), C64::from_polar(wr, wa));
        for m in [Measure::PlanarBoundary, Measure::PlanarArea] {
            let onb = ProductSpaceSpec::new(f.clone(), m, false, Resolution::new(12, 4)).onb(Assembly::Separable).unwrap();
            let kzw = kernel_eval(&onb, &[z], &[w]);
            let kwz = kernel_eval(&onb, &[w], &[z]);
            prop_assert!((kzw - kwz.conj()).norm() <= 1e-12 * kzw.norm().max(1.0));
            let (kzz, kww) = (kernel_eval(&onb, &[z], &[z]), kernel_eval(&onb, &[w], &[w]));
            prop_assert!(kzz.re > 0.0 && kzz.im.abs() < 1e-12 * kzz.re);
            // Cauchy-Schwarz in the reproducing kernel space.
            prop_assert!(kzw.norm_sqr() <= kzz.re * kww.re * (1.0 + 1e-10));
        }
    }

    #[test]
    fn jet_kernel_matches_dense_least_norm(seed in 0u64..10_000) {
        let inst = random_jet_instance(seed);
        let lib = constrained_min_norm(&inst.gram, &inst.ideal).unwrap();
        let jet = inst.ideal.jet_matrix(&inst.gram.basis).unwrap();
        let oracle = dense_jet_kernel(&inst.gram.entries, &jet, &inst.ideal.targets);
        prop_assert!(lib.feasible);
        prop_assert!(rel_err(lib.kernel_value, oracle) < 1e-10, "{} vs {oracle}", lib.kernel_value);
    }

    #[test]
    fn graded_lex_is_a_total_order(dims in 1usize..4, degree in 0u32..5) {
        let orders = graded_orders(dims, degree);
        for w in orders.windows(2) {
            prop_assert_eq!(graded_lex_cmp(&w[0], &w[1]), Ordering::Less);
            let (d0, d1): (u32, u32) = (w[0].iter().sum(), w[1].iter().sum());
            prop_assert!(d0 <= d1);
        }
        let count = (1..=dims as u32).fold(1u64, |acc, i| acc * (degree + i) as u64 / i as u64);
        prop_assert_eq!(orders.len() as u64, count);
    }
}

#[test]
fn jet_kernel_of_maximal_ideal_is_the_kernel() {
    let spec = disc_space(Measure::PlanarArea, CFunction::One, 10);
    let gram = spec.gram(&spec.basis(), Assembly::Separable).unwrap();
    let onb = orthonormalize(&gram).unwrap();
    let z = c(0.3, 0.2);
    let r = constrained_min_norm(&gram, &JetIdeal::maximal(vec![z], c(1.0, 0.0))).unwrap();
    assert!(rel_err(r.kernel_value, kernel_eval(&onb, &[z], &[z]).re) < 1e-10);
}

#[test]
fn box_orders_cover_the_box() {
    let o = box_orders(&[1, 2]);
    assert_eq!(o.len(), 6);
    assert!(o.iter().all(|a| a[0] <= 1 && a[1] <= 2));
    assert_eq!(o[0], vec![0, 0]);
}

#[test]
fn jets_on_the_unweighted_disc() {
    // min ‖f‖² over f(0) = 0, f'(0) = 1 in A²(D) is π/2 (f = z).
    let spec = disc_space(Measure::PlanarArea, CFunction::One, 8);
    let gram = spec.gram(&spec.basis(), Assembly::Separable).unwrap();
    let ideal = JetIdeal::new(vec![c(0.0, 0.0)], vec![vec![0], vec![1]], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let r = constrained_min_norm(&gram, &ideal).unwrap();
    assert!(rel_err(r.min_norm_sq, PI / 2.0) < 1e-12);
    // Constraints beyond the span are infeasible.
    let ideal = JetIdeal::new(vec![c(0.0, 0.0)], vec![vec![9]], vec![c(1.0, 0.0)]).unwrap();
    let r = constrained_min_norm(&gram, &ideal).unwrap();
    assert!(!r.feasible && r.kernel_value == 0.0);
}
