mod common;

use std::f64::consts::PI;

use common::c;
use proptest::prelude::*;
use saitoh_core::geometry::{Domain, Potential};
use saitoh_core::products::{JetData, Resolution};
use saitoh_core::saitoh::{
    check_hypotheses, constants, equality_case_config, evaluate, evaluate_with, strictness_probe, sweep, HarmonicFamily,
    Inequality, Perturbation, SweepAxis, TheoremConfig, Verdict,
};
use saitoh_core::weights::{CFunction, FiberFactor, WeightFactor, WeightField};
use saitoh_core::{Error, C64};

fn origin() -> C64 {
    c(0.0, 0.0)
}

fn ann() -> Domain {
    Domain::annulus(origin(), 0.5, 1.0).unwrap()
}

fn mid() -> C64 {
    c(0.5f64.sqrt(), 0.0)
}

fn bidisc(p1: f64, p2: f64) -> WeightField {
    let d = Domain::unit_disc();
    WeightField::product(vec![WeightFactor::new(d, origin(), p1), WeightFactor::new(d, origin(), p2)])
}

/// `h_0 = ∏ (z_j - z_j0)^{β̃_j}` and `b_0 = 1` on the fibre.
fn monomial_jets(beta_tilde: &[u32], fiber: usize) -> JetData {
    JetData {
        beta_tilde: beta_tilde.to_vec(),
        l: beta_tilde
            .iter()
            .map(|&b| {
                let mut v = vec![origin(); b as usize + 1];
                v[b as usize] = c(1.0, 0.0);
                v
            })
            .collect(),
        b: vec![vec![c(1.0, 0.0)]; fiber],
    }
}

/// An equality configuration of `ineq` with an annulus as first factor.
fn equality_config(ineq: Inequality) -> TheoremConfig {
    let disc = Domain::unit_disc();
    let beta = [1u32, 0];
    let mut cfg = if ineq == Inequality::Saitoh {
        TheoremConfig::new(WeightField::planar(disc, c(0.3, 0.1), 1.0), Resolution::new(16, 4))
    } else if ineq.is_planar() {
        // p_0 = 1 keeps the area weight smooth at z_0, so refinement converges fast.
        let case = equality_case_config(ineq, &[ann()], &[mid()], &[1.0], None, HarmonicFamily::LogPotential).unwrap();
        TheoremConfig::new(case.field.clone(), TheoremConfig::default_resolution(&case.field))
    } else {
        let p = if ineq.is_jet() { [4.0, 2.0] } else { [2.0, 2.0] };
        let bt = ineq.is_jet().then_some(&beta[..]);
        let case =
            equality_case_config(ineq, &[ann(), disc], &[mid(), c(0.2, 0.0)], &p, bt, HarmonicFamily::LogPotential).unwrap();
        TheoremConfig::new(case.field.clone(), TheoremConfig::default_resolution(&case.field))
    };
    if ineq.is_fibered() {
        cfg.field.fiber = vec![FiberFactor::new(disc, c(0.1, 0.0)).with_phi(Potential::zero().with_poly(vec![origin(), c(0.3, 0.0)]))];
    }
    if ineq.is_jet() {
        cfg.jets = Some(monomial_jets(&beta, cfg.field.fiber.len()));
    }
    cfg
}

#[test]
fn equality_cases_are_tight_and_converge() {
    for ineq in Inequality::ALL {
        let cfg = equality_config(ineq);
        let r = evaluate(ineq, &cfg).unwrap_or_else(|e| panic!("{ineq}: {e}"));
        let refined = r.refined_ratio.unwrap();
        assert!((r.ratio - 1.0).abs() <= 1e-4, "{ineq}: ratio {}", r.ratio);
        assert!((refined - 1.0).abs() <= 1e-6, "{ineq}: refined ratio {refined}");
        assert_eq!(r.verdict, Verdict::Equality, "{ineq}");
    }
}

#[test]
fn annulus_without_the_character_match_is_strict() {
    // On annulus(0.3, 1) the log-potential weight matched to the character is
    // an equality case; dropping it leaves a clearly strict inequality.
    let d = Domain::annulus(origin(), 0.3, 1.0).unwrap();
    let z0 = c(0.65, 0.0);
    let matched = equality_case_config(Inequality::WeightedPlanar, &[d], &[z0], &[1.0], None, HarmonicFamily::LogPotential).unwrap();
    let eq = evaluate(Inequality::WeightedPlanar, &TheoremConfig::new(matched.field, Resolution::new(40, 4))).unwrap();
    let plain = evaluate(Inequality::WeightedPlanar, &TheoremConfig::new(WeightField::planar(d, z0, 1.0), Resolution::new(40, 4))).unwrap();
    assert!((eq.ratio - 1.0).abs() < 1e-6, "{}", eq.ratio);
    assert!(plain.ratio > 1.0 + 1e-3, "{}", plain.ratio);
    assert!(plain.refinement_delta.unwrap() < 1e-6);
}

#[test]
fn refinement_delta_shrinks_at_least_fourfold() {
    let cfg = |n| TheoremConfig::new(WeightField::planar(ann(), mid(), 1.0), Resolution::new(n, 4));
    let coarse = evaluate(Inequality::Saitoh, &cfg(10)).unwrap().refinement_delta.unwrap();
    let fine = evaluate(Inequality::Saitoh, &cfg(20)).unwrap().refinement_delta.unwrap();
    assert!(coarse >= 4.0 * fine, "{coarse:e} vs {fine:e}");
}

#[test]
fn constants_are_the_closed_forms() {
    let eps = 0.75;
    let mut cfg = TheoremConfig::new(bidisc(3.0, 2.0).with_c(CFunction::ExpDecay { eps }), Resolution::new(4, 2));
    assert_eq!(constants(Inequality::MixedBoundary, &cfg), (1.0, PI / (1.0 + eps)));
    assert_eq!(constants(Inequality::Distinguished, &cfg).1, (1.0 / 3.0 + 1.0 / 2.0) * PI);
    cfg.jets = Some(monomial_jets(&[2, 1], 0));
    let (l, r) = constants(Inequality::DistinguishedJet, &cfg);
    assert_eq!(l, 6.0);
    assert_eq!(r, (3.0 / 3.0 + 2.0 / 2.0) * PI);
    let planar = TheoremConfig::new(WeightField::planar(Domain::unit_disc(), origin(), 1.0), Resolution::new(4, 2));
    assert_eq!(constants(Inequality::Saitoh, &planar), (1.0, PI));
}

#[test]
fn exponent_sweep_is_smallest_where_inverse_sum_is_one() {
    let cfg = TheoremConfig::new(bidisc(2.0, 2.0), Resolution::new(8, 4));
    let rep = sweep(Inequality::MixedBoundary, &cfg, SweepAxis::Exponent { factor: 0 }, &[1.5, 2.0, 2.5, 3.0, 4.0], false);
    assert!(rep.points[0].rejected, "Σ 1/p > 1 is outside the hypotheses");
    assert_eq!(rep.summary.argmin, Some(2.0));
    assert_eq!(rep.summary.monotone, Some(true));
    // At the origin of the bidisc the ratio is 1 / Σ(1/p_j).
    for p in &rep.points[1..] {
        let r = p.report.as_ref().unwrap();
        assert!((r.ratio - 1.0 / (1.0 / p.parameter + 0.5)).abs() < 1e-10);
    }
}

#[test]
fn harmonic_sweep_on_a_product_is_smallest_at_the_flux_match() {
    let base = equality_config(Inequality::Distinguished);
    let grid = [0.3, 0.4, 0.5, 0.6, 0.7];
    let rep = sweep(Inequality::Distinguished, &base, SweepAxis::HarmonicCoefficient, &grid, false);
    assert_eq!(rep.summary.errors, 0);
    assert_eq!(rep.summary.argmin, Some(0.5));
    assert!((rep.summary.min_ratio.unwrap() - 1.0).abs() < 1e-4);
    assert!(rep.summary.all_at_least_one);
}

#[test]
fn inner_radius_sweep_stays_above_one_where_resolved() {
    let cfg = TheoremConfig::new(WeightField::planar(ann(), mid(), 1.0), Resolution::new(40, 4));
    let rep = sweep(Inequality::Saitoh, &cfg, SweepAxis::InnerRadius, &[0.1, 0.2, 0.3, 0.4, 0.5], true);
    for p in &rep.points {
        let r = p.report.as_ref().unwrap();
        assert!(r.refinement_delta.unwrap() < 1e-7, "r = {}", p.parameter);
        assert!(r.ratio > 1.0 + 1e-6, "r = {}: {}", p.parameter, r.ratio);
    }
    // Towards r = 0 the excess eventually falls back towards the disc value.
    let small = sweep(Inequality::Saitoh, &cfg, SweepAxis::InnerRadius, &[1e-2, 1e-3], true);
    let excess: Vec<f64> = small.points.iter().map(|p| p.report.as_ref().unwrap().ratio - 1.0).collect();
    assert!(excess[1] < excess[0] && excess[1] > 0.0, "{excess:?}");
}

#[test]
fn strictness_probes_move_away_from_equality() {
    let disc = TheoremConfig::new(WeightField::planar(Domain::unit_disc(), origin(), 1.0), Resolution::new(16, 4));
    let bump = strictness_probe(Inequality::WeightedPlanar, &disc, Perturbation::GreenBump { pole: c(0.4, 0.0), amount: 0.2 }).unwrap();
    assert!(bump.departure > 0.1, "{}", bump.departure);
    let none = strictness_probe(Inequality::WeightedPlanar, &disc, Perturbation::HarmonicCoefficient { delta: 0.0 }).unwrap();
    assert!(none.departure.abs() < 1e-12);
    let bi = TheoremConfig::new(bidisc(2.0, 2.0), Resolution::new(8, 4));
    let p = strictness_probe(Inequality::MixedBoundary, &bi, Perturbation::Exponent { delta: 0.5 }).unwrap();
    assert!((p.departure - 0.25).abs() < 1e-10);
    let ann_case = equality_config(Inequality::WeightedPlanar);
    let h = strictness_probe(Inequality::WeightedPlanar, &ann_case, Perturbation::HarmonicCoefficient { delta: 0.1 }).unwrap();
    assert!(h.departure > 1e-8, "{}", h.departure);
}

#[test]
fn hypotheses_are_enforced() {
    let hyp = |ineq, cfg: &TheoremConfig| matches!(check_hypotheses(ineq, cfg), Err(Error::Hypothesis(_)));
    let disc = Domain::unit_disc();
    let res = Resolution::new(6, 2);
    // Lelong number of φ + 2ψ below 2.
    let mut f = WeightField::planar(disc, origin(), 1.0);
    f.factors[0].phi = Potential::zero().with_green(origin(), -1.0);
    assert!(hyp(Inequality::WeightedPlanar, &TheoremConfig::new(f, res)));
    // Base point too close to the boundary.
    assert!(hyp(Inequality::WeightedPlanar, &TheoremConfig::new(WeightField::planar(disc, c(0.97, 0.0), 1.0), res)));
    // The unweighted inequality takes c ≡ 1.
    let f = WeightField::planar(disc, origin(), 1.0).with_c(CFunction::ExpDecay { eps: 1.0 });
    assert!(hyp(Inequality::Saitoh, &TheoremConfig::new(f, res)));
    // Product versions need n > 1, Σ 1/p ≤ 1, jets that are admissible, and a fibre when fibred.
    let one = WeightField::product(vec![WeightFactor::new(disc, origin(), 1.0)]);
    assert!(hyp(Inequality::Distinguished, &TheoremConfig::new(one, res)));
    assert!(hyp(Inequality::MixedBoundary, &TheoremConfig::new(bidisc(1.5, 2.0), res)));
    let jets = TheoremConfig::new(bidisc(2.0, 2.0), res).with_jets(monomial_jets(&[1, 0], 0));
    assert!(hyp(Inequality::MixedBoundaryJet, &jets));
    assert!(!hyp(Inequality::DistinguishedJet, &jets));
    assert!(hyp(Inequality::MixedBoundaryFiber, &TheoremConfig::new(bidisc(2.0, 2.0), res)));
    // Non-positive smaller kernel is a hypothesis failure, not a verdict.
    let ok = evaluate_with(Inequality::Distinguished, &TheoremConfig::new(bidisc(2.0, 2.0), res), false);
    assert!(ok.is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weighted_ratio_is_never_below_one(
        r in 0.0..0.6f64, a in 0.0..6.3f64, eps in 0.0..2.0f64, k in -0.3..0.3f64, p0 in 1.0..2.0f64,
    ) {
        let z0 = C64::from_polar(r, a);
        let mut f = WeightField::planar(Domain::unit_disc(), z0, p0).with_c(CFunction::ExpDecay { eps });
        f.factors[0].phi = Potential::zero().with_green(z0, 2.0 * (1.0 - p0)).with_poly(vec![origin(), c(k, 0.1)]);
        let rep = evaluate_with(Inequality::WeightedPlanar, &TheoremConfig::new(f, Resolution::new(24, 4)), false).unwrap();
        prop_assert!(rep.ratio >= 1.0 - 1e-6, "{}", rep.ratio);
    }

    #[test]
    fn product_ratios_are_never_below_one(
        p1 in 2.0..5.0f64, x in -0.4..0.4f64, y in -0.4..0.4f64, k in -0.3..0.3f64,
    ) {
        let d = Domain::unit_disc();
        let p2 = p1 / (p1 - 1.0);
        let f = WeightField::product(vec![
            WeightFactor::new(d, c(x, y), p1).with_phi(Potential::zero().with_poly(vec![origin(), c(k, 0.0)])),
            WeightFactor::new(d, c(y, -x), p2 + 0.5),
        ]);
        let cfg = TheoremConfig::new(f, Resolution::new(16, 4));
        for ineq in [Inequality::MixedBoundary, Inequality::Distinguished] {
            let rep = evaluate_with(ineq, &cfg, false).unwrap();
            prop_assert!(rep.ratio >= 1.0 - 1e-6, "{ineq}: {}", rep.ratio);
        }
    }
}
