//! Test-side oracles written independently of the library code paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saitoh_core::kernels::{BasisSpec, FactorBasis, GramMatrix, JetIdeal};
use saitoh_core::C64;
use std::f64::consts::TAU;

pub fn c(x: f64, y: f64) -> C64 {
    C64::new(x, y)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `log |(z - t) / (1 - conj(t) z)|`.
pub fn disc_green(z: C64, t: C64) -> f64 {
    ((z - t) / (C64::new(1.0, 0.0) - t.conj() * z)).norm().ln()
}

/// Green function of `{q < |z| < 1}` as `log|z - t| + h`, with `h` the
/// harmonic solution of `h = -log|z - t|` on both circles, obtained from the
/// Fourier coefficients of the boundary data and a 2x2 solve per mode.
pub fn annulus_green(q: f64, z: C64, t: C64) -> f64 {
    // Boundary data decay like max(|t|, q/|t|)^k; keep modes down to ~1e-16.
    let rate = t.norm().max(q / t.norm());
    let kk = ((37.0 / -rate.ln()).ceil() as i32).max(32);
    let m = 4 * kk as usize;
    let coeffs = |r: f64| -> Vec<C64> {
        let data: Vec<f64> = (0..m).map(|j| -(C64::from_polar(r, TAU * j as f64 / m as f64) - t).norm().ln()).collect();
        (-kk..=kk)
            .map(|k| {
                data.iter()
                    .enumerate()
                    .map(|(j, d)| C64::from_polar(*d, -(k as f64) * TAU * j as f64 / m as f64))
                    .sum::<C64>()
                    / m as f64
            })
            .collect()
    };
    let (outer, inner) = (coeffs(1.0), coeffs(q));
    let (r, theta) = (z.norm(), z.arg());
    let mut h = C64::new(0.0, 0.0);
    for (i, k) in (-kk..=kk).enumerate() {
        let (f, g) = (outer[i], inner[i]);
        if k == 0 {
            // A + B log r: A = f, A + B log q = g.
            let b = (g - f) / q.ln();
            h += f + b * r.ln();
            continue;
        }
        let m = k.unsigned_abs() as i32;
        // a + b = f, a q^m + b q^-m = g.
        let (qp, qm) = (q.powi(m), q.powi(-m));
        let det = qm - qp;
        let a = (f * qm - g) / det;
        let b = (g - f * qp) / det;
        h += (a * r.powi(m) + b * r.powi(-m)) * C64::from_polar(1.0, k as f64 * theta);
    }
    (z - t).norm().ln() + h.re
}

/// `1 / min { c^H M c : J c = t }` with `M = conj(G)`, via the normal
/// equations `t^H (J M^{-1} J^H)^{-1} t`.
pub fn dense_jet_kernel(gram: &DMatrix<C64>, jet: &DMatrix<C64>, targets: &[C64]) -> f64 {
    let m = gram.map(|x| x.conj());
    let minv = m.try_inverse().expect("invertible metric");
    let s = jet * &minv * jet.adjoint();
    let sinv = s.try_inverse().expect("independent constraints");
    let t = DVector::from_column_slice(targets);
    let v = (t.adjoint() * sinv * &t)[(0, 0)].re;
    1.0 / v
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// A random well-conditioned Gram matrix on a monomial basis (one or two
/// slots) with a random feasible jet ideal at a random base point.
pub struct JetInstance {
    pub gram: GramMatrix,
    pub ideal: JetIdeal,
}

pub fn random_jet_instance(seed: u64) -> JetInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two = rng.random_bool(0.5);
    let (basis, base, orders): (BasisSpec, Vec<C64>, Vec<Vec<u32>>) = if two {
        let (d1, d2) = (rng.random_range(1..=8u32), rng.random_range(1..=8u32));
        let basis = BasisSpec::tensor(vec![
            FactorBasis::monomials(c(0.0, 0.0), d1 - 1, 1.0),
            FactorBasis::monomials(c(0.0, 0.0), d2 - 1, 1.0),
        ]);
        let mut orders = Vec::new();
        for a in 0..d1 {
            for b in 0..d2 {
                orders.push(vec![a, b]);
            }
        }
        let base = vec![random_c(&mut rng) * 0.35, random_c(&mut rng) * 0.35];
        (basis, base, orders)
    } else {
        let d = rng.random_range(1..=64u32);
        let basis = BasisSpec::single(FactorBasis::monomials(c(0.0, 0.0), d - 1, 1.0));
        (basis, vec![random_c(&mut rng) * 0.35], (0..d).map(|k| vec![k]).collect())
    };
    let n = basis.dim();
    let a = DMatrix::from_fn(n, n, |_, _| random_c(&mut rng));
    let g = (a.adjoint() * &a).unscale(n as f64) + DMatrix::identity(n, n);
    let k = rng.random_range(1..=orders.len().min(6));
    let mut chosen = Vec::new();
    while chosen.len() < k {
        let o = orders[rng.random_range(0..orders.len())].clone();
        if !chosen.contains(&o) {
            chosen.push(o);
        }
    }
    let mut targets: Vec<C64> = (0..k).map(|_| random_c(&mut rng)).collect();
    targets[0] += c(2.0, 0.0);
    let ideal = JetIdeal::new(base, chosen, targets).unwrap();
    JetInstance { gram: GramMatrix::from_entries(basis, "random", g).unwrap(), ideal }
}
