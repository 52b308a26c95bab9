//! Quadrature rules.
//!
//! Boundary circles use the periodic trapezoid rule, which is spectrally
//! accurate for smooth periodic integrands. Area rules are Gauss–Legendre in
//! the radius times the trapezoid rule in the angle, with the polar Jacobian
//! folded into the weights. Product rules are plain tensor products and store
//! their nodes flat, one complex coordinate per factor.

use crate::geometry::Domain;
use crate::{Error, Result, C64, TAU};

/// A list of nodes with weights.
///
/// Every node has `dim` complex coordinates. One-dimensional boundary rules
/// also remember the outward unit normal and the boundary component of each
/// node; tensor rules drop that information.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<C64>,
    weights: Vec<f64>,
    normals: Vec<C64>,
    components: Vec<usize>,
}

impl QuadratureRule {
    /// A rule from raw parts. `points.len()` must be `dim * weights.len()`.
    pub fn from_parts(dim: usize, points: Vec<C64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() {
            return Err(Error::Quadrature(format!(
                "{} coordinates do not fit {} nodes of dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        Ok(Self { dim, points, weights, normals: Vec::new(), components: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[C64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Outward unit normal at node `i`, for boundary rules.
    pub fn normal(&self, i: usize) -> Option<C64> {
        self.normals.get(i).copied()
    }

    /// Boundary component of node `i` (0 is the outer circle).
    pub fn component(&self, i: usize) -> Option<usize> {
        self.components.get(i).copied()
    }

    pub fn is_boundary(&self) -> bool {
        !self.normals.is_empty()
    }

    pub fn integrate<F: Fn(&[C64]) -> C64>(&self, f: F) -> C64 {
        (0..self.len()).map(|i| f(self.point(i)) * self.weights[i]).sum()
    }

    pub fn integrate_real<F: Fn(&[C64]) -> f64>(&self, f: F) -> f64 {
        (0..self.len()).map(|i| f(self.point(i)) * self.weights[i]).sum()
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Quadrature("Gauss–Legendre needs at least one node".into()));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut t = (1.0 - (nf - 1.0) / (8.0 * nf.powi(3))) * theta.cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (t * p - p0) / (t * t - 1.0);
    (p, d)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(n)?;
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    Ok((x.iter().map(|t| m + h * t).collect(), w.iter().map(|wi| h * wi).collect()))
}

/// Trapezoid rule with `n` nodes per boundary circle, weights in arclength.
///
/// Component 0 is the outer circle; for an annulus component 1 is the inner
/// circle, whose outward normal points into the hole.
pub fn boundary_rule(domain: &Domain, n: usize) -> Result<QuadratureRule> {
    boundary_rule_rotated(domain, n, 0.0)
}

/// [`boundary_rule`] with every node rotated by `phase` radians.
pub fn boundary_rule_rotated(domain: &Domain, n: usize, phase: f64) -> Result<QuadratureRule> {
    if n < 8 {
        return Err(Error::Quadrature(format!("boundary rule needs n >= 8, got {n}")));
    }
    let mut points = Vec::with_capacity(n * domain.component_count());
    let mut weights = Vec::with_capacity(points.capacity());
    let mut normals = Vec::with_capacity(points.capacity());
    let mut components = Vec::with_capacity(points.capacity());
    for k in 0..domain.component_count() {
        let (radius, orientation) = domain.circle(k);
        let h = TAU / n as f64;
        for j in 0..n {
            let e = C64::from_polar(1.0, phase + h * j as f64);
            points.push(domain.center() + e * radius);
            weights.push(radius * h);
            normals.push(e * orientation);
            components.push(k);
        }
    }
    Ok(QuadratureRule { dim: 1, points, weights, normals, components })
}

/// Polar rule on a disc or annulus: `n_r` Gauss–Legendre radii times `n_a`
/// equispaced angles offset by half a step.
pub fn area_rule(domain: &Domain, n_r: usize, n_a: usize) -> Result<QuadratureRule> {
    area_rule_rotated(domain, n_r, n_a, 0.0)
}

/// [`area_rule`] with the angular nodes rotated by `phase` radians.
pub fn area_rule_rotated(domain: &Domain, n_r: usize, n_a: usize, phase: f64) -> Result<QuadratureRule> {
    if n_r == 0 || n_a < 4 {
        return Err(Error::Quadrature(format!("area rule needs n_r >= 1 and n_a >= 4, got {n_r} x {n_a}")));
    }
    let (radii, rw) = gauss_legendre_on(n_r, domain.inner_radius().unwrap_or(0.0), domain.outer_radius())?;
    let h = TAU / n_a as f64;
    let mut points = Vec::with_capacity(n_r * n_a);
    let mut weights = Vec::with_capacity(n_r * n_a);
    for (r, w) in radii.iter().zip(&rw) {
        for j in 0..n_a {
            let angle = phase + h * (j as f64 + 0.5);
            points.push(domain.center() + C64::from_polar(*r, angle));
            weights.push(w * r * h);
        }
    }
    Ok(QuadratureRule { dim: 1, points, weights, normals: Vec::new(), components: Vec::new() })
}

/// Tensor product of rules, coordinates concatenated in order.
///
/// The node count is the product of the factor counts, so callers should keep
/// an eye on the size before building large products.
pub fn tensor_rule(rules: &[&QuadratureRule]) -> Result<QuadratureRule> {
    if rules.is_empty() {
        return Err(Error::Quadrature("tensor product of zero rules".into()));
    }
    let dim: usize = rules.iter().map(|r| r.dim).sum();
    let total = rules.iter().try_fold(1usize, |acc, r| acc.checked_mul(r.len()));
    let total = total
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::Quadrature("tensor rule would exceed 5e7 nodes".into()))?;
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; rules.len()];
    for _ in 0..total {
        let mut w = 1.0;
        for (r, &i) in rules.iter().zip(&idx) {
            points.extend_from_slice(r.point(i));
            w *= r.weights[i];
        }
        weights.push(w);
        // Odometer with the last factor fastest.
        for k in (0..rules.len()).rev() {
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureRule { dim, points, weights, normals: Vec::new(), components: Vec::new() })
}

/// `∫_0^∞ f(t) dt` for integrands that decay at least like `e^{-t/2}`.
///
/// Composite Gauss–Legendre on dyadic panels `[0,1], [1,2], [2,4], ...`
/// out to `t = 2^10`; past that the tail is below `e^{-500}`.
pub fn half_line_integral<F: Fn(f64) -> f64>(f: F) -> f64 {
    let (x, w) = gauss_legendre(24).expect("fixed order");
    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() < 1024.0 {
        let last = *edges.last().unwrap();
        edges.push(2.0 * last);
    }
    edges
        .windows(2)
        .map(|e| {
            let (a, b) = (e[0], e[1]);
            let h = 0.5 * (b - a);
            x.iter().zip(&w).map(|(t, wi)| wi * h * f(0.5 * (a + b) + h * t)).sum::<f64>()
        })
        .sum()
}
