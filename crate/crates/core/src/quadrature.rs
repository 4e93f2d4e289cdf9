//! Gaussian quadrature rules on [0,1].
//!
//! Rules for Lebesgue measure come from the Golub–Welsch eigenproblem, the
//! arcsine rule is closed form, and arbitrary densities go through a
//! discretized Stieltjes procedure on a fine reference rule.

use crate::error::{Error, Result};
use crate::funceq::agm;
use crate::hermitian::HermitianMatrix;
use std::f64::consts::PI;

/// Identifies the measure a rule integrates against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureTag {
    Lebesgue,
    Arcsine,
    LogMean,
    Agm,
    Custom(String),
}

/// An m-point rule with nodes in (0,1) and positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    measure: MeasureTag,
    mass_defect: f64,
}

impl QuadratureRule {
    /// Validates and wraps nodes and weights; nodes are sorted ascending.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, measure: MeasureTag) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} nodes and {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (i, &(t, w)) in pairs.iter().enumerate() {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::domain("quadrature node outside (0,1)", t));
            }
            if !(w > 0.0) {
                return Err(Error::domain("non-positive quadrature weight", w));
            }
            if i > 0 && pairs[i - 1].0 >= t {
                return Err(Error::Numerical(format!("repeated quadrature node {t}")));
            }
        }
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(QuadratureRule {
            nodes,
            weights,
            measure,
            mass_defect: 0.0,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn measure(&self) -> &MeasureTag {
        &self.measure
    }

    /// Deviation of the computed total mass from 1 before renormalization
    /// (zero for rules that were not renormalized).
    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    pub fn moment(&self, p: u32) -> f64 {
        self.integrate(|t| t.powi(p as i32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// A positive density on (0,1).
pub trait Density {
    fn eval(&self, t: f64) -> f64;

    /// The product ρ(t)·t·(1−t) at t = 1/(1+e^u).
    ///
    /// Implementations with closed forms should override this so that mass
    /// close to the endpoints is captured without underflow in t.
    fn logit_weighted(&self, u: f64) -> f64 {
        let t = 1.0 / (1.0 + u.exp());
        let s = 1.0 / (1.0 + (-u).exp());
        if t == 0.0 || s == 0.0 {
            return 0.0;
        }
        self.eval(t) * t * s
    }

    /// Logits u at which the density is not smooth; the fine grid is graded toward them.
    fn singular_logits(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Fn(f64) -> f64> Density for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Uniform density on [0,1].
pub struct LebesgueDensity;

impl Density for LebesgueDensity {
    fn eval(&self, _t: f64) -> f64 {
        1.0
    }
    fn logit_weighted(&self, u: f64) -> f64 {
        let c = (0.5 * u).cosh();
        0.25 / (c * c)
    }
}

/// The arcsine density 1/(π√(t(1−t))).
pub struct ArcsineDensity;

impl Density for ArcsineDensity {
    fn eval(&self, t: f64) -> f64 {
        1.0 / (PI * (t * (1.0 - t)).sqrt())
    }
    fn logit_weighted(&self, u: f64) -> f64 {
        0.5 / (PI * (0.5 * u).cosh())
    }
}

/// The density 1/(t(1−t)(π² + log((1−t)/t)²)).
pub struct LogMeanDensity;

impl Density for LogMeanDensity {
    fn eval(&self, t: f64) -> f64 {
        log_mean_density(t)
    }
    fn logit_weighted(&self, u: f64) -> f64 {
        1.0 / (PI * PI + u * u)
    }
}

/// Measure representing AGM(x, 1) through f_t⁺, written with complete
/// elliptic integrals of the moduli |1−2t| and 2√(t(1−t)).
pub struct AgmDensity;

impl Density for AgmDensity {
    fn eval(&self, t: f64) -> f64 {
        self.logit_weighted(((1.0 - t) / t).ln()) / (t * (1.0 - t))
    }
    fn logit_weighted(&self, u: f64) -> f64 {
        let half = 0.5 * u;
        if half.abs() > 40.0 {
            let (a, b) = (half.abs() + std::f64::consts::LN_2, 0.5 * PI);
            return b / (4.0 * (a * a + b * b));
        }
        let modulus = 1.0 / half.cosh();
        let complement = half.tanh().abs();
        let agm_a = agm(1.0, modulus);
        let agm_b = agm(1.0, complement);
        if agm_b == 0.0 {
            return 0.0;
        }
        let (a, b) = (0.5 * PI / agm_a, 0.5 * PI / agm_b);
        1.0 / (4.0 * (a * a / b + b))
    }
    fn singular_logits(&self) -> Vec<f64> {
        vec![0.0]
    }
}

pub fn log_mean_density(t: f64) -> f64 {
    let l = ((1.0 - t) / t).ln();
    1.0 / (t * (1.0 - t) * (PI * PI + l * l))
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::DegenerateParameter(
            "quadrature order must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Eigen-nodes and weights of a symmetric tridiagonal Jacobi matrix.
fn jacobi_rule(alpha: &[f64], beta: &[f64], mass: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = alpha.len();
    let mut entries = vec![0.0; m * m];
    for i in 0..m {
        entries[i * m + i] = alpha[i];
        if i + 1 < m {
            entries[i * m + i + 1] = beta[i];
            entries[(i + 1) * m + i] = beta[i];
        }
    }
    let j = HermitianMatrix::from_real_rows(m, &entries)?;
    let e = j.eig()?;
    let weights = (0..m)
        .map(|c| mass * e.vectors[(0, c)].norm_sqr())
        .collect();
    Ok((e.values, weights))
}

fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let m = nodes.len();
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let t = 0.5 * (nodes[i] + 1.0 - nodes[j]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = t;
        nodes[j] = 1.0 - t;
        weights[i] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
}

/// m-point Gauss–Legendre rule for Lebesgue measure on [0,1].
pub fn gauss_legendre(m: usize) -> Result<QuadratureRule> {
    check_order(m)?;
    let alpha = vec![0.5; m];
    let beta: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            k / (2.0 * (4.0 * k * k - 1.0).sqrt())
        })
        .collect();
    let (mut nodes, mut weights) = jacobi_rule(&alpha, &beta, 1.0)?;
    for (t, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        let mut x = 2.0 * *t - 1.0;
        for _ in 0..3 {
            let (p, dp) = legendre_with_derivative(m, x);
            x -= p / dp;
        }
        let (_, dp) = legendre_with_derivative(m, x);
        *t = 0.5 * (1.0 + x);
        *w = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    symmetrize(&mut nodes, &mut weights);
    QuadratureRule::new(nodes, weights, MeasureTag::Lebesgue)
}

/// P_m(x) and P_m'(x) on [−1,1] by the three-term recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    for j in 1..m {
        let j = j as f64;
        let next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    let dp = m as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, dp)
}

/// Chebyshev–Gauss rule for the arcsine distribution on [0,1].
pub fn gauss_arcsine(m: usize) -> Result<QuadratureRule> {
    check_order(m)?;
    let mf = m as f64;
    let mut nodes: Vec<f64> = (1..=m)
        .map(|j| 0.5 * (1.0 + ((2 * j - 1) as f64 * PI / (2.0 * mf)).cos()))
        .collect();
    nodes.reverse();
    let mut weights = vec![1.0 / mf; m];
    symmetrize(&mut nodes, &mut weights);
    QuadratureRule::new(nodes, weights, MeasureTag::Arcsine)
}

const PANEL_ORDER: usize = 16;

/// Panels in θ: uniform, with geometric grading toward each singular point.
fn panel_edges(panels: usize, singular: &[f64]) -> Vec<(f64, f64)> {
    let h = PI / panels as f64;
    let mut cuts: Vec<f64> = (0..=panels).map(|p| -0.5 * PI + p as f64 * h).collect();
    let thetas: Vec<f64> = singular.iter().map(|u| (u / PI).atan()).collect();
    cuts.extend(thetas.iter().copied());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut out = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let near_lo = thetas.iter().any(|&t| (t - lo).abs() < 1e-14);
        let near_hi = thetas.iter().any(|&t| (t - hi).abs() < 1e-14);
        if !near_lo && !near_hi {
            out.push((lo, hi));
            continue;
        }
        let (anchor, far) = if near_lo { (lo, hi) } else { (hi, lo) };
        let mut width = far - anchor;
        let mut outer = far;
        while width.abs() > GRADING_FLOOR {
            let inner = anchor + GRADING_RATIO * width;
            out.push((inner.min(outer), inner.max(outer)));
            outer = inner;
            width *= GRADING_RATIO;
        }
        out.push((anchor.min(outer), anchor.max(outer)));
    }
    out
}

const GRADING_RATIO: f64 = 0.15;
const GRADING_FLOOR: f64 = 1e-15;

/// Composite Gauss–Legendre discretization of the density after the change of
/// variables t = 1/(1+exp(π tan θ)), θ ∈ (−π/2, π/2).
fn fine_rule(density: &dyn Density, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let panel = gauss_legendre(PANEL_ORDER)?;
    let edges = panel_edges(n.div_ceil(PANEL_ORDER).max(1), &density.singular_logits());
    let mut ts = Vec::with_capacity(edges.len() * PANEL_ORDER);
    let mut ws = Vec::with_capacity(edges.len() * PANEL_ORDER);
    for (lo, hi) in edges {
        let h = hi - lo;
        for (x, w) in panel.iter() {
            let theta = lo + h * x;
            let u = PI * theta.tan();
            let sec2 = 1.0 / theta.cos().powi(2);
            let rho = density.logit_weighted(u);
            if !rho.is_finite() || rho < 0.0 {
                return Err(Error::domain("density sample is negative or not finite", rho));
            }
            let t = 1.0 / (1.0 + u.exp());
            if rho == 0.0 && u.abs() < 200.0 {
                return Err(Error::domain("density vanishes inside (0,1) at t", t));
            }
            ts.push(t);
            ws.push(w * h * PI * sec2 * rho);
        }
    }
    Ok((ts, ws))
}

/// Gauss rule for an arbitrary positive density by the discretized Stieltjes
/// procedure on an `n_fine`-point reference rule.
pub fn gauss_from_density(density: &dyn Density, m: usize, n_fine: usize) -> Result<QuadratureRule> {
    gauss_from_density_tagged(density, m, n_fine, MeasureTag::Custom("density".into()))
}

fn gauss_from_density_tagged(
    density: &dyn Density,
    m: usize,
    n_fine: usize,
    tag: MeasureTag,
) -> Result<QuadratureRule> {
    check_order(m)?;
    if n_fine < 64 * m {
        return Err(Error::DegenerateParameter(format!(
            "fine discretization {n_fine} is below 64m = {}",
            64 * m
        )));
    }
    let (ts, ws) = fine_rule(density, n_fine)?;
    let mass: f64 = ws.iter().sum();
    let (alpha, beta) = stieltjes(&ts, &ws, m)?;
    let (nodes, weights) = jacobi_rule(&alpha, &beta, mass)?;
    QuadratureRule::new(nodes, weights, tag)
}

/// Recurrence coefficients of the orthonormal polynomials of a discrete measure.
fn stieltjes(ts: &[f64], ws: &[f64], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mass: f64 = ws.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Numerical("discretized measure has no mass".into()));
    }
    let norm0 = 1.0 / mass.sqrt();
    let mut prev = vec![0.0; ts.len()];
    let mut cur = vec![norm0; ts.len()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    for k in 0..m {
        let a: f64 = (0..ts.len()).map(|i| ws[i] * ts[i] * cur[i] * cur[i]).sum();
        alpha.push(a);
        if k + 1 == m {
            break;
        }
        let b_prev = if k == 0 { 0.0 } else { beta[k - 1] };
        let mut next: Vec<f64> = (0..ts.len())
            .map(|i| (ts[i] - a) * cur[i] - b_prev * prev[i])
            .collect();
        for basis in [&cur, &prev] {
            let c: f64 = (0..ts.len()).map(|i| ws[i] * next[i] * basis[i]).sum();
            for i in 0..ts.len() {
                next[i] -= c * basis[i];
            }
        }
        let b2: f64 = (0..ts.len()).map(|i| ws[i] * next[i] * next[i]).sum();
        if !(b2 > 1e-28) {
            return Err(Error::Numerical(format!(
                "Stieltjes recurrence broke down at step {k}: beta^2 = {b2:e}"
            )));
        }
        let b = b2.sqrt();
        for v in next.iter_mut() {
            *v /= b;
        }
        beta.push(b);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok((alpha, beta))
}

/// Gauss rule for a probability density; the total mass is checked and the
/// weights renormalized when it deviates from 1 by more than 1e-8.
pub fn gauss_probability(
    density: &dyn Density,
    m: usize,
    n_fine: usize,
    tag: MeasureTag,
) -> Result<QuadratureRule> {
    let mut rule = gauss_from_density_tagged(density, m, n_fine, tag)?;
    let defect = rule.mass() - 1.0;
    if defect.abs() > 1e-8 {
        for w in rule.weights.iter_mut() {
            *w /= 1.0 + defect;
        }
        rule.mass_defect = defect;
    }
    Ok(rule)
}

/// Default fine-grid size for order m.
pub fn default_discretization(m: usize) -> usize {
    256 * m
}

/// Gauss rule for the logarithmic-mean measure.
pub fn gauss_log_mean(m: usize) -> Result<QuadratureRule> {
    gauss_probability(&LogMeanDensity, m, default_discretization(m), MeasureTag::LogMean)
}

/// Gauss rule for the measure of AGM(x, 1).
pub fn gauss_agm(m: usize) -> Result<QuadratureRule> {
    gauss_probability(&AgmDensity, m, default_discretization(m), MeasureTag::Agm)
}
