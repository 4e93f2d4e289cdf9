//! Rational approximants obtained by applying Gaussian quadrature to integral
//! representations of operator monotone functions.

use crate::error::{Error, Result};
use crate::hermitian::{nc_perspective, Domain, HermitianMatrix};
use crate::quadrature::{gauss_arcsine, gauss_legendre, QuadratureRule};

/// f_t(x) = (x−1)/(t(x−1)+1).
pub fn f_t(t: f64, x: f64) -> f64 {
    (x - 1.0) / (t * (x - 1.0) + 1.0)
}

/// f_t⁺(x) = x/((1−t)+tx), equal to 1 at x = 1.
pub fn f_t_plus(t: f64, x: f64) -> f64 {
    if x == 1.0 {
        return 1.0;
    }
    x / ((1.0 - t) + t * x)
}

/// Anchor values of the integral representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// g(x) = g(1) + g'(1) ∫ f_t(x) dν(t).
    Centered { g1: f64, g1_prime: f64 },
    /// g(x) = g(0) + (g(1) − g(0)) ∫ f_t⁺(x) dμ(t).
    Positive { g0: f64, g1: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalApproximant {
    anchor: Anchor,
    rule: QuadratureRule,
    k: u32,
}

impl RationalApproximant {
    pub fn new(anchor: Anchor, rule: QuadratureRule, k: u32) -> Self {
        RationalApproximant { anchor, rule, k }
    }

    /// r_{m,k} for the logarithm, built on the m-point Gauss–Legendre rule.
    pub fn log(m: usize, k: u32) -> Result<Self> {
        Ok(Self::new(
            Anchor::Centered {
                g1: 0.0,
                g1_prime: 1.0,
            },
            gauss_legendre(m)?,
            k,
        ))
    }

    /// r_m⁺ for the square root, built on the m-point arcsine rule.
    pub fn sqrt(m: usize) -> Result<Self> {
        Ok(Self::new(
            Anchor::Positive { g0: 0.0, g1: 1.0 },
            gauss_arcsine(m)?,
            0,
        ))
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn m(&self) -> usize {
        self.rule.order()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn is_log(&self) -> bool {
        matches!(self.anchor, Anchor::Centered { g1, g1_prime } if g1 == 0.0 && g1_prime == 1.0)
    }

    /// The unscaled approximant r_m (or r_m⁺).
    pub fn eval_rm(&self, x: f64) -> f64 {
        match self.anchor {
            Anchor::Centered { .. } => self.eval_centered_shifted(x - 1.0),
            Anchor::Positive { g1, .. } if x == 1.0 => g1,
            Anchor::Positive { g0, g1 } => g0 + (g1 - g0) * self.rule.integrate(|t| f_t_plus(t, x)),
        }
    }

    /// Centered approximant at x = 1 + d.
    fn eval_centered_shifted(&self, d: f64) -> f64 {
        let Anchor::Centered { g1, g1_prime } = self.anchor else {
            unreachable!("shifted evaluation is only used for centered anchors")
        };
        g1 + g1_prime * self.rule.integrate(|t| d / (t * d + 1.0))
    }

    /// 2^k r_m(x^{1/2^k}) for a logarithm approximant.
    pub fn eval_rmk(&self, x: f64) -> Result<f64> {
        self.require_log()?;
        if !(x > 0.0) {
            return Err(Error::domain("r_{m,k} requires x > 0", x));
        }
        Ok(2f64.powi(self.k as i32) * self.eval_centered_shifted(root_2k_minus_one(x, self.k)))
    }

    fn require_log(&self) -> Result<()> {
        if self.is_log() {
            Ok(())
        } else {
            Err(Error::DegenerateParameter(
                "root scaling applies only to the logarithm approximant".into(),
            ))
        }
    }

    /// Supremum of r_{m,k} over (0, ∞), approached as x → ∞.
    pub fn upper_limit(&self) -> Result<f64> {
        self.require_log()?;
        Ok(2f64.powi(self.k as i32) * self.rule.integrate(|t| 1.0 / t))
    }

    /// r_{m,k} applied to the spectrum of a positive definite matrix.
    pub fn eval_matrix(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.require_log()?;
        x.matrix_function(|v| self.eval_rmk(v).unwrap_or(f64::NAN), Domain::Positive)
    }

    /// Noncommutative perspective Y^{1/2} r_{m,k}(Y^{-1/2} X Y^{-1/2}) Y^{1/2}.
    pub fn perspective(&self, x: &HermitianMatrix, y: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.require_log()?;
        nc_perspective(|v| self.eval_rmk(v).unwrap_or(f64::NAN), x, y)
    }

    /// Taylor coefficients c_0..c_n of u ↦ r_m(1+u).
    pub fn taylor_coefficients(&self, n: usize) -> Vec<f64> {
        let (c0, scale) = match self.anchor {
            Anchor::Centered { g1, g1_prime } => (g1, g1_prime),
            Anchor::Positive { g0, g1 } => (g1, g1 - g0),
        };
        let positive = matches!(self.anchor, Anchor::Positive { .. });
        let mut out = vec![c0];
        for p in 1..=n {
            let s = self.rule.integrate(|t| {
                let base = (-t).powi(p as i32 - 1);
                if positive {
                    // f_t⁺(1+u) = 1 + (1−t) f_t(1+u)
                    (1.0 - t) * base
                } else {
                    base
                }
            });
            out.push(scale * s);
        }
        out
    }
}

/// x^{1/2^k} by k successive square roots.
pub fn root_2k(x: f64, k: u32) -> f64 {
    (0..k).fold(x, |acc, _| acc.sqrt())
}

/// x^{1/2^k} − 1 by k successive square roots, carried in the shifted
/// variable so that no cancellation occurs near x = 1.
pub fn root_2k_minus_one(x: f64, k: u32) -> f64 {
    let (mut kappa, mut d) = (x, x - 1.0);
    for _ in 0..k {
        kappa = kappa.sqrt();
        d /= kappa + 1.0;
    }
    d
}

fn rho(x: f64) -> f64 {
    let s = x.sqrt();
    ((s - 1.0) / (s + 1.0)).abs()
}

fn sqrt_gap(x: f64) -> f64 {
    let s = x.sqrt();
    (s - 1.0 / s).abs()
}

/// Error bound for |r_{m,k}(x) − log x|.
pub fn error_bound_log(x: f64, m: usize, k: u32) -> f64 {
    let kappa = root_2k(x, k);
    2f64.powi(k as i32) * sqrt_gap(kappa).powi(2) * rho(kappa).powi(2 * m as i32 - 1)
}

/// Error bound for |r_m(x) − g(x)| for a centered representation.
pub fn error_bound_monotone(x: f64, m: usize, symmetric: bool, g1_prime: f64) -> f64 {
    let r = rho(x);
    if symmetric {
        g1_prime * sqrt_gap(x).powi(2) * r.powi(2 * m as i32 - 1)
    } else {
        4.0 * g1_prime * sqrt_gap(x) * r.powi(2 * m as i32) / (1.0 - r)
    }
}

/// Error bound for |r_m⁺(x) − g(x)| for a positive representation.
pub fn error_bound_positive(x: f64, m: usize, g0: f64, g1: f64) -> f64 {
    let r = rho(x);
    4.0 * (g1 - g0) * x.sqrt() * r.powi(2 * m as i32) / (1.0 - r)
}

/// Parameters (m, k) with sup over [1/a, a] of |r_{m,k} − log| at most eps.
pub fn choose_params_log(a: f64, eps: f64) -> Result<(usize, u32)> {
    if !(a > 1.0) {
        return Err(Error::domain("interval parameter a must exceed 1", a));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("accuracy must be positive", eps));
    }
    let ln_a = a.ln();
    let k1 = (ln_a.log2().ceil() + 1.0).max(0.0) as u32;
    let arg = (32.0 * ln_a / eps).log2().max(0.0).sqrt();
    let mut k2 = (arg.ceil() as u32).max(2);
    if k2 % 2 == 1 {
        k2 += 1;
    }
    Ok(((k2 / 2) as usize, k1 + k2))
}

/// (−1)^{p+1}/p for p ≥ 1 and 0 for p = 0: Taylor coefficients of log(1+u).
pub fn log_taylor_coefficient(p: usize) -> f64 {
    if p == 0 {
        0.0
    } else {
        let s = if p % 2 == 1 { 1.0 } else { -1.0 };
        s / p as f64
    }
}

/// Number of leading Taylor coefficients at x = 1 (constant term included)
/// on which the approximant agrees with `reference` within 1e-10.
pub fn taylor_match_order(
    approx: &RationalApproximant,
    reference: impl Fn(usize) -> f64,
    max_terms: usize,
) -> usize {
    let coeffs = approx.taylor_coefficients(max_terms.saturating_sub(1));
    coeffs
        .iter()
        .enumerate()
        .take_while(|(p, c)| (*c - reference(*p)).abs() <= 1e-10)
        .count()
}

/// Chebyshev coefficient a_j(x) of s ↦ 2/((x+1)/(x−1) − s) on [−1,1].
pub fn cheb_coeff_ft(x: f64, j: usize) -> f64 {
    let s = x.sqrt();
    let g = s - 1.0 / s;
    if j == 0 {
        g
    } else {
        2.0 * g * ((s - 1.0) / (s + 1.0)).powi(j as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn building_blocks() {
        assert_eq!(f_t(0.0, 3.7), 2.7);
        assert!((f_t(1.0, 3.0) - 2.0 / 3.0).abs() < 1e-16);
        assert!((f_t(0.5, 2.0) - 2.0 / 3.0).abs() < 1e-16);
        assert!((f_t_plus(0.5, 2.0) - 4.0 / 3.0).abs() < 1e-16);
        assert_eq!(f_t_plus(0.3, 1.0), 1.0);
    }

    #[test]
    fn root_scaling_only_for_log() {
        let s = RationalApproximant::sqrt(2).unwrap();
        assert!(s.eval_rmk(2.0).is_err());
    }

    #[test]
    fn k1_clamped_for_short_intervals() {
        let (m, k) = choose_params_log(1.1, 1e-6).unwrap();
        assert!(m >= 1);
        assert!(k >= 2);
    }
}
