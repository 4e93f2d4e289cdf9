//! Seeded instance generation.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
//! Uniform variates are `(next_u64 >> 11) · 2^-53`; Gaussian variates use the
//! Box–Muller transform on two consecutive uniforms, returning both values.

use crate::hermitian::{CMatrix, HermitianMatrix};
use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct InstanceRng {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        InstanceRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * th.sin());
        r * th.cos()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize, complex: bool) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re = self.normal();
            let im = if complex { self.normal() } else { 0.0 };
            Complex64::new(re, im)
        })
    }

    /// G G* / n + δ I for a Gaussian G.
    pub fn pd_matrix(&mut self, n: usize, complex: bool, delta: f64) -> HermitianMatrix {
        let g = self.gaussian_matrix(n, n, complex);
        let a = HermitianMatrix::hermitian_part(&(&g * g.adjoint()));
        &a.scale(1.0 / n as f64) + &HermitianMatrix::identity(n).scale(delta)
    }

    /// A PD matrix of unit trace.
    pub fn density_matrix(&mut self, n: usize, complex: bool) -> HermitianMatrix {
        let a = self.pd_matrix(n, complex, 0.1);
        let tr = a.trace();
        a.scale(1.0 / tr)
    }

    /// U diag(λ) U* with eigenvalues drawn log-uniformly from [lo, hi].
    pub fn pd_with_spectrum(&mut self, n: usize, complex: bool, lo: f64, hi: f64) -> HermitianMatrix {
        let lam: Vec<f64> = (0..n)
            .map(|_| self.uniform_in(lo.ln(), hi.ln()).exp())
            .collect();
        let g = self.gaussian_matrix(n, n, complex);
        let q = g.qr().q();
        HermitianMatrix::diag(&lam).congruence(&q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_streams() {
        let mut a = InstanceRng::new(7);
        let mut b = InstanceRng::new(7);
        for _ in 0..10 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = InstanceRng::new(1);
        for _ in 0..1000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
