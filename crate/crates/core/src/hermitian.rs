//! Dense Hermitian matrices, their spectral decomposition, and the matrix
//! functions built on it.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Dense complex matrix type used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 30;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

/// Eigenvalues in ascending order with the matching unitary eigenvector matrix.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Domain over which a scalar function is defined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Real,
    NonNegative,
    Positive,
}

impl HermitianMatrix {
    /// Wraps `m` after checking it is square and Hermitian within a relative tolerance.
    /// The stored matrix is the exact Hermitian part of `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                if d > 1e-10 * scale {
                    return Err(Error::Shape(format!(
                        "matrix is not Hermitian at ({i},{j}): defect {d:e}"
                    )));
                }
            }
        }
        Ok(Self::hermitian_part(&m))
    }

    /// Returns (M + M*)/2 without checks.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        let mut h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        HermitianMatrix { data: h }
    }

    /// Builds a real symmetric matrix from row-major entries; the upper triangle is used.
    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::Shape(format!(
                "{} entries cannot form a {n}x{n} matrix",
                entries.len()
            )));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            Complex64::new(entries[a * n + b], 0.0)
        });
        Ok(HermitianMatrix { data: m })
    }

    /// Builds a matrix from separate real and imaginary row-major arrays.
    pub fn from_parts(n: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != n * n || im.len() != n * n || n == 0 {
            return Err(Error::Shape(format!("expected {} entries per part", n * n)));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(re[i * n + j], im[i * n + j])
        }))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix {
            data: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            data: CMatrix::zeros(n, n),
        }
    }

    pub fn scalar(x: f64) -> Self {
        Self::diag(&[x])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix {
            data: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(d[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix {
            data: &self.data * Complex64::new(s, 0.0),
        }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        HermitianMatrix {
            data: self.data.map(|z| z.conj()),
        }
    }

    /// P M P* for an arbitrary (possibly rectangular) P.
    pub fn congruence(&self, p: &CMatrix) -> Self {
        Self::hermitian_part(&(p * &self.data * p.adjoint()))
    }

    /// Real inner product Re Tr(A B).
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// Spectral decomposition by cyclic complex Jacobi rotations.
    pub fn eig(&self) -> Result<EigDecomposition> {
        jacobi_eig(&self.data)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    /// Positive semidefinite up to `tol` times max(1, ||M||_F).
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let lam = self.min_eigenvalue()?;
        Ok(lam >= -tol * self.frobenius_norm().max(1.0))
    }

    /// Applies a scalar function to the spectrum after checking the domain.
    pub fn matrix_function(&self, f: impl Fn(f64) -> f64, domain: Domain) -> Result<Self> {
        let e = self.eig()?;
        check_domain(&e.values, domain)?;
        Ok(rebuild(&e, f))
    }

    pub fn log(&self) -> Result<Self> {
        self.matrix_function(f64::ln, Domain::Positive)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.matrix_function(|x| x.max(0.0).sqrt(), Domain::NonNegative)
    }

    pub fn powf(&self, h: f64) -> Result<Self> {
        self.matrix_function(|x| x.powf(h), Domain::Positive)
    }

    pub fn inv(&self) -> Result<Self> {
        self.matrix_function(|x| 1.0 / x, Domain::Positive)
    }
}

fn check_domain(values: &[f64], domain: Domain) -> Result<()> {
    let lo = values[0];
    match domain {
        Domain::Real => Ok(()),
        Domain::NonNegative if lo >= 0.0 => Ok(()),
        Domain::Positive if lo > 0.0 => Ok(()),
        Domain::NonNegative => Err(Error::domain("matrix is not positive semidefinite", lo)),
        Domain::Positive => Err(Error::domain("matrix is not positive definite", lo)),
    }
}

fn rebuild(e: &EigDecomposition, f: impl Fn(f64) -> f64) -> HermitianMatrix {
    let n = e.values.len();
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        let fj = f(e.values[j]);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    HermitianMatrix::hermitian_part(&(scaled * e.vectors.adjoint()))
}

fn jacobi_eig(m: &CMatrix) -> Result<EigDecomposition> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut sweep = 0;
    loop {
        if n <= 1 || total == 0.0 {
            break;
        }
        let off = off_norm(&a);
        if off <= 1e-15 * total {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::Convergence {
                method: "Hermitian Jacobi eigensolver",
                residual: off / total,
            });
        }
        let threshold = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if sweep > 3 {
                    let g = 100.0 * abs;
                    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                        a[(p, q)] = Complex64::new(0.0, 0.0);
                        a[(q, p)] = Complex64::new(0.0, 0.0);
                        continue;
                    }
                }
                if abs <= threshold {
                    continue;
                }
                let e = apq / abs;
                let theta = (aqq - app) / (2.0 * abs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ec = e.conj();
                // columns: p <- c p - s ē q ; q <- s p + c ē q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ec * s;
                    a[(k, q)] = akp * s + akq * ec * c;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ec * s;
                    v[(k, q)] = vkp * s + vkq * ec * c;
                }
                // rows: p <- c p - s e q ; q <- s p + c e q
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * e * s;
                    a[(q, k)] = apk * s + aqk * e * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
        sweep += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomposition { values, vectors })
}

/// Weighted geometric mean A #_h B = A^{1/2} (A^{-1/2} B A^{-1/2})^h A^{1/2}.
pub fn geometric_mean(a: &HermitianMatrix, b: &HermitianMatrix, h: f64) -> Result<HermitianMatrix> {
    same_dim(a, b)?;
    let ea = a.eig()?;
    check_domain(&ea.values, Domain::Positive)?;
    let half = rebuild(&ea, f64::sqrt);
    let inv_half = rebuild(&ea, |x| 1.0 / x.sqrt());
    let c = b.congruence(inv_half.as_matrix());
    let ch = c.matrix_function(|x| x.powf(h), Domain::Positive)?;
    Ok(ch.congruence(half.as_matrix()))
}

/// Noncommutative perspective Y^{1/2} g(Y^{-1/2} X Y^{-1/2}) Y^{1/2}.
pub fn nc_perspective(
    g: impl Fn(f64) -> f64,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    same_dim(x, y)?;
    let ey = y.eig()?;
    check_domain(&ey.values, Domain::Positive)?;
    let half = rebuild(&ey, f64::sqrt);
    let inv_half = rebuild(&ey, |v| 1.0 / v.sqrt());
    let c = x.congruence(inv_half.as_matrix());
    let gc = c.matrix_function(g, Domain::Positive)?;
    Ok(gc.congruence(half.as_matrix()))
}

/// Operator relative entropy D_op(X || Y) = -X^{1/2} log(X^{-1/2} Y X^{-1/2}) X^{1/2}.
pub fn op_rel_entr(x: &HermitianMatrix, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(-&nc_perspective(f64::ln, y, x)?)
}

/// Umegaki relative entropy Tr[A (log A - log B)].
pub fn quantum_rel_entr(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    same_dim(a, b)?;
    let d = &a.log()? - &b.log()?;
    Ok(a.inner(&d))
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of Hermitian matrices.
pub fn kron_hermitian(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix {
        data: a.data.kronecker(&b.data),
    }
}

/// w* Z w with w = vec(I_n), for Z of order n^2.
pub fn phi_map(z: &HermitianMatrix) -> Result<f64> {
    let n2 = z.dim();
    let n = (n2 as f64).sqrt().round() as usize;
    if n * n != n2 {
        return Err(Error::Shape(format!("order {n2} is not a perfect square")));
    }
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            s += z.data[(a * (n + 1), b * (n + 1))].re;
        }
    }
    Ok(s)
}

/// The column vector vec(I_n) of length n^2.
pub fn vec_identity(n: usize) -> CMatrix {
    CMatrix::from_fn(n * n, 1, |i, _| {
        if i % (n + 1) == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn same_dim(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "dimension mismatch {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        HermitianMatrix { data: -&self.data }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, s: f64) -> HermitianMatrix {
        self.scale(s)
    }
}
