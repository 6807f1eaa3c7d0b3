// Copyright 2026 spinctl Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrix helpers shared by the engine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex square matrix of dimension `2^n`.
pub type Operator = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

pub fn dagger(a: &Operator) -> Operator {
    a.adjoint()
}

/// Hilbert-Schmidt inner product `Tr[A† B]`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius_norm(a: &Operator) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest elementwise deviation `|A_ij - conj(A_ji)|`.
pub fn hermiticity_deviation(a: &Operator) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &Operator, tol: f64) -> bool {
    a.is_square() && hermiticity_deviation(a) <= tol
}

/// `||U†U - 1||_F`.
pub fn unitarity_deviation(u: &Operator) -> f64 {
    let n = u.nrows();
    frobenius_norm(&(u.adjoint() * u - identity(n)))
}

pub fn is_unitary(u: &Operator, tol: f64) -> bool {
    u.is_square() && unitarity_deviation(u) < tol
}

pub(crate) fn ensure_hermitian(a: &Operator, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let deviation = hermiticity_deviation(a);
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

pub(crate) fn ensure_same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// Commutator `[A, B]`.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Kronecker product of a list of factors, leftmost factor first.
pub fn kron_all(factors: &[Operator]) -> Operator {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_spectrum_desc(a: &Operator) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

pub fn from_real_diag(diag: &[f64]) -> Operator {
    let n = diag.len();
    let mut m = Operator::zeros(n, n);
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = Complex64::new(*d, 0.0);
    }
    m
}

/// Square operator from row-major real and imaginary parts. An empty `im`
/// means a real matrix.
pub fn from_rows(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Operator> {
    let n = re.len();
    if n == 0 {
        return Err(Error::Task("empty matrix".into()));
    }
    if re.iter().any(|r| r.len() != n) {
        return Err(Error::Task(format!("real part is not {n}×{n}")));
    }
    if !im.is_empty() && (im.len() != n || im.iter().any(|r| r.len() != n)) {
        return Err(Error::Task(format!("imaginary part is not {n}×{n}")));
    }
    let entries = re.iter().chain(im).flatten();
    if entries.clone().any(|v| !v.is_finite()) {
        return Err(Error::Task("non-finite matrix entry".into()));
    }
    Ok(Operator::from_fn(n, n, |i, j| {
        Complex64::new(re[i][j], if im.is_empty() { 0.0 } else { im[i][j] })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_shapes() {
        let m = from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[vec![0.0, 0.5], vec![-0.5, 0.0]]).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(1.0, 0.5));
        assert_eq!(m[(1, 0)], Complex64::new(1.0, -0.5));
        assert_eq!(from_rows(&[vec![2.0]], &[]).unwrap()[(0, 0)], Complex64::new(2.0, 0.0));
        assert!(from_rows(&[vec![1.0, 0.0]], &[]).is_err());
        assert!(from_rows(&[vec![1.0]], &[vec![1.0], vec![0.0]]).is_err());
        assert!(from_rows(&[], &[]).is_err());
    }

    #[test]
    fn trace_product_matches_full_product() {
        let a = Operator::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = Operator::from_fn(3, 3, |i, j| Complex64::new((i * j) as f64, 0.25 * i as f64));
        let direct = (&a * &b).trace();
        assert!((trace_product(&a, &b) - direct).norm() < 1e-12);
        assert!((hs_inner(&a, &b) - (a.adjoint() * &b).trace()).norm() < 1e-12);
    }

    #[test]
    fn spectrum_is_sorted_descending() {
        let m = from_real_diag(&[-1.0, 3.0, 0.5]);
        assert_eq!(hermitian_spectrum_desc(&m), vec![3.0, 0.5, -1.0]);
    }
}
