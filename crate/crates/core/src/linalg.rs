//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hermitian square root via eigendecomposition. Eigenvalues below
/// `1e-12 * max` are clamped to zero so rank-deficient matrices keep their
/// exact null space.
pub fn herm_sqrt(r: &CMat) -> Result<CMat> {
    let n = r.nrows();
    if n == 0 {
        return Ok(r.clone());
    }
    let herm = (r + r.adjoint()) * c(0.5);
    let scale = herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(CMat::zeros(n, n));
    }
    let eig = herm.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let mut out = CMat::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if !l.is_finite() {
            return Err(Error::NumericalDomain("non-finite eigenvalue in covariance".into()));
        }
        if l < -1e-9 * lmax.abs().max(1e-300) {
            return Err(Error::NumericalDomain(format!(
                "covariance is not positive semidefinite (eigenvalue {l:e})"
            )));
        }
        if l <= 1e-12 * lmax {
            continue;
        }
        let u = eig.eigenvectors.column(i);
        out += (&u * u.adjoint()) * c(l.sqrt());
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn herm_eigenvalues(r: &CMat) -> Vec<f64> {
    let herm = (r + r.adjoint()) * c(0.5);
    let mut v: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Inverse of a Hermitian positive definite matrix.
pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    let herm = (a + a.adjoint()) * c(0.5);
    match herm.cholesky() {
        Some(ch) => Ok(ch.inverse()),
        None => Err(Error::NumericalDomain("matrix is not positive definite".into())),
    }
}

/// Solves `A x = b` for Hermitian positive definite `A`.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let herm = (a + a.adjoint()) * c(0.5);
    match herm.cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::NumericalDomain("matrix is not positive definite".into())),
    }
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

pub fn frob(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a - b‖_F / ‖b‖_F`, with the absolute error returned when `b` is zero.
pub fn frob_rel(a: &CMat, b: &CMat) -> f64 {
    let d = frob(&(a - b));
    let n = frob(b);
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

/// `|<a, b>| / (‖a‖ ‖b‖)`, or `None` when either vector is zero.
pub fn cosine(a: &CVec, b: &CVec) -> Option<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(a.dotc(b).norm() / (na * nb))
}

pub fn random_cn_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| crate::rng::cn01(rng))
}

pub fn random_cn_vector<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| crate::rng::cn01(rng))
}

/// Random Hermitian positive semidefinite matrix `G Gᴴ / n`.
pub fn random_psd<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_cn_matrix(rng, n, n);
    &g * g.adjoint() * c(1.0 / n as f64)
}

/// Random Hermitian matrix `(G + Gᴴ) / 2`.
pub fn random_hermitian<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_cn_matrix(rng, n, n);
    (&g + g.adjoint()) * c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Seed;

    #[test]
    fn sqrt_squares_back() {
        let mut rng = Seed(3).rng();
        let r = random_psd(&mut rng, 5);
        let s = herm_sqrt(&r).unwrap();
        assert!(frob_rel(&(&s * &s), &r) < 1e-10);
    }

    #[test]
    fn sqrt_of_zero_is_zero() {
        let s = herm_sqrt(&CMat::zeros(3, 3)).unwrap();
        assert_eq!(frob(&s), 0.0);
    }

    #[test]
    fn negative_matrix_rejected() {
        let r = -identity(2);
        assert!(matches!(herm_sqrt(&r), Err(Error::NumericalDomain(_))));
    }

    #[test]
    fn trace_prod_matches_product() {
        let mut rng = Seed(4).rng();
        let a = random_cn_matrix(&mut rng, 4, 4);
        let b = random_cn_matrix(&mut rng, 4, 4);
        assert!((trace_prod(&a, &b) - trace(&(&a * &b))).norm() < 1e-12);
    }
}
