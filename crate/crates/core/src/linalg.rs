//! Hermitian, positivity, order and norm predicates on [`ComplexMatrix`].
//!
//! Quantified statements over all vectors ψ (positivity, the Loewner order)
//! are decided through the spectral theorem: a hermitian matrix is positive
//! semidefinite iff its smallest eigenvalue is non-negative.

use nalgebra::linalg::{SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{check_dims, ComplexMatrix};
use crate::tolerance::ToleranceConfig;

const MAX_ITERATIONS: usize = 10_000;

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("dimension >= 1")
    }
}

/// ⟨a|b⟩_HS = Tr(a†b).
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    check_dims(a, b)?;
    Ok(a.as_nalgebra().dotc(b.as_nalgebra()))
}

/// Largest entry of |a − a†|.
pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((a.get(i, j) - a.get(j, i).conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
    hermitian_deviation(a) <= tol.residual_tol
}

fn require_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<()> {
    let deviation = hermitian_deviation(a);
    if deviation > tol.residual_tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigen-decomposition of the hermitian part of `a`. Callers are
/// responsible for checking that `a` is hermitian to begin with.
pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let h = a.hermitian_part().into_nalgebra();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_ITERATIONS).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a hermitian matrix, ascending.
pub fn eigenvalues_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Vec<f64>> {
    require_hermitian(a, tol)?;
    Ok(eigh(a)?.values)
}

/// Hermitian with smallest eigenvalue ≥ −eig_tol. Non-hermitian input is
/// simply not PSD; a failed decomposition is an error.
pub fn is_psd(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
    if !is_hermitian(a, tol) {
        return Ok(false);
    }
    Ok(eigh(a)?.min() >= -tol.eig_tol)
}

/// a ⪯ b in the Loewner order, i.e. b − a is PSD.
pub fn loewner_leq(a: &ComplexMatrix, b: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
    Ok(loewner_gap(a, b, tol)? >= -tol.eig_tol)
}

/// Smallest eigenvalue of b − a; non-negative exactly when a ⪯ b.
pub fn loewner_gap(a: &ComplexMatrix, b: &ComplexMatrix, tol: &ToleranceConfig) -> Result<f64> {
    check_dims(a, b)?;
    require_hermitian(a, tol)?;
    require_hermitian(b, tol)?;
    Ok(eigh(&(b - a))?.min())
}

/// Operator norm of a hermitian matrix, computed as its spectral radius.
pub fn operator_norm_hermitian(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<f64> {
    require_hermitian(a, tol)?;
    let eig = eigh(a)?;
    Ok(eig.min().abs().max(eig.max().abs()))
}

/// Singular values, descending.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let svd = SVD::try_new(a.as_nalgebra().clone(), false, false, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::SvdFailure)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// Largest singular value; agrees with [`operator_norm_hermitian`] on
/// hermitian input.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

/// Frobenius norm ‖a‖₂ = sqrt(Tr a†a).
pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.as_nalgebra().norm()
}

/// Positive square root of a PSD matrix; negative eigenvalues within
/// rounding are clipped to zero.
pub fn psd_sqrt(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    require_hermitian(a, tol)?;
    let eig = eigh(a)?;
    let d = a.dim();
    let roots: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    ComplexMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| eig.vectors[k][i] * eig.vectors[k][j].conj() * roots[k])
            .sum()
    })
}

/// Inverse square root of a positive definite matrix.
pub fn inverse_sqrt(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    require_hermitian(a, tol)?;
    let eig = eigh(a)?;
    if eig.min() <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "inverse square root needs a positive definite matrix, min eigenvalue {}",
            eig.min()
        )));
    }
    let d = a.dim();
    let inv: Vec<f64> = eig.values.iter().map(|&v| 1.0 / v.sqrt()).collect();
    ComplexMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| eig.vectors[k][i] * eig.vectors[k][j].conj() * inv[k])
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{I, ONE, ZERO};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn plus() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap()
    }

    #[test]
    fn hs_inner_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(hs_inner(&id, &id).unwrap(), Complex64::new(2.0, 0.0));
        let rho = ComplexMatrix::diag(&[0.75, 0.25]).unwrap();
        assert_eq!(hs_inner(&id, &rho).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(
            hs_inner(&id, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hermitian_examples() {
        let t = tol();
        assert!(is_hermitian(&ComplexMatrix::diag(&[1.0, 0.0]).unwrap(), &t));
        let anti = ComplexMatrix::from_rows(&[vec![ZERO, I], vec![I, ZERO]]).unwrap();
        assert!(!is_hermitian(&anti, &t));
        let pauli_y = ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap();
        assert!(is_hermitian(&pauli_y, &t));
        let neg_y = ComplexMatrix::from_rows(&[vec![ZERO, I], vec![-I, ZERO]]).unwrap();
        assert!(is_hermitian(&neg_y, &t));
    }

    #[test]
    fn psd_examples() {
        let t = tol();
        assert!(is_psd(&ComplexMatrix::diag(&[0.3, 0.7]).unwrap(), &t).unwrap());
        assert!(!is_psd(&ComplexMatrix::diag(&[1.0, -0.01]).unwrap(), &t).unwrap());
        assert!(is_psd(&plus(), &t).unwrap());
        // boundary: eigenvalue exactly -eig_tol is accepted, twice that is not
        assert!(is_psd(&ComplexMatrix::diag(&[1.0, -1e-9]).unwrap(), &t).unwrap());
        assert!(!is_psd(&ComplexMatrix::diag(&[1.0, -2e-9]).unwrap(), &t).unwrap());
    }

    #[test]
    fn loewner_examples() {
        let t = tol();
        let a = ComplexMatrix::diag(&[0.2, 0.3]).unwrap();
        let b = ComplexMatrix::diag(&[0.5, 0.5]).unwrap();
        assert!(loewner_leq(&a, &b, &t).unwrap());
        let c = ComplexMatrix::diag(&[0.6, 0.1]).unwrap();
        let d = ComplexMatrix::diag(&[0.3, 0.5]).unwrap();
        assert!(!loewner_leq(&c, &d, &t).unwrap());
        assert!(!loewner_leq(&d, &c, &t).unwrap());
        assert!(loewner_leq(&plus(), &plus(), &t).unwrap());
        let anti = ComplexMatrix::from_rows(&[vec![ZERO, I], vec![I, ZERO]]).unwrap();
        assert!(matches!(
            loewner_leq(&anti, &b, &t),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        let t = tol();
        assert!((operator_norm_hermitian(&plus(), &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((operator_norm_hermitian(&plus().scale(0.8), &t).unwrap() - 0.8).abs() < 1e-15);
        let m = ComplexMatrix::diag(&[0.3, -0.9]).unwrap();
        assert!((operator_norm_hermitian(&m, &t).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn trace_norm_examples() {
        let rho = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.1, 0.2)],
            vec![Complex64::new(0.1, -0.2), Complex64::new(0.4, 0.0)],
        ])
        .unwrap();
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-14);
        let z = ComplexMatrix::diag(&[1.0, -1.0]).unwrap();
        assert!((trace_norm(&z).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let t = tol();
        let a = ComplexMatrix::from_rows(&[
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.5)],
            vec![Complex64::new(0.5, -0.5), ONE],
        ])
        .unwrap();
        let s = psd_sqrt(&a, &t).unwrap();
        assert!((&s * &s).max_abs_diff(&a).unwrap() < 1e-13);
        let r = inverse_sqrt(&a, &t).unwrap();
        let prod = &(&r * &a) * &r;
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() < 1e-13);
    }
}
