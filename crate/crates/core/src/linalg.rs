//! Symmetric-matrix helpers shared by the metric code: eigen-based PSD
//! projection and square-root factors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix contains non-finite entries".into()));
    }
    let sym = symmetrize(a);
    SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or_else(|| {
        let diag = a.diagonal();
        Error::Numerical(format!(
            "symmetric eigendecomposition did not converge (n = {}, frobenius norm {:e}, diagonal range [{:e}, {:e}])",
            a.nrows(),
            a.norm(),
            diag.min(),
            diag.max()
        ))
    })
}

/// Frobenius-nearest positive semidefinite matrix: symmetrize, then clamp
/// negative eigenvalues to zero.
pub fn project_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = eigen(a)?;
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    Ok(symmetrize(&out))
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigen(a)?.eigenvalues.min())
}

/// Factor `L` with `M = LᵀL`, taken as `Λ^½ Vᵀ`. Eigenvalues in
/// `[-1e-8, 0)` are treated as zero; anything more negative is an error.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = eigen(m)?;
    let lo = eig.eigenvalues.min();
    if lo < -1e-8 {
        return Err(Error::PsdViolation(lo));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}
