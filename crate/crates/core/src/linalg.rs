//! Small dense helpers on top of nalgebra's symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sorted_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

pub fn symmetry_defect(matrix: &DMatrix<f64>) -> f64 {
    let scale = matrix.amax().max(1.0);
    (matrix - matrix.transpose()).amax() / scale
}

/// Rebuilds `Q f(Λ) Qᵀ` from the eigendecomposition of a symmetric matrix.
pub fn spectral_map(matrix: &DMatrix<f64>, f: impl FnMut(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(matrix.clone());
    let mapped = eig.eigenvalues.map(f);
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&mapped) * q.transpose()
}

/// Checks symmetry (to 1e-10) and positive definiteness of `matrix`.
pub fn check_spd(matrix: &DMatrix<f64>, what: &str) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::NotSpd(format!("{what}: not square")));
    }
    if symmetry_defect(matrix) > 1e-10 {
        return Err(Error::NotSpd(format!("{what}: not symmetric")));
    }
    let min = sorted_eigenvalues(matrix).first().copied().unwrap_or(0.0);
    if !(min > 0.0) {
        return Err(Error::NotSpd(format!(
            "{what}: smallest eigenvalue {min:e}"
        )));
    }
    Ok(())
}
