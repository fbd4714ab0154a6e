//! Thin wrappers over nalgebra for the few dense factorizations we need.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Channels with a 1-norm condition number above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

fn norm_one(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU inverse together with the exact 1-norm condition number `‖A‖₁‖A⁻¹‖₁`.
pub fn inverse_with_condition(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let inverse = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularChannel { condition: f64::INFINITY })?;
    let condition = norm_one(a) * norm_one(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularChannel { condition });
    }
    Ok((inverse, condition))
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Right singular vectors of `a` whose singular values are at most `tol`.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect()
}
