//! Averaged linearization `a_ij(x) = int_0^1 DF(A + t D^2 v(x)) dt`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::oracle::hessian_fd;
use crate::quadrature::gauss_legendre;

const NODES: usize = 16;

/// `a_ij(x)` for `v = u - x^T A x / 2`, with `D^2 u` by central differences of
/// step `h`. Satisfies `a_ij D_ij v = F(D^2 u) - F(A)` up to the quadrature.
pub fn linearization_coefficients<U: Fn(&[f64]) -> f64>(
    op: &Operator,
    u: U,
    a_mat: &DMatrix<f64>,
    x: &[f64],
    h: f64,
) -> Result<DMatrix<f64>> {
    let hess = hessian_fd(u, x, h);
    linearization_from_hessian(op, &hess, a_mat)
}

/// Same with a known Hessian.
pub fn linearization_from_hessian(
    op: &Operator,
    hess: &DMatrix<f64>,
    a_mat: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = op.n();
    if hess.nrows() != n || a_mat.nrows() != n {
        return Err(Error::Contract(format!("matrices must be {n}x{n}")));
    }
    let d2v = hess - a_mat;
    let (t, w) = gauss_legendre(NODES);
    let mut acc = DMatrix::zeros(n, n);
    for (ti, wi) in t.iter().zip(&w) {
        let s = 0.5 * (ti + 1.0);
        let m = a_mat + &d2v * s;
        let df = op
            .df_matrix(&m)
            .map_err(|e| Error::Domain(format!("inadmissible spectrum at t = {s}: {e}")))?;
        acc += df * (0.5 * wi);
    }
    Ok(acc)
}

/// `sum_ij a_ij D_ij v` against `F(lambda(D^2u)) - F(lambda(A))`.
pub fn mean_value_defect(op: &Operator, hess: &DMatrix<f64>, a_mat: &DMatrix<f64>) -> Result<f64> {
    let a = linearization_from_hessian(op, hess, a_mat)?;
    let d2v = hess - a_mat;
    let lhs = a.component_mul(&d2v).sum();
    let rhs = op.evaluate(&Operator::spectrum(hess))? - op.evaluate(&Operator::spectrum(a_mat))?;
    Ok(lhs - rhs)
}
