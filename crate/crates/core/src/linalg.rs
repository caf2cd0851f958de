//! Small dense helpers shared by the numeric modules.

use nalgebra::{DMatrix, DVector};

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Rescales `v` onto the sphere of the given radius; `None` for the zero vector.
pub(crate) fn to_sphere(v: &[f64], radius: f64) -> Option<Vec<f64>> {
    let r = norm(v);
    if !(r > 0.0) || !r.is_finite() {
        return None;
    }
    Some(v.iter().map(|a| a * radius / r).collect())
}

/// Scales each row to unit length. `None` if some row vanishes.
pub(crate) fn row_normalized(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let r = row.norm();
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        row /= r;
    }
    Some(out)
}

/// Smallest of the `rows` singular values of a wide matrix; 0 when the matrix is tall.
pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.nrows() > m.ncols() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Minimum-norm least-squares solution of `a·x = b`.
pub(crate) fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Some(DVector::zeros(a.ncols()));
    }
    svd.solve(b, smax * 1e-12).ok()
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
