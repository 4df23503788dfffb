//! Dense Cholesky factorization that reports the failing leading minor.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Lower-triangular `L` with `L Lᵀ = a`. Only the lower triangle of `a` is
/// read.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(invalid(format!("matrix is {}x{}, expected square", n, a.ncols())));
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { order: j + 1 });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

pub fn is_symmetric(a: &DMatrix<f64>, rel_tol: f64) -> bool {
    let n = a.nrows();
    if a.ncols() != n {
        return false;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= rel_tol * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let l = cholesky(&a).unwrap();
        let back = &l * l.transpose();
        assert!((back - &a).abs().max() < 1e-12);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = cholesky_solve(&l, &b);
        assert!((&a * x - b).abs().max() < 1e-12);
    }

    #[test]
    fn reports_failing_minor() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite { order: 3 })));
        let b = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(matches!(cholesky(&b), Err(Error::NotPositiveDefinite { order: 1 })));
    }
}
