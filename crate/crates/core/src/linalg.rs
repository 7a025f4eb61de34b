//! Small dense complex linear algebra used by the precoders and solvers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The only kernel written here
//! is a Gaussian elimination with partial pivoting; everything else is plain
//! nalgebra arithmetic.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FclaError, Result};

pub type CMat = DMatrix<Complex64>;

/// Relative pivot tolerance: a pivot smaller than this times the largest
/// entry magnitude of the system matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Sum of squared moduli of all entries.
pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Solves `A X = B` for square `A` by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FclaError::DimensionMismatch(format!(
            "system matrix is {}x{}, expected square",
            n,
            a.ncols()
        )));
    }
    if b.nrows() != n {
        return Err(FclaError::DimensionMismatch(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            n
        )));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let tolerance = PIVOT_TOLERANCE * scale;
    if n == 0 {
        return Ok(b.clone());
    }
    if scale == 0.0 {
        return Err(FclaError::Singular {
            pivot: 0.0,
            tolerance,
        });
    }

    let mut lu = a.clone();
    let mut x = b.clone();
    let m = x.ncols();

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, lu[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_mag < tolerance || pivot_mag == 0.0 {
            return Err(FclaError::Singular {
                pivot: pivot_mag,
                tolerance,
            });
        }
        if pivot_row != col {
            lu.swap_rows(pivot_row, col);
            x.swap_rows(pivot_row, col);
        }
        let inv_pivot = lu[(col, col)].inv();
        for r in (col + 1)..n {
            let factor = lu[(r, col)] * inv_pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= factor * v;
            }
            for c in 0..m {
                let v = x[(col, c)];
                x[(r, c)] -= factor * v;
            }
        }
    }

    // back substitution
    for col in 0..m {
        for r in (0..n).rev() {
            let mut acc = x[(r, col)];
            for c in (r + 1)..n {
                acc -= lu[(r, c)] * x[(c, col)];
            }
            x[(r, col)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

/// Gathers the listed columns of `m` in the given order.
pub fn gather_columns(m: &CMat, columns: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), columns.len(), |r, c| m[(r, columns[c])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_identity() {
        let a = identity(3);
        let b = CMat::from_fn(3, 2, |r, c_| c(r as f64, c_ as f64));
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn needs_pivoting() {
        // zero in the leading position forces a row swap
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 1.0), c(2.0, 0.0), c(0.0, 3.0)]);
        let b = CMat::from_row_slice(2, 1, &[c(1.0, 0.0), c(0.0, 1.0)]);
        let x = solve(&a, &b).unwrap();
        let residual = &a * &x - &b;
        assert!(frobenius_sq(&residual) < 1e-28);
    }

    #[test]
    fn matches_nalgebra_lu() {
        let a = CMat::from_fn(4, 4, |r, k| c((r * 7 + k * 3) as f64 % 5.0 + if r == k { 4.0 } else { 0.0 }, (r + 2 * k) as f64 * 0.3));
        let b = CMat::from_fn(4, 3, |r, k| c(r as f64 - k as f64, 0.5 * k as f64));
        let ours = solve(&a, &b).unwrap();
        let theirs = a.clone().lu().solve(&b).unwrap();
        assert!(frobenius_sq(&(ours - theirs)) < 1e-24);
    }

    #[test]
    fn rejects_singular() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let b = identity(2);
        assert!(matches!(solve(&a, &b), Err(FclaError::Singular { .. })));
        assert!(matches!(solve(&CMat::zeros(2, 2), &b), Err(FclaError::Singular { .. })));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(solve(&CMat::zeros(2, 3), &CMat::zeros(2, 1)).is_err());
        assert!(solve(&identity(2), &CMat::zeros(3, 1)).is_err());
    }
}
