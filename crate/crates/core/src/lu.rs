//! Row-pivoted LU for the small square intersection matrices.
//!
//! Intersection matrices are only ever applied through triangular solves;
//! explicit inverses are formed on request (for conditioning estimates).

use nalgebra::DMatrix;

/// Pivots below `MACHINE_NULL * max|entry|` count as zero.
pub const MACHINE_NULL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct PivotedLu {
    /// Packed factors: unit-lower `L` below the diagonal, `U` on and above.
    lu: DMatrix<f64>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
    sign: f64,
}

/// The factorization hit a null pivot at this elimination step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NullPivot {
    pub step: usize,
}

impl PivotedLu {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, NullPivot> {
        Self::factor_with_threshold(a, MACHINE_NULL)
    }

    pub fn factor_with_threshold(a: &DMatrix<f64>, rel: f64) -> Result<Self, NullPivot> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.nrows();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = rel * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            // first row with the largest magnitude wins ties
            let mut p = k;
            for i in k + 1..n {
                if lu[(i, k)].abs() > lu[(p, k)].abs() {
                    p = i;
                }
            }
            let pivot = lu[(p, k)];
            if pivot.abs() <= floor || pivot == 0.0 {
                return Err(NullPivot { step: k });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn determinant(&self) -> f64 {
        self.sign * (0..self.dim()).map(|i| self.lu[(i, i)]).product::<f64>()
    }

    pub fn pivots(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lu[(i, i)]).collect()
    }

    /// Solves `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        b.copy_from_slice(&y);
    }

    /// Solves `x^T A = b^T` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        // A = P^T L U, so A^T = U^T L^T P.
        let n = self.dim();
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            b[p] = z[i];
        }
    }

    /// `M A^{-1}` for a matrix `M` with `dim()` columns.
    pub fn right_divide(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        let mut row = vec![0.0; self.dim()];
        for i in 0..m.nrows() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = m[(i, j)];
            }
            self.solve_transpose_in_place(&mut row);
            for (j, &v) in row.iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `A^{-1} M` for a matrix `M` with `dim()` rows.
    pub fn left_divide(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for mut col in out.column_iter_mut() {
            let mut v: Vec<f64> = col.iter().copied().collect();
            self.solve_in_place(&mut v);
            for (slot, x) in col.iter_mut().zip(v) {
                *slot = x;
            }
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.left_divide(&DMatrix::identity(self.dim(), self.dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0])
    }

    #[test]
    fn determinant_and_solves() {
        let a = sample();
        let lu = PivotedLu::factor(&a).unwrap();
        assert!((lu.determinant() - a.determinant()).abs() < 1e-12);

        let mut x = vec![8.0, -11.0, -3.0];
        lu.solve_in_place(&mut x);
        for (got, want) in x.iter().zip([2.0, 3.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        let b = vec![1.0, 2.0, 3.0];
        let mut y = b.clone();
        lu.solve_transpose_in_place(&mut y);
        let back = nalgebra::RowDVector::from_row_slice(&y) * &a;
        for (got, want) in back.iter().zip(&b) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = sample();
        let inv = PivotedLu::factor(&a).unwrap().inverse();
        let id = &inv * &a;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn divides_match_inverse() {
        let a = sample();
        let lu = PivotedLu::factor(&a).unwrap();
        let m = DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.0);
        let inv = lu.inverse();
        assert!((lu.right_divide(&m) - &m * &inv).amax() < 1e-12);
        let mt = m.transpose();
        assert!((lu.left_divide(&mt) - &inv * &mt).amax() < 1e-12);
    }

    #[test]
    fn singular_matrix_reports_step() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(PivotedLu::factor(&a).unwrap_err(), NullPivot { step: 1 });
        assert!(PivotedLu::factor(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn empty_matrix_factors() {
        let lu = PivotedLu::factor(&DMatrix::zeros(0, 0)).unwrap();
        assert_eq!(lu.determinant(), 1.0);
    }
}
