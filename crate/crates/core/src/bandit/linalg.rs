//! Dense linear algebra for small matrices: the bandit works in action
//! and context embedding dimensions, which stay modest, so plain
//! row-major `Vec<Vec<f64>>` with LU and Gram-Schmidt covers everything.

use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `m` rows times `v`.
pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut out = vec![vec![0.0; rows]; cols];
    for (i, row) in m.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            out[j][i] = x;
        }
    }
    out
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let inner = if n > 0 { a[0].len() } else { 0 };
    let m = if b.is_empty() { 0 } else { b[0].len() };
    debug_assert_eq!(inner, b.len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|row| row.len() != n) {
            return Err(Error::Numerical("LU needs a square matrix".into()));
        }
        let mut lu: Vec<Vec<f64>> = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| lu[i][col].abs().total_cmp(&lu[j][col].abs()))
                .unwrap();
            if lu[pivot_row][col].abs() < 1e-304 {
                return Err(Error::Numerical("singular matrix in LU factorization".into()));
            }
            if pivot_row != col {
                lu.swap(pivot_row, col);
                perm.swap(pivot_row, col);
                sign = -sign;
            }
            let pivot = lu[col][col];
            for row in col + 1..n {
                let factor = lu[row][col] / pivot;
                lu[row][col] = factor;
                for k in col + 1..n {
                    let upper = lu[col][k];
                    lu[row][k] -= factor * upper;
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn det(&self) -> f64 {
        let mut d = self.sign;
        for i in 0..self.lu.len() {
            d *= self.lu[i][i];
        }
        d
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.len();
        if b.len() != n {
            return Err(Error::Dimension { expected: n, got: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let f = self.lu[i][j] * x[j];
                x[i] -= f;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let f = self.lu[i][j] * x[j];
                x[i] -= f;
            }
            x[i] /= self.lu[i][i];
        }
        Ok(x)
    }
}

/// Solves `a x = b` for square `a`.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

pub fn det(a: &[Vec<f64>]) -> Result<f64> {
    Ok(Lu::factor(a)?.det())
}

/// Modified Gram-Schmidt over a set of column vectors, in place. Columns
/// that fall below `tol` after projection are removed. Returns the rank
/// (the number of columns kept).
pub fn gram_schmidt(cols: &mut Vec<Vec<f64>>, tol: f64) -> usize {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for col in cols.drain(..) {
        let mut v = col;
        for q in &kept {
            let proj = dot(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let n = norm(&v);
        if n > tol {
            for vi in &mut v {
                *vi /= n;
            }
            kept.push(v);
        }
    }
    *cols = kept;
    cols.len()
}

/// Residual of `v` after removing its projection onto an orthonormal set.
pub fn residual(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for q in basis {
        let proj = dot(q, &r);
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= proj * qi;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_known_system() {
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        // Solution of the classic system: x = 2, y = 3, z = -1.
        let x = solve(&a, &[8.0, -11.0, -3.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!((x[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_tracks_pivoting_sign() {
        let d = det(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert!((d - 6.0).abs() < 1e-12);
        // Swapped rows flip the sign.
        let d = det(&[vec![0.0, 3.0], vec![2.0, 0.0]]).unwrap();
        assert!((d + 6.0).abs() < 1e-12);
        let d = det(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((d + 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_an_error() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(Lu::factor(&a).is_err());
    }

    #[test]
    fn gram_schmidt_orthonormalizes_and_ranks() {
        let mut cols = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![2.0, 1.0, 0.0], // dependent on the first two
        ];
        let rank = gram_schmidt(&mut cols, 1e-9);
        assert_eq!(rank, 2);
        for i in 0..rank {
            assert!((norm(&cols[i]) - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(dot(&cols[i], &cols[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_removes_span_component() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let r = residual(&basis, &[3.0, 4.0, 5.0]);
        assert!((r[0]).abs() < 1e-12);
        assert!((r[1]).abs() < 1e-12);
        assert!((r[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn matmul_and_transpose_agree_with_hand_values() {
        let a = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let b = vec![vec![5.0, 6.0], vec![7.0, 8.0]];
        let c = mat_mul(&a, &b);
        assert_eq!(c, vec![vec![19.0, 22.0], vec![43.0, 50.0]]);
        let t = transpose(&a);
        assert_eq!(t, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(matvec(&a, &[1.0, 1.0]), vec![3.0, 7.0]);
    }
}
