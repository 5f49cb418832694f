//! Small dense matrices and LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Structural("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Structural(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        }))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |a_ij - a_ji|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    /// Whether a Cholesky factorization succeeds (symmetric positive definite).
    pub fn is_positive_definite(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let d = self[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
            if d.is_nan() || d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let s = self[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                l[(i, j)] = s / d;
            }
        }
        true
    }

    /// Numerical rank by Gaussian elimination with full pivoting.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let mut a = self.clone();
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0;
        }
        let tol = rel_tol * scale;
        let (r, c) = a.shape();
        let mut rank = 0;
        let mut col_used = vec![false; c];
        let mut row_used = vec![false; r];
        loop {
            let mut best = (0.0, 0, 0);
            for i in (0..r).filter(|&i| !row_used[i]) {
                for j in (0..c).filter(|&j| !col_used[j]) {
                    if a[(i, j)].abs() > best.0 {
                        best = (a[(i, j)].abs(), i, j);
                    }
                }
            }
            if best.0 <= tol {
                return rank;
            }
            let (_, p, q) = best;
            row_used[p] = true;
            col_used[q] = true;
            rank += 1;
            for i in (0..r).filter(|&i| !row_used[i]) {
                let f = a[(i, q)] / a[(p, q)];
                for j in 0..c {
                    let v = a[(p, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit lower `L`, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    a_norm_inf: f64,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let (n, c) = a.shape();
        if n != c {
            return Err(Error::Structural(format!("LU needs a square matrix, got {n}x{c}")));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Structural(format!("singular matrix (pivot {k})")));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            a_norm_inf: a.norm_inf(),
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }

    /// `‖A‖∞ ‖A⁻¹‖∞` from an explicit inverse.
    pub fn condition_inf(&self) -> f64 {
        self.a_norm_inf * self.inverse().norm_inf()
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_two_by_two() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let z = m.lu().unwrap().solve(&[0.0, 1.0]);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![4.0, -3.0, 8.0]]).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = m.matvec(&x);
        let got = m.lu().unwrap().solve(&b);
        assert!(norm_inf(&got.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-13);
    }

    #[test]
    fn singular_is_structural() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.lu(), Err(Error::Structural(_))));
        assert!(Matrix::zeros(2, 3).lu().is_err());
    }

    #[test]
    fn inverse_and_condition() {
        let m = Matrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let lu = m.lu().unwrap();
        let prod = m.matmul(&lu.inverse()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-14);
            }
        }
        // ‖A‖∞ = 5, A⁻¹ = [[0.3,-0.1],[-0.2,0.4]] with ‖·‖∞ = 0.6
        assert!((lu.condition_inf() - 3.0).abs() < 1e-13);
        assert!((Matrix::identity(4).lu().unwrap().condition_inf() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_and_definiteness() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(a.rank(1e-12), 1);
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-3]]).unwrap();
        assert_eq!(a.rank(1e-12), 2);
        assert_eq!(Matrix::zeros(2, 2).rank(1e-12), 0);
        let spd = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(spd.is_positive_definite());
        let indef = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(!indef.is_positive_definite());
        assert_eq!(spd.asymmetry(), 0.0);
        assert!(a.transpose().shape() == (2, 2));
    }
}
