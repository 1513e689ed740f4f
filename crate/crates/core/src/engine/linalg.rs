//! Dense LU with partial pivoting for the small MNA systems.

use thiserror::Error;

use crate::scalar::Scalar;

/// Pivots smaller than this are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("singular matrix at row {row}")]
pub struct SingularMatrix {
    /// Original row index (before pivoting) whose column had no usable pivot.
    pub row: usize,
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = T::zero());
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `a·x = rhs`, consuming a working copy of the matrix.
pub fn solve_linear<T: Scalar>(a: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>, SingularMatrix> {
    let n = a.dim();
    assert_eq!(rhs.len(), n, "rhs length must match matrix dimension");
    let mut lu = a.data.clone();
    let mut x = rhs.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let floor = T::lit(PIVOT_FLOOR);

    for k in 0..n {
        let (p, pmag) = (k..n)
            .map(|i| (i, lu[i * n + k].abs()))
            .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmag >= floor) {
            return Err(SingularMatrix { row: perm[k] });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            if f == T::zero() {
                continue;
            }
            lu[i * n + k] = f;
            for j in k + 1..n {
                lu[i * n + j] = lu[i * n + j] - f * lu[k * n + j];
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s = s - lu[k * n + j] * x[j];
        }
        x[k] = s / lu[k * n + k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.5, -2.0, 3.25];
        assert_eq!(solve_linear(&DenseMatrix::identity(3), &rhs).unwrap(), rhs);
    }

    #[test]
    fn two_by_two_known_inverse() {
        // [[4, 7], [2, 6]]^-1 = [[0.6, -0.7], [-0.2, 0.4]]
        let a: DenseMatrix<f64> = DenseMatrix::from_rows(&[vec![4.0, 7.0], vec![2.0, 6.0]]);
        let x = solve_linear(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - (0.6 - 1.4)).abs() < 1e-12);
        assert!((x[1] - (-0.2 + 0.8)).abs() < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(solve_linear(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_linear(&a, &[1.0, 1.0]).is_err());
        assert_eq!(solve_linear(&DenseMatrix::<f64>::zeros(2), &[0.0, 0.0]), Err(SingularMatrix { row: 0 }));
    }

    #[test]
    fn works_in_f32() {
        let a = DenseMatrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 3.0]]);
        let x = solve_linear(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-6 && (x[1] - 1.4).abs() < 1e-6);
    }
}
