//! Dense LU without pivoting for M-matrices.
//!
//! For a nonsingular M-matrix every pivot of Gaussian elimination is
//! positive and the factorisation is componentwise stable, so pivoting is
//! unnecessary; a non-positive pivot signals a broken assembly.

use nalgebra::{DMatrix, DVector};

use crate::error::{FracError, Result};

#[derive(Debug, Clone)]
pub struct MLu {
    lu: DMatrix<f64>,
}

impl MLu {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        for k in 0..n {
            let pivot = lu[(k, k)];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(FracError::SingularSolve { row: k, value: pivot });
            }
            for i in k + 1..n {
                lu[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let akj = lu[(k, j)];
                if akj == 0.0 {
                    continue;
                }
                for i in k + 1..n {
                    let l = lu[(i, k)];
                    lu[(i, j)] -= l * akj;
                }
            }
        }
        Ok(Self { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(FracError::Domain(format!("right-hand side of length {} for {n} unknowns", b.len())));
        }
        let mut x = b.to_vec();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..n {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in 0..j {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(FracError::SingularSolve { row, value: x[row] });
        }
        Ok(x)
    }

    pub fn solve_vector(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.solve(b.as_slice())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_discrete_laplacian() {
        let n = 50;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let lu = MLu::new(&a).unwrap();
        let b = vec![1.0; n];
        let x = lu.solve(&b).unwrap();
        let r = &a * DVector::from_vec(x.clone()) - DVector::from_vec(b);
        assert!(r.amax() < 1e-10);
        assert!(x.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_non_positive_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(MLu::new(&a), Err(FracError::SingularSolve { row: 1, .. })));
    }
}
