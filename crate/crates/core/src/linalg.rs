//! Dense Hermitian eigendecomposition and functional calculus.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance on `max |M - M*|` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (columns).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn hermitian_residual(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).camax()
}

pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::contract("matrix is not square"));
    }
    let res = hermitian_residual(m);
    if res > HERMITIAN_TOL {
        return Err(Error::contract(format!(
            "matrix is not Hermitian (residual {res:e})"
        )));
    }
    let n = m.nrows();
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if sym.iter().all(|z| z.im == 0.0) {
        let re = sym.map(|z| z.re);
        let e = re.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let e = sym.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    Ok(HermitianEigen {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, n, |r, c| vectors[(r, idx[c])]),
    })
}

impl HermitianEigen {
    /// `f(M) = V diag(f(λ)) V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let d = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| Complex64::new(f(x), 0.0)),
        );
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * d[c]
        });
        scaled * self.vectors.adjoint()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }
}
