//! Small numerical helpers shared across modules.

use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dynamic copy of a statically sized 2x2 complex matrix.
pub fn dmat2(m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Haar-random single-qubit unitary: QR of a complex Gaussian matrix with the
/// R diagonal phases divided out.
pub fn haar_unitary_2x2<R: Rng>(rng: &mut R) -> Matrix2<Complex64> {
    let mut g = Matrix2::zeros();
    for v in g.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(re, im) / Complex64::new(std::f64::consts::SQRT_2, 0.0);
    }
    let qr = dmat2(&g).qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = Matrix2::zeros();
    for col in 0..2 {
        let d = r[(col, col)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for row in 0..2 {
            u[(row, col)] = q[(row, col)] * phase;
        }
    }
    u
}

/// Smallest eigenvalue of a Hermitian matrix, via the real symmetric
/// embedding [[A, -B], [B, A]] of H = A + iB (eigenvalues appear doubled).
pub fn min_eigenvalue_hermitian(h: &DMatrix<Complex64>) -> Result<f64> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Dimension("eigenvalue of a non-square matrix".into()));
    }
    let herm_err = (h - h.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if herm_err > 1e-9 {
        return Err(Error::Numerical(format!("matrix is not Hermitian (residual {herm_err})")));
    }
    let mut embed = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            embed[(i, j)] = v.re;
            embed[(n + i, n + j)] = v.re;
            embed[(i, n + j)] = -v.im;
            embed[(n + i, j)] = v.im;
        }
    }
    let eigen = embed.symmetric_eigen();
    Ok(eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
