//! Dense complex linear-algebra primitives.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; the diagonal IRS profile is
//! always carried as a length-M vector. Tolerances are relative to the
//! Frobenius norm of the input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance used for Hermitian and PSD membership tests.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Non-negative values in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("spectrum entry {v} is not a finite non-negative value")));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("spectrum is not in descending order"));
        }
        Ok(Spectrum(values))
    }

    /// Sorts descending and clamps round-off negatives to zero.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 || !v.is_finite() {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Spectrum(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Spectrum::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.0
    }
}

impl std::ops::Deref for Spectrum {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Column-wise Khatri-Rao product: column `j` is `kron(a_j, b_j)`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::invalid(format!(
            "khatri_rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    Ok(CMatrix::from_fn(ra * rb, a.ncols(), |row, j| {
        a[(row / rb, j)] * b[(row % rb, j)]
    }))
}

/// Column-stacking vectorization.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Diagonal of a square matrix; the non-zero part of a diagonal IRS profile.
pub fn vec_diagonal(m: &CMatrix) -> Result<CVector> {
    if !m.is_square() {
        return Err(Error::invalid("diagonal vectorization needs a square matrix"));
    }
    Ok(m.diagonal())
}

/// `H_irs_to_rx · diag(theta) · H_tx_to_irs` without forming the M×M diagonal.
pub fn cascade(h_irs_to_rx: &CMatrix, theta: &CVector, h_tx_to_irs: &CMatrix) -> Result<CMatrix> {
    check_cascade_dims(h_irs_to_rx, theta, h_tx_to_irs)?;
    let mut scaled = h_irs_to_rx.clone();
    for (mut col, t) in scaled.column_iter_mut().zip(theta.iter()) {
        col *= *t;
    }
    Ok(scaled * h_tx_to_irs)
}

/// Linear map taking `theta` to `vec(cascade)`: `khatri_rao(H_tx_to_irsᵀ, H_irs_to_rx)`.
///
/// Rows are indexed so that the result matches column-stacked [`vec`].
pub fn cascade_map(h_tx_to_irs: &CMatrix, h_irs_to_rx: &CMatrix) -> Result<CMatrix> {
    if h_tx_to_irs.nrows() != h_irs_to_rx.ncols() {
        return Err(Error::invalid(format!(
            "IRS size mismatch: tx->IRS has {} rows, IRS->rx has {} columns",
            h_tx_to_irs.nrows(),
            h_irs_to_rx.ncols()
        )));
    }
    khatri_rao(&h_tx_to_irs.transpose(), h_irs_to_rx)
}

fn check_cascade_dims(h_irs_to_rx: &CMatrix, theta: &CVector, h_tx_to_irs: &CMatrix) -> Result<()> {
    let m = theta.len();
    if h_irs_to_rx.ncols() != m || h_tx_to_irs.nrows() != m {
        return Err(Error::invalid(format!(
            "cascade expects IRS dimension {m}, got IRS->rx {}x{} and tx->IRS {}x{}",
            h_irs_to_rx.nrows(),
            h_irs_to_rx.ncols(),
            h_tx_to_irs.nrows(),
            h_tx_to_irs.ncols()
        )));
    }
    Ok(())
}

/// `|‖H̄ + cascade‖_F² − ‖vec(H̄) + G·θ‖₂²|`, evaluating both sides independently.
pub fn cascade_vectorization_residual(
    h_bar: &CMatrix,
    h_tx_to_irs: &CMatrix,
    h_irs_to_rx: &CMatrix,
    theta: &CVector,
) -> Result<f64> {
    let c = cascade(h_irs_to_rx, theta, h_tx_to_irs)?;
    if c.shape() != h_bar.shape() {
        return Err(Error::invalid(format!(
            "residual channel is {:?} but cascade is {:?}",
            h_bar.shape(),
            c.shape()
        )));
    }
    let lhs = (h_bar + &c).norm_squared();
    let g = cascade_map(h_tx_to_irs, h_irs_to_rx)?;
    let rhs = (vec(h_bar) + g * theta).norm_squared();
    Ok((lhs - rhs).abs())
}

pub fn is_hermitian(m: &CMatrix, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.norm();
    (m - m.adjoint()).norm() <= rel_tol * scale.max(f64::MIN_POSITIVE)
}

fn require_hermitian(m: &CMatrix) -> Result<()> {
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if !is_hermitian(m, HERMITIAN_TOL) {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    Ok(())
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, values descending.
///
/// Ties keep the order produced by the decomposition.
pub fn hermitian_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    require_hermitian(m)?;
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Real eigenvalues of a Hermitian matrix in descending order (may be negative).
pub fn eig_descending(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigh(m).map(|(v, _)| v)
}

/// Spectrum of a PSD matrix; rejects eigenvalues below `-1e-9·‖m‖_F`.
pub fn psd_spectrum(m: &CMatrix) -> Result<Spectrum> {
    let values = eig_descending(m)?;
    check_psd_values(&values, m.norm())?;
    Ok(Spectrum::from_unsorted(values))
}

fn check_psd_values(values: &[f64], scale: f64) -> Result<()> {
    if let Some(&min) = values.last() {
        if min < -HERMITIAN_TOL * scale {
            return Err(Error::invalid(format!("matrix is not positive semidefinite (eigenvalue {min:e})")));
        }
    }
    Ok(())
}

/// Validates that `m` is Hermitian positive semidefinite.
pub fn require_psd(m: &CMatrix) -> Result<()> {
    psd_spectrum(m).map(|_| ())
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Squared singular values, i.e. the non-trivial eigenvalues of `m·mᴴ`.
pub fn gram_spectrum(m: &CMatrix) -> Spectrum {
    Spectrum::from_unsorted(singular_values_desc(m).into_iter().map(|s| s * s).collect())
}

/// `log₂ det(m)` for a Hermitian positive definite matrix, via Cholesky.
pub fn log2_det_hpd(m: &CMatrix) -> Result<f64> {
    require_hermitian(m)?;
    let chol = hermitian_part(m)
        .cholesky()
        .ok_or_else(|| Error::invalid("matrix is not positive definite"))?;
    let l = chol.l_dirty();
    Ok((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Construct a Hermitian matrix `V·diag(values)·Vᴴ`.
pub fn from_eigen(vectors: &CMatrix, values: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(values) {
        col *= Complex64::new(v, 0.0);
    }
    let out = scaled * vectors.adjoint();
    hermitian_part(&out)
}

/// Real diagonal matrix as a complex matrix.
pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// Real-valued matrix from row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols, "row-major data length must equal rows*cols");
    CMatrix::from_fn(rows, cols, |r, c| Complex64::new(data[r * cols + c], 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn khatri_rao_of_identities() {
        let i2 = CMatrix::identity(2, 2);
        let kr = khatri_rao(&i2, &i2).unwrap();
        assert_eq!(kr.shape(), (4, 2));
        let col0: Vec<f64> = kr.column(0).iter().map(|z| z.re).collect();
        let col1: Vec<f64> = kr.column(1).iter().map(|z| z.re).collect();
        assert_eq!(col0, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(col1, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn khatri_rao_small_integers() {
        let a = real_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = real_matrix(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let kr = khatri_rao(&a, &b).unwrap();
        let col0: Vec<f64> = kr.column(0).iter().map(|z| z.re).collect();
        let col1: Vec<f64> = kr.column(1).iter().map(|z| z.re).collect();
        assert_eq!(col0, vec![5.0, 7.0, 15.0, 21.0]);
        assert_eq!(col1, vec![12.0, 16.0, 24.0, 32.0]);
    }

    #[test]
    fn khatri_rao_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 3, 4);
        let b = random_matrix(&mut rng, 2, 4);
        let kr = khatri_rao(&a, &b).unwrap();
        for i in 0..3 {
            for k in 0..2 {
                for j in 0..4 {
                    let expect = a[(i, j)] * b[(k, j)];
                    assert!((kr[(i * 2 + k, j)] - expect).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn khatri_rao_rejects_column_mismatch() {
        let a = CMatrix::zeros(2, 3);
        let b = CMatrix::zeros(2, 2);
        assert!(matches!(khatri_rao(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn vec_stacks_columns() {
        let m = real_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v: Vec<f64> = vec(&m).iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert!(vec(&CMatrix::zeros(3, 2)).iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn diagonal_path_returns_only_diagonal() {
        let thetas = [c(0.5), Complex64::new(0.0, 1.0), c(-1.0)];
        let m = CMatrix::from_diagonal(&CVector::from_column_slice(&thetas));
        let d = vec_diagonal(&m).unwrap();
        assert_eq!(d.as_slice(), &thetas);
    }

    #[test]
    fn residual_zero_inputs() {
        let r = cascade_vectorization_residual(
            &CMatrix::zeros(3, 2),
            &CMatrix::zeros(4, 2),
            &CMatrix::zeros(3, 4),
            &CVector::zeros(4),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn residual_random_and_zero_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h_bar = random_matrix(&mut rng, 3, 2);
        let tx = random_matrix(&mut rng, 4, 2);
        let rx = random_matrix(&mut rng, 3, 4);
        let theta = CVector::from_fn(4, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)));
        assert!(cascade_vectorization_residual(&h_bar, &tx, &rx, &theta).unwrap() <= 1e-10);
        assert!(cascade_vectorization_residual(&h_bar, &tx, &rx, &CVector::zeros(4)).unwrap() <= 1e-12);
    }

    #[test]
    fn residual_rejects_mismatch() {
        let err = cascade_vectorization_residual(
            &CMatrix::zeros(3, 2),
            &CMatrix::zeros(4, 2),
            &CMatrix::zeros(3, 5),
            &CVector::zeros(4),
        );
        assert!(err.is_err());
    }

    #[test]
    fn eig_descending_simple() {
        let d = real_diag(&[1.0, 3.0, 2.0]);
        assert_eq!(eig_descending(&d).unwrap(), vec![3.0, 2.0, 1.0]);
        let i4 = CMatrix::identity(4, 4);
        assert!(eig_descending(&i4).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = real_matrix(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_descending(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn psd_spectrum_rejects_negative() {
        let m = real_diag(&[1.0, -0.5]);
        assert!(psd_spectrum(&m).is_err());
        assert_eq!(psd_spectrum(&real_diag(&[0.0, 2.0])).unwrap().as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn log_det_matches_diagonal() {
        let m = real_diag(&[2.0, 4.0, 0.5]);
        assert!((log2_det_hpd(&m).unwrap() - 2.0).abs() < 1e-14);
        assert!(log2_det_hpd(&real_diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(vec![3.0, 1.0, 0.0]).is_ok());
        assert!(Spectrum::new(vec![1.0, 3.0]).is_err());
        assert!(Spectrum::new(vec![1.0, -1.0]).is_err());
        assert_eq!(Spectrum::from_unsorted(vec![1.0, -1e-18, 4.0]).as_slice(), &[4.0, 1.0, 0.0]);
    }
}
