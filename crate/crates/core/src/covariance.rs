//! Commuting covariance construction and majorization predicates.
//!
//! Given a covariance `Q` and a channel `H`, [`commuting_covariance`] builds
//! `Q′` sharing eigenvectors with `HᴴH` such that `H Q′ Hᴴ` and `H Q Hᴴ` have
//! the same spectrum while `Tr(Q′) ≤ Tr(Q)`. The trace inequality follows from
//! `λ(Q′)` being multiplicatively majorized by `λ(Q)`, which
//! [`majorization_check`] certifies numerically.

use serde::{Deserialize, Serialize};

use crate::tensor_ops::{self, from_eigen, hermitian_eigh, CMatrix};
use crate::{Error, Result};

/// Eigenvalues of `HᴴH` at or below this fraction of the largest are zero.
const NULL_TOL: f64 = 1e-12;

/// Builds the commuting covariance `Q′` for `(q, h)`.
pub fn commuting_covariance(q: &CMatrix, h: &CMatrix) -> Result<CMatrix> {
    if q.nrows() != h.ncols() {
        return Err(Error::invalid(format!(
            "covariance is {}x{} but the channel has {} columns",
            q.nrows(),
            q.ncols(),
            h.ncols()
        )));
    }
    tensor_ops::require_psd(q)?;
    let gram = h.adjoint() * h;
    let (mu, vectors) = hermitian_eigh(&(gram.clone() + gram.adjoint()).scale(0.5))?;
    let composite = tensor_ops::eig_descending(&(h * q * h.adjoint()))?;
    let mu_max = mu.first().copied().unwrap_or(0.0);
    let values: Vec<f64> = mu
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if m > NULL_TOL * mu_max && i < composite.len() {
                (composite[i] / m).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(from_eigen(&vectors, &values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    /// Every descending partial product of `a` is at most that of `b`.
    pub multiplicative: bool,
    /// `multiplicative` and the full products agree.
    pub multiplicative_equal_total: bool,
    /// Every descending partial sum of `a` is at most that of `b`.
    pub weak_additive: bool,
    /// `weak_additive` and the totals agree.
    pub additive: bool,
    pub partial_sums_lhs: Vec<f64>,
    pub partial_sums_rhs: Vec<f64>,
}

fn descending_with_zeros(v: &[f64], scale: f64) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|&x| if x.abs() <= NULL_TOL * scale { 0.0 } else { x }).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn prefix(v: &[f64], init: f64, op: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    v.iter()
        .scan(init, |acc, &x| {
            *acc = op(*acc, x);
            Some(*acc)
        })
        .collect()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(a.abs()).max(b.abs())
}

/// Majorization relations of `a` with respect to `b` (is `a ≺ b`?).
///
/// Entries with magnitude below `1e-12` of the largest entry are treated as
/// zero before the comparison, so round-off in numerically singular spectra
/// does not break the product chain.
pub fn majorization_check(a: &[f64], b: &[f64]) -> Result<MajorizationReport> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("sequences have lengths {} and {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("majorization inputs must be finite"));
    }
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    let a = descending_with_zeros(a, scale);
    let b = descending_with_zeros(b, scale);
    let sa = prefix(&a, 0.0, |acc, x| acc + x);
    let sb = prefix(&b, 0.0, |acc, x| acc + x);
    let pa = prefix(&a, 1.0, |acc, x| acc * x);
    let pb = prefix(&b, 1.0, |acc, x| acc * x);
    let weak_additive = sa.iter().zip(&sb).all(|(x, y)| *x <= *y || close(*x, *y, scale));
    let sums_equal = match (sa.last(), sb.last()) {
        (Some(x), Some(y)) => close(*x, *y, scale),
        _ => true,
    };
    let multiplicative = pa.iter().zip(&pb).all(|(x, y)| *x <= *y || close(*x, *y, 0.0));
    let products_equal = match (pa.last(), pb.last()) {
        (Some(x), Some(y)) => close(*x, *y, 0.0),
        _ => true,
    };
    Ok(MajorizationReport {
        multiplicative,
        multiplicative_equal_total: multiplicative && products_equal,
        weak_additive,
        additive: weak_additive && sums_equal,
        partial_sums_lhs: sa,
        partial_sums_rhs: sb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_ops::{eig_descending, real_diag, real_matrix};

    fn trace(m: &CMatrix) -> f64 {
        m.trace().re
    }

    #[test]
    fn classic_pair() {
        let r = majorization_check(&[2.0, 2.0], &[3.0, 1.0]).unwrap();
        assert!(r.additive && r.weak_additive);
        assert_eq!(r.partial_sums_lhs, vec![2.0, 4.0]);
        assert_eq!(r.partial_sums_rhs, vec![3.0, 4.0]);
        let r = majorization_check(&[3.0, 1.0], &[2.0, 2.0]).unwrap();
        assert!(!r.weak_additive);
    }

    #[test]
    fn equal_sequences() {
        let r = majorization_check(&[1.5, 0.5, 4.0], &[4.0, 1.5, 0.5]).unwrap();
        assert!(r.additive && r.multiplicative_equal_total);
        assert!(majorization_check(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn aligned_case_is_identity_like() {
        let q = real_diag(&[2.0, 1.0, 0.5]);
        let h = real_diag(&[3.0, 2.0, 1.0]);
        let qp = commuting_covariance(&q, &h).unwrap();
        assert!((&qp - &q).norm() < 1e-12);
        assert!((trace(&qp) - trace(&q)).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_diagonalizes() {
        let q = real_matrix(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let qp = commuting_covariance(&q, &CMatrix::identity(2, 2)).unwrap();
        let lq = eig_descending(&q).unwrap();
        let lqp = eig_descending(&qp).unwrap();
        for (a, b) in lq.iter().zip(&lqp) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((trace(&qp) - trace(&q)).abs() < 1e-12);
    }

    #[test]
    fn non_commuting_trace_drops() {
        let q = real_matrix(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let h = real_diag(&[2.0, 0.5]);
        let qp = commuting_covariance(&q, &h).unwrap();
        assert!(trace(&qp) < trace(&q) - 1e-6);
        let a = eig_descending(&(&h * &q * h.adjoint())).unwrap();
        let b = eig_descending(&(&h * &qp * h.adjoint())).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_psd() {
        assert!(commuting_covariance(&real_diag(&[1.0, -1.0]), &CMatrix::identity(2, 2)).is_err());
    }
}
