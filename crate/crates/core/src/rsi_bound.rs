//! Worst-case residual self-interference after the IRS's best response.
//!
//! The IRS profile is restricted to the inscribed ball `‖θ‖₂ ≤ 1`. The
//! adversary picks `vec(H̄_r)` on the sphere of radius `√T_r` and the IRS
//! answers with `G·θ`, where `G` is the Khatri-Rao cascade map. When `G`
//! spans the whole `K_r·K_t`-dimensional space, the worst residual is
//! `(√T_r − σ_min(G))²`, and zero once the IRS ball covers the adversary ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{random_unit_vector, trial_rng, IrsMode, TBounds};
use crate::tensor_ops::{cascade_map, CMatrix, CVector};
use crate::{Error, Result};

/// Singular values at or below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsiBoundResult {
    pub t_prime: f64,
    /// Smallest singular value of the cascade map over the RSI space (zero
    /// when the map has fewer columns than the space has dimensions).
    pub sigma_min: f64,
    pub rank_deficient: bool,
    pub clamped: bool,
}

fn check_t(t_r: f64) -> Result<()> {
    if !(t_r >= 0.0) || !t_r.is_finite() {
        return Err(Error::invalid(format!("uncertainty bound must be non-negative, got {t_r}")));
    }
    Ok(())
}

/// Closed-form upper bound on the worst-case residual interference power.
pub fn worst_case_rsi_bound(t_r: f64, h_tx_to_irs: &CMatrix, h_irs_to_rx: &CMatrix) -> Result<RsiBoundResult> {
    check_t(t_r)?;
    let g = cascade_map(h_tx_to_irs, h_irs_to_rx)?;
    let dim = g.nrows();
    let m = g.ncols();
    if m < dim || m == 0 {
        return Ok(RsiBoundResult { t_prime: t_r, sigma_min: 0.0, rank_deficient: true, clamped: false });
    }
    let s = crate::tensor_ops::singular_values_desc(&g);
    let s_max = s.first().copied().unwrap_or(0.0);
    let s_min = s.last().copied().unwrap_or(0.0);
    if s_min <= RANK_TOL * s_max {
        return Ok(RsiBoundResult { t_prime: t_r, sigma_min: s_min, rank_deficient: true, clamped: false });
    }
    let gap = t_r.sqrt() - s_min;
    if gap <= 0.0 {
        Ok(RsiBoundResult { t_prime: 0.0, sigma_min: s_min, rank_deficient: false, clamped: true })
    } else {
        Ok(RsiBoundResult { t_prime: gap * gap, sigma_min: s_min, rank_deficient: false, clamped: false })
    }
}

/// Thin SVD of the cascade map, reused across adversary samples.
struct BallProjector {
    u: CMatrix,
    s: Vec<f64>,
}

impl BallProjector {
    fn new(g: &CMatrix) -> Self {
        if g.ncols() == 0 || g.nrows() == 0 {
            return BallProjector { u: CMatrix::zeros(g.nrows(), 0), s: Vec::new() };
        }
        let svd = g.clone().svd(true, false);
        let s_all: Vec<f64> = svd.singular_values.iter().copied().collect();
        let s_max = s_all.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..s_all.len()).filter(|&k| s_all[k] > RANK_TOL * s_max).collect();
        let u_full = svd.u.expect("left singular vectors requested");
        let u = CMatrix::from_fn(g.nrows(), keep.len(), |r, c| u_full[(r, keep[c])]);
        BallProjector { u, s: keep.iter().map(|&k| s_all[k]).collect() }
    }

    /// `min_{‖θ‖≤1} ‖h + Gθ‖²`.
    fn residual(&self, h: &CVector) -> f64 {
        let c = self.u.adjoint() * h;
        let perp = (h - &self.u * &c).norm_squared();
        let c2: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        let unconstrained: f64 = c2.iter().zip(&self.s).map(|(c, s)| c / (s * s)).sum();
        if unconstrained <= 1.0 {
            return perp;
        }
        let theta_norm2 = |mu: f64| -> f64 {
            c2.iter().zip(&self.s).map(|(c, s)| s * s * c / ((s * s + mu) * (s * s + mu))).sum()
        };
        let mut lo = 0.0;
        let mut hi: f64 = c2.iter().zip(&self.s).map(|(c, s)| s * s * c).sum::<f64>().sqrt();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if theta_norm2(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // `hi` is always feasible, so the value below is attained by some θ.
        let mu = hi;
        let fitted: f64 = c2.iter().zip(&self.s).map(|(c, s)| c * mu * mu / ((s * s + mu) * (s * s + mu))).sum();
        fitted + perp
    }
}

/// Sampled max-min oracle: the largest residual the IRS leaves over
/// `n_samples` adversary directions on the `T_r` sphere, each answered
/// exactly. Sample `i` uses stream `i` of `seed`.
pub fn brute_force_t_prime(
    t_r: f64,
    h_tx_to_irs: &CMatrix,
    h_irs_to_rx: &CMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_t(t_r)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let g = cascade_map(h_tx_to_irs, h_irs_to_rx)?;
    if t_r == 0.0 {
        return Ok(0.0);
    }
    let proj = BallProjector::new(&g);
    let radius = t_r.sqrt();
    let dim = g.nrows();
    let best = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let h = random_unit_vector(dim, &mut rng) * crate::Complex64::new(radius, 0.0);
            proj.residual(&h)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Residual left by the IRS against one specific adversary vector `vec(H̄_r)`.
pub fn best_response_residual(h: &CVector, h_tx_to_irs: &CMatrix, h_irs_to_rx: &CMatrix) -> Result<f64> {
    let g = cascade_map(h_tx_to_irs, h_irs_to_rx)?;
    if h.len() != g.nrows() {
        return Err(Error::invalid(format!("adversary vector has length {}, expected {}", h.len(), g.nrows())));
    }
    Ok(BallProjector::new(&g).residual(h))
}

/// Effective uncertainty terms `(t_sr, t_rd)` entering each hop's noise floor.
pub fn effective_uncertainty(mode: IrsMode, t: &TBounds, p_s: f64, p_r: f64) -> (f64, f64) {
    match mode {
        IrsMode::CancelRsi | IrsMode::None => (t.t1 * p_s, t.t2 * p_r),
        IrsMode::AssistSr => ((t.t1 + t.t_si * t.t_ir) * p_s, t.t2 * p_r),
        IrsMode::AssistRd => (t.t1 * p_s, (t.t2 + t.t_ri * t.t_id) * p_r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_ops::real_matrix;
    use crate::Complex64;

    fn identity_example() -> (CMatrix, CMatrix) {
        // K_t = 1, K_r = 2, M = 2: G = I₂.
        (real_matrix(2, 1, &[1.0, 1.0]), CMatrix::identity(2, 2))
    }

    #[test]
    fn zero_ball() {
        let (tx, rx) = identity_example();
        let r = worst_case_rsi_bound(0.0, &tx, &rx).unwrap();
        assert_eq!(r.t_prime, 0.0);
        assert!(r.clamped);
        assert_eq!(brute_force_t_prime(0.0, &tx, &rx, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn identity_map_values() {
        let (tx, rx) = identity_example();
        let r = worst_case_rsi_bound(4.0, &tx, &rx).unwrap();
        assert!((r.sigma_min - 1.0).abs() < 1e-12);
        assert!((r.t_prime - 1.0).abs() < 1e-12);
        assert!(!r.clamped && !r.rank_deficient);
        let r = worst_case_rsi_bound(0.25, &tx, &rx).unwrap();
        assert_eq!(r.t_prime, 0.0);
        assert!(r.clamped);
    }

    #[test]
    fn identity_map_oracle_approaches_bound() {
        let (tx, rx) = identity_example();
        let est = brute_force_t_prime(4.0, &tx, &rx, 10_000, 3).unwrap();
        // G = I, so every direction leaves exactly (2 − 1)² behind.
        assert!(est <= 1.0 + 1e-12);
        assert!(est > 1.0 - 1e-9);
    }

    #[test]
    fn too_few_elements_is_rank_deficient() {
        let tx = real_matrix(1, 2, &[1.0, 0.5]);
        let rx = real_matrix(2, 1, &[0.3, 1.0]);
        let r = worst_case_rsi_bound(0.7, &tx, &rx).unwrap();
        assert!(r.rank_deficient);
        assert_eq!(r.t_prime, 0.7);
        let no_irs = worst_case_rsi_bound(0.7, &CMatrix::zeros(0, 2), &CMatrix::zeros(2, 0)).unwrap();
        assert!(no_irs.rank_deficient);
        assert_eq!(no_irs.t_prime, 0.7);
    }

    #[test]
    fn negative_bound_rejected() {
        let (tx, rx) = identity_example();
        assert!(worst_case_rsi_bound(-1.0, &tx, &rx).is_err());
    }

    #[test]
    fn residual_against_aligned_adversary() {
        // Diagonal G with singular values 3 and 0.5; an adversary along the
        // weak direction with radius 2 leaves exactly (2 − 0.5)².
        let tx = real_matrix(2, 1, &[3.0, 0.5]);
        let rx = CMatrix::identity(2, 2);
        let h = CVector::from_column_slice(&[Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]);
        let r = best_response_residual(&h, &tx, &rx).unwrap();
        assert!((r - 2.25).abs() < 1e-12, "{r}");
        let bound = worst_case_rsi_bound(4.0, &tx, &rx).unwrap();
        assert!((bound.t_prime - 2.25).abs() < 1e-12);
    }

    #[test]
    fn effective_uncertainty_modes() {
        let t = TBounds::uniform(0.001);
        let (sr, rd) = effective_uncertainty(IrsMode::AssistSr, &t, 5.0, 1.0);
        assert!((sr - 0.005005).abs() < 1e-15);
        assert!((rd - 0.001).abs() < 1e-15);
        let (_, rd) = effective_uncertainty(IrsMode::CancelRsi, &t, 5.0, 1.0);
        assert!((rd - 0.001).abs() < 1e-15);
        let (sr, rd) = effective_uncertainty(IrsMode::AssistRd, &t, 5.0, 2.0);
        assert!((sr - 0.005).abs() < 1e-15);
        assert!((rd - 2.0 * 0.001001).abs() < 1e-15);
        assert_eq!(effective_uncertainty(IrsMode::None, &TBounds::uniform(0.0), 5.0, 1.0), (0.0, 0.0));
    }
}
