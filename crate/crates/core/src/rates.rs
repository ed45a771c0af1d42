//! Achievable-rate expressions.
//!
//! The matrix forms evaluate log-determinant ratios directly. The eigenvalue
//! forms express the same rates in terms of channel spectra and per-stream
//! powers, which is the domain the optimizer works in. All logarithms are
//! base 2.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, IrsMode};
use crate::tensor_ops::{self, cascade, log2_det_hpd, CMatrix, CVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatingMode {
    #[serde(rename = "FD")]
    Fd,
    #[serde(rename = "HD")]
    Hd,
}

impl std::fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatingMode::Fd => "FD",
            OperatingMode::Hd => "HD",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub r_sr: f64,
    pub r_rd: f64,
    /// `min(r_sr, r_rd)` in FD mode, the time-shared combination in HD mode.
    pub r: f64,
    pub mode: OperatingMode,
    /// Inner alternating iterations at the returned operating point.
    pub iterations: usize,
    pub converged: bool,
}

/// Channel estimation errors for one evaluation of the matrix-form rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelErrors {
    /// `K_r × N_t`.
    pub h1: CMatrix,
    /// `N_r × K_t`.
    pub h2: CMatrix,
    /// Residual self-interference, `K_r × K_t`.
    pub hr: CMatrix,
    /// Source to IRS, `M × N_t`.
    pub si: CMatrix,
    /// IRS to relay receiver, `K_r × M`.
    pub ir: CMatrix,
    /// Relay transmitter to IRS, `M × K_t`.
    pub ri: CMatrix,
    /// IRS to destination, `N_r × M`.
    pub id: CMatrix,
}

impl ChannelErrors {
    /// All-zero errors shaped like `channels`.
    pub fn zeros_like(channels: &ChannelSet) -> Self {
        let z = |m: &CMatrix| CMatrix::zeros(m.nrows(), m.ncols());
        ChannelErrors {
            h1: z(&channels.h1),
            h2: z(&channels.h2),
            hr: CMatrix::zeros(channels.hr.nrows(), channels.hr.ncols()),
            si: z(&channels.h_src_to_irs),
            ir: z(&channels.h_irs_to_rx),
            ri: z(&channels.h_tx_to_irs),
            id: z(&channels.h_irs_to_dst),
        }
    }
}

fn check_shape(name: &str, m: &CMatrix, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::invalid(format!("{name} is {:?}, expected {:?}", m.shape(), shape)));
    }
    Ok(())
}

fn sandwich(h: &CMatrix, q: &CMatrix) -> CMatrix {
    h * q * h.adjoint()
}

/// `log₂|N + S| − log₂|N|` with `N = σ²I + interference`.
fn log_det_ratio(sigma2: f64, signal: &CMatrix, interference: &CMatrix) -> Result<f64> {
    let n = interference + CMatrix::identity(signal.nrows(), signal.ncols()) * crate::Complex64::new(sigma2, 0.0);
    let s = &n + signal;
    Ok((log2_det_hpd(&s)? - log2_det_hpd(&n)?).max(0.0))
}

/// Exact FD rates `(r_sr, r_rd)` for the given covariances, errors and IRS profile.
#[allow(clippy::too_many_arguments)]
pub fn fd_rate_matrix(
    channels: &ChannelSet,
    q_s: &CMatrix,
    q_r: &CMatrix,
    errors: &ChannelErrors,
    theta: &CVector,
    mode: IrsMode,
    sigma_t2: f64,
    sigma_d2: f64,
) -> Result<(f64, f64)> {
    if !(sigma_t2 > 0.0 && sigma_d2 > 0.0) {
        return Err(Error::invalid("noise powers must be positive"));
    }
    let (kr, nt) = channels.h1.shape();
    let (nr, kt) = channels.h2.shape();
    let m = channels.h_tx_to_irs.nrows();
    check_shape("q_s", q_s, (nt, nt))?;
    check_shape("q_r", q_r, (kt, kt))?;
    tensor_ops::require_psd(q_s)?;
    tensor_ops::require_psd(q_r)?;
    check_shape("error h1", &errors.h1, (kr, nt))?;
    check_shape("error h2", &errors.h2, (nr, kt))?;
    check_shape("error hr", &errors.hr, (kr, kt))?;
    if theta.len() != m {
        return Err(Error::invalid(format!("theta has {} entries, IRS has {m}", theta.len())));
    }
    if mode != IrsMode::None {
        check_shape("error si", &errors.si, (m, nt))?;
        check_shape("error ir", &errors.ir, (kr, m))?;
        check_shape("error ri", &errors.ri, (m, kt))?;
        check_shape("error id", &errors.id, (nr, m))?;
    }

    let (h1_hat, h1_bar, rsi) = match mode {
        IrsMode::CancelRsi => {
            let tot = &errors.hr + cascade(&channels.h_irs_to_rx, theta, &channels.h_tx_to_irs)?;
            (channels.h1.clone(), errors.h1.clone(), tot)
        }
        IrsMode::AssistSr => {
            let hat = &channels.h1 + cascade(&channels.h_irs_to_rx, theta, &channels.h_src_to_irs)?;
            let bar = &errors.h1 + cascade(&errors.ir, theta, &errors.si)?;
            (hat, bar, errors.hr.clone())
        }
        IrsMode::AssistRd | IrsMode::None => (channels.h1.clone(), errors.h1.clone(), errors.hr.clone()),
    };
    let (h2_hat, h2_bar) = match mode {
        IrsMode::AssistRd => {
            let hat = &channels.h2 + cascade(&channels.h_irs_to_dst, theta, &channels.h_tx_to_irs)?;
            let bar = &errors.h2 + cascade(&errors.id, theta, &errors.ri)?;
            (hat, bar)
        }
        _ => (channels.h2.clone(), errors.h2.clone()),
    };

    let sr_interf = sandwich(&h1_bar, q_s) + sandwich(&rsi, q_r);
    let r_sr = log_det_ratio(sigma_t2, &sandwich(&h1_hat, q_s), &sr_interf)?;
    let r_rd = log_det_ratio(sigma_d2, &sandwich(&h2_hat, q_r), &sandwich(&h2_bar, q_r))?;
    Ok((r_sr, r_rd))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiedlerBounds {
    pub lower: f64,
    pub upper: f64,
    pub exact: f64,
}

/// Eigenvalue bounds on `|I + A B⁻¹|` for PSD `A` and PD `B`.
pub fn fiedler_bounds(a: &CMatrix, b: &CMatrix) -> Result<FiedlerBounds> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::invalid("fiedler_bounds needs square matrices of equal size"));
    }
    let la = tensor_ops::psd_spectrum(a)?;
    let lb = tensor_ops::eig_descending(b)?;
    let b_min = lb.last().copied().unwrap_or(1.0);
    if !(b_min > 0.0) {
        return Err(Error::invalid("B must be positive definite"));
    }
    let n = la.len();
    let lower = (0..n).map(|i| 1.0 + la[i] / lb[i]).product();
    let upper = (0..n).map(|i| 1.0 + la[i] / lb[n - 1 - i]).product();
    let exact = (log2_det_hpd(&(a + b))? - log2_det_hpd(b)?).exp2();
    Ok(FiedlerBounds { lower, upper, exact })
}

fn check_non_negative(name: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid(format!("{name} has entry {x}, expected finite and non-negative")));
    }
    Ok(())
}

/// Interference power on each source-relay stream: `γ_{ri}·σ²_{ri}`, with
/// streams beyond the relay's transmit DoF receiving none.
pub fn stream_interference(gamma_r: &[f64], sigma_r2: &[f64]) -> Vec<f64> {
    sigma_r2
        .iter()
        .enumerate()
        .map(|(i, s)| gamma_r.get(i).copied().unwrap_or(0.0) * s)
        .collect()
}

/// `Σ log₂(1 + spec_i·γ_i / den_i)`.
pub fn sum_log_rate(spec: &[f64], gamma: &[f64], den: &[f64]) -> f64 {
    spec.iter()
        .zip(gamma)
        .zip(den)
        .map(|((s, g), d)| if s * g > 0.0 { (s * g / d).ln_1p() } else { 0.0 })
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Eigenvalue-domain source-relay rate with identity pairing.
pub fn sr_rate_eigen(spec_1: &[f64], gamma_s: &[f64], gamma_r: &[f64], sigma_r2: &[f64], noise: f64) -> f64 {
    let den: Vec<f64> = stream_interference(gamma_r, sigma_r2).iter().map(|i| noise + i).collect();
    sum_log_rate(spec_1, gamma_s, &den)
}

/// Eigenvalue-domain FD rates `(r_sr, r_rd)`.
///
/// `spec_1`, `gamma_s` and `sigma_r2` have one entry per source-relay stream;
/// `spec_2` and `gamma_r` one per relay-destination stream. Stream `i` of the
/// first hop carries `gamma_s[pairing[i]]` and sees interference
/// `gamma_r[i]·sigma_r2[pairing[i]]`.
#[allow(clippy::too_many_arguments)]
pub fn fd_rate_eigen(
    spec_1: &[f64],
    spec_2: &[f64],
    gamma_s: &[f64],
    gamma_r: &[f64],
    sigma_r2: &[f64],
    t_sr_eff: f64,
    t_rd_eff: f64,
    sigma_t2: f64,
    sigma_d2: f64,
    pairing: &[usize],
) -> Result<(f64, f64)> {
    let n1 = spec_1.len();
    if gamma_s.len() != n1 || sigma_r2.len() != n1 || pairing.len() != n1 {
        return Err(Error::invalid(format!(
            "source-relay lengths disagree: spectrum {n1}, gamma_s {}, sigma_r2 {}, pairing {}",
            gamma_s.len(),
            sigma_r2.len(),
            pairing.len()
        )));
    }
    if gamma_r.len() != spec_2.len() {
        return Err(Error::invalid(format!(
            "relay-destination lengths disagree: spectrum {}, gamma_r {}",
            spec_2.len(),
            gamma_r.len()
        )));
    }
    let mut seen = vec![false; n1];
    for &p in pairing {
        if p >= n1 || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("pairing is not a permutation"));
        }
    }
    for (name, v) in [("spec_1", spec_1), ("spec_2", spec_2), ("gamma_s", gamma_s), ("gamma_r", gamma_r), ("sigma_r2", sigma_r2)] {
        check_non_negative(name, v)?;
    }
    check_non_negative("bounds and noise", &[t_sr_eff, t_rd_eff, sigma_t2, sigma_d2])?;
    if sigma_t2 == 0.0 || sigma_d2 == 0.0 {
        return Err(Error::invalid("noise powers must be positive"));
    }

    let gs: Vec<f64> = pairing.iter().map(|&p| gamma_s[p]).collect();
    let sr2: Vec<f64> = pairing.iter().map(|&p| sigma_r2[p]).collect();
    let r_sr = sr_rate_eigen(spec_1, &gs, gamma_r, &sr2, sigma_t2 + t_sr_eff);
    let r_rd = sum_log_rate(spec_2, gamma_r, &vec![sigma_d2 + t_rd_eff; spec_2.len()]);
    Ok((r_sr, r_rd))
}

/// Time-shared half-duplex rate `ab/(a+b)`.
pub fn hd_rate(r_sr_hd: f64, r_rd_hd: f64) -> f64 {
    let sum = r_sr_hd + r_rd_hd;
    if r_sr_hd <= 0.0 || r_rd_hd <= 0.0 || sum <= 0.0 {
        0.0
    } else {
        r_sr_hd * r_rd_hd / sum
    }
}

/// Single-hop worst-case rate bound `Σ log₂(1 + spec_i·γ_i/(σ² + t_eff))`.
pub fn hd_link_rate_bound(spec: &[f64], gamma: &[f64], t_eff: f64, sigma2: f64) -> Result<f64> {
    if spec.len() != gamma.len() {
        return Err(Error::invalid(format!("spectrum has {} entries, powers {}", spec.len(), gamma.len())));
    }
    check_non_negative("spectrum", spec)?;
    check_non_negative("powers", gamma)?;
    check_non_negative("t_eff", &[t_eff])?;
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("noise power must be positive"));
    }
    Ok(sum_log_rate(spec, gamma, &vec![sigma2 + t_eff; spec.len()]))
}
