//! Outer solvers: relay-power bisection for full duplex, independent hop
//! water-filling for half duplex, and FD/HD selection.
//!
//! The uncertainty bounds are read from [`ChannelSet::t_bounds`]; powers,
//! noise levels and the IRS placement come from the [`ScenarioConfig`].

use serde::{Deserialize, Serialize};

use crate::allocation::{inner_minimax, water_fill, AllocationState, MinimaxOutcome};
use crate::channel::{ChannelSet, IrsMode, ScenarioConfig};
use crate::rates::{hd_link_rate_bound, hd_rate, sum_log_rate, OperatingMode, RateResult};
use crate::rsi_bound::{effective_uncertainty, worst_case_rsi_bound};
use crate::tensor_ops::gram_spectrum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Rate gap `|r_sr − r_rd|` accepted as balanced.
    pub tol: f64,
    /// Bisection stops once the power interval is below this fraction of `P_r`.
    pub interval_tol_rel: f64,
    pub max_outer: usize,
    /// Inner stopping threshold on `‖Δσ²_r‖₁` as a fraction of `T′`.
    pub inner_tol_rel: f64,
    pub inner_max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-6, interval_tol_rel: 1e-9, max_outer: 100, inner_tol_rel: 1e-6, inner_max_iter: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Sr,
    Rd,
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub rate: RateResult,
    pub allocation: AllocationState,
    pub relay_power_used: f64,
    pub bottleneck: Bottleneck,
    /// Worst-case residual self-interference bound used by the inner solver.
    pub t_prime: f64,
    /// Bisection trial points at which the inner loop hit its iteration cap.
    pub inner_nonconverged: usize,
}

/// Hop spectra and noise floors shared by the FD and HD solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct HopModel {
    /// Squared singular values of `H₁`, descending, `min(K_r, N_t)` entries.
    pub spec_1: Vec<f64>,
    /// Squared singular values of `H₂`, descending, `min(N_r, K_t)` entries.
    pub spec_2: Vec<f64>,
    /// `σ_t² + t_sr_eff`.
    pub noise_sr: f64,
    /// `σ_d² + t_rd_eff`.
    pub noise_rd: f64,
    pub t_prime: f64,
}

impl HopModel {
    /// Hop model for FD operation under the configured IRS placement.
    pub fn fd(cfg: &ScenarioConfig, channels: &ChannelSet) -> Result<Self> {
        Self::build(cfg, channels, cfg.irs_mode, true)
    }

    /// Hop model for HD operation: no self-interference, and the IRS only
    /// matters when it assists one of the hops.
    pub fn hd(cfg: &ScenarioConfig, channels: &ChannelSet) -> Result<Self> {
        let mode = match cfg.irs_mode {
            IrsMode::AssistSr | IrsMode::AssistRd => cfg.irs_mode,
            IrsMode::CancelRsi | IrsMode::None => IrsMode::None,
        };
        Self::build(cfg, channels, mode, false)
    }

    fn build(cfg: &ScenarioConfig, channels: &ChannelSet, mode: IrsMode, full_duplex: bool) -> Result<Self> {
        cfg.validate()?;
        let t = &channels.t_bounds;
        let t_prime = if !full_duplex {
            0.0
        } else if mode == IrsMode::CancelRsi {
            worst_case_rsi_bound(t.tr, &channels.h_tx_to_irs, &channels.h_irs_to_rx)?.t_prime
        } else {
            t.tr
        };
        let (t_sr, t_rd) = effective_uncertainty(mode, t, cfg.p_s, cfg.p_r);
        Ok(HopModel {
            spec_1: gram_spectrum(&channels.h1).into_vec(),
            spec_2: gram_spectrum(&channels.h2).into_vec(),
            noise_sr: cfg.sigma_t2 + t_sr,
            noise_rd: cfg.sigma_d2 + t_rd,
            t_prime,
        })
    }

    /// Relay powers water-filled over the second hop with budget `p_bar`.
    pub fn relay_powers(&self, p_bar: f64) -> Result<Vec<f64>> {
        let gains: Vec<f64> = self.spec_2.iter().map(|s| s / self.noise_rd).collect();
        Ok(water_fill(&gains, p_bar)?.powers)
    }

    pub fn r_rd(&self, gamma_r: &[f64]) -> f64 {
        sum_log_rate(&self.spec_2, gamma_r, &vec![self.noise_rd; self.spec_2.len()])
    }
}

/// Both hop rates at one relay power level.
#[derive(Debug, Clone, PartialEq)]
pub struct FdPoint {
    pub p_bar: f64,
    pub r_sr: f64,
    pub r_rd: f64,
    pub inner: MinimaxOutcome,
}

impl FdPoint {
    pub fn rate(&self) -> f64 {
        self.r_sr.min(self.r_rd)
    }
}

/// Evaluates both FD hops with relay budget `p_bar`.
pub fn evaluate_fd_at(model: &HopModel, cfg: &ScenarioConfig, p_bar: f64, opts: &SolveOptions) -> Result<FdPoint> {
    let gamma_r = model.relay_powers(p_bar)?;
    let r_rd = model.r_rd(&gamma_r);
    let tol = (opts.inner_tol_rel * model.t_prime).max(f64::MIN_POSITIVE);
    let inner = inner_minimax(&model.spec_1, &gamma_r, model.t_prime, cfg.p_s, model.noise_sr, tol, opts.inner_max_iter)?;
    Ok(FdPoint { p_bar, r_sr: inner.r_sr, r_rd, inner })
}

fn fd_result(point: FdPoint, bottleneck: Bottleneck, t_prime: f64, inner_nonconverged: usize) -> OptimizerResult {
    let relay_power_used = point.inner.state.gamma_r.iter().sum::<f64>().min(point.p_bar);
    OptimizerResult {
        rate: RateResult {
            r_sr: point.r_sr,
            r_rd: point.r_rd,
            r: point.rate(),
            mode: OperatingMode::Fd,
            iterations: point.inner.iterations,
            converged: point.inner.converged,
        },
        allocation: point.inner.state,
        relay_power_used: if bottleneck == Bottleneck::Rd { point.p_bar } else { relay_power_used },
        bottleneck,
        t_prime,
        inner_nonconverged,
    }
}

/// Full-duplex robust design: bisection over the relay power so that the two
/// hop rates meet.
pub fn solve_fd(cfg: &ScenarioConfig, channels: &ChannelSet, opts: &SolveOptions) -> Result<OptimizerResult> {
    let model = HopModel::fd(cfg, channels)?;
    let mut nonconverged = 0usize;
    let mut eval = |p: f64| -> Result<FdPoint> {
        let pt = evaluate_fd_at(&model, cfg, p, opts)?;
        if !pt.inner.converged {
            nonconverged += 1;
        }
        Ok(pt)
    };

    if !model.spec_1.iter().any(|&s| s > 0.0) {
        let pt = eval(0.0)?;
        return Ok(fd_result(pt, Bottleneck::Sr, model.t_prime, nonconverged));
    }

    let full = eval(cfg.p_r)?;
    if full.r_sr >= full.r_rd - opts.tol {
        let b = if full.r_sr - full.r_rd <= opts.tol { Bottleneck::Balanced } else { Bottleneck::Rd };
        return Ok(fd_result(full, b, model.t_prime, nonconverged));
    }

    let mut lo = 0.0;
    let mut hi = cfg.p_r;
    let mut best = full;
    for _ in 0..opts.max_outer {
        if hi - lo <= opts.interval_tol_rel * cfg.p_r {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pt = eval(mid)?;
        let gap = pt.r_sr - pt.r_rd;
        if pt.rate() > best.rate() {
            best = pt;
        }
        if gap == 0.0 {
            break;
        }
        if gap > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = if best.r_sr < best.r_rd - opts.tol { Bottleneck::Sr } else { Bottleneck::Balanced };
    Ok(fd_result(best, b, model.t_prime, nonconverged))
}

/// Half-duplex design: each hop water-filled against its own bound, combined
/// with the optimal time split.
pub fn solve_hd(cfg: &ScenarioConfig, channels: &ChannelSet) -> Result<OptimizerResult> {
    let model = HopModel::hd(cfg, channels)?;
    let gains_1: Vec<f64> = model.spec_1.iter().map(|s| s / model.noise_sr).collect();
    let gamma_s = water_fill(&gains_1, cfg.p_s)?.powers;
    let gamma_r = model.relay_powers(cfg.p_r)?;
    let r_sr = hd_link_rate_bound(&model.spec_1, &gamma_s, model.noise_sr - cfg.sigma_t2, cfg.sigma_t2)?;
    let r_rd = hd_link_rate_bound(&model.spec_2, &gamma_r, model.noise_rd - cfg.sigma_d2, cfg.sigma_d2)?;
    let bottleneck = if r_sr < r_rd {
        Bottleneck::Sr
    } else if r_rd < r_sr {
        Bottleneck::Rd
    } else {
        Bottleneck::Balanced
    };
    let n1 = model.spec_1.len();
    Ok(OptimizerResult {
        rate: RateResult { r_sr, r_rd, r: hd_rate(r_sr, r_rd), mode: OperatingMode::Hd, iterations: 0, converged: true },
        relay_power_used: gamma_r.iter().sum(),
        allocation: AllocationState {
            gamma_s,
            gamma_r,
            sigma_r2: vec![0.0; n1],
            water_level_s: 0.0,
            water_level_adv: 0.0,
            pairing: (0..n1).collect(),
        },
        bottleneck,
        t_prime: 0.0,
        inner_nonconverged: 0,
    })
}

/// The better of the two operating modes; ties go to FD.
pub fn select_mode(fd: &OptimizerResult, hd: &OptimizerResult) -> RateResult {
    if hd.rate.r > fd.rate.r {
        hd.rate.clone()
    } else {
        fd.rate.clone()
    }
}

/// Smallest `T_r` on an ascending grid at which HD matches or beats FD, or
/// `+∞` when FD wins at every grid point.
pub fn mode_switch_threshold(
    cfg: &ScenarioConfig,
    channels: &ChannelSet,
    t_grid: &[f64],
    opts: &SolveOptions,
) -> Result<f64> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("threshold grid must be strictly ascending"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!("threshold grid has invalid entry {t}")));
    }
    let hd = solve_hd(cfg, channels)?;
    let mut ch = channels.clone();
    for &t in t_grid {
        ch.t_bounds.tr = t;
        let fd = solve_fd(cfg, &ch, opts)?;
        if hd.rate.r >= fd.rate.r {
            return Ok(t);
        }
    }
    Ok(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TBounds;
    use crate::tensor_ops::{real_matrix, CMatrix};

    fn scalar_setup(h1: f64, h2: f64, p_s: f64, p_r: f64) -> (ScenarioConfig, ChannelSet) {
        let cfg = ScenarioConfig {
            n_t: 1,
            n_r: 1,
            k_t: 1,
            k_r: 1,
            m: 0,
            p_s,
            p_r,
            sigma_t2: 1.0,
            sigma_d2: 1.0,
            t_bounds: TBounds::uniform(0.0),
            rician_factor: 0.0,
            geometry: None,
            irs_mode: IrsMode::None,
            seed: 0,
        };
        let ch = ChannelSet {
            h1: real_matrix(1, 1, &[h1]),
            h2: real_matrix(1, 1, &[h2]),
            hr: real_matrix(1, 1, &[1.0]),
            h_tx_to_irs: CMatrix::zeros(0, 1),
            h_irs_to_rx: CMatrix::zeros(1, 0),
            h_src_to_irs: CMatrix::zeros(0, 1),
            h_irs_to_dst: CMatrix::zeros(1, 0),
            t_bounds: TBounds::uniform(0.0),
        };
        (cfg, ch)
    }

    #[test]
    fn symmetric_scalar_is_balanced() {
        let (cfg, ch) = scalar_setup(1.0, 1.0, 1.0, 1.0);
        let r = solve_fd(&cfg, &ch, &SolveOptions::default()).unwrap();
        assert!((r.rate.r_sr - r.rate.r_rd).abs() <= 1e-6);
        assert!((r.rate.r - 1.0).abs() < 1e-6);
        assert_eq!(r.bottleneck, Bottleneck::Balanced);
    }

    #[test]
    fn weak_second_hop_is_rd_bottleneck() {
        let (cfg, ch) = scalar_setup(1.0, 1e-3, 1.0, 1.0);
        let r = solve_fd(&cfg, &ch, &SolveOptions::default()).unwrap();
        assert_eq!(r.bottleneck, Bottleneck::Rd);
        assert_eq!(r.relay_power_used, cfg.p_r);
    }

    #[test]
    fn strong_second_hop_backs_off_power() {
        let (cfg, mut ch) = scalar_setup(1.0, 10.0, 1.0, 1.0);
        ch.t_bounds.tr = 0.5;
        let r = solve_fd(&cfg, &ch, &SolveOptions::default()).unwrap();
        assert!(r.relay_power_used < cfg.p_r);
        assert!((r.rate.r_sr - r.rate.r_rd).abs() <= 1e-6);
    }

    #[test]
    fn zero_source_channel() {
        let (cfg, ch) = scalar_setup(0.0, 1.0, 1.0, 1.0);
        let r = solve_fd(&cfg, &ch, &SolveOptions::default()).unwrap();
        assert_eq!(r.rate.r, 0.0);
        assert_eq!(r.bottleneck, Bottleneck::Sr);
        assert_eq!(solve_hd(&cfg, &ch).unwrap().rate.r, 0.0);
    }

    #[test]
    fn hd_symmetric_halves() {
        let (cfg, ch) = scalar_setup(1.0, 1.0, 1.0, 1.0);
        let r = solve_hd(&cfg, &ch).unwrap();
        assert!((r.rate.r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mode_selection_and_ties() {
        let (cfg, ch) = scalar_setup(1.0, 1.0, 1.0, 1.0);
        let mut fd = solve_fd(&cfg, &ch, &SolveOptions::default()).unwrap();
        let mut hd = solve_hd(&cfg, &ch).unwrap();
        fd.rate.r = 5.0;
        hd.rate.r = 3.0;
        assert_eq!(select_mode(&fd, &hd).mode, OperatingMode::Fd);
        fd.rate.r = 2.0;
        assert_eq!(select_mode(&fd, &hd).mode, OperatingMode::Hd);
        fd.rate.r = 3.0;
        assert_eq!(select_mode(&fd, &hd).mode, OperatingMode::Fd);
    }

    #[test]
    fn threshold_grid_checks() {
        let (cfg, ch) = scalar_setup(1.0, 1.0, 1.0, 1.0);
        let opts = SolveOptions::default();
        assert!(mode_switch_threshold(&cfg, &ch, &[0.2, 0.1], &opts).is_err());
        assert_eq!(mode_switch_threshold(&cfg, &ch, &[0.0], &opts).unwrap(), f64::INFINITY);
        assert_eq!(mode_switch_threshold(&cfg, &ch, &[100.0], &opts).unwrap(), 100.0);
    }
}
