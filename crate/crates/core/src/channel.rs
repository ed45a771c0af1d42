//! Scenario configuration, channel generation and the trace-ball uncertainty
//! model.
//!
//! Every link draws from its own random substream, and IRS channels are drawn
//! one element at a time. Two scenarios that differ only in `m` therefore share
//! every non-IRS channel and agree on the first `min(m, m')` IRS elements,
//! which is what paired-seed sweeps over the IRS size rely on.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::tensor_ops::{CMatrix, CVector};
use crate::{Complex64, Error, Result};

/// Tolerance on the Frobenius norm of an adversary direction.
const UNIT_NORM_TOL: f64 = 1e-9;

/// Placement of the IRS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrsMode {
    /// Reflect around the relay to cancel residual self-interference.
    CancelRsi,
    /// Assist the source-relay hop.
    AssistSr,
    /// Assist the relay-destination hop.
    AssistRd,
    /// No IRS.
    None,
}

impl std::str::FromStr for IrsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cancel_rsi" => Ok(IrsMode::CancelRsi),
            "assist_sr" => Ok(IrsMode::AssistSr),
            "assist_rd" => Ok(IrsMode::AssistRd),
            "none" => Ok(IrsMode::None),
            other => Err(Error::Config(format!("unknown irs_mode {other:?}"))),
        }
    }
}

/// Trace bounds `Tr(H̄ H̄ᴴ) ≤ T_x` for each uncertain channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TBounds {
    /// Source to relay.
    #[serde(rename = "1")]
    pub t1: f64,
    /// Relay to destination.
    #[serde(rename = "2")]
    pub t2: f64,
    /// Residual self-interference channel.
    #[serde(rename = "r")]
    pub tr: f64,
    /// Source to IRS.
    #[serde(rename = "SI")]
    pub t_si: f64,
    /// IRS to relay receiver.
    #[serde(rename = "IR")]
    pub t_ir: f64,
    /// Relay transmitter to IRS.
    #[serde(rename = "RI")]
    pub t_ri: f64,
    /// IRS to destination.
    #[serde(rename = "ID")]
    pub t_id: f64,
}

impl TBounds {
    pub fn uniform(t: f64) -> Self {
        TBounds { t1: t, t2: t, tr: t, t_si: t, t_ir: t, t_ri: t, t_id: t }
    }

    fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("1", self.t1),
            ("2", self.t2),
            ("r", self.tr),
            ("SI", self.t_si),
            ("IR", self.t_ir),
            ("RI", self.t_ri),
            ("ID", self.t_id),
        ]
        .into_iter()
    }
}

impl Default for TBounds {
    fn default() -> Self {
        TBounds::uniform(0.001)
    }
}

/// Node coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub source: [f64; 2],
    pub relay: [f64; 2],
    pub irs: [f64; 2],
    pub destination: [f64; 2],
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            source: [0.0, 0.0],
            relay: [4000.0, 0.0],
            irs: [4000.0, 20.0],
            destination: [8000.0, 0.0],
        }
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Everything needed to draw and solve one network realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Source antennas.
    pub n_t: usize,
    /// Destination antennas.
    pub n_r: usize,
    /// Relay transmit antennas.
    pub k_t: usize,
    /// Relay receive antennas.
    pub k_r: usize,
    /// IRS elements.
    pub m: usize,
    pub p_s: f64,
    pub p_r: f64,
    /// Noise power at the relay receiver.
    pub sigma_t2: f64,
    /// Noise power at the destination.
    pub sigma_d2: f64,
    pub t_bounds: TBounds,
    pub rician_factor: f64,
    /// When absent, every link has unit average gain per entry.
    #[serde(default)]
    pub geometry: Option<Geometry>,
    pub irs_mode: IrsMode,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_t: 4,
            n_r: 4,
            k_t: 5,
            k_r: 5,
            m: 0,
            p_s: 5.0,
            p_r: 1.0,
            sigma_t2: 1.0,
            sigma_d2: 1.0,
            t_bounds: TBounds::default(),
            rician_factor: 0.1,
            geometry: None,
            irs_mode: IrsMode::CancelRsi,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_t", self.n_t), ("n_r", self.n_r), ("k_t", self.k_t), ("k_r", self.k_r)] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let reals = [
            ("p_s", self.p_s),
            ("p_r", self.p_r),
            ("sigma_t2", self.sigma_t2),
            ("sigma_d2", self.sigma_d2),
            ("rician_factor", self.rician_factor),
        ];
        for (name, v) in reals {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.sigma_t2 == 0.0 || self.sigma_d2 == 0.0 {
            return Err(Error::Config("noise powers must be positive".into()));
        }
        for (label, v) in self.t_bounds.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("t_bounds.{label} must be finite and non-negative, got {v}")));
            }
        }
        if let Some(g) = &self.geometry {
            let pts = [g.source, g.relay, g.irs, g.destination];
            if pts.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::Config("geometry coordinates must be finite".into()));
            }
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    if distance(*a, *b) <= 0.0 {
                        return Err(Error::Config("geometry nodes must be at distinct positions".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Nominal channels of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Source to relay, `K_r × N_t`.
    pub h1: CMatrix,
    /// Relay to destination, `N_r × K_t`.
    pub h2: CMatrix,
    /// Self-interference, `K_r × K_t`.
    pub hr: CMatrix,
    /// Relay transmitter to IRS, `M × K_t`.
    pub h_tx_to_irs: CMatrix,
    /// IRS to relay receiver, `K_r × M`.
    pub h_irs_to_rx: CMatrix,
    /// Source to IRS, `M × N_t`.
    pub h_src_to_irs: CMatrix,
    /// IRS to destination, `N_r × M`.
    pub h_irs_to_dst: CMatrix,
    pub t_bounds: TBounds,
}

impl ChannelSet {
    /// `Tr(H_r H_rᴴ)`, the reference for normalized RSI levels.
    pub fn hr_power(&self) -> f64 {
        self.hr.norm_squared()
    }

    /// Keeps the first `m` IRS elements.
    pub fn truncate_irs(&self, m: usize) -> Result<ChannelSet> {
        let full = self.h_tx_to_irs.nrows();
        if m > full {
            return Err(Error::invalid(format!("cannot truncate {full} IRS elements to {m}")));
        }
        let mut out = self.clone();
        out.h_tx_to_irs = self.h_tx_to_irs.rows(0, m).into_owned();
        out.h_irs_to_rx = self.h_irs_to_rx.columns(0, m).into_owned();
        out.h_src_to_irs = self.h_src_to_irs.rows(0, m).into_owned();
        out.h_irs_to_dst = self.h_irs_to_dst.columns(0, m).into_owned();
        Ok(out)
    }
}

/// Log-distance path loss in dB.
pub fn path_loss_db(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {distance_m}")));
    }
    Ok(32.6 + 36.7 * distance_m.log10())
}

/// Amplitude gain implied by [`path_loss_db`].
pub fn path_loss_amplitude(distance_m: f64) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(distance_m)? / 20.0))
}

/// Noise power in watts for a spectral density in dBm/Hz over a bandwidth in Hz.
pub fn noise_power_linear(density_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    10f64.powf((density_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz
}

/// Independent generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician draw for one link, produced one "slice" at a time so that slices
/// can be appended without disturbing earlier ones.
struct LinkSampler {
    rng: ChaCha8Rng,
    los_weight: f64,
    nlos_weight: f64,
    sin_rx: f64,
    sin_tx: f64,
    amplitude: f64,
}

impl LinkSampler {
    fn new(seed: u64, rician_factor: f64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angle_rx = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        let angle_tx = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        let (los_weight, nlos_weight) = if rician_factor.is_infinite() {
            (1.0, 0.0)
        } else {
            ((rician_factor / (1.0 + rician_factor)).sqrt(), (1.0 / (1.0 + rician_factor)).sqrt())
        };
        LinkSampler { rng, los_weight, nlos_weight, sin_rx: angle_rx.sin(), sin_tx: angle_tx.sin(), amplitude }
    }

    fn los(&self, r: usize, c: usize) -> Complex64 {
        let phase = std::f64::consts::PI * (r as f64 * self.sin_rx - c as f64 * self.sin_tx);
        Complex64::from_polar(1.0, phase)
    }

    fn entry(&mut self, r: usize, c: usize) -> Complex64 {
        let nlos = complex_gaussian(&mut self.rng);
        (self.los(r, c) * self.los_weight + nlos * self.nlos_weight) * self.amplitude
    }

    fn by_rows(mut self, rows: usize, cols: usize) -> CMatrix {
        let mut m = CMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.entry(r, c);
            }
        }
        m
    }

    fn by_columns(mut self, rows: usize, cols: usize) -> CMatrix {
        let mut m = CMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = self.entry(r, c);
            }
        }
        m
    }
}

/// Draws the nominal channels of one realization.
pub fn generate_channels<R: RngCore + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    cfg.validate()?;
    let seeds: [u64; 7] = std::array::from_fn(|_| rng.next_u64());
    let amp = |a: [f64; 2], b: [f64; 2]| -> Result<f64> {
        match cfg.geometry {
            Some(_) => path_loss_amplitude(distance(a, b)),
            None => Ok(1.0),
        }
    };
    let g = cfg.geometry.unwrap_or_default();
    let eps = cfg.rician_factor;
    let (kr, kt, nt, nr, m) = (cfg.k_r, cfg.k_t, cfg.n_t, cfg.n_r, cfg.m);
    Ok(ChannelSet {
        h1: LinkSampler::new(seeds[0], eps, amp(g.source, g.relay)?).by_rows(kr, nt),
        h2: LinkSampler::new(seeds[1], eps, amp(g.relay, g.destination)?).by_rows(nr, kt),
        hr: LinkSampler::new(seeds[2], eps, 1.0).by_rows(kr, kt),
        h_tx_to_irs: LinkSampler::new(seeds[3], eps, amp(g.relay, g.irs)?).by_rows(m, kt),
        h_irs_to_rx: LinkSampler::new(seeds[4], eps, amp(g.irs, g.relay)?).by_columns(kr, m),
        h_src_to_irs: LinkSampler::new(seeds[5], eps, amp(g.source, g.irs)?).by_rows(m, nt),
        h_irs_to_dst: LinkSampler::new(seeds[6], eps, amp(g.irs, g.destination)?).by_columns(nr, m),
        t_bounds: cfg.t_bounds,
    })
}

/// Boundary point `√T_x · direction` of the uncertainty ball.
pub fn worst_case_error_sample(rows: usize, cols: usize, t_x: f64, direction: &CMatrix) -> Result<CMatrix> {
    if !(t_x >= 0.0) || !t_x.is_finite() {
        return Err(Error::invalid(format!("trace bound must be non-negative, got {t_x}")));
    }
    if direction.shape() != (rows, cols) {
        return Err(Error::invalid(format!(
            "direction is {:?}, expected ({rows}, {cols})",
            direction.shape()
        )));
    }
    if (direction.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::invalid("direction must have unit Frobenius norm"));
    }
    Ok(direction * Complex64::new(t_x.sqrt(), 0.0))
}

/// Uniformly distributed direction on the unit Frobenius sphere.
pub fn random_unit_direction<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    loop {
        let m = CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng));
        let n = m.norm();
        if n > 1e-300 {
            return m.unscale(n);
        }
    }
}

/// Unit-norm complex vector, uniform on the sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    let m = random_unit_direction(len, 1, rng);
    m.column(0).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_values() {
        assert_eq!(path_loss_db(1.0).unwrap(), 32.6);
        assert!((path_loss_db(10.0).unwrap() - 69.3).abs() < 1e-12);
        assert!((path_loss_db(4000.0).unwrap() - (32.6 + 36.7 * 4000f64.log10())).abs() < 1e-12);
        assert!(path_loss_db(0.0).is_err());
        assert!(path_loss_db(-3.0).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = ScenarioConfig { m: 6, ..Default::default() };
        let a = generate_channels(&cfg, &mut trial_rng(9, 3)).unwrap();
        let b = generate_channels(&cfg, &mut trial_rng(9, 3)).unwrap();
        assert_eq!(a, b);
        let c = generate_channels(&cfg, &mut trial_rng(9, 4)).unwrap();
        assert_ne!(a.h1, c.h1);
    }

    #[test]
    fn irs_prefixes_are_nested() {
        let small = ScenarioConfig { m: 3, ..Default::default() };
        let large = ScenarioConfig { m: 8, ..Default::default() };
        let a = generate_channels(&small, &mut trial_rng(5, 0)).unwrap();
        let b = generate_channels(&large, &mut trial_rng(5, 0)).unwrap();
        assert_eq!(a.h1, b.h1);
        assert_eq!(a.hr, b.hr);
        assert_eq!(a, b.truncate_irs(3).unwrap());
    }

    #[test]
    fn rayleigh_power_matches_path_loss() {
        let cfg = ScenarioConfig {
            n_t: 10,
            n_r: 1,
            k_t: 1,
            k_r: 10,
            rician_factor: 0.0,
            geometry: Some(Geometry::default()),
            ..Default::default()
        };
        let expect = path_loss_amplitude(4000.0).unwrap().powi(2);
        let mut acc = 0.0;
        let mut count = 0usize;
        for trial in 0..1000 {
            let ch = generate_channels(&cfg, &mut trial_rng(1, trial)).unwrap();
            acc += ch.h1.norm_squared();
            count += ch.h1.len();
        }
        let mean = acc / count as f64;
        assert!((mean / expect - 1.0).abs() < 0.02, "mean {mean} vs {expect}");
    }

    #[test]
    fn large_rician_factor_is_los() {
        let cfg = ScenarioConfig { rician_factor: 1e10, ..Default::default() };
        let mut rng = trial_rng(2, 0);
        let seeds: [u64; 7] = std::array::from_fn(|_| rng.next_u64());
        let ch = generate_channels(&cfg, &mut trial_rng(2, 0)).unwrap();
        let los = LinkSampler::new(seeds[0], 0.0, 1.0);
        for r in 0..cfg.k_r {
            for c in 0..cfg.n_t {
                assert!((ch.h1[(r, c)] - los.los(r, c)).norm() < 1e-3);
            }
        }
    }

    #[test]
    fn rician_power_split() {
        let eps = 3.0;
        let sampler = LinkSampler::new(4, eps, 1.0);
        let los_w = sampler.los_weight;
        let nlos_w = sampler.nlos_weight;
        assert!(((los_w * los_w) / (nlos_w * nlos_w) - eps).abs() < 1e-12);
        let m = LinkSampler::new(4, eps, 1.0).by_rows(200, 200);
        let fresh = LinkSampler::new(4, eps, 1.0);
        let nlos_power: f64 = (0..200)
            .flat_map(|r| (0..200).map(move |c| (r, c)))
            .map(|(r, c)| (m[(r, c)] - fresh.los(r, c) * los_w).norm_sqr())
            .sum::<f64>()
            / 40000.0;
        let ratio = los_w * los_w / nlos_power;
        // |z|² of a unit complex Gaussian has unit standard deviation, so the
        // relative standard error over 40000 entries is 1/200.
        assert!((ratio / eps - 1.0).abs() < 3.0 / 200.0, "ratio {ratio}");
    }

    #[test]
    fn error_sample_scaling() {
        let mut rng = trial_rng(3, 0);
        let dir = random_unit_direction(3, 2, &mut rng);
        assert!(worst_case_error_sample(3, 2, 0.0, &dir).unwrap().iter().all(|z| z.norm() == 0.0));
        let e = worst_case_error_sample(3, 2, 0.001, &dir).unwrap();
        assert!((e.norm_squared() - 0.001).abs() < 1e-12);
        let mut e11 = CMatrix::zeros(2, 2);
        e11[(0, 0)] = Complex64::new(1.0, 0.0);
        let s = worst_case_error_sample(2, 2, 4.0, &e11).unwrap();
        assert_eq!(s[(0, 0)], Complex64::new(2.0, 0.0));
        assert!(worst_case_error_sample(2, 2, 4.0, &(e11.clone() * Complex64::new(2.0, 0.0))).is_err());
        assert!(worst_case_error_sample(2, 2, -1.0, &e11).is_err());
    }

    #[test]
    fn config_json_round_trip_and_rejections() {
        let cfg = ScenarioConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"SI\""));
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let bad = ScenarioConfig { k_r: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { p_s: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noise_helper() {
        let n = noise_power_linear(-174.0, 1.0);
        assert!((n / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
    }
}
