//! Paired-seed Monte Carlo sweeps.
//!
//! Trial `l` of a sweep always draws its channels from stream `l` of the base
//! seed, whatever the axis value. Sweeps over `t_r`, `p_s` and `p_r` reuse the
//! same matrices; sweeps over `m` reuse the non-IRS channels and nest the IRS
//! elements. Trials run in parallel and are reduced in index order, so output
//! does not depend on scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channels, trial_rng, ChannelSet, ScenarioConfig};
use crate::optimizer::{mode_switch_threshold, solve_fd, solve_hd, SolveOptions};
use crate::{Error, Result};

/// Header row of the CSV output.
pub const CSV_HEADER: &str = "axis_value,r_av_fd,r_av_hd,r_av_selected,convergence_fraction,mean_iterations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Residual self-interference bound.
    #[serde(rename = "t_r")]
    TR,
    /// IRS element count.
    #[serde(rename = "m")]
    M,
    /// Relay receive antennas out of a fixed total `k_r + k_t`.
    #[serde(rename = "k_r_split")]
    KrSplit,
    #[serde(rename = "p_s")]
    PS,
    #[serde(rename = "p_r")]
    PR,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_r" => Ok(SweepAxis::TR),
            "m" => Ok(SweepAxis::M),
            "k_r_split" => Ok(SweepAxis::KrSplit),
            "p_s" => Ok(SweepAxis::PS),
            "p_r" => Ok(SweepAxis::PR),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// How `t_r` values are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrScale {
    /// Fractions of `Tr(H_r H_rᴴ)` of each realization.
    #[default]
    Normalized,
    /// Absolute trace bounds.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub json_output: Option<PathBuf>,
    /// Applies to the `t_r` axis and to `base.t_bounds.r`.
    #[serde(default)]
    pub t_r_scale: TrScale,
    #[serde(default)]
    pub options: SolveOptions,
}

impl SweepSpec {
    pub fn new(base: ScenarioConfig, axis: SweepAxis, values: Vec<f64>, trials: usize) -> Self {
        SweepSpec {
            base,
            axis,
            values,
            trials,
            output: None,
            json_output: None,
            t_r_scale: TrScale::default(),
            options: SolveOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one axis value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("sweep needs at least one trial".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Config(format!("axis value {v} must be finite and non-negative")));
        }
        let integral = matches!(self.axis, SweepAxis::M | SweepAxis::KrSplit);
        if integral && self.values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::Config("m and k_r_split values must be integers".into()));
        }
        if self.axis == SweepAxis::KrSplit {
            let total = self.base.k_r + self.base.k_t;
            if self.values.iter().any(|&v| v < 1.0 || v as usize >= total) {
                return Err(Error::Config(format!("k_r_split values must lie in [1, {}]", total - 1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub r_av_fd: f64,
    pub r_av_hd: f64,
    pub r_av_selected: f64,
    pub convergence_fraction: f64,
    pub mean_iterations: f64,
}

/// Outcome of one trial at one axis value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPoint {
    pub fd: f64,
    pub hd: f64,
    pub selected: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn solve_point(cfg: &ScenarioConfig, ch: &ChannelSet, opts: &SolveOptions) -> Result<TrialPoint> {
    let fd = solve_fd(cfg, ch, opts)?;
    let hd = solve_hd(cfg, ch)?;
    Ok(TrialPoint {
        fd: fd.rate.r,
        hd: hd.rate.r,
        selected: fd.rate.r.max(hd.rate.r),
        converged: fd.rate.converged,
        iterations: fd.rate.iterations,
    })
}

fn scaled_tr(scale: TrScale, value: f64, ch: &ChannelSet) -> f64 {
    match scale {
        TrScale::Normalized => value * ch.hr_power(),
        TrScale::Absolute => value,
    }
}

fn run_trial(spec: &SweepSpec, trial: u64) -> Result<Vec<TrialPoint>> {
    let base = &spec.base;
    let opts = &spec.options;
    let draw = |cfg: &ScenarioConfig| -> Result<ChannelSet> {
        let mut ch = generate_channels(cfg, &mut trial_rng(base.seed, trial))?;
        ch.t_bounds.tr = scaled_tr(spec.t_r_scale, cfg.t_bounds.tr, &ch);
        Ok(ch)
    };
    match spec.axis {
        SweepAxis::TR => {
            let mut ch = draw(base)?;
            spec.values
                .iter()
                .map(|&v| {
                    ch.t_bounds.tr = scaled_tr(spec.t_r_scale, v, &ch);
                    solve_point(base, &ch, opts)
                })
                .collect()
        }
        SweepAxis::M => {
            let m_max = spec.values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
            let full = draw(&ScenarioConfig { m: m_max, ..base.clone() })?;
            spec.values
                .iter()
                .map(|&v| {
                    let m = v as usize;
                    let ch = full.truncate_irs(m)?;
                    solve_point(&ScenarioConfig { m, ..base.clone() }, &ch, opts)
                })
                .collect()
        }
        SweepAxis::KrSplit => {
            let total = base.k_r + base.k_t;
            spec.values
                .iter()
                .map(|&v| {
                    let k_r = v as usize;
                    let cfg = ScenarioConfig { k_r, k_t: total - k_r, ..base.clone() };
                    let ch = draw(&cfg)?;
                    solve_point(&cfg, &ch, opts)
                })
                .collect()
        }
        SweepAxis::PS | SweepAxis::PR => {
            let ch = draw(base)?;
            spec.values
                .iter()
                .map(|&v| {
                    let cfg = match spec.axis {
                        SweepAxis::PS => ScenarioConfig { p_s: v, ..base.clone() },
                        _ => ScenarioConfig { p_r: v, ..base.clone() },
                    };
                    solve_point(&cfg, &ch, opts)
                })
                .collect()
        }
    }
}

/// Per-trial results: `out[l][k]` is trial `l` at axis value `k`.
pub fn sweep_trials(spec: &SweepSpec) -> Result<Vec<Vec<TrialPoint>>> {
    spec.validate()?;
    (0..spec.trials as u64).into_par_iter().map(|l| run_trial(spec, l)).collect()
}

/// Averages per-trial results into one row per axis value.
pub fn summarize(spec: &SweepSpec, trials: &[Vec<TrialPoint>]) -> Vec<SweepRow> {
    let l = trials.len() as f64;
    spec.values
        .iter()
        .enumerate()
        .map(|(k, &axis_value)| {
            let mean = |f: &dyn Fn(&TrialPoint) -> f64| trials.iter().map(|t| f(&t[k])).sum::<f64>() / l;
            SweepRow {
                axis_value,
                r_av_fd: mean(&|p| p.fd),
                r_av_hd: mean(&|p| p.hd),
                r_av_selected: mean(&|p| p.selected),
                convergence_fraction: mean(&|p| if p.converged { 1.0 } else { 0.0 }),
                mean_iterations: mean(&|p| p.iterations as f64),
            }
        })
        .collect()
}

/// Runs the sweep and writes any requested output files.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let trials = sweep_trials(spec)?;
    let rows = summarize(spec, &trials);
    if let Some(path) = &spec.output {
        write_csv(path, &rows)?;
    }
    if let Some(path) = &spec.json_output {
        write_json(path, spec, &rows)?;
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.axis_value, r.r_av_fd, r.r_av_hd, r.r_av_selected, r.convergence_fraction, r.mean_iterations
        ));
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents).map_err(io_err(path))
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_file(path, rows_to_csv(rows).as_bytes())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    config: &'a ScenarioConfig,
    axis: SweepAxis,
    trials: usize,
    t_r_scale: TrScale,
    rows: &'a [SweepRow],
}

pub fn rows_to_json(spec: &SweepSpec, rows: &[SweepRow]) -> Result<String> {
    let doc = SweepDocument { config: &spec.base, axis: spec.axis, trials: spec.trials, t_r_scale: spec.t_r_scale, rows };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    write_file(path, rows_to_json(spec, rows)?.as_bytes())
}

/// Rows of a relay antenna split sweep and the split maximizing the average
/// FD rate (earliest on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSweep {
    pub rows: Vec<SweepRow>,
    pub best_k_r: usize,
}

/// Sweeps `K_r = 1..K−1` with `K_t = K − K_r`.
pub fn antenna_split_sweep(
    total_relay_antennas: usize,
    template: &ScenarioConfig,
    trials: usize,
    options: SolveOptions,
) -> Result<SplitSweep> {
    if total_relay_antennas < 2 {
        return Err(Error::invalid("antenna split needs at least two relay antennas"));
    }
    let base = ScenarioConfig { k_r: 1, k_t: total_relay_antennas - 1, ..template.clone() };
    let values = (1..total_relay_antennas).map(|k| k as f64).collect();
    let spec = SweepSpec { options, ..SweepSpec::new(base, SweepAxis::KrSplit, values, trials) };
    let rows = run_sweep(&spec)?;
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.r_av_fd > rows[best].r_av_fd {
            best = i;
        }
    }
    Ok(SplitSweep { best_k_r: rows[best].axis_value as usize, rows })
}

/// Inner iteration counts at the final FD operating point of each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistogram {
    pub max_iter: usize,
    /// `counts[k]` trials converged after exactly `k + 1` iterations.
    pub counts: Vec<usize>,
    /// Trials that hit the iteration cap without converging.
    pub diverged: usize,
    pub trials: usize,
}

impl ConvergenceHistogram {
    /// Cumulative fraction of trials converged within `k + 1` iterations.
    pub fn cdf(&self) -> Vec<f64> {
        let n = self.trials as f64;
        self.counts
            .iter()
            .scan(0usize, |acc, &c| {
                *acc += c;
                Some(*acc as f64 / n)
            })
            .collect()
    }

    pub fn converged_fraction(&self) -> f64 {
        1.0 - self.diverged as f64 / self.trials as f64
    }
}

/// Histogram of inner iteration counts over `trials` realizations of `cfg`.
/// `cfg.t_bounds.r` is interpreted according to `scale`.
pub fn convergence_histogram(
    cfg: &ScenarioConfig,
    trials: usize,
    scale: TrScale,
    opts: &SolveOptions,
) -> Result<ConvergenceHistogram> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    cfg.validate()?;
    let outcomes: Vec<(bool, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|l| -> Result<(bool, usize)> {
            let mut ch = generate_channels(cfg, &mut trial_rng(cfg.seed, l))?;
            ch.t_bounds.tr = scaled_tr(scale, cfg.t_bounds.tr, &ch);
            let fd = solve_fd(cfg, &ch, opts)?;
            Ok((fd.rate.converged, fd.rate.iterations))
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; opts.inner_max_iter];
    let mut diverged = 0;
    for (converged, iters) in outcomes {
        if converged {
            counts[iters - 1] += 1;
        } else {
            diverged += 1;
        }
    }
    Ok(ConvergenceHistogram { max_iter: opts.inner_max_iter, counts, diverged, trials })
}

/// Per-trial FD/HD switching thresholds on `t_grid` (interpreted per `scale`,
/// so normalized grids are rescaled by each realization's `Tr(H_r H_rᴴ)`).
/// The reported thresholds are in the same units as the grid.
pub fn threshold_trials(
    cfg: &ScenarioConfig,
    trials: usize,
    t_grid: &[f64],
    scale: TrScale,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    cfg.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|l| {
            let ch = generate_channels(cfg, &mut trial_rng(cfg.seed, l))?;
            let factor = scaled_tr(scale, 1.0, &ch);
            let grid: Vec<f64> = t_grid.iter().map(|t| t * factor).collect();
            let t = mode_switch_threshold(cfg, &ch, &grid, opts)?;
            Ok(if t.is_finite() { t / factor } else { t })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_base() -> ScenarioConfig {
        ScenarioConfig { n_t: 2, n_r: 2, k_t: 2, k_r: 2, m: 0, ..Default::default() }
    }

    #[test]
    fn single_trial_matches_direct_solve() {
        let base = small_base();
        let spec = SweepSpec { t_r_scale: TrScale::Absolute, ..SweepSpec::new(base.clone(), SweepAxis::TR, vec![0.3], 1) };
        let rows = run_sweep(&spec).unwrap();
        let mut ch = generate_channels(&base, &mut trial_rng(base.seed, 0)).unwrap();
        ch.t_bounds.tr = 0.3;
        let fd = solve_fd(&base, &ch, &SolveOptions::default()).unwrap();
        let hd = solve_hd(&base, &ch).unwrap();
        assert_eq!(rows[0].r_av_fd, fd.rate.r);
        assert_eq!(rows[0].r_av_hd, hd.rate.r);
        assert_eq!(rows[0].r_av_selected, fd.rate.r.max(hd.rate.r));
    }

    #[test]
    fn csv_format() {
        let rows = vec![SweepRow {
            axis_value: 0.5,
            r_av_fd: 1.25,
            r_av_hd: 0.1,
            r_av_selected: 1.25,
            convergence_fraction: 1.0,
            mean_iterations: 3.0,
        }];
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n0.5,1.25,0.1,1.25,1,3\n"));
    }

    #[test]
    fn spec_validation() {
        let base = small_base();
        assert!(SweepSpec::new(base.clone(), SweepAxis::TR, vec![], 1).validate().is_err());
        assert!(SweepSpec::new(base.clone(), SweepAxis::TR, vec![0.1], 0).validate().is_err());
        assert!(SweepSpec::new(base.clone(), SweepAxis::M, vec![1.5], 1).validate().is_err());
        assert!(SweepSpec::new(base, SweepAxis::KrSplit, vec![4.0], 1).validate().is_err());
    }

    #[test]
    fn two_antenna_split_has_one_point() {
        let s = antenna_split_sweep(2, &small_base(), 2, SolveOptions::default()).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.best_k_r, 1);
    }

    #[test]
    fn zero_rsi_histogram_is_one_iteration() {
        let cfg = ScenarioConfig { t_bounds: crate::TBounds { tr: 0.0, ..Default::default() }, ..small_base() };
        let h = convergence_histogram(&cfg, 5, TrScale::Absolute, &SolveOptions::default()).unwrap();
        assert_eq!(h.counts[0], 5);
        assert_eq!(h.diverged, 0);
        let cdf = h.cdf();
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        assert!(*cdf.last().unwrap() <= 1.0);
    }
}
