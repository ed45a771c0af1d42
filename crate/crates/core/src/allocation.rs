//! Inner power-allocation solvers.
//!
//! * [`water_fill`]: classic water-filling over effective gains.
//! * [`capped_water_fill`]: source power allocation maximizing
//!   `Σ log(1 + s_i γ_i / d_i)` subject to the budget and to the composite
//!   stream strengths `s_i γ_i` staying in descending order.
//! * [`adversary_fill`]: the adversary's best interference split for a fixed
//!   source allocation.
//! * [`inner_minimax`]: alternation of the two until the interference stops
//!   moving.
//!
//! The capped problem is solved exactly. With `u_i = s_i γ_i` it becomes a
//! separable concave maximization under an isotonic (non-increasing)
//! constraint, so for a fixed budget multiplier `ν` the optimum is given by
//! pool-adjacent-violators, and `ν` is found by bisection on the budget.

use serde::{Deserialize, Serialize};

use crate::rates::sr_rate_eigen;
use crate::{Error, Result};

const BISECTION_STEPS: usize = 200;
const BUDGET_REL_TOL: f64 = 1e-14;

/// Output of a water-filling solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub powers: Vec<f64>,
    /// Water level `μ` such that active streams satisfy `γ_i = μ − d_i/s_i`
    /// (for capped fills, inside each pooled group in the aggregate sense).
    pub level: f64,
    /// False when the budget is positive but no stream can carry power.
    pub usable: bool,
}

/// Allocation state at an inner fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationState {
    pub gamma_s: Vec<f64>,
    pub gamma_r: Vec<f64>,
    pub sigma_r2: Vec<f64>,
    pub water_level_s: f64,
    pub water_level_adv: f64,
    /// Stream `i` carries `gamma_s[pairing[i]]`; always the identity here since
    /// both spectra and allocations are kept in descending order.
    pub pairing: Vec<usize>,
}

/// Result of [`inner_minimax`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxOutcome {
    pub state: AllocationState,
    /// Source-relay rate of `state` in bits per channel use.
    pub r_sr: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_inputs(name: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid(format!("{name} has entry {x}, expected finite and non-negative")));
    }
    Ok(())
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget must be finite and non-negative, got {budget}")));
    }
    Ok(())
}

/// Classic water-filling: `p_i = [μ − 1/g_i]⁺` with `Σp_i = budget`.
pub fn water_fill(gains: &[f64], budget: f64) -> Result<Fill> {
    check_inputs("gains", gains)?;
    check_budget(budget)?;
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Ok(Fill { powers: vec![0.0; gains.len()], level: 0.0, usable: budget == 0.0 });
    }
    if budget == 0.0 {
        return Ok(Fill { powers: vec![0.0; gains.len()], level: 0.0, usable: true });
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut inv_sum = 0.0;
    let mut level = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let inv = 1.0 / gains[i];
        let candidate = (budget + inv_sum + inv) / (k + 1) as f64;
        if k > 0 && candidate <= inv {
            break;
        }
        inv_sum += inv;
        level = candidate;
    }
    let mut powers: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { (level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    normalize_budget(&mut powers, budget);
    Ok(Fill { powers, level, usable: true })
}

fn normalize_budget(powers: &mut [f64], budget: f64) {
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        let k = budget / total;
        powers.iter_mut().for_each(|p| *p *= k);
    }
}

/// One pooled group in the isotonic solve.
#[derive(Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    inv_s: f64,
    value: f64,
}

/// Maximizes `Σ_B log(d_i + u) − ν·u·Σ_B 1/s_i` over `u ≥ 0`.
fn block_optimum(d: &[f64], inv_s_sum: f64, nu: f64) -> f64 {
    let target = nu * inv_s_sum;
    let f = |u: f64| d.iter().map(|di| 1.0 / (di + u)).sum::<f64>() - target;
    if f(0.0) <= 0.0 {
        return 0.0;
    }
    // f is convex and decreasing, so Newton from the left stays left of the
    // root and increases monotonically.
    let mut u = 0.0;
    for _ in 0..100 {
        let (val, der) = d.iter().fold((-target, 0.0), |(v, g), di| {
            let x = 1.0 / (di + u);
            (v + x, g - x * x)
        });
        if val <= 0.0 {
            break;
        }
        let next = u - val / der;
        if !(next > u) {
            break;
        }
        let done = next - u <= 1e-15 * next;
        u = next;
        if done {
            break;
        }
    }
    u
}

/// Optimal non-increasing `u` for multiplier `nu` by pool-adjacent-violators.
fn isotonic_solution(s: &[f64], d: &[f64], nu: f64, out: &mut Vec<f64>) {
    let mut stack: Vec<Block> = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let mut blk = Block { start: i, end: i + 1, inv_s: 1.0 / s[i], value: 0.0 };
        blk.value = block_optimum(&d[i..i + 1], blk.inv_s, nu);
        while let Some(top) = stack.last() {
            if top.value >= blk.value {
                break;
            }
            let top = stack.pop().expect("non-empty stack");
            blk = Block { start: top.start, end: blk.end, inv_s: top.inv_s + blk.inv_s, value: 0.0 };
            blk.value = block_optimum(&d[blk.start..blk.end], blk.inv_s, nu);
        }
        stack.push(blk);
    }
    out.clear();
    for b in &stack {
        out.extend(std::iter::repeat_n(b.value, b.end - b.start));
    }
}

/// Source allocation maximizing `Σ log₂(1 + s_i γ_i / d_i)` with `Σγ = budget`
/// and `s_i γ_i ≥ s_{i+1} γ_{i+1}`.
///
/// `spec_1` must be descending; `den` must be positive.
pub fn capped_water_fill(spec_1: &[f64], den: &[f64], budget: f64) -> Result<Fill> {
    check_inputs("spectrum", spec_1)?;
    check_budget(budget)?;
    if den.len() != spec_1.len() {
        return Err(Error::invalid(format!("spectrum has {} entries, denominators {}", spec_1.len(), den.len())));
    }
    if let Some(x) = den.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::invalid(format!("denominators must be positive, got {x}")));
    }
    if spec_1.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("spectrum must be in descending order"));
    }
    let n = spec_1.iter().take_while(|&&s| s > 0.0).count();
    let mut powers = vec![0.0; spec_1.len()];
    if n == 0 {
        return Ok(Fill { powers, level: 0.0, usable: budget == 0.0 });
    }
    if budget == 0.0 {
        return Ok(Fill { powers, level: 0.0, usable: true });
    }
    let s = &spec_1[..n];
    let d = &den[..n];
    let mut u = Vec::with_capacity(n);
    let spend = |nu: f64, u: &mut Vec<f64>| -> f64 {
        isotonic_solution(s, d, nu, u);
        u.iter().zip(s).map(|(ui, si)| ui / si).sum()
    };

    let nu_zero = s.iter().zip(d).map(|(si, di)| si / di).fold(0.0, f64::max);
    let mut hi = nu_zero;
    let mut lo = nu_zero * 0.5;
    while spend(lo, &mut u) < budget {
        hi = lo;
        lo *= 0.25;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::invalid("capped water-filling could not bracket the budget"));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let b = spend(mid, &mut u);
        if (b - budget).abs() <= BUDGET_REL_TOL * budget {
            lo = mid;
            break;
        }
        if b >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    spend(lo, &mut u);
    for i in 0..n {
        powers[i] = u[i] / s[i];
    }
    normalize_budget(&mut powers, budget);
    Ok(Fill { powers, level: 1.0 / lo, usable: true })
}

/// Adversary's interference split `σ²_r` minimizing the source-relay rate for
/// fixed `γ_s`, `γ_r` with `Σσ²_r = t_prime`.
///
/// Returns the split and the multiplier `λ`. Streams with no signal or no relay
/// power receive nothing.
pub fn adversary_fill(
    spec_1: &[f64],
    gamma_s: &[f64],
    gamma_r: &[f64],
    t_prime: f64,
    noise_plus_bound: f64,
) -> Result<(Vec<f64>, f64)> {
    check_inputs("spectrum", spec_1)?;
    check_inputs("gamma_s", gamma_s)?;
    check_inputs("gamma_r", gamma_r)?;
    check_budget(t_prime)?;
    if gamma_s.len() != spec_1.len() {
        return Err(Error::invalid(format!("spectrum has {} entries, gamma_s {}", spec_1.len(), gamma_s.len())));
    }
    if !(noise_plus_bound > 0.0) || !noise_plus_bound.is_finite() {
        return Err(Error::invalid("noise floor must be positive"));
    }
    let n = spec_1.len();
    let mut out = vec![0.0; n];
    let noise = noise_plus_bound;
    let streams: Vec<(usize, f64, f64)> = (0..n)
        .filter_map(|i| {
            let s = spec_1[i] * gamma_s[i];
            let g = gamma_r.get(i).copied().unwrap_or(0.0);
            (s > 0.0 && g > 0.0).then_some((i, s, g))
        })
        .collect();
    if t_prime == 0.0 || streams.is_empty() {
        return Ok((out, 0.0));
    }
    let alloc = |lambda: f64, out: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for &(i, s, g) in &streams {
            let x = (((s * s + 4.0 * s * g / lambda).sqrt() - s - 2.0 * noise) / (2.0 * g)).max(0.0);
            out[i] = x;
            total += x;
        }
        total
    };
    let lambda_zero = streams.iter().map(|&(_, s, g)| s * g / (noise * (noise + s))).fold(0.0, f64::max);
    let mut hi = lambda_zero;
    let mut lo = lambda_zero * 0.5;
    while alloc(lo, &mut out) < t_prime {
        hi = lo;
        lo *= 0.25;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::invalid("adversary water level could not bracket the budget"));
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let b = alloc(mid, &mut out);
        if (b - t_prime).abs() <= BUDGET_REL_TOL * t_prime {
            lo = mid;
            break;
        }
        if b >= t_prime {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    alloc(lo, &mut out);
    normalize_budget(&mut out, t_prime);
    Ok((out, lo))
}

/// Alternates [`adversary_fill`] and [`capped_water_fill`] until the
/// interference split moves by at most `tol` in ℓ₁.
///
/// On non-convergence the iterate with the smallest source-relay rate is
/// returned, so the reported rate is still achievable against the adversary's
/// best response.
pub fn inner_minimax(
    spec_1: &[f64],
    gamma_r: &[f64],
    t_prime: f64,
    p_s: f64,
    noise_plus_bound: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MinimaxOutcome> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    check_inputs("gamma_r", gamma_r)?;
    let n = spec_1.len();
    let interference_den = |sigma: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| noise_plus_bound + gamma_r.get(i).copied().unwrap_or(0.0) * sigma[i])
            .collect()
    };
    let mut fill = capped_water_fill(spec_1, &vec![noise_plus_bound; n], p_s)?;
    let mut sigma_prev = vec![0.0; n];
    let mut best: Option<(MinimaxOutcome, f64)> = None;
    for q in 1..=max_iter {
        let (sigma, lambda) = adversary_fill(spec_1, &fill.powers, gamma_r, t_prime, noise_plus_bound)?;
        let r_sr = sr_rate_eigen(spec_1, &fill.powers, gamma_r, &sigma, noise_plus_bound);
        let change: f64 = sigma.iter().zip(&sigma_prev).map(|(a, b)| (a - b).abs()).sum();
        let outcome = MinimaxOutcome {
            state: AllocationState {
                gamma_s: fill.powers.clone(),
                gamma_r: gamma_r.to_vec(),
                sigma_r2: sigma.clone(),
                water_level_s: fill.level,
                water_level_adv: lambda,
                pairing: (0..n).collect(),
            },
            r_sr,
            iterations: q,
            converged: false,
        };
        if change <= tol {
            return Ok(MinimaxOutcome { converged: true, ..outcome });
        }
        if best.as_ref().is_none_or(|(_, r)| r_sr < *r) {
            best = Some((outcome, r_sr));
        }
        fill = capped_water_fill(spec_1, &interference_den(&sigma), p_s)?;
        sigma_prev = sigma;
    }
    let (mut outcome, _) = best.expect("at least one iteration ran");
    outcome.iterations = max_iter;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(s: &[f64], d: &[f64], g: &[f64]) -> f64 {
        crate::rates::sum_log_rate(s, g, d)
    }

    #[test]
    fn water_fill_examples() {
        let f = water_fill(&[1.0, 1.0], 2.0).unwrap();
        assert_eq!(f.powers, vec![1.0, 1.0]);
        let f = water_fill(&[4.0, 1.0], 1.0).unwrap();
        assert!((f.level - 1.125).abs() < 1e-15);
        assert!((f.powers[0] - 0.875).abs() < 1e-15);
        assert!((f.powers[1] - 0.125).abs() < 1e-15);
        let f = water_fill(&[4.0, 1.0], 0.0).unwrap();
        assert_eq!(f.powers, vec![0.0, 0.0]);
        assert!(f.usable);
    }

    #[test]
    fn water_fill_drops_weak_channel() {
        let f = water_fill(&[4.0, 0.1], 0.5).unwrap();
        assert_eq!(f.powers[1], 0.0);
        assert!((f.powers[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn water_fill_no_usable_channel() {
        let f = water_fill(&[0.0, 0.0], 1.0).unwrap();
        assert!(!f.usable);
        assert_eq!(f.powers, vec![0.0, 0.0]);
        assert!(water_fill(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn capped_matches_plain_when_caps_slack() {
        let f = capped_water_fill(&[4.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((f.powers[0] - 0.875).abs() < 1e-12);
        assert!((f.powers[1] - 0.125).abs() < 1e-12);
        assert!((f.level - 1.125).abs() < 1e-9);
    }

    #[test]
    fn capped_binding_example() {
        // Unconstrained filling would give [0.2917, 0.7083], violating
        // 4γ₁ ≥ 3γ₂. The constrained optimum pools both streams at equal
        // composite strength: 4γ₁ = 3γ₂ with γ₁ + γ₂ = 1.
        let f = capped_water_fill(&[4.0, 3.0], &[3.0, 1.0], 1.0).unwrap();
        assert!((f.powers[0] - 3.0 / 7.0).abs() < 1e-12, "{:?}", f.powers);
        assert!((f.powers[1] - 4.0 / 7.0).abs() < 1e-12);
        // Compare with a fine grid over the feasible segment.
        let best = (0..=100_000)
            .map(|k| {
                let g1 = k as f64 / 100_000.0;
                let g = [g1, 1.0 - g1];
                if 4.0 * g[0] + 1e-15 >= 3.0 * g[1] {
                    objective(&[4.0, 3.0], &[3.0, 1.0], &g)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = objective(&[4.0, 3.0], &[3.0, 1.0], &f.powers);
        assert!(got >= best - 1e-9);
    }

    #[test]
    fn capped_single_stream() {
        let f = capped_water_fill(&[2.0], &[0.5], 3.0).unwrap();
        assert_eq!(f.powers, vec![3.0]);
    }

    #[test]
    fn capped_zero_spectrum_tail() {
        let f = capped_water_fill(&[2.0, 1.0, 0.0], &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(f.powers[2], 0.0);
        assert!((f.powers.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn capped_rejects_bad_input() {
        assert!(capped_water_fill(&[1.0, 2.0], &[1.0, 1.0], 1.0).is_err());
        assert!(capped_water_fill(&[2.0, 1.0], &[1.0, 0.0], 1.0).is_err());
        assert!(capped_water_fill(&[2.0, 1.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn adversary_zero_budget() {
        let (x, _) = adversary_fill(&[3.0, 1.0], &[1.0, 1.0], &[0.5, 0.5], 0.0, 1.0).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn adversary_single_stream_spends_budget() {
        let (x, _) = adversary_fill(&[3.0], &[2.0], &[0.5], 0.7, 1.1).unwrap();
        assert!((x[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn adversary_skips_idle_streams() {
        let (x, _) = adversary_fill(&[3.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[0.5], 2.0, 1.0).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn adversary_two_streams_grid() {
        let s = [5.0, 2.0];
        let gs = [1.2, 0.8];
        let gr = [0.6, 0.4];
        let t = 1.5;
        let rate = |x: &[f64]| sr_rate_eigen(&s, &gs, &gr, x, 1.0);
        let (x, _) = adversary_fill(&s, &gs, &gr, t, 1.0).unwrap();
        let grid_best = (0..=200_000)
            .map(|k| {
                let a = t * k as f64 / 200_000.0;
                rate(&[a, t - a])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(rate(&x) <= grid_best + 1e-9);
        assert!((x.iter().sum::<f64>() - t).abs() < 1e-12);
    }

    #[test]
    fn minimax_zero_bound_is_one_step() {
        let out = inner_minimax(&[4.0, 1.0], &[0.5, 0.5], 0.0, 1.0, 1.0, 1e-9, 50).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        let plain = capped_water_fill(&[4.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(out.state.gamma_s, plain.powers);
    }

    #[test]
    fn minimax_symmetric_fixed_point() {
        let out = inner_minimax(&[2.0, 2.0], &[0.5, 0.5], 1.0, 2.0, 1.0, 1e-12, 50).unwrap();
        assert!(out.converged);
        assert!((out.state.gamma_s[0] - out.state.gamma_s[1]).abs() < 1e-9);
        assert!((out.state.sigma_r2[0] - out.state.sigma_r2[1]).abs() < 1e-9);
    }
}
