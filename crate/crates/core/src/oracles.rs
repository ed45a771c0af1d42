//! Slow reference solvers used to cross-check the production algorithms.
//!
//! Each oracle uses a different method from the code it checks: dense grids,
//! projected gradient on a simplex, cofactor expansion, characteristic
//! polynomial roots. None of them is used on a production path.

use num_complex::Complex64;

use crate::allocation::inner_minimax;
use crate::optimizer::{HopModel, SolveOptions};
use crate::rates::sum_log_rate;
use crate::tensor_ops::CMatrix;
use crate::Result;

/// Determinant by cofactor expansion along the first row.
pub fn det_cofactor(m: &CMatrix) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant needs a square matrix");
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let minor = m.clone().remove_row(0).remove_column(j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += m[(0, j)] * det_cofactor(&minor) * sign;
            }
            acc
        }
    }
}

/// Characteristic polynomial coefficients `c₀..c_n` of `det(λI − A)`
/// (leading coefficient 1 first) by Faddeev-LeVerrier.
pub fn char_poly(a: &CMatrix) -> Vec<Complex64> {
    let n = a.nrows();
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    let mut m = CMatrix::zeros(n, n);
    let id = CMatrix::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    let scale = 1.0 + coeffs.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * scale).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * scale {
            break;
        }
    }
    // Polish each root with Newton steps on the full polynomial.
    let deriv: Vec<Complex64> = coeffs[..n].iter().enumerate().map(|(k, c)| c * (n - k) as f64).collect();
    let eval_d = |z: Complex64| deriv.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    for r in z.iter_mut() {
        for _ in 0..5 {
            let d = eval_d(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    z
}

/// Eigenvalues of a Hermitian matrix via characteristic-polynomial roots,
/// sorted descending.
pub fn eigenvalues_by_roots(a: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = poly_roots(&char_poly(a)).into_iter().map(|z| z.re).collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Water-filling by bisection on the water level.
pub fn water_fill_bisection(gains: &[f64], budget: f64) -> Vec<f64> {
    let powers = |mu: f64| -> Vec<f64> {
        gains.iter().map(|&g| if g > 0.0 { (mu - 1.0 / g).max(0.0) } else { 0.0 }).collect()
    };
    if budget == 0.0 || !gains.iter().any(|&g| g > 0.0) {
        return vec![0.0; gains.len()];
    }
    let mut lo = 0.0;
    let mut hi = budget + gains.iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).fold(0.0, f64::max);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if powers(mid).iter().sum::<f64>() > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    powers(0.5 * (lo + hi))
}

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Accelerated projected gradient on a scaled simplex, for a smooth objective
/// to be minimized. Runs from each start and returns the best point found.
fn simplex_minimize(
    dim: usize,
    total: f64,
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    starts: &[Vec<f64>],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut best = (vec![total / dim as f64; dim], f64::INFINITY);
    for start in starts {
        let mut x = project_simplex(start, total);
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut step = 1.0;
        let mut fx = f(&x);
        for _ in 0..max_iter {
            let g = grad(&y);
            let fy = f(&y);
            // Backtracking on the standard sufficient-decrease test.
            let mut x_new;
            loop {
                let cand: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
                x_new = project_simplex(&cand, total);
                let d: Vec<f64> = x_new.iter().zip(&y).map(|(a, b)| a - b).collect();
                let lin: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
                let quad: f64 = d.iter().map(|v| v * v).sum::<f64>() / (2.0 * step);
                if f(&x_new) <= fy + lin + quad + 1e-15 * fy.abs() || step < 1e-14 {
                    break;
                }
                step *= 0.5;
            }
            let f_new = f(&x_new);
            // Restart momentum when it stops helping.
            let t_next = if f_new > fx { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
            let beta = if f_new > fx { 0.0 } else { (t - 1.0) / t_next };
            y = x_new.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            let moved: f64 = x_new.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            x = x_new;
            fx = f_new.min(fx);
            t = t_next;
            step *= 1.5;
            if moved <= 1e-15 * total.max(1.0) {
                break;
            }
        }
        let fx = f(&x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

fn simplex_starts(dim: usize, total: f64) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![total / dim as f64; dim]];
    for k in 0..dim {
        let mut v = vec![0.0; dim];
        v[k] = total;
        starts.push(v);
    }
    starts
}

/// Adversary oracle: minimizes the source-relay rate over interference splits
/// with `Σσ² = t_prime` by accelerated projected gradient with restarts.
/// Returns the minimizing split and the rate in bits.
pub fn adversary_projected_gradient(
    spec_1: &[f64],
    gamma_s: &[f64],
    gamma_r: &[f64],
    t_prime: f64,
    noise: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = spec_1.len();
    let s: Vec<f64> = (0..n).map(|i| spec_1[i] * gamma_s[i]).collect();
    let g: Vec<f64> = (0..n).map(|i| gamma_r.get(i).copied().unwrap_or(0.0)).collect();
    let f = |x: &[f64]| -> f64 {
        (0..n).map(|i| (s[i] / (noise + g[i] * x[i])).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
    };
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let a = noise + g[i] * x[i];
                -g[i] * s[i] / (a * (a + s[i])) / std::f64::consts::LN_2
            })
            .collect()
    };
    if n == 0 || t_prime == 0.0 {
        return (vec![0.0; n], f(&vec![0.0; n]));
    }
    simplex_minimize(n, t_prime, &f, &grad, &simplex_starts(n, t_prime), max_iter)
}

/// Capped water-filling oracle.
///
/// The feasible set `{γ ≥ 0, Σγ = P, s_iγ_i non-increasing}` is the convex hull
/// of the vectors `v_k` with `s_iγ_i = t_k` for `i ≤ k` and zero beyond, so
/// the problem is a concave maximization over simplex weights. Returns the
/// allocation and its objective (bits).
pub fn capped_vertex_oracle(spec_1: &[f64], den: &[f64], budget: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = spec_1.iter().take_while(|&&s| s > 0.0).count();
    let full = spec_1.len();
    if n == 0 || budget == 0.0 {
        return (vec![0.0; full], 0.0);
    }
    let s = &spec_1[..n];
    let d = &den[..n];
    let vertices: Vec<Vec<f64>> = (1..=n)
        .map(|k| {
            let t = budget / s[..k].iter().map(|x| 1.0 / x).sum::<f64>();
            (0..n).map(|i| if i < k { t / s[i] } else { 0.0 }).collect()
        })
        .collect();
    let gamma_of = |w: &[f64]| -> Vec<f64> {
        (0..n).map(|i| w.iter().zip(&vertices).map(|(wk, v)| wk * v[i]).sum()).collect()
    };
    let neg_obj = |w: &[f64]| -> f64 { -sum_log_rate(s, &gamma_of(w), d) };
    let grad = |w: &[f64]| -> Vec<f64> {
        let gam = gamma_of(w);
        let dg: Vec<f64> = (0..n).map(|i| s[i] / (d[i] + s[i] * gam[i]) / std::f64::consts::LN_2).collect();
        vertices.iter().map(|v| -v.iter().zip(&dg).map(|(a, b)| a * b).sum::<f64>()).collect()
    };
    let (w, val) = simplex_minimize(n, 1.0, &neg_obj, &grad, &simplex_starts(n, 1.0), max_iter);
    let mut gamma = gamma_of(&w);
    gamma.resize(full, 0.0);
    (gamma, -val)
}

/// Dense grid search over full-duplex relay power. At each grid point the
/// relay is water-filled with that budget and the source-relay hop is solved
/// by [`inner_minimax`]. Returns `(best rate, maximizing power)`.
pub fn fd_power_grid(
    model: &HopModel,
    p_s: f64,
    p_r: f64,
    points: usize,
    opts: &SolveOptions,
) -> Result<(f64, f64)> {
    let tol = (opts.inner_tol_rel * model.t_prime).max(f64::MIN_POSITIVE);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=points {
        let p = p_r * k as f64 / points as f64;
        let gamma_r = model.relay_powers(p)?;
        let r_rd = model.r_rd(&gamma_r);
        let inner = inner_minimax(&model.spec_1, &gamma_r, model.t_prime, p_s, model.noise_sr, tol, opts.inner_max_iter)?;
        let r = inner.r_sr.min(r_rd);
        if r > best.0 {
            best = (r, p);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_ops::{real_diag, real_matrix};

    #[test]
    fn cofactor_small() {
        let m = real_matrix(3, 3, &[2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0]);
        assert!((det_cofactor(&m).re - 25.0).abs() < 1e-12);
    }

    #[test]
    fn roots_of_diagonal() {
        let v = eigenvalues_by_roots(&real_diag(&[1.0, 3.0, 2.0]));
        for (a, b) in v.iter().zip(&[3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 3.0], 1.0);
        assert_eq!(p, vec![0.0, 0.0, 1.0]);
        let p = project_simplex(&[0.2, 0.2], 1.0);
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn water_fill_bisection_example() {
        let p = water_fill_bisection(&[4.0, 1.0], 1.0);
        assert!((p[0] - 0.875).abs() < 1e-12);
    }

    #[test]
    fn capped_oracle_binding_example() {
        let (g, _) = capped_vertex_oracle(&[4.0, 3.0], &[3.0, 1.0], 1.0, 20_000);
        assert!((g[0] - 3.0 / 7.0).abs() < 1e-6, "{g:?}");
    }
}
