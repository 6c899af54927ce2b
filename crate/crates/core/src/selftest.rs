//! Independent reference solvers and the oracle checks run by `multical selftest`.
//!
//! Nothing here calls into the solvers it checks. The reference solvers are
//! slow and only meant for tiny inputs.

use rand::Rng as _;

use crate::calibration::{fit_isotonic, nearly_isotonic_path, CalibrationPoint};
use crate::coupling::{pairwise_couple, CouplingParams, PairwiseEstimates};
use crate::rng;
use crate::stats::welch_t_test;

/// Exhaustive isotonic least squares: tries every split of `0..n` into
/// contiguous blocks, keeps partitions whose block means are nondecreasing,
/// and returns the fit with the smallest weighted squared error.
pub fn brute_force_isotonic(targets: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = targets.len();
    assert!(n > 0 && n <= 20, "brute force is exponential in n");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // bit i set => block boundary after position i
        let mut fit = vec![0.0; n];
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut feasible = true;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let w: f64 = weights[start..end].iter().sum();
                let mean = targets[start..end].iter().zip(&weights[start..end]).map(|(y, w)| y * w).sum::<f64>() / w;
                if mean < prev_mean {
                    feasible = false;
                    break;
                }
                fit[start..end].iter_mut().for_each(|f| *f = mean);
                prev_mean = mean;
                start = end;
            }
        }
        if !feasible {
            continue;
        }
        let sse: f64 = fit.iter().zip(targets).zip(weights).map(|((f, y), w)| w * (y - f) * (y - f)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fit));
        }
    }
    best.expect("the single-block partition is always feasible").1
}

/// Nearly-isotonic regression at a fixed penalty, solved through its dual.
///
/// Minimizes `½ Σ w_i (y_i - b_i)² + λ Σ max(b_i - b_{i+1}, 0)`. The dual is
/// a box-constrained quadratic in one variable per adjacent pair,
/// `min ½ uᵀ D W⁻¹ Dᵀ u - uᵀ D y` over `0 ≤ u ≤ λ`, solved by cyclic
/// coordinate descent; the primal is `b = y - W⁻¹ Dᵀ u`.
pub fn dual_nearly_isotonic(targets: &[f64], weights: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = targets.len();
    if n < 2 {
        return targets.to_vec();
    }
    let m = n - 1;
    let dy: Vec<f64> = (0..m).map(|i| targets[i] - targets[i + 1]).collect();
    let diag: Vec<f64> = (0..m).map(|i| 1.0 / weights[i] + 1.0 / weights[i + 1]).collect();
    let mut u = vec![0.0; m];
    for _ in 0..sweeps {
        for i in 0..m {
            let mut mu = diag[i] * u[i];
            if i > 0 {
                mu -= u[i - 1] / weights[i];
            }
            if i + 1 < m {
                mu -= u[i + 1] / weights[i + 1];
            }
            u[i] = (u[i] + (dy[i] - mu) / diag[i]).clamp(0.0, lambda);
        }
    }
    (0..n)
        .map(|j| {
            // (Dᵀ u)_j = u_j - u_{j-1}
            let dtu = if j < m { u[j] } else { 0.0 } - if j > 0 { u[j - 1] } else { 0.0 };
            targets[j] - dtu / weights[j]
        })
        .collect()
}

/// Minimizes the two-class coupling objective `(r10 p - r01 (1-p))²` on a grid
/// refined around the best cell.
pub fn grid_couple_two(r01: f64) -> f64 {
    let r10 = 1.0 - r01;
    let objective = |p: f64| {
        let d = r10 * p - r01 * (1.0 - p);
        d * d
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..12 {
        let steps = 1000;
        let h = (hi - lo) / steps as f64;
        let best = (0..=steps).map(|i| lo + h * i as f64).fold((lo, f64::INFINITY), |acc, p| {
            let v = objective(p);
            if v < acc.1 {
                (p, v)
            } else {
                acc
            }
        });
        lo = (best.0 - h).max(0.0);
        hi = (best.0 + h).min(1.0);
    }
    (lo + hi) / 2.0
}

/// Exact gamma at half-integers `df / 2` for integer `df`.
fn gamma_half_integer(df: u32) -> f64 {
    if df % 2 == 0 {
        (1..df / 2).map(f64::from).product()
    } else {
        // Γ(k + ½) = (2k)! / (4^k k!) √π
        let k = (df - 1) / 2;
        (0..k).map(|i| f64::from(i) + 0.5).product::<f64>() * std::f64::consts::PI.sqrt()
    }
}

/// Student-t density with integer degrees of freedom.
pub fn t_density(x: f64, df: u32) -> f64 {
    let v = f64::from(df);
    let c = gamma_half_integer(df + 1) / ((v * std::f64::consts::PI).sqrt() * gamma_half_integer(df));
    c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = (a + b) / 2.0;
        let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f((a + b) / 2.0));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// Two-sided p-value `P(|T| ≥ |t|)` by adaptive quadrature of the density.
pub fn t_two_sided_p_by_quadrature(t: f64, df: u32) -> f64 {
    let inner = adaptive_simpson(&|x| t_density(x, df), 0.0, t.abs(), 1e-14);
    (1.0 - 2.0 * inner).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome { name, passed: worst <= tol, detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})") }
}

pub fn check_pava_against_brute_force(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, &[1]);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(1..=8);
        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let points: Vec<CalibrationPoint<f64>> = (0..n)
            .map(|i| CalibrationPoint { score: i as f64 / 8.0, target: targets[i], weight: weights[i] })
            .collect();
        let map = fit_isotonic(&points).expect("valid points");
        let oracle = brute_force_isotonic(&targets, &weights);
        for (f, o) in map.values().iter().zip(&oracle) {
            worst = worst.max((f - o).abs());
        }
    }
    outcome("isotonic fit equals exhaustive level-set search", worst, 1e-9)
}

pub fn check_nearly_isotonic_against_dual(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, &[2]);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=7);
        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let path = nearly_isotonic_path(&targets, &weights);
        let lambda = rng.random_range(0.0..1.2) * path.max_lambda().max(0.1);
        let fit = path.solution_at(lambda);
        let oracle = dual_nearly_isotonic(&targets, &weights, lambda, 20_000);
        for (f, o) in fit.iter().zip(&oracle) {
            worst = worst.max((f - o).abs());
        }
    }
    outcome("nearly-isotonic path equals dual solution", worst, 1e-7)
}

pub fn check_coupling_two_class(seed: u64) -> CheckOutcome {
    let mut rng = rng::stream(seed, &[3]);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r: f64 = rng.random_range(0.01..0.99);
        let est = PairwiseEstimates::from_fn(2, |_, _| r).expect("valid r");
        let p = pairwise_couple(&est, &CouplingParams::default()).expect("coupling").probabilities;
        worst = worst.max((p[0] - grid_couple_two(r)).abs());
    }
    outcome("two-class coupling equals grid minimizer", worst, 1e-6)
}

pub fn check_welch_against_quadrature() -> CheckOutcome {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0];
    let r = welch_t_test(&a, &b, 0.05).expect("valid samples");
    let oracle = t_two_sided_p_by_quadrature(-1.0, 8);
    let mut worst = (r.p_value - oracle).abs();
    for df in 1..=30u32 {
        for i in 0..=20 {
            let t = -10.0 + i as f64;
            let p = crate::stats::t_two_sided_p(t, f64::from(df));
            worst = worst.max((p - t_two_sided_p_by_quadrature(t, df)).abs());
        }
    }
    outcome("t p-values equal density quadrature", worst, 1e-8)
}

/// Every oracle check, in a fixed order.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_pava_against_brute_force(500, seed),
        check_nearly_isotonic_against_dual(200, seed),
        check_coupling_two_class(seed),
        check_welch_against_quadrature(),
    ]
}
