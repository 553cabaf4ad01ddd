//! Bound-constrained nonlinear least squares by a trust-region
//! Levenberg-Marquardt iteration with reflective bound handling.
//!
//! Each iteration builds a central-difference Jacobian, freezes variables
//! sitting on a bound whose gradient points outward, solves the damped normal
//! equations on the free variables with the damping raised until the step fits
//! in the trust radius, keeps the better of the reflected and the clipped trial
//! point, and adapts the radius from the ratio of actual to predicted
//! reduction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than `ftol * cost`.
    pub ftol: f64,
    /// Stop when the projected gradient infinity norm drops below this.
    pub gtol: f64,
    /// Relative step used by the central-difference Jacobian.
    pub jacobian_step: f64,
    pub initial_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iterations: 200, ftol: 1e-12, gtol: 1e-10, jacobian_step: 1e-6, initial_radius: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceStatus {
    CostConverged,
    GradientConverged,
    StepConverged,
    MaxIterations,
}

impl ConvergenceStatus {
    pub fn converged(self) -> bool {
        self != ConvergenceStatus::MaxIterations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Sum of squared residuals at `x`.
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: ConvergenceStatus,
    /// Every accepted iterate, starting with the initial point.
    pub iterates: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    r.dot(r)
}

/// Central-difference Jacobian, step `h * max(1, |x_i|)` per coordinate.
pub fn numeric_jacobian<F>(f: &F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j] - step;
        let minus = f(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    jac
}

/// Forward-difference Jacobian, step `h * max(1, |x_i|)`.
pub fn forward_jacobian<F>(f: &F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let base = f(x);
    let mut jac = DMatrix::zeros(base.len(), x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j];
        for i in 0..base.len() {
            jac[(i, j)] = (plus[i] - base[i]) / step;
        }
    }
    jac
}

/// Mirrors an out-of-box coordinate back inside, then clamps.
fn reflect(y: f64, lo: f64, hi: f64) -> f64 {
    let mut v = y;
    if v > hi {
        v = hi - (v - hi);
    } else if v < lo {
        v = lo + (lo - v);
    }
    v.clamp(lo, hi)
}

/// Damped Gauss-Newton step on the free variables with `|step| <= radius`.
fn damped_step(jtj: &DMatrix<f64>, grad: &DVector<f64>, free: &[bool], radius: f64) -> DVector<f64> {
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let k = idx.len();
    let mut step = DVector::zeros(free.len());
    if k == 0 {
        return step;
    }
    let a = DMatrix::from_fn(k, k, |r, c| jtj[(idx[r], idx[c])]);
    let g = DVector::from_fn(k, |r, _| grad[idx[r]]);
    let scale = (0..k).map(|i| a[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut mu = 0.0;
    for _ in 0..200 {
        let mut damped = a.clone();
        for i in 0..k {
            damped[(i, i)] += mu * a[(i, i)].max(scale * 1e-12) + if mu > 0.0 { 0.0 } else { scale * 1e-15 };
        }
        if let Some(chol) = damped.cholesky() {
            let s = -chol.solve(&g);
            if s.iter().all(|v| v.is_finite()) && s.norm() <= radius * (1.0 + 1e-12) {
                for (r, &i) in idx.iter().enumerate() {
                    step[i] = s[r];
                }
                return step;
            }
        }
        mu = if mu == 0.0 { 1e-6 } else { mu * 4.0 };
    }
    // fall back to a scaled steepest-descent step
    let gn = g.norm();
    if gn > 0.0 {
        for (r, &i) in idx.iter().enumerate() {
            step[i] = -g[r] / gn * radius;
        }
    }
    step
}

/// Minimizes `sum r(x)^2` subject to `lower <= x <= upper`.
///
/// The initial point must satisfy the bounds; every accepted iterate does too.
pub fn solve_bounded_least_squares<F>(
    residuals: F,
    initial: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = initial.len();
    if lower.len() != n || upper.len() != n {
        return Err(invalid("bounds must match the parameter count"));
    }
    for i in 0..n {
        if !(lower[i] <= upper[i]) {
            return Err(invalid(format!("bound {i}: lower {} exceeds upper {}", lower[i], upper[i])));
        }
        if !(lower[i] <= initial[i] && initial[i] <= upper[i]) {
            return Err(invalid(format!("initial value {i} = {} is outside its bounds", initial[i])));
        }
    }
    let eval = |x: &[f64]| DVector::from_vec(residuals(x));
    let mut x = initial.to_vec();
    let mut r = eval(&x);
    let mut evaluations = 1;
    let mut cost = sum_sq(&r);
    let initial_cost = cost;
    let mut radius = opts.initial_radius * DVector::from_column_slice(&x).norm().max(1.0);
    let mut iterates = vec![x.clone()];
    let mut costs = vec![cost];
    let mut status = ConvergenceStatus::MaxIterations;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let jac = numeric_jacobian(&|p: &[f64]| residuals(p), &x, opts.jacobian_step);
        evaluations += 2 * n;
        let grad = jac.transpose() * &r;
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && grad[i] > 0.0) || (x[i] >= upper[i] && grad[i] < 0.0)))
            .collect();
        let pgrad = DVector::from_fn(n, |i, _| if free[i] { grad[i] } else { 0.0 });
        if pgrad.amax() < opts.gtol {
            status = ConvergenceStatus::GradientConverged;
            break;
        }
        let jtj = jac.transpose() * &jac;
        loop {
            let step = damped_step(&jtj, &pgrad, &free, radius);
            let reflected: Vec<f64> = (0..n).map(|i| reflect(x[i] + step[i], lower[i], upper[i])).collect();
            let clipped: Vec<f64> = (0..n).map(|i| (x[i] + step[i]).clamp(lower[i], upper[i])).collect();
            let mut trial = reflected;
            let mut r_trial = eval(&trial);
            evaluations += 1;
            let mut cost_trial = sum_sq(&r_trial);
            if clipped != trial {
                // the step truncated at the boundary competes with its reflection
                let r_clip = eval(&clipped);
                evaluations += 1;
                let cost_clip = sum_sq(&r_clip);
                if cost_clip <= cost_trial {
                    trial = clipped;
                    r_trial = r_clip;
                    cost_trial = cost_clip;
                }
            }
            let s = DVector::from_fn(n, |i, _| trial[i] - x[i]);
            let s_norm = s.norm();
            if s_norm <= 1e-15 * (1.0 + DVector::from_column_slice(&x).norm()) {
                status = ConvergenceStatus::StepConverged;
                break 'outer;
            }
            // model of sum r^2 is |r + J s|^2
            let predicted = -(2.0 * grad.dot(&s) + (&jtj * &s).dot(&s));
            let ratio = if predicted > 0.0 { (cost - cost_trial) / predicted } else { -1.0 };
            if ratio < 0.25 {
                radius = 0.25 * s_norm;
            } else if ratio > 0.75 && s_norm >= 0.9 * radius {
                radius *= 2.0;
            }
            if cost_trial < cost && ratio > 1e-4 {
                let drop = cost - cost_trial;
                x = trial;
                r = r_trial;
                cost = cost_trial;
                iterates.push(x.clone());
                costs.push(cost);
                if drop < opts.ftol * cost_trial {
                    status = ConvergenceStatus::CostConverged;
                    break 'outer;
                }
                break;
            }
        }
    }
    Ok(SolveReport { x, cost, initial_cost, iterations, evaluations, status, iterates, costs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(p: &[f64]) -> Vec<f64> {
        vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]
    }

    #[test]
    fn solves_rosenbrock() {
        let rep = solve_bounded_least_squares(
            rosenbrock,
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((rep.x[0] - 1.0).abs() < 1e-8, "{rep:?}");
        assert!((rep.x[1] - 1.0).abs() < 1e-8);
        assert!(rep.status.converged());
    }

    #[test]
    fn active_bound_is_respected() {
        // unconstrained optimum at x = 3
        let f = |p: &[f64]| vec![p[0] - 3.0];
        let rep = solve_bounded_least_squares(f, &[0.0], &[-1.0], &[1.0], &SolverOptions::default()).unwrap();
        assert_eq!(rep.x[0], 1.0);
        assert!((rep.cost - 4.0).abs() < 1e-12);
        for it in &rep.iterates {
            assert!(it[0] >= -1.0 && it[0] <= 1.0);
        }
    }

    #[test]
    fn costs_never_increase() {
        let rep = solve_bounded_least_squares(
            rosenbrock,
            &[-1.2, 1.0],
            &[-2.0, -2.0],
            &[0.5, 2.0],
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(rep.costs.windows(2).all(|w| w[1] <= w[0]));
        assert!(rep.cost <= rep.initial_cost);
    }

    #[test]
    fn rejects_infeasible_start() {
        let f = |p: &[f64]| vec![p[0]];
        assert!(solve_bounded_least_squares(f, &[2.0], &[-1.0], &[1.0], &SolverOptions::default()).is_err());
    }

    #[test]
    fn reflection_stays_in_box() {
        assert_eq!(reflect(1.5, 0.0, 1.0), 0.5);
        assert_eq!(reflect(-0.25, 0.0, 1.0), 0.25);
        assert_eq!(reflect(5.0, 0.0, 1.0), 0.0);
    }
}
