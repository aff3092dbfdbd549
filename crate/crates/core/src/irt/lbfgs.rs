//! Limited-memory BFGS with a weak-Wolfe bisection line search.
//!
//! The search direction comes from the two-loop recursion over the most recent
//! `history` curvature pairs. Near the optimum of a large sum, loss differences
//! fall below the rounding error of the loss itself, so the sufficient-decrease
//! test also accepts a step whose loss is unchanged within `1e-10 * (1 + |f|)`
//! when the directional derivative at the trial point is still non-positive.
//! For a convex objective that implies a true decrease.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A differentiable function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns the value at `x` and writes the gradient into `grad`.
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub history: usize,
    pub max_iterations: usize,
    /// Stop once the Euclidean gradient norm is at or below this.
    pub gradient_tolerance: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history: 10,
            max_iterations: 500,
            gradient_tolerance: 1e-5,
            max_line_search: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective value at the start point and after every accepted step.
    pub trace: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const ROUNDOFF: f64 = 1e-10;

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    x0: Vec<f64>,
    config: &LbfgsConfig,
) -> Result<Minimum> {
    let n = objective.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "start point has {} entries, objective expects {n}",
            x0.len()
        )));
    }
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = objective.evaluate(&x, &mut g);
    let mut evaluations = 1;
    check_finite(f, &g, 0)?;

    let mut history: VecDeque<Pair> = VecDeque::with_capacity(config.history);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut g_norm = norm(&g);

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    while g_norm > config.gradient_tolerance && iterations < config.max_iterations {
        let mut d = two_loop(&g, &history);
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = -g_norm * g_norm;
        }
        let mut alpha = if history.is_empty() {
            (1.0 / g_norm).min(1.0)
        } else {
            1.0
        };

        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        let mut accepted = None;
        for _ in 0..config.max_line_search {
            for k in 0..n {
                x_new[k] = x[k] + alpha * d[k];
            }
            let f_new = objective.evaluate(&x_new, &mut g_new);
            evaluations += 1;
            check_finite(f_new, &g_new, iterations + 1)?;
            let dphi = dot(&g_new, &d);

            let armijo = f_new <= f + C1 * alpha * dphi0;
            let flat = f_new <= f + ROUNDOFF * (1.0 + f.abs()) && dphi <= 0.0;
            if !(armijo || flat) {
                hi = alpha;
            } else if dphi < C2 * dphi0 {
                lo = alpha;
            } else {
                accepted = Some(f_new);
                break;
            }
            alpha = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * alpha
            };
        }

        let Some(f_new) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) {
            if history.len() == config.history {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }

        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        g_norm = norm(&g);
        iterations += 1;
        trace.push(f);
    }

    Ok(Minimum {
        x,
        value: f,
        gradient_norm: g_norm,
        iterations,
        evaluations,
        converged: g_norm <= config.gradient_tolerance,
        trace,
    })
}

/// Computes `-H g` where `H` is the limited-memory inverse Hessian estimate.
fn two_loop(g: &[f64], history: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        axpy(-a, &pair.y, &mut q);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = 1.0 / (last.rho * dot(&last.y, &last.y));
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        let beta = pair.rho * dot(&pair.y, &q);
        axpy(a - beta, &pair.s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn check_finite(f: f64, g: &[f64], iteration: usize) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NonFinite {
            what: "loss",
            iteration,
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            iteration,
        });
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        diag: Vec<f64>,
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.diag.len()
        }
        fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let mut f = 0.0;
            for k in 0..x.len() {
                let d = x[k] - self.center[k];
                f += 0.5 * self.diag[k] * d * d;
                grad[k] = self.diag[k] * d;
            }
            f
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            grad[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            grad[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    struct Exploding;

    impl Objective for Exploding {
        fn dim(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            grad[0] = f64::NAN;
            x[0]
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let q = Quadratic {
            diag: (1..=50).map(|k| k as f64 * k as f64).collect(),
            center: (0..50).map(|k| (k as f64).sin()).collect(),
        };
        let cfg = LbfgsConfig {
            gradient_tolerance: 1e-9,
            ..Default::default()
        };
        let m = minimize(&q, vec![0.0; 50], &cfg).unwrap();
        assert!(m.converged);
        for (x, c) in m.x.iter().zip(&q.center) {
            assert!((x - c).abs() < 1e-9);
        }
        assert!(m.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rosenbrock() {
        let cfg = LbfgsConfig {
            max_iterations: 1000,
            gradient_tolerance: 1e-8,
            ..Default::default()
        };
        let m = minimize(&Rosenbrock, vec![-1.2, 1.0], &cfg).unwrap();
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let err = minimize(&Exploding, vec![1.0], &LbfgsConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { iteration: 0, .. }));
    }

    #[test]
    fn already_optimal_start() {
        let q = Quadratic {
            diag: vec![1.0, 2.0],
            center: vec![0.0, 0.0],
        };
        let m = minimize(&q, vec![0.0, 0.0], &LbfgsConfig::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.iterations, 0);
    }
}
