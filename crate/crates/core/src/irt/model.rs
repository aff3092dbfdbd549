//! The 1PL testlet model: probabilities, penalized likelihood, gradient and
//! identifiability centering.

use serde::{Deserialize, Serialize};

use crate::data::CorrectnessMatrix;
use crate::error::{Error, Result};

const PROB_FLOOR: f64 = 1e-12;

/// Grader abilities, response difficulties and grader × testlet effects,
/// all on the logit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtParameters {
    pub theta: Vec<f64>,
    pub b: Vec<f64>,
    /// Row-major grader × testlet effects.
    pub u: Vec<f64>,
    pub n_testlets: usize,
}

impl IrtParameters {
    pub fn zeros(n_graders: usize, n_responses: usize, n_testlets: usize) -> Self {
        IrtParameters {
            theta: vec![0.0; n_graders],
            b: vec![0.0; n_responses],
            u: vec![0.0; n_graders * n_testlets],
            n_testlets,
        }
    }

    pub fn for_matrix(matrix: &CorrectnessMatrix) -> Self {
        Self::zeros(matrix.n_graders(), matrix.n_responses(), matrix.n_testlets())
    }

    pub fn n_graders(&self) -> usize {
        self.theta.len()
    }

    pub fn n_responses(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn u(&self, grader: usize, testlet: usize) -> f64 {
        self.u[grader * self.n_testlets + testlet]
    }

    #[inline]
    pub fn u_mut(&mut self, grader: usize, testlet: usize) -> &mut f64 {
        &mut self.u[grader * self.n_testlets + testlet]
    }

    /// Probability that `grader` is correct on `response` in testlet `testlet`.
    pub fn prob(&self, grader: usize, response: usize, testlet: usize) -> f64 {
        predict_prob(self.theta[grader], self.b[response], self.u(grader, testlet))
    }

    pub fn dim(&self) -> usize {
        self.theta.len() + self.b.len() + self.u.len()
    }

    /// Packs into `[theta | b | u]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.extend_from_slice(&self.theta);
        x.extend_from_slice(&self.b);
        x.extend_from_slice(&self.u);
        x
    }

    pub fn from_flat(
        x: &[f64],
        n_graders: usize,
        n_responses: usize,
        n_testlets: usize,
    ) -> Result<Self> {
        let expected = n_graders + n_responses + n_graders * n_testlets;
        if x.len() != expected {
            return Err(Error::Dimension(format!(
                "flat parameter vector has {} entries, expected {expected}",
                x.len()
            )));
        }
        let (theta, rest) = x.split_at(n_graders);
        let (b, u) = rest.split_at(n_responses);
        Ok(IrtParameters {
            theta: theta.to_vec(),
            b: b.to_vec(),
            u: u.to_vec(),
            n_testlets,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.theta
            .iter()
            .chain(&self.b)
            .chain(&self.u)
            .all(|v| v.is_finite())
    }

    pub(crate) fn check_shape(&self, matrix: &CorrectnessMatrix) -> Result<()> {
        if self.theta.len() != matrix.n_graders()
            || self.b.len() != matrix.n_responses()
            || self.n_testlets != matrix.n_testlets()
            || self.u.len() != matrix.n_graders() * matrix.n_testlets()
        {
            return Err(Error::Dimension(format!(
                "parameters ({} graders, {} responses, {} testlets) do not match matrix ({}, {}, {})",
                self.theta.len(),
                self.b.len(),
                self.n_testlets,
                matrix.n_graders(),
                matrix.n_responses(),
                matrix.n_testlets()
            )));
        }
        Ok(())
    }
}

/// Logistic sigmoid of `theta - b + u`.
#[inline]
pub fn predict_prob(theta: f64, b: f64, u: f64) -> f64 {
    sigmoid(theta - b + u)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// L2 penalty weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub theta: f64,
    pub b: f64,
    pub u: f64,
}

/// Penalized negative log-likelihood over a flat `[theta | b | u]` vector.
///
/// Cells are visited grader-major, response-minor, so the summation order
/// (and therefore the result) is fixed.
pub(crate) fn loss_and_gradient(
    matrix: &CorrectnessMatrix,
    penalty: Penalty,
    x: &[f64],
    grad: Option<&mut [f64]>,
) -> f64 {
    let m = matrix.n_graders();
    let j = matrix.n_responses();
    let t = matrix.n_testlets();
    let (theta, rest) = x.split_at(m);
    let (b, u) = rest.split_at(j);
    let testlet_of = matrix.testlet_of();

    let mut nll = 0.0;
    match grad {
        None => {
            for i in 0..m {
                let row = matrix.row(i);
                let u_row = &u[i * t..(i + 1) * t];
                for jj in 0..j {
                    let p = sigmoid(theta[i] - b[jj] + u_row[testlet_of[jj]]);
                    nll -= cell_log_lik(p, row[jj]);
                }
            }
        }
        Some(grad) => {
            grad.fill(0.0);
            let (g_theta, g_rest) = grad.split_at_mut(m);
            let (g_b, g_u) = g_rest.split_at_mut(j);
            for i in 0..m {
                let row = matrix.row(i);
                let u_row = &u[i * t..(i + 1) * t];
                let gu_row = &mut g_u[i * t..(i + 1) * t];
                let mut g_theta_i = 0.0;
                for jj in 0..j {
                    let tt = testlet_of[jj];
                    let p = sigmoid(theta[i] - b[jj] + u_row[tt]);
                    let y = row[jj];
                    nll -= cell_log_lik(p, y);
                    let r = p - y as f64;
                    g_theta_i += r;
                    g_b[jj] -= r;
                    gu_row[tt] += r;
                }
                g_theta[i] = g_theta_i;
            }
            for (g, v) in g_theta.iter_mut().zip(theta) {
                *g += penalty.theta * v;
            }
            for (g, v) in g_b.iter_mut().zip(b) {
                *g += penalty.b * v;
            }
            for (g, v) in g_u.iter_mut().zip(u) {
                *g += penalty.u * v;
            }
        }
    }
    nll + 0.5 * penalty.theta * sq_norm(theta)
        + 0.5 * penalty.b * sq_norm(b)
        + 0.5 * penalty.u * sq_norm(u)
}

#[inline]
fn cell_log_lik(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    if y == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Means removed by the reporting step of [`center_parameters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CenteringShift {
    pub theta_mean: f64,
    pub b_mean: f64,
}

/// Centers parameters for reporting.
///
/// First, each testlet's grader-mean effect is removed from `u` and from the
/// difficulties of that testlet's responses, which leaves every `theta - b + u`
/// unchanged. Then `theta` and `b` are each shifted to mean zero.
pub fn center_parameters(params: &IrtParameters, testlet_of: &[usize]) -> IrtParameters {
    center_parameters_with_shift(params, testlet_of).0
}

/// As [`center_parameters`], also returning the means removed in the second step.
pub fn center_parameters_with_shift(
    params: &IrtParameters,
    testlet_of: &[usize],
) -> (IrtParameters, CenteringShift) {
    let mut out = center_testlets(params, testlet_of);
    let theta_mean = mean(&out.theta);
    let b_mean = mean(&out.b);
    out.theta.iter_mut().for_each(|v| *v -= theta_mean);
    out.b.iter_mut().for_each(|v| *v -= b_mean);
    (out, CenteringShift { theta_mean, b_mean })
}

/// Probability-preserving step of the centering alone.
pub fn center_testlets(params: &IrtParameters, testlet_of: &[usize]) -> IrtParameters {
    let mut out = params.clone();
    let m = params.n_graders();
    if m == 0 {
        return out;
    }
    let t_count = params.n_testlets;
    let u_mean: Vec<f64> = (0..t_count)
        .map(|t| (0..m).map(|i| params.u(i, t)).sum::<f64>() / m as f64)
        .collect();
    for i in 0..m {
        for (t, &shift) in u_mean.iter().enumerate() {
            *out.u_mut(i, t) -= shift;
        }
    }
    for (bj, &t) in out.b.iter_mut().zip(testlet_of) {
        *bj -= u_mean[t];
    }
    out
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
