use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsConfig, Objective};
use super::model::{
    center_parameters_with_shift, loss_and_gradient, CenteringShift, IrtParameters, Penalty,
};
use crate::data::CorrectnessMatrix;
use crate::error::{Error, Result};

/// Penalty weights and optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub lambda_theta: f64,
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub lbfgs_history: usize,
    /// Reserved for randomized initialization; fits start from zero.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda_theta: 1.0,
            lambda_b: 1.0,
            lambda_u: 5.0,
            max_iterations: 500,
            gradient_tolerance: 1e-5,
            lbfgs_history: 10,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_theta", self.lambda_theta),
            ("lambda_b", self.lambda_b),
            ("lambda_u", self.lambda_u),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0")));
            }
        }
        if self.max_iterations == 0 || self.lbfgs_history == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations and lbfgs_history must be positive".into(),
            ));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidArgument("gradient_tolerance must be > 0".into()));
        }
        Ok(())
    }

    pub(crate) fn penalty(&self) -> Penalty {
        Penalty {
            theta: self.lambda_theta,
            b: self.lambda_b,
            u: self.lambda_u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    /// With one testlet, `u` is a per-grader intercept confounded with `theta`.
    SingleTestlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Centered parameters.
    pub params: IrtParameters,
    pub converged: bool,
    /// Loss at the uncentered optimum.
    pub final_loss: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub centering: CenteringShift,
    pub warnings: Vec<FitWarning>,
}

/// The penalized negative log-likelihood as an optimizer objective.
pub struct TestletObjective<'a> {
    matrix: &'a CorrectnessMatrix,
    penalty: Penalty,
}

impl<'a> TestletObjective<'a> {
    pub fn new(matrix: &'a CorrectnessMatrix, config: &FitConfig) -> Self {
        TestletObjective {
            matrix,
            penalty: config.penalty(),
        }
    }
}

impl Objective for TestletObjective<'_> {
    fn dim(&self) -> usize {
        let m = self.matrix.n_graders();
        m + self.matrix.n_responses() + m * self.matrix.n_testlets()
    }

    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        loss_and_gradient(self.matrix, self.penalty, x, Some(grad))
    }
}

/// Penalized negative log-likelihood of `params` on `matrix`.
pub fn nll_loss(
    params: &IrtParameters,
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
) -> Result<f64> {
    params.check_shape(matrix)?;
    Ok(loss_and_gradient(
        matrix,
        config.penalty(),
        &params.to_flat(),
        None,
    ))
}

/// Analytic gradient of [`nll_loss`], shaped like the parameters.
pub fn grad_nll(
    params: &IrtParameters,
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
) -> Result<IrtParameters> {
    params.check_shape(matrix)?;
    let mut g = vec![0.0; params.dim()];
    loss_and_gradient(matrix, config.penalty(), &params.to_flat(), Some(&mut g));
    IrtParameters::from_flat(
        &g,
        matrix.n_graders(),
        matrix.n_responses(),
        matrix.n_testlets(),
    )
}

/// Fits the testlet model from the zero vector and centers the result.
pub fn fit(matrix: &CorrectnessMatrix, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if matrix.n_graders() < 2 || matrix.n_responses() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fitting needs at least 2 graders and 2 responses (got {} x {})",
            matrix.n_graders(),
            matrix.n_responses()
        )));
    }
    let objective = TestletObjective::new(matrix, config);
    let lbfgs_config = LbfgsConfig {
        history: config.lbfgs_history,
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        ..LbfgsConfig::default()
    };
    let min = lbfgs::minimize(&objective, vec![0.0; objective.dim()], &lbfgs_config)?;
    let raw = IrtParameters::from_flat(
        &min.x,
        matrix.n_graders(),
        matrix.n_responses(),
        matrix.n_testlets(),
    )?;
    let (params, centering) = center_parameters_with_shift(&raw, matrix.testlet_of());

    let mut warnings = Vec::new();
    if matrix.n_testlets() == 1 {
        warnings.push(FitWarning::SingleTestlet);
    }
    Ok(FitResult {
        params,
        converged: min.converged,
        final_loss: min.value,
        iterations: min.iterations,
        gradient_norm: min.gradient_norm,
        centering,
        warnings,
    })
}
