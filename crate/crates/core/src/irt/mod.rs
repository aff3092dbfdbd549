//! Testlet Rasch model estimation.

mod fit;
pub mod lbfgs;
mod model;

pub use fit::{fit, grad_nll, nll_loss, FitConfig, FitResult, FitWarning, TestletObjective};
pub use model::{
    center_parameters, center_parameters_with_shift, center_testlets, predict_prob,
    CenteringShift, IrtParameters,
};
