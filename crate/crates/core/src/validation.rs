//! Simulation-based parameter recovery and split-half stability.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::CorrectnessMatrix;
use crate::error::{Error, Result};
use crate::irt::{fit, FitConfig, FitResult, IrtParameters};
use crate::stats::{pearson_r, rmse_mae, spearman};

pub const DEFAULT_REPLICATIONS: usize = 10;

const RESPONSE_STREAM: u64 = 1;
const GRADER_STREAM: u64 = 2;

/// Draws every cell independently from the model probabilities, keeping the
/// ids and testlet map of `like`.
pub fn simulate_like(
    params: &IrtParameters,
    like: &CorrectnessMatrix,
    seed: u64,
) -> Result<CorrectnessMatrix> {
    if params.n_graders() != like.n_graders()
        || params.n_responses() != like.n_responses()
        || params.n_testlets != like.n_testlets()
    {
        return Err(Error::Dimension("parameters do not match template matrix".into()));
    }
    let y = draw(params, like.testlet_of(), seed);
    CorrectnessMatrix::from_outcomes(
        like.dataset_id(),
        like.graders().to_vec(),
        like.responses().to_vec(),
        like.testlets().to_vec(),
        like.testlet_of().to_vec(),
        y,
    )
}

/// Draws a matrix from the model with generated, sort-stable ids.
pub fn simulate_matrix(
    params: &IrtParameters,
    testlet_of: &[usize],
    seed: u64,
) -> Result<CorrectnessMatrix> {
    if testlet_of.len() != params.n_responses() {
        return Err(Error::Dimension("testlet map does not match difficulties".into()));
    }
    let y = draw(params, testlet_of, seed);
    CorrectnessMatrix::from_outcomes(
        "simulated",
        padded_ids("g", params.n_graders()),
        padded_ids("r", params.n_responses()),
        padded_ids("q", params.n_testlets),
        testlet_of.to_vec(),
        y,
    )
}

pub(crate) fn padded_ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|k| format!("{prefix}{k:0width$}")).collect()
}

fn draw(params: &IrtParameters, testlet_of: &[usize], seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(params.n_graders() * params.n_responses());
    for i in 0..params.n_graders() {
        for (j, &t) in testlet_of.iter().enumerate() {
            let p = params.prob(i, j, t);
            y.push((rng.random::<f64>() < p) as u8);
        }
    }
    y
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Affinely maps `estimates` onto the mean and (population) standard
/// deviation of `reference`.
pub fn align_mean_std(estimates: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if estimates.len() != reference.len() || estimates.len() < 2 {
        return Err(Error::Dimension(format!(
            "alignment needs equal lengths >= 2 ({} vs {})",
            estimates.len(),
            reference.len()
        )));
    }
    let (me, se) = mean_std(estimates);
    let (mr, sr) = mean_std(reference);
    if se == 0.0 {
        return Err(Error::Degenerate("estimates have zero standard deviation".into()));
    }
    if sr == 0.0 {
        return Err(Error::Degenerate("reference has zero standard deviation".into()));
    }
    Ok(estimates.iter().map(|x| (x - me) / se * sr + mr).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub pearson: f64,
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub pearson: f64,
    pub spearman: f64,
    pub rmse: f64,
    pub mae: f64,
}

fn recovery_stats(estimates: &[f64], reference: &[f64]) -> Result<RecoveryStats> {
    let aligned = align_mean_std(estimates, reference)?;
    let (rmse, mae) = rmse_mae(&aligned, reference)?;
    Ok(RecoveryStats {
        pearson: pearson_r(&aligned, reference)?,
        rmse,
        mae,
    })
}

fn agreement_stats(estimates: &[f64], reference: &[f64]) -> Result<AgreementStats> {
    let aligned = align_mean_std(estimates, reference)?;
    let (rmse, mae) = rmse_mae(&aligned, reference)?;
    Ok(AgreementStats {
        pearson: pearson_r(&aligned, reference)?,
        spearman: spearman(&aligned, reference)?.r,
        rmse,
        mae,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRun {
    pub seed: u64,
    pub converged: bool,
    pub theta: Option<RecoveryStats>,
    pub b: Option<RecoveryStats>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub replications: usize,
    pub convergence_rate: f64,
    /// Means over replications whose statistics could be computed.
    pub theta: RecoveryStats,
    pub b: RecoveryStats,
    pub runs: Vec<RecoveryRun>,
}

/// Parameter recovery using the fitted model as the data-generating process.
pub fn run_recovery(
    fitted: &FitResult,
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
    replications: usize,
    seed: u64,
) -> Result<RecoveryReport> {
    run_recovery_with(fitted, matrix, config, replications, seed, simulate_like)
}

/// [`run_recovery`] with a custom sampler in place of Bernoulli draws.
pub fn run_recovery_with<S>(
    fitted: &FitResult,
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
    replications: usize,
    seed: u64,
    sampler: S,
) -> Result<RecoveryReport>
where
    S: Fn(&IrtParameters, &CorrectnessMatrix, u64) -> Result<CorrectnessMatrix> + Sync,
{
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    fitted.params.check_shape(matrix)?;
    let truth = &fitted.params;
    let runs: Vec<RecoveryRun> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed.wrapping_add(r as u64);
            let outcome = sampler(truth, matrix, rep_seed)
                .and_then(|sim| fit(&sim, config))
                .and_then(|refit| {
                    let theta = recovery_stats(&refit.params.theta, &truth.theta)?;
                    let b = recovery_stats(&refit.params.b, &truth.b)?;
                    Ok((refit.converged, theta, b))
                });
            match outcome {
                Ok((converged, theta, b)) => RecoveryRun {
                    seed: rep_seed,
                    converged,
                    theta: Some(theta),
                    b: Some(b),
                    error: None,
                },
                Err(e) => RecoveryRun {
                    seed: rep_seed,
                    converged: false,
                    theta: None,
                    b: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let converged = runs.iter().filter(|r| r.converged).count();
    Ok(RecoveryReport {
        replications,
        convergence_rate: converged as f64 / replications as f64,
        theta: mean_recovery(runs.iter().filter_map(|r| r.theta)),
        b: mean_recovery(runs.iter().filter_map(|r| r.b)),
        runs,
    })
}

fn mean_recovery(stats: impl Iterator<Item = RecoveryStats>) -> RecoveryStats {
    let all: Vec<_> = stats.collect();
    let n = all.len() as f64;
    RecoveryStats {
        pearson: all.iter().map(|s| s.pearson).sum::<f64>() / n,
        rmse: all.iter().map(|s| s.rmse).sum::<f64>() / n,
        mae: all.iter().map(|s| s.mae).sum::<f64>() / n,
    }
}

fn mean_agreement(stats: impl Iterator<Item = AgreementStats>) -> AgreementStats {
    let all: Vec<_> = stats.collect();
    let n = all.len() as f64;
    AgreementStats {
        pearson: all.iter().map(|s| s.pearson).sum::<f64>() / n,
        spearman: all.iter().map(|s| s.spearman).sum::<f64>() / n,
        rmse: all.iter().map(|s| s.rmse).sum::<f64>() / n,
        mae: all.iter().map(|s| s.mae).sum::<f64>() / n,
    }
}

fn alternate<T: Copy + Ord>(mut items: Vec<T>, rng: &mut ChaCha8Rng) -> (Vec<T>, Vec<T>) {
    items.shuffle(rng);
    let mut a: Vec<T> = items.iter().step_by(2).copied().collect();
    let mut b: Vec<T> = items.iter().skip(1).step_by(2).copied().collect();
    a.sort();
    b.sort();
    (a, b)
}

/// Index sets of a within-question response split. Each question's
/// responses are shuffled and dealt alternately; odd counts favour half A.
pub fn response_split_indices(matrix: &CorrectnessMatrix, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RESPONSE_STREAM);
    let mut by_testlet = vec![Vec::new(); matrix.n_testlets()];
    for (j, &t) in matrix.testlet_of().iter().enumerate() {
        by_testlet[t].push(j);
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for group in by_testlet {
        let (ga, gb) = alternate(group, &mut rng);
        a.extend(ga);
        b.extend(gb);
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

pub fn split_responses_within_question(
    matrix: &CorrectnessMatrix,
    seed: u64,
) -> (CorrectnessMatrix, CorrectnessMatrix) {
    let (a, b) = response_split_indices(matrix, seed);
    (matrix.select_responses(&a), matrix.select_responses(&b))
}

/// Index sets of a random grader split; odd counts favour half A.
pub fn grader_split_indices(
    matrix: &CorrectnessMatrix,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if matrix.n_graders() < 4 {
        return Err(Error::InvalidArgument(format!(
            "grader split needs at least 4 graders, got {}",
            matrix.n_graders()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GRADER_STREAM);
    Ok(alternate((0..matrix.n_graders()).collect(), &mut rng))
}

pub fn split_graders(
    matrix: &CorrectnessMatrix,
    seed: u64,
) -> Result<(CorrectnessMatrix, CorrectnessMatrix)> {
    let (a, b) = grader_split_indices(matrix, seed)?;
    Ok((matrix.select_graders(&a), matrix.select_graders(&b)))
}

/// How a matrix is divided for the two split-half procedures.
pub trait Splitter: Sync {
    fn split_responses(
        &self,
        matrix: &CorrectnessMatrix,
        seed: u64,
    ) -> Result<(CorrectnessMatrix, CorrectnessMatrix)>;

    fn split_graders(
        &self,
        matrix: &CorrectnessMatrix,
        seed: u64,
    ) -> Result<(CorrectnessMatrix, CorrectnessMatrix)>;
}

/// Random within-question response splits and random grader splits.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSplitter;

impl Splitter for RandomSplitter {
    fn split_responses(
        &self,
        matrix: &CorrectnessMatrix,
        seed: u64,
    ) -> Result<(CorrectnessMatrix, CorrectnessMatrix)> {
        Ok(split_responses_within_question(matrix, seed))
    }

    fn split_graders(
        &self,
        matrix: &CorrectnessMatrix,
        seed: u64,
    ) -> Result<(CorrectnessMatrix, CorrectnessMatrix)> {
        split_graders(matrix, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitHalfRun {
    pub seed: u64,
    /// Converged half fits out of four.
    pub converged_fits: usize,
    pub theta: Option<AgreementStats>,
    pub b: Option<AgreementStats>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub replications: usize,
    /// Fraction of all half fits that converged.
    pub convergence_rate: f64,
    /// Ability agreement across response halves.
    pub theta: AgreementStats,
    /// Difficulty agreement across grader halves.
    pub b: AgreementStats,
    pub runs: Vec<SplitHalfRun>,
}

pub fn run_split_half(
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
    replications: usize,
    seed: u64,
) -> Result<StabilityReport> {
    run_split_half_with(matrix, config, replications, seed, &RandomSplitter)
}

pub fn run_split_half_with<S: Splitter>(
    matrix: &CorrectnessMatrix,
    config: &FitConfig,
    replications: usize,
    seed: u64,
    splitter: &S,
) -> Result<StabilityReport> {
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    if matrix.n_graders() < 4 {
        return Err(Error::InvalidArgument(format!(
            "split-half needs at least 4 graders, got {}",
            matrix.n_graders()
        )));
    }
    let runs: Vec<SplitHalfRun> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed.wrapping_add(r as u64);
            let mut errors = Vec::new();
            let mut converged_fits = 0;
            let mut fit_pair = |halves: Result<(CorrectnessMatrix, CorrectnessMatrix)>| {
                let (a, b) = halves?;
                let fa = fit(&a, config)?;
                let fb = fit(&b, config)?;
                converged_fits += fa.converged as usize + fb.converged as usize;
                Ok::<_, Error>((fa, fb))
            };
            let theta = fit_pair(splitter.split_responses(matrix, rep_seed))
                .and_then(|(fa, fb)| agreement_stats(&fb.params.theta, &fa.params.theta))
                .map_err(|e| errors.push(format!("response split: {e}")))
                .ok();
            let b = fit_pair(splitter.split_graders(matrix, rep_seed))
                .and_then(|(fa, fb)| agreement_stats(&fb.params.b, &fa.params.b))
                .map_err(|e| errors.push(format!("grader split: {e}")))
                .ok();
            SplitHalfRun {
                seed: rep_seed,
                converged_fits,
                theta,
                b,
                errors,
            }
        })
        .collect();

    let converged: usize = runs.iter().map(|r| r.converged_fits).sum();
    Ok(StabilityReport {
        replications,
        convergence_rate: converged as f64 / (4 * replications) as f64,
        theta: mean_agreement(runs.iter().filter_map(|r| r.theta)),
        b: mean_agreement(runs.iter().filter_map(|r| r.b)),
        runs,
    })
}
