//! Per-dataset composition of fitting, validation and analysis.

use std::collections::BTreeMap;

use log::{info, warn};

use crate::data::{build_matrix, split_by_dataset, CorrectnessMatrix, GradingRecord};
use crate::difficulty::{bin_accuracy, confusion_by_bin, quantile_bins, slope_agreement};
use crate::error::Result;
use crate::features::semantic::{EmbeddingSet, NliSet};
use crate::features::{assemble_features, ResponseText};
use crate::irt::{fit, FitConfig, FitResult};
use crate::report::{AnalysisReport, DatasetAnalysis, ParamsReport, RunMeta, ValidationReport};
use crate::stats::correlate_features;
use crate::validation::{run_recovery, run_split_half};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedDataset {
    pub matrix: CorrectnessMatrix,
    pub fit: FitResult,
}

/// Builds and fits one matrix per dataset id, in sorted id order.
pub fn fit_datasets(
    records: Vec<GradingRecord>,
    config: &FitConfig,
) -> Result<BTreeMap<String, FittedDataset>> {
    let mut out = BTreeMap::new();
    for (id, recs) in split_by_dataset(records) {
        let matrix = build_matrix(&recs)?;
        info!(
            "dataset {id}: {} graders x {} responses, {} questions",
            matrix.n_graders(),
            matrix.n_responses(),
            matrix.n_testlets()
        );
        let fit = fit(&matrix, config)?;
        if !fit.converged {
            warn!("dataset {id}: fit stopped before convergence (gradient norm {:e})", fit.gradient_norm);
        }
        out.insert(id, FittedDataset { matrix, fit });
    }
    Ok(out)
}

pub fn params_reports(
    meta: &RunMeta,
    fitted: &BTreeMap<String, FittedDataset>,
) -> BTreeMap<String, ParamsReport> {
    fitted
        .iter()
        .map(|(id, f)| (id.clone(), ParamsReport::new(meta.clone(), &f.matrix, &f.fit)))
        .collect()
}

pub fn validate(
    meta: RunMeta,
    fitted: &BTreeMap<String, FittedDataset>,
    config: &FitConfig,
    replications: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let mut recovery = BTreeMap::new();
    let mut stability = BTreeMap::new();
    for (id, f) in fitted {
        info!("dataset {id}: {replications} recovery replications");
        recovery.insert(
            id.clone(),
            run_recovery(&f.fit, &f.matrix, config, replications, seed)?,
        );
        info!("dataset {id}: {replications} split-half replications");
        stability.insert(
            id.clone(),
            run_split_half(&f.matrix, config, replications, seed)?,
        );
    }
    Ok(ValidationReport {
        meta,
        recovery,
        stability,
    })
}

/// Optional text-derived inputs for the correlation analysis.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureInputs<'a> {
    pub texts: Option<&'a [ResponseText]>,
    pub embeddings: Option<&'a EmbeddingSet>,
    pub nli: Option<&'a NliSet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub n_bins: usize,
    pub k_nn: usize,
    pub alpha: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            n_bins: crate::difficulty::DEFAULT_BINS,
            k_nn: crate::features::semantic::DEFAULT_K,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// Bins, confusion matrices and (with texts) feature correlations per
/// dataset, plus slope agreement between every pair of datasets.
pub fn analyze(
    meta: RunMeta,
    fitted: &BTreeMap<String, FittedDataset>,
    inputs: FeatureInputs<'_>,
    options: AnalysisOptions,
) -> Result<AnalysisReport> {
    let text_index: BTreeMap<&str, &ResponseText> = inputs
        .texts
        .unwrap_or_default()
        .iter()
        .map(|t| (t.response_id.as_str(), t))
        .collect();
    let mut datasets = BTreeMap::new();
    for (id, f) in fitted {
        let bins = quantile_bins(&f.fit.params.b, options.n_bins)?;
        let accuracy = bin_accuracy(&f.matrix, &bins)?;
        let confusion = f
            .matrix
            .provenance()
            .map(|_| confusion_by_bin(&f.matrix, &bins))
            .transpose()?;

        let mut feature_warnings = Vec::new();
        let correlations = if inputs.texts.is_some() {
            let mut texts = Vec::with_capacity(f.matrix.n_responses());
            let mut difficulty = Vec::with_capacity(f.matrix.n_responses());
            for (j, r) in f.matrix.responses().iter().enumerate() {
                if let Some(t) = text_index.get(r.as_str()) {
                    texts.push((*t).clone());
                    difficulty.push(f.fit.params.b[j]);
                }
            }
            if texts.len() < f.matrix.n_responses() {
                feature_warnings.push(format!(
                    "{} of {} responses have no text",
                    f.matrix.n_responses() - texts.len(),
                    f.matrix.n_responses()
                ));
            }
            let table = assemble_features(&texts, inputs.embeddings, inputs.nli, options.k_nn)?;
            feature_warnings.extend(table.warnings.iter().cloned());
            if table.renormalized > 0 {
                feature_warnings.push(format!(
                    "{} embedding vectors renormalized to unit length",
                    table.renormalized
                ));
            }
            Some(correlate_features(&table, &difficulty, options.alpha)?)
        } else {
            feature_warnings.push("no text file; feature correlations skipped".into());
            None
        };
        for w in &feature_warnings {
            warn!("dataset {id}: {w}");
        }

        datasets.insert(
            id.clone(),
            DatasetAnalysis {
                bin_sizes: bins.sizes(),
                edges: bins.edges.clone(),
                accuracy,
                confusion,
                correlations,
                feature_warnings,
            },
        );
    }

    let ids: Vec<&String> = datasets.keys().collect();
    let mut agreement = Vec::new();
    for (a_pos, a) in ids.iter().enumerate() {
        for b in &ids[a_pos + 1..] {
            let sa = datasets[*a].accuracy.slope_map();
            let sb = datasets[*b].accuracy.slope_map();
            match slope_agreement(&sa, &sb) {
                Ok(r) => agreement.push(((*a).clone(), (*b).clone(), r)),
                Err(e) => warn!("slope agreement {a} vs {b} skipped: {e}"),
            }
        }
    }
    Ok(AnalysisReport {
        meta,
        datasets,
        slope_agreement: agreement,
    })
}
