//! Serializable run reports and their text renderings.
//!
//! Every rendering starts with `#` comment lines carrying the toolkit
//! version, the run seed and the SHA-256 of each input, so outputs can be
//! traced to the exact inputs that produced them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{CorrectnessMatrix, Label};
use crate::difficulty::{BinAccuracyTable, BinConfusion, ConfusionByBin, SlopeAgreement};
use crate::features::FeatureName;
use crate::irt::{CenteringShift, FitResult, FitWarning};
use crate::stats::FeatureCorrelations;
use crate::validation::{RecoveryReport, StabilityReport};

pub const TOOL_NAME: &str = "gradeirt";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    /// Input name → lowercase hex SHA-256.
    pub inputs: BTreeMap<String, String>,
}

impl RunMeta {
    pub fn new(seed: u64, inputs: BTreeMap<String, String>) -> Self {
        RunMeta {
            tool: TOOL_NAME.into(),
            version: VERSION.into(),
            seed,
            inputs,
        }
    }

    pub fn header(&self) -> String {
        let mut s = format!("# {} {} seed={}\n", self.tool, self.version, self.seed);
        for (name, digest) in &self.inputs {
            let _ = writeln!(s, "# input {name} sha256={digest}");
        }
        s
    }
}

/// Fixed-precision number, `NA` when not finite.
pub fn num(v: f64, decimals: usize) -> String {
    if v.is_finite() {
        format!("{v:.decimals$}")
    } else {
        "NA".into()
    }
}

/// Probability with four decimals, or two significant digits below 1e-3.
pub fn prob(v: f64) -> String {
    if v.is_finite() && v < 1e-3 {
        format!("{v:.1e}")
    } else {
        num(v, 4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraderRow {
    pub grader_id: String,
    pub theta: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub response_id: String,
    pub testlet_id: String,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestletEffectRow {
    pub grader_id: String,
    pub testlet_id: String,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_norm: f64,
    pub centering: CenteringShift,
    pub warnings: Vec<FitWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    pub meta: RunMeta,
    pub dataset_id: String,
    pub invalid_predictions: usize,
    pub convergence: ConvergenceSummary,
    pub graders: Vec<GraderRow>,
    pub responses: Vec<ResponseRow>,
    pub testlet_effects: Vec<TestletEffectRow>,
}

impl ParamsReport {
    pub fn new(meta: RunMeta, matrix: &CorrectnessMatrix, fit: &FitResult) -> Self {
        let p = &fit.params;
        let accuracy = matrix.grader_accuracy();
        let graders = matrix
            .graders()
            .iter()
            .enumerate()
            .map(|(i, g)| GraderRow {
                grader_id: g.clone(),
                theta: p.theta[i],
                accuracy: accuracy[i],
            })
            .collect();
        let responses = matrix
            .responses()
            .iter()
            .enumerate()
            .map(|(j, r)| ResponseRow {
                response_id: r.clone(),
                testlet_id: matrix.testlets()[matrix.testlet_of()[j]].clone(),
                b: p.b[j],
            })
            .collect();
        let mut testlet_effects = Vec::with_capacity(p.u.len());
        for (i, g) in matrix.graders().iter().enumerate() {
            for (t, q) in matrix.testlets().iter().enumerate() {
                testlet_effects.push(TestletEffectRow {
                    grader_id: g.clone(),
                    testlet_id: q.clone(),
                    u: p.u(i, t),
                });
            }
        }
        ParamsReport {
            meta,
            dataset_id: matrix.dataset_id().to_string(),
            invalid_predictions: matrix.invalid_count(),
            convergence: ConvergenceSummary {
                converged: fit.converged,
                iterations: fit.iterations,
                final_loss: fit.final_loss,
                gradient_norm: fit.gradient_norm,
                centering: fit.centering,
                warnings: fit.warnings.clone(),
            },
            graders,
            responses,
            testlet_effects,
        }
    }

    /// Graders ranked by ability, highest first.
    pub fn ranking_text(&self) -> String {
        let mut rows: Vec<&GraderRow> = self.graders.iter().collect();
        rows.sort_by(|a, b| b.theta.total_cmp(&a.theta).then(a.grader_id.cmp(&b.grader_id)));
        let mut s = self.meta.header();
        let _ = writeln!(s, "# dataset {}", self.dataset_id);
        s.push_str("rank\tgrader\ttheta\taccuracy\n");
        for (k, r) in rows.iter().enumerate() {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", k + 1, r.grader_id, num(r.theta, 4), num(r.accuracy, 4));
        }
        s
    }
}

/// Per-dataset reports of one validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub meta: RunMeta,
    pub recovery: BTreeMap<String, RecoveryReport>,
    pub stability: BTreeMap<String, StabilityReport>,
}

impl ValidationReport {
    /// Parameter recovery: dataset × parameter family rows.
    pub fn recovery_table(&self) -> String {
        let mut s = self.meta.header();
        s.push_str("dataset\tparameter\tpearson\trmse\tmae\tconvergence\treplications\n");
        for (d, r) in &self.recovery {
            for (name, st) in [("theta", r.theta), ("b", r.b)] {
                let _ = writeln!(
                    s,
                    "{d}\t{name}\t{}\t{}\t{}\t{}\t{}",
                    num(st.pearson, 3),
                    num(st.rmse, 3),
                    num(st.mae, 3),
                    num(r.convergence_rate, 2),
                    r.replications
                );
            }
        }
        s
    }

    /// Split-half stability: θ from response splits, b from grader splits.
    pub fn stability_table(&self) -> String {
        let mut s = self.meta.header();
        s.push_str("dataset\tparameter\tpearson\tspearman\trmse\tmae\tconvergence\treplications\n");
        for (d, r) in &self.stability {
            for (name, st) in [("theta", r.theta), ("b", r.b)] {
                let _ = writeln!(
                    s,
                    "{d}\t{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                    num(st.pearson, 3),
                    num(st.spearman, 3),
                    num(st.rmse, 3),
                    num(st.mae, 3),
                    num(r.convergence_rate, 2),
                    r.replications
                );
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAnalysis {
    pub bin_sizes: Vec<usize>,
    pub edges: Vec<f64>,
    pub accuracy: BinAccuracyTable,
    pub confusion: Option<ConfusionByBin>,
    pub correlations: Option<FeatureCorrelations>,
    pub feature_warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub meta: RunMeta,
    pub datasets: BTreeMap<String, DatasetAnalysis>,
    /// Slope agreement for each pair of datasets sharing at least 3 graders.
    pub slope_agreement: Vec<(String, String, SlopeAgreement)>,
}

fn bin_name(k: usize) -> String {
    format!("B{}", k + 1)
}

fn predicted_name(col: usize) -> &'static str {
    Label::ALL.get(col).map_or("invalid", |l| l.as_str())
}

impl AnalysisReport {
    /// Per-grader accuracy by bin with slopes, then the pooled row.
    pub fn bin_table(&self) -> String {
        let mut s = self.meta.header();
        for (d, a) in &self.datasets {
            let t = &a.accuracy;
            let _ = writeln!(s, "# dataset {d}");
            let bins: Vec<String> = (0..t.pooled.len()).map(bin_name).collect();
            let sizes: Vec<String> = t.bin_sizes.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "# bin sizes {}", sizes.join(" "));
            let _ = writeln!(s, "grader\t{}\tslope", bins.join("\t"));
            for (g, (acc, slope)) in t.graders.iter().zip(t.accuracy.iter().zip(&t.slopes)) {
                let cells: Vec<String> = acc.iter().map(|v| num(*v, 3)).collect();
                let _ = writeln!(s, "{g}\t{}\t{}", cells.join("\t"), num(*slope, 4));
            }
            let cells: Vec<String> = t.pooled.iter().map(|v| num(*v, 3)).collect();
            let _ = writeln!(s, "pooled\t{}\t{}", cells.join("\t"), num(t.pooled_slope, 4));
        }
        for (a, b, agr) in &self.slope_agreement {
            let _ = writeln!(
                s,
                "# slope agreement {a} vs {b}: n={} pearson={} spearman={}",
                agr.n,
                num(agr.pearson, 3),
                num(agr.spearman, 3)
            );
        }
        s
    }

    /// Long format: dataset, grader, bin, accuracy, slope.
    pub fn bin_long(&self) -> String {
        let mut s = self.meta.header();
        s.push_str("dataset\tgrader\tbin\taccuracy\tslope\n");
        for (d, a) in &self.datasets {
            let t = &a.accuracy;
            let rows = t
                .graders
                .iter()
                .map(String::as_str)
                .zip(t.accuracy.iter().zip(&t.slopes))
                .chain(std::iter::once(("pooled", (&t.pooled, &t.pooled_slope))));
            for (g, (acc, slope)) in rows {
                for (k, v) in acc.iter().enumerate() {
                    let _ = writeln!(s, "{d}\t{g}\t{}\t{v}\t{slope}", bin_name(k));
                }
            }
        }
        s
    }

    /// One pooled gold × predicted matrix per bin.
    pub fn confusion_table(&self) -> String {
        let mut s = self.meta.header();
        for (d, a) in &self.datasets {
            let Some(c) = &a.confusion else { continue };
            for (k, bin) in c.bins.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "# dataset {d} bin {} n={} accuracy={}",
                    bin_name(k),
                    bin.n,
                    num(bin.accuracy, 3)
                );
                let cols: Vec<&str> = (0..bin.counts[0].len()).map(predicted_name).collect();
                let _ = writeln!(s, "gold\\predicted\t{}", cols.join("\t"));
                for l in Label::ALL {
                    let cells: Vec<String> =
                        bin.counts[l.index()].iter().map(u64::to_string).collect();
                    let _ = writeln!(s, "{}\t{}", l.as_str(), cells.join("\t"));
                }
            }
        }
        s
    }

    /// Long format: dataset, grader (`pooled` for all graders), bin, gold,
    /// predicted, count.
    pub fn confusion_long(&self) -> String {
        fn rows(s: &mut String, d: &str, g: &str, bins: &[BinConfusion]) {
            for (k, bin) in bins.iter().enumerate() {
                for l in Label::ALL {
                    for (col, count) in bin.counts[l.index()].iter().enumerate() {
                        let _ = writeln!(
                            s,
                            "{d}\t{g}\t{}\t{}\t{}\t{count}",
                            bin_name(k),
                            l.as_str(),
                            predicted_name(col)
                        );
                    }
                }
            }
        }
        let mut s = self.meta.header();
        s.push_str("dataset\tgrader\tbin\tgold\tpredicted\tcount\n");
        for (d, a) in &self.datasets {
            let Some(c) = &a.confusion else { continue };
            rows(&mut s, d, "pooled", &c.bins);
            for (g, bins) in &c.per_grader {
                rows(&mut s, d, g, bins);
            }
        }
        s
    }

    /// Feature × dataset correlations with difficulty. Features are ordered
    /// by mean absolute Pearson r across datasets.
    pub fn correlation_table(&self) -> String {
        let mut s = self.meta.header();
        let per: Vec<(&String, &FeatureCorrelations)> = self
            .datasets
            .iter()
            .filter_map(|(d, a)| a.correlations.as_ref().map(|c| (d, c)))
            .collect();
        for (d, a) in &self.datasets {
            for w in &a.feature_warnings {
                let _ = writeln!(s, "# warning {d}: {w}");
            }
            if let Some(c) = &a.correlations {
                for sk in &c.skipped {
                    let _ = writeln!(s, "# skipped {d} {} (n={}): {}", sk.feature, sk.n, sk.reason);
                }
            }
        }
        let order: Vec<FeatureName> = crate::stats::order_by_mean_abs_pearson(
            &per.iter().map(|(_, c)| *c).collect::<Vec<_>>(),
        );
        let mut head = vec!["feature".to_string()];
        for (d, _) in &per {
            for col in ["r", "q_r", "rho", "q_rho", "n"] {
                head.push(format!("{d}:{col}"));
            }
        }
        let _ = writeln!(s, "{}", head.join("\t"));
        for f in order {
            let mut cells = vec![f.as_str().to_string()];
            for (_, c) in &per {
                match c.results.iter().find(|r| r.feature == f) {
                    Some(r) => cells.extend([
                        format!("{}{}", num(r.pearson_r, 3), r.stars_pearson),
                        prob(r.q_pearson),
                        format!("{}{}", num(r.spearman_rho, 3), r.stars_spearman),
                        prob(r.q_spearman),
                        r.n.to_string(),
                    ]),
                    None => cells.extend(["NA", "NA", "NA", "NA", "0"].map(String::from)),
                }
            }
            let _ = writeln!(s, "{}", cells.join("\t"));
        }
        s
    }
}
