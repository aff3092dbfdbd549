//! Quantile difficulty bins, per-bin grader accuracy and confusion counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{CorrectnessMatrix, Label, Prediction};
use crate::error::{Error, Result};
use crate::stats::{pearson_r, spearman};

pub const DEFAULT_BINS: usize = 5;
/// Predicted-label columns: the five labels, then invalid output.
pub const CONFUSION_COLUMNS: usize = 6;
pub const INVALID_COLUMN: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAssignment {
    pub n_bins: usize,
    /// Largest difficulty in each bin except the last.
    pub edges: Vec<f64>,
    pub bin_of: Vec<usize>,
}

impl BinAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_bins];
        for &k in &self.bin_of {
            sizes[k] += 1;
        }
        sizes
    }

    pub fn members(&self, bin: usize) -> Vec<usize> {
        (0..self.bin_of.len()).filter(|&j| self.bin_of[j] == bin).collect()
    }
}

/// Sorts responses by difficulty (ties by index, which is response-id order
/// in a built matrix) and cuts them into `n_bins` contiguous groups. When
/// the count does not divide evenly the earlier bins get one extra response.
pub fn quantile_bins(b: &[f64], n_bins: usize) -> Result<BinAssignment> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    if b.len() < n_bins {
        return Err(Error::InvalidArgument(format!(
            "{n_bins} bins requested for {} responses",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("difficulties must be finite".into()));
    }
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&x, &y| b[x].total_cmp(&b[y]).then(x.cmp(&y)));

    let base = b.len() / n_bins;
    let extra = b.len() % n_bins;
    let mut bin_of = vec![0; b.len()];
    let mut edges = Vec::with_capacity(n_bins - 1);
    let mut pos = 0;
    for k in 0..n_bins {
        let size = base + usize::from(k < extra);
        for &j in &order[pos..pos + size] {
            bin_of[j] = k;
        }
        pos += size;
        if k + 1 < n_bins {
            edges.push(b[order[pos - 1]]);
        }
    }
    Ok(BinAssignment {
        n_bins,
        edges,
        bin_of,
    })
}

/// Ordinary least-squares slope of `acc` against bin indices `1..=K`.
/// Returns NaN for fewer than two points.
pub fn slope_regression(acc: &[f64]) -> f64 {
    let k = acc.len();
    if k < 2 {
        return f64::NAN;
    }
    let x_mean = (k as f64 + 1.0) / 2.0;
    let a_mean = acc.iter().sum::<f64>() / k as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (idx, &a) in acc.iter().enumerate() {
        let dx = (idx + 1) as f64 - x_mean;
        sxy += dx * (a - a_mean);
        sxx += dx * dx;
    }
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAccuracyTable {
    pub graders: Vec<String>,
    pub bin_sizes: Vec<usize>,
    /// grader × bin
    pub accuracy: Vec<Vec<f64>>,
    /// All graders pooled, per bin.
    pub pooled: Vec<f64>,
    pub slopes: Vec<f64>,
    pub pooled_slope: f64,
}

impl BinAccuracyTable {
    pub fn slope_map(&self) -> BTreeMap<String, f64> {
        self.graders.iter().cloned().zip(self.slopes.iter().copied()).collect()
    }
}

fn check_bins(matrix: &CorrectnessMatrix, bins: &BinAssignment) -> Result<Vec<usize>> {
    if bins.bin_of.len() != matrix.n_responses() {
        return Err(Error::Dimension(format!(
            "bins cover {} responses, matrix has {}",
            bins.bin_of.len(),
            matrix.n_responses()
        )));
    }
    let sizes = bins.sizes();
    if let Some(k) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("bin {} is empty", k + 1)));
    }
    Ok(sizes)
}

pub fn bin_accuracy(matrix: &CorrectnessMatrix, bins: &BinAssignment) -> Result<BinAccuracyTable> {
    let sizes = check_bins(matrix, bins)?;
    let k = bins.n_bins;
    let mut pooled_hits = vec![0usize; k];
    let accuracy: Vec<Vec<f64>> = (0..matrix.n_graders())
        .map(|i| {
            let mut hits = vec![0usize; k];
            for (j, &y) in matrix.row(i).iter().enumerate() {
                hits[bins.bin_of[j]] += y as usize;
            }
            for (p, h) in pooled_hits.iter_mut().zip(&hits) {
                *p += h;
            }
            hits.iter().zip(&sizes).map(|(&h, &n)| h as f64 / n as f64).collect()
        })
        .collect();
    let m = matrix.n_graders();
    let pooled: Vec<f64> = pooled_hits
        .iter()
        .zip(&sizes)
        .map(|(&h, &n)| h as f64 / (n * m) as f64)
        .collect();
    Ok(BinAccuracyTable {
        graders: matrix.graders().to_vec(),
        bin_sizes: sizes,
        slopes: accuracy.iter().map(|a| slope_regression(a)).collect(),
        pooled_slope: slope_regression(&pooled),
        accuracy,
        pooled,
    })
}

/// True when `acc` never rises by more than `tolerance` from one bin to the
/// next, and rises at most `max_inversions` times.
pub fn is_non_increasing(acc: &[f64], max_inversions: usize, tolerance: f64) -> bool {
    let rises: Vec<f64> = acc.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    rises.len() <= max_inversions && rises.iter().all(|&d| d <= tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinConfusion {
    /// gold × predicted, with the invalid column last.
    pub counts: [[u64; CONFUSION_COLUMNS]; 5],
    pub n: u64,
    pub accuracy: f64,
}

impl BinConfusion {
    fn new() -> Self {
        BinConfusion {
            counts: [[0; CONFUSION_COLUMNS]; 5],
            n: 0,
            accuracy: 0.0,
        }
    }

    fn add(&mut self, gold: Label, predicted: &Prediction) {
        let col = predicted.label().map_or(INVALID_COLUMN, Label::index);
        self.counts[gold.index()][col] += 1;
        self.n += 1;
    }

    fn finish(&mut self) {
        let trace: u64 = (0..5).map(|g| self.counts[g][g]).sum();
        self.accuracy = if self.n == 0 {
            0.0
        } else {
            trace as f64 / self.n as f64
        };
    }

    pub fn count(&self, gold: Label, predicted: Option<Label>) -> u64 {
        self.counts[gold.index()][predicted.map_or(INVALID_COLUMN, Label::index)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionByBin {
    /// Pooled over graders.
    pub bins: Vec<BinConfusion>,
    /// Per grader, in matrix grader order.
    pub per_grader: Vec<(String, Vec<BinConfusion>)>,
}

pub fn confusion_by_bin(matrix: &CorrectnessMatrix, bins: &BinAssignment) -> Result<ConfusionByBin> {
    check_bins(matrix, bins)?;
    let prov = matrix.provenance().ok_or_else(|| {
        Error::InvalidArgument("confusion analysis needs label provenance".into())
    })?;
    let k = bins.n_bins;
    let n_resp = matrix.n_responses();
    let mut pooled = vec![BinConfusion::new(); k];
    let mut per_grader = Vec::with_capacity(matrix.n_graders());
    for (i, grader) in matrix.graders().iter().enumerate() {
        let mut own = vec![BinConfusion::new(); k];
        for j in 0..n_resp {
            let bin = bins.bin_of[j];
            let predicted = &prov.predicted[i * n_resp + j];
            own[bin].add(prov.gold[j], predicted);
            pooled[bin].add(prov.gold[j], predicted);
        }
        own.iter_mut().for_each(BinConfusion::finish);
        per_grader.push((grader.clone(), own));
    }
    pooled.iter_mut().for_each(BinConfusion::finish);
    Ok(ConfusionByBin {
        bins: pooled,
        per_grader,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeAgreement {
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
}

/// Pearson and Spearman correlation of per-grader slopes over the graders
/// present in both maps.
pub fn slope_agreement(
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
) -> Result<SlopeAgreement> {
    let (xa, xb): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(g, &sa)| b.get(g).map(|&sb| (sa, sb)))
        .unzip();
    if xa.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "slope agreement needs at least 3 shared graders, got {}",
            xa.len()
        )));
    }
    Ok(SlopeAgreement {
        n: xa.len(),
        pearson: pearson_r(&xa, &xb)?,
        spearman: spearman(&xa, &xb)?.r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Provenance;
    use approx::assert_abs_diff_eq;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|k| format!("{prefix}{k:02}")).collect()
    }

    fn matrix(m: usize, y: Vec<u8>) -> CorrectnessMatrix {
        let j = y.len() / m;
        CorrectnessMatrix::from_outcomes("d", ids("g", m), ids("r", j), vec!["q".into()], vec![0; j], y)
            .unwrap()
    }

    #[test]
    fn ten_into_five() {
        let b: Vec<f64> = (1..=10).map(f64::from).collect();
        let bins = quantile_bins(&b, 5).unwrap();
        assert_eq!(bins.sizes(), vec![2; 5]);
        assert_eq!(bins.bin_of, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
        assert_eq!(bins.edges, vec![2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn hand_sorted() {
        assert_eq!(quantile_bins(&[3.0, 1.0, 2.0], 3).unwrap().bin_of, vec![2, 0, 1]);
    }

    #[test]
    fn remainder_goes_first() {
        let b: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(quantile_bins(&b, 5).unwrap().sizes(), vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn ties_split_by_index() {
        let bins = quantile_bins(&[0.0; 4], 2).unwrap();
        assert_eq!(bins.bin_of, vec![0, 0, 1, 1]);
    }

    #[test]
    fn bin_preconditions() {
        assert!(quantile_bins(&[1.0, 2.0], 3).is_err());
        assert!(quantile_bins(&[1.0, 2.0], 1).is_err());
        assert!(quantile_bins(&[1.0, f64::NAN], 2).is_err());
    }

    #[test]
    fn slope_fixtures() {
        assert_abs_diff_eq!(slope_regression(&[0.9, 0.7, 0.5, 0.3, 0.1]), -0.2, epsilon = 1e-12);
        assert_eq!(slope_regression(&[0.4; 5]), 0.0);
        assert_eq!(slope_regression(&[1.0, 0.0]), -1.0);
        assert!(slope_regression(&[1.0]).is_nan());
    }

    #[test]
    fn accuracy_fixtures() {
        let b: Vec<f64> = (0..10).map(f64::from).collect();
        let bins = quantile_bins(&b, 5).unwrap();
        let mut y = vec![1u8; 10];
        y.extend((0..10).map(|j| (j < 4) as u8));
        let table = bin_accuracy(&matrix(2, y), &bins).unwrap();
        assert_eq!(table.accuracy[0], vec![1.0; 5]);
        assert_eq!(table.slopes[0], 0.0);
        assert_eq!(table.accuracy[1], vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(table.pooled, vec![1.0, 1.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn monotone_check() {
        assert!(is_non_increasing(&[0.9, 0.8, 0.7], 1, 0.02));
        assert!(is_non_increasing(&[0.9, 0.8, 0.81, 0.7], 1, 0.02));
        assert!(!is_non_increasing(&[0.9, 0.8, 0.85, 0.7], 1, 0.02));
        assert!(!is_non_increasing(&[0.9, 0.91, 0.8, 0.81], 1, 0.02));
    }

    fn with_labels(m: usize, gold: Vec<Label>, predicted: Vec<Prediction>) -> CorrectnessMatrix {
        let j = gold.len();
        let y = predicted
            .iter()
            .enumerate()
            .map(|(c, p)| (p.label() == Some(gold[c % j])) as u8)
            .collect();
        matrix(m, y).with_provenance(Provenance { gold, predicted }).unwrap()
    }

    #[test]
    fn single_cell_confusion() {
        let m = with_labels(1, vec![Label::Correct], vec![Prediction::Valid(Label::Correct)]);
        let bins = BinAssignment {
            n_bins: 1,
            edges: vec![],
            bin_of: vec![0],
        };
        let c = confusion_by_bin(&m, &bins).unwrap();
        assert_eq!(c.bins[0].count(Label::Correct, Some(Label::Correct)), 1);
        assert_eq!(c.bins[0].n, 1);
        assert_eq!(c.bins[0].accuracy, 1.0);
    }

    #[test]
    fn hard_bin_errors_collapse_to_pci() {
        let gold = vec![Label::Correct; 4];
        let pci = Label::PartiallyCorrectIncomplete;
        let predicted = vec![
            Prediction::Valid(Label::Correct),
            Prediction::Valid(Label::Correct),
            Prediction::Valid(pci),
            Prediction::Valid(Label::Correct),
            Prediction::Valid(Label::Correct),
            Prediction::Valid(Label::Correct),
            Prediction::Valid(pci),
            Prediction::Valid(pci),
        ];
        let m = with_labels(2, gold, predicted);
        let bins = quantile_bins(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        let c = confusion_by_bin(&m, &bins).unwrap();
        let hard = &c.bins[1];
        let errors = hard.n - (0..5).map(|g| hard.counts[g][g]).sum::<u64>();
        assert_eq!(errors, 3);
        assert_eq!(hard.count(Label::Correct, Some(pci)), errors);
        let acc = bin_accuracy(&m, &bins).unwrap();
        for (conf, pooled) in c.bins.iter().zip(&acc.pooled) {
            assert_abs_diff_eq!(conf.accuracy, *pooled, epsilon = 1e-12);
            assert_eq!(conf.counts.iter().flatten().sum::<u64>(), conf.n);
        }
    }

    #[test]
    fn invalid_predictions_counted() {
        let m = with_labels(
            1,
            vec![Label::Irrelevant, Label::Contradictory],
            vec![Prediction::Invalid("maybe".into()), Prediction::Valid(Label::Contradictory)],
        );
        let bins = quantile_bins(&[0.0, 1.0], 2).unwrap();
        let c = confusion_by_bin(&m, &bins).unwrap();
        assert_eq!(c.bins[0].count(Label::Irrelevant, None), 1);
        assert_eq!(c.bins[0].accuracy, 0.0);
        assert_eq!(c.per_grader[0].1[1].accuracy, 1.0);
    }

    #[test]
    fn confusion_needs_provenance() {
        let bins = quantile_bins(&[0.0, 1.0], 2).unwrap();
        assert!(confusion_by_bin(&matrix(1, vec![1, 0]), &bins).is_err());
    }

    #[test]
    fn slope_agreement_fixtures() {
        let a: BTreeMap<String, f64> =
            [("a", -0.1), ("b", -0.3), ("c", -0.2), ("d", 0.05)].map(|(k, v)| (k.to_string(), v)).into();
        let r = slope_agreement(&a, &a).unwrap();
        assert_abs_diff_eq!(r.pearson, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.spearman, 1.0, epsilon = 1e-12);
        let doubled: BTreeMap<String, f64> = a.iter().map(|(k, v)| (k.clone(), 2.0 * v)).collect();
        assert_abs_diff_eq!(slope_agreement(&a, &doubled).unwrap().pearson, 1.0, epsilon = 1e-12);
        let other: BTreeMap<String, f64> = [("x".to_string(), 1.0)].into();
        assert!(slope_agreement(&a, &other).is_err());
    }
}
