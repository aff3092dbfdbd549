//! Correlations with p-values, Benjamini–Hochberg adjustment, and error
//! summaries.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::{FeatureName, FeatureTable};

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("correlation inputs must be finite".into()));
    }
    Ok(())
}

/// Sample Pearson correlation; errors on a constant input.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    for (name, s) in [("x", sxx), ("y", syy)] {
        if s == 0.0 {
            return Err(Error::Degenerate(format!(
                "{name} is constant; correlation undefined"
            )));
        }
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation under the t approximation with `n - 2`
/// degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    let r = pearson_r(x, y)?;
    Ok(Correlation {
        r,
        p: correlation_p_value(r, x.len()),
        n: x.len(),
    })
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_inputs(x, y)?;
    pearson(&ranks(x), &ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// Two-sided permutation p-value: exact enumeration for `n <= 8`, otherwise
/// `samples` random permutations with the usual `+1` correction.
pub fn permutation_p_value(
    x: &[f64],
    y: &[f64],
    kind: CorrelationKind,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_inputs(x, y)?;
    let (x, y) = match kind {
        CorrelationKind::Pearson => (x.to_vec(), y.to_vec()),
        CorrelationKind::Spearman => (ranks(x), ranks(y)),
    };
    let observed = pearson_r(&x, &y)?.abs();
    // Guard against rounding when a permutation reproduces the observed value.
    let threshold = observed - 1e-12;
    let mut perm = y.clone();
    if x.len() <= 8 {
        let (mut hits, mut total) = (0usize, 0usize);
        let mut idx: Vec<usize> = (0..x.len()).collect();
        loop {
            for (slot, &k) in perm.iter_mut().zip(&idx) {
                *slot = y[k];
            }
            total += 1;
            if pearson_r(&x, &perm)?.abs() >= threshold {
                hits += 1;
            }
            if !next_permutation(&mut idx) {
                break;
            }
        }
        Ok(hits as f64 / total as f64)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..samples {
            perm.shuffle(&mut rng);
            if pearson_r(&x, &perm)?.abs() >= threshold {
                hits += 1;
            }
        }
        Ok((hits + 1) as f64 / (samples + 1) as f64)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhAdjustment {
    /// Adjusted p-values in input order.
    pub q: Vec<f64>,
    pub reject: Vec<bool>,
}

/// Benjamini–Hochberg step-up adjustment.
pub fn bh_adjust(p_values: &[f64], alpha: f64) -> Result<BhAdjustment> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1)")));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p-value {p} not in [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));

    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let k = order[rank - 1];
        running = running.min(p_values[k] * m as f64 / rank as f64);
        q[k] = running.min(1.0);
    }

    let cutoff = (1..=m)
        .rev()
        .find(|&rank| p_values[order[rank - 1]] <= rank as f64 * alpha / m as f64)
        .unwrap_or(0);
    let mut reject = vec![false; m];
    for &k in &order[..cutoff] {
        reject[k] = true;
    }
    Ok(BhAdjustment { q, reject })
}

/// Root-mean-square and mean-absolute differences.
pub fn rmse_mae(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!(
            "rmse/mae need equal non-empty inputs ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let (mut sq, mut abs) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sq += d * d;
        abs += d.abs();
    }
    Ok(((sq / n).sqrt(), abs / n))
}

/// Significance marker at q < .05 / .01 / .001.
pub fn stars(q: f64) -> &'static str {
    if q < 0.001 {
        "***"
    } else if q < 0.01 {
        "**"
    } else if q < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature: FeatureName,
    pub n: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub spearman_p: f64,
    pub q_pearson: f64,
    pub q_spearman: f64,
    pub stars_pearson: String,
    pub stars_spearman: String,
}

/// A feature left out of the correlation analysis, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFeature {
    pub feature: FeatureName,
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelations {
    pub results: Vec<CorrelationResult>,
    pub skipped: Vec<SkippedFeature>,
}

/// Correlates every feature with difficulty using pairwise-complete
/// observations. BH runs separately over the Pearson and the Spearman
/// p-values of the features that could be correlated.
///
/// `difficulty` is keyed like `features.rows` (same response order).
pub fn correlate_features(
    features: &FeatureTable,
    difficulty: &[f64],
    alpha: f64,
) -> Result<FeatureCorrelations> {
    if features.rows.len() != difficulty.len() {
        return Err(Error::Dimension(format!(
            "{} feature rows for {} difficulties",
            features.rows.len(),
            difficulty.len()
        )));
    }
    let mut partial = Vec::new();
    let mut skipped = Vec::new();
    for feature in FeatureName::ALL {
        let (xs, ys): (Vec<f64>, Vec<f64>) = features
            .rows
            .iter()
            .zip(difficulty)
            .filter_map(|(row, &b)| row.get(feature).map(|v| (v, b)))
            .unzip();
        let n = xs.len();
        match (pearson(&xs, &ys), spearman(&xs, &ys)) {
            (Ok(p), Ok(s)) => partial.push((feature, n, p, s)),
            (Err(e), _) | (_, Err(e)) => skipped.push(SkippedFeature {
                feature,
                n,
                reason: e.to_string(),
            }),
        }
    }
    let pearson_p: Vec<f64> = partial.iter().map(|x| x.2.p).collect();
    let spearman_p: Vec<f64> = partial.iter().map(|x| x.3.p).collect();
    let bh_p = bh_adjust(&pearson_p, alpha)?;
    let bh_s = bh_adjust(&spearman_p, alpha)?;
    let results = partial
        .into_iter()
        .enumerate()
        .map(|(k, (feature, n, p, s))| CorrelationResult {
            feature,
            n,
            pearson_r: p.r,
            pearson_p: p.p,
            spearman_rho: s.r,
            spearman_p: s.p,
            q_pearson: bh_p.q[k],
            q_spearman: bh_s.q[k],
            stars_pearson: stars(bh_p.q[k]).to_string(),
            stars_spearman: stars(bh_s.q[k]).to_string(),
        })
        .collect();
    Ok(FeatureCorrelations { results, skipped })
}

/// Feature order for a multi-dataset table: descending mean absolute Pearson
/// correlation over the datasets where the feature was computed.
pub fn order_by_mean_abs_pearson(per_dataset: &[&FeatureCorrelations]) -> Vec<FeatureName> {
    let mut scored: Vec<(FeatureName, f64)> = FeatureName::ALL
        .into_iter()
        .filter_map(|f| {
            let rs: Vec<f64> = per_dataset
                .iter()
                .filter_map(|d| d.results.iter().find(|r| r.feature == f))
                .map(|r| r.pearson_r.abs())
                .collect();
            (!rs.is_empty()).then(|| (f, rs.iter().sum::<f64>() / rs.len() as f64))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(f, _)| f).collect()
}
