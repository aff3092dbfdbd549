//! Embedding and NLI derived features, and the files that carry their inputs.
//!
//! Embedding file (UTF-8, tab-separated):
//!
//! ```text
//! # embeddings dim=<D> encoder=<identifier>
//! answer/<response_id>  <f_1>  ...  <f_D>
//! reference/<response_id>  <f_1>  ...  <f_D>
//! ```
//!
//! NLI file (UTF-8, tab-separated; premise = reference, hypothesis = answer):
//!
//! ```text
//! # nli model=<identifier>
//! response_id  entailment  contradiction  neutral
//! <response_id>  <p_ent>  <p_con>  <p_neu>
//! ```
//!
//! Blank lines, and lines after the header that start with `#`, are ignored.
//! Floats are written with Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;
pub const NLI_SUM_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Answer,
    Reference,
}

/// Parsed embedding file. Vectors failing the unit-norm check are rescaled.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub encoder: String,
    pub dim: usize,
    pub answers: BTreeMap<String, Vec<f64>>,
    pub references: BTreeMap<String, Vec<f64>>,
    pub renormalized: usize,
}

fn parse_header<'a>(line: &'a str, tag: &str, row: usize) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some(tag) {
        return Err(Error::Parse {
            row,
            message: format!("expected header starting with \"# {tag}\""),
        });
    }
    parts
        .map(|kv| {
            kv.split_once('=').ok_or_else(|| Error::Parse {
                row,
                message: format!("malformed header field {kv:?}"),
            })
        })
        .collect()
}

fn parse_float(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        row,
        message: format!("not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

/// Non-empty lines with 1-based line numbers.
fn content_lines<R: Read>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .filter_map(|(k, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((k + 1, l))),
            Err(e) => Some(Err(e.into())),
        })
}

impl EmbeddingSet {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut lines = content_lines(reader);
        let (row, header) = lines.next().ok_or_else(|| Error::Parse {
            row: 1,
            message: "empty embedding file".into(),
        })??;
        let fields = parse_header(&header, "embeddings", row)?;
        let dim: usize = fields
            .get("dim")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Parse {
                row,
                message: "header needs a positive dim=<D>".into(),
            })?;
        let encoder = fields
            .get("encoder")
            .ok_or_else(|| Error::Parse {
                row,
                message: "header needs encoder=<identifier>".into(),
            })?
            .to_string();

        let mut set = EmbeddingSet {
            encoder,
            dim,
            answers: BTreeMap::new(),
            references: BTreeMap::new(),
            renormalized: 0,
        };
        for line in lines {
            let (row, line) = line?;
            if line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let key = cols.next().unwrap_or_default().trim();
            let (kind, id) = parse_key(key).ok_or_else(|| Error::Parse {
                row,
                message: format!("key {key:?} must be answer/<id> or reference/<id>"),
            })?;
            let mut v = cols
                .map(|c| parse_float(c, row))
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != dim {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {dim} values, found {}", v.len()),
                });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Parse {
                    row,
                    message: "zero vector cannot be normalized".into(),
                });
            }
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                v.iter_mut().for_each(|x| *x /= norm);
                set.renormalized += 1;
            }
            let map = match kind {
                EmbeddingKind::Answer => &mut set.answers,
                EmbeddingKind::Reference => &mut set.references,
            };
            if map.insert(id.to_string(), v).is_some() {
                return Err(Error::DuplicateKey {
                    key: key.to_string(),
                    source_name: "embedding file".into(),
                });
            }
        }
        Ok(set)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# embeddings dim={} encoder={}", self.dim, self.encoder)?;
        for (kind, map) in [("answer", &self.answers), ("reference", &self.references)] {
            for (id, v) in map {
                write!(w, "{kind}/{id}")?;
                for x in v {
                    write!(w, "\t{x}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn parse_key(key: &str) -> Option<(EmbeddingKind, &str)> {
    let (kind, id) = key.split_once('/')?;
    if id.is_empty() {
        return None;
    }
    match kind {
        "answer" => Some((EmbeddingKind::Answer, id)),
        "reference" => Some((EmbeddingKind::Reference, id)),
        _ => None,
    }
}

/// Entailment, contradiction and neutral probabilities for one
/// reference → answer pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliRecord {
    pub p_entail: f64,
    pub p_contradict: f64,
    pub p_neutral: f64,
}

impl NliRecord {
    pub fn new(p_entail: f64, p_contradict: f64, p_neutral: f64) -> Result<Self> {
        let ps = [p_entail, p_contradict, p_neutral];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "NLI probabilities {ps:?} outside [0, 1]"
            )));
        }
        let sum: f64 = ps.iter().sum();
        if (sum - 1.0).abs() > NLI_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "NLI probabilities sum to {sum}, not 1"
            )));
        }
        Ok(NliRecord {
            p_entail,
            p_contradict,
            p_neutral,
        })
    }
}

pub fn nli_margin(record: &NliRecord) -> f64 {
    record.p_entail - record.p_contradict
}

#[derive(Debug, Clone, PartialEq)]
pub struct NliSet {
    pub model: String,
    pub records: BTreeMap<String, NliRecord>,
}

const NLI_COLUMNS: &str = "response_id\tentailment\tcontradiction\tneutral";

impl NliSet {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut lines = content_lines(reader);
        let (row, header) = lines.next().ok_or_else(|| Error::Parse {
            row: 1,
            message: "empty NLI file".into(),
        })??;
        let fields = parse_header(&header, "nli", row)?;
        let model = fields
            .get("model")
            .ok_or_else(|| Error::Parse {
                row,
                message: "header needs model=<identifier>".into(),
            })?
            .to_string();
        let mut records = BTreeMap::new();
        for line in lines {
            let (row, line) = line?;
            if line.starts_with('#') || line.trim_end() == NLI_COLUMNS {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 4 columns, found {}", cols.len()),
                });
            }
            let rec = NliRecord::new(
                parse_float(cols[1], row)?,
                parse_float(cols[2], row)?,
                parse_float(cols[3], row)?,
            )
            .map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            let id = cols[0].trim().to_string();
            if records.insert(id.clone(), rec).is_some() {
                return Err(Error::DuplicateKey {
                    key: id,
                    source_name: "NLI file".into(),
                });
            }
        }
        Ok(NliSet { model, records })
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# nli model={}", self.model)?;
        writeln!(w, "{NLI_COLUMNS}")?;
        for (id, r) in &self.records {
            writeln!(w, "{id}\t{}\t{}\t{}", r.p_entail, r.p_contradict, r.p_neutral)?;
        }
        Ok(())
    }
}

/// Dot product of two unit vectors.
pub fn cosine_similarity(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::Dimension(format!(
            "cosine of vectors with {} and {} entries",
            v1.len(),
            v2.len()
        )));
    }
    Ok(dot(v1, v2))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnDistance {
    /// One minus the mean similarity to the `k` most similar other answers.
    pub avg: f64,
    /// One minus the largest similarity to any other answer.
    pub min: f64,
}

/// Exact all-pairs neighbourhood distances, returned in input order.
pub fn knn_distances(embeddings: &[(String, Vec<f64>)], k: usize) -> Result<Vec<KnnDistance>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if embeddings.len() < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "kNN with k={k} needs at least {} answers, got {}",
            k + 1,
            embeddings.len()
        )));
    }
    let dim = embeddings[0].1.len();
    if let Some((id, v)) = embeddings.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::Dimension(format!(
            "embedding {id} has {} entries, expected {dim}",
            v.len()
        )));
    }
    Ok(embeddings
        .par_iter()
        .enumerate()
        .map(|(i, (_, vi))| {
            let mut sims: Vec<(f64, &str)> = embeddings
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (id, vj))| (dot(vi, vj), id.as_str()))
                .collect();
            // most similar first; lower id wins ties
            let by_rank = |a: &(f64, &str), b: &(f64, &str)| b.0.total_cmp(&a.0).then(a.1.cmp(b.1));
            sims.select_nth_unstable_by(k - 1, by_rank);
            let top = &mut sims[..k];
            top.sort_by(by_rank);
            let mean = top.iter().map(|s| s.0).sum::<f64>() / k as f64;
            KnnDistance {
                avg: 1.0 - mean,
                min: 1.0 - top[0].0,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pool(vs: &[&[f64]]) -> Vec<(String, Vec<f64>)> {
        vs.iter()
            .enumerate()
            .map(|(i, v)| (format!("r{i}"), v.to_vec()))
            .collect()
    }

    #[test]
    fn cosine_fixtures() {
        assert_abs_diff_eq!(cosine_similarity(&[0.6, 0.8], &[0.6, 0.8]).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_similarity(&[0.6, 0.8], &[1.0, 0.0]).unwrap(), 0.6, epsilon = 1e-15);
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn knn_fixtures() {
        let same = knn_distances(&pool(&[&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]]), 2).unwrap();
        assert!(same.iter().all(|d| d.avg == 0.0 && d.min == 0.0));

        let ortho = pool(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let d = knn_distances(&ortho, 2).unwrap();
        assert!(d.iter().all(|d| d.avg == 1.0 && d.min == 1.0));

        let d = knn_distances(&pool(&[&[1.0, 0.0], &[0.6, 0.8], &[0.0, 1.0]]), 1).unwrap();
        assert_abs_diff_eq!(d[0].avg, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(d[0].min, 0.4, epsilon = 1e-12);

        assert!(knn_distances(&ortho, 3).is_err());
        assert!(knn_distances(&ortho, 0).is_err());
    }

    #[test]
    fn nli_margin_fixtures() {
        assert_abs_diff_eq!(nli_margin(&NliRecord::new(0.7, 0.1, 0.2).unwrap()), 0.6, epsilon = 1e-12);
        assert_eq!(nli_margin(&NliRecord::new(0.3, 0.3, 0.4).unwrap()), 0.0);
        assert_eq!(nli_margin(&NliRecord::new(1.0, 0.0, 0.0).unwrap()), 1.0);
        assert!(NliRecord::new(0.5, 0.5, 0.5).is_err());
        assert!(NliRecord::new(1.2, -0.2, 0.0).is_err());
    }

    #[test]
    fn embedding_file_round_trip_and_renormalization() {
        let text = "# embeddings dim=2 encoder=test-enc\nanswer/r1\t0.6\t0.8\nanswer/r2\t3\t4\nreference/r1\t1\t0\n";
        let set = EmbeddingSet::read(text.as_bytes()).unwrap();
        assert_eq!(set.encoder, "test-enc");
        assert_eq!(set.renormalized, 1);
        assert_eq!(set.answers["r2"], vec![0.6, 0.8]);
        let mut out = Vec::new();
        set.write(&mut out).unwrap();
        let again = EmbeddingSet::read(out.as_slice()).unwrap();
        assert_eq!(again.answers, set.answers);
        assert_eq!(again.references, set.references);
        assert_eq!(again.renormalized, 0);
    }

    #[test]
    fn embedding_file_errors() {
        for bad in [
            "",
            "# nli model=x\n",
            "# embeddings encoder=x\n",
            "# embeddings dim=2 encoder=x\nanswer/r1\t1\n",
            "# embeddings dim=2 encoder=x\nquestion/r1\t1\t0\n",
            "# embeddings dim=2 encoder=x\nanswer/r1\t0\t0\n",
            "# embeddings dim=1 encoder=x\nanswer/r1\t1\nanswer/r1\t1\n",
        ] {
            assert!(EmbeddingSet::read(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn nli_file_round_trip() {
        let text = "# nli model=m\nresponse_id\tentailment\tcontradiction\tneutral\nr1\t0.7\t0.1\t0.2\n\nr2\t0.2\t0.5\t0.3\n";
        let set = NliSet::read(text.as_bytes()).unwrap();
        assert_eq!(set.model, "m");
        assert_eq!(set.records.len(), 2);
        let mut out = Vec::new();
        set.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text.replace("\n\n", "\n"));
        assert!(NliSet::read("# nli model=m\nr1\t0.9\t0.9\t0.9\n".as_bytes()).is_err());
        assert!(NliSet::read("# nli model=m\nr1\t0.9\n".as_bytes()).is_err());
    }
}
