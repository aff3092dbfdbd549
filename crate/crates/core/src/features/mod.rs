//! Per-response features used as correlates of difficulty.

pub mod lexical;
pub mod semantic;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{read_rows, RecordFormat};
use crate::error::{Error, Result};
use lexical::LexicalFeatures;
use semantic::{knn_distances, nli_margin, EmbeddingSet, NliSet};

/// The twelve features, in a fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureName {
    TokenCount,
    TypeTokenRatio,
    UnigramOverlap,
    BigramOverlap,
    MissingSegments,
    SimRef,
    AvgKnnDist,
    MinKnnDist,
    NliEntail,
    NliContradict,
    NliNeutral,
    NliMargin,
}

impl FeatureName {
    pub const ALL: [FeatureName; 12] = [
        FeatureName::TokenCount,
        FeatureName::TypeTokenRatio,
        FeatureName::UnigramOverlap,
        FeatureName::BigramOverlap,
        FeatureName::MissingSegments,
        FeatureName::SimRef,
        FeatureName::AvgKnnDist,
        FeatureName::MinKnnDist,
        FeatureName::NliEntail,
        FeatureName::NliContradict,
        FeatureName::NliNeutral,
        FeatureName::NliMargin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::TokenCount => "token_count",
            FeatureName::TypeTokenRatio => "type_token_ratio",
            FeatureName::UnigramOverlap => "unigram_overlap",
            FeatureName::BigramOverlap => "bigram_overlap",
            FeatureName::MissingSegments => "missing_segments",
            FeatureName::SimRef => "sim_ref",
            FeatureName::AvgKnnDist => "avg_knn_dist",
            FeatureName::MinKnnDist => "min_knn_dist",
            FeatureName::NliEntail => "nli_entail",
            FeatureName::NliContradict => "nli_contradict",
            FeatureName::NliNeutral => "nli_neutral",
            FeatureName::NliMargin => "nli_margin",
        }
    }

    /// Human-readable row label.
    pub fn description(self) -> &'static str {
        match self {
            FeatureName::TokenCount => "Token count",
            FeatureName::TypeTokenRatio => "Type-token ratio",
            FeatureName::UnigramOverlap => "Unigram overlap with reference",
            FeatureName::BigramOverlap => "Bigram overlap with reference",
            FeatureName::MissingSegments => "Number of missing reference segments",
            FeatureName::SimRef => "Semantic similarity to reference",
            FeatureName::AvgKnnDist => "Average kNN distance",
            FeatureName::MinKnnDist => "Minimum kNN distance",
            FeatureName::NliEntail => "NLI entailment to reference",
            FeatureName::NliContradict => "NLI contradiction to reference",
            FeatureName::NliNeutral => "NLI neutrality to reference",
            FeatureName::NliMargin => "Entailment-contradiction margin",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn is_lexical(self) -> bool {
        self.index() <= FeatureName::MissingSegments.index()
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Question, reference and student answer for one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseText {
    pub response_id: String,
    pub question: String,
    pub reference: String,
    pub answer: String,
}

/// Reads a response text file (header row for delimited forms). Empty
/// references are rejected; empty answers are kept.
pub fn parse_texts<R: Read>(reader: R, format: RecordFormat) -> Result<Vec<ResponseText>> {
    let rows: Vec<(usize, ResponseText)> = read_rows(reader, format)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (row, rec) in rows {
        if rec.reference.trim().is_empty() {
            return Err(Error::Parse {
                row,
                message: format!("empty reference for response {}", rec.response_id),
            });
        }
        if !seen.insert(rec.response_id.clone()) {
            return Err(Error::DuplicateKey {
                key: rec.response_id,
                source_name: "text file".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes response texts as CSV with a header row, readable by [`parse_texts`].
pub fn write_texts_csv<W: Write>(writer: W, texts: &[ResponseText]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in texts {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub response_id: String,
    /// Values in [`FeatureName::ALL`] order; `None` marks an undefined value.
    pub values: [Option<f64>; 12],
}

impl FeatureRow {
    pub fn get(&self, feature: FeatureName) -> Option<f64> {
        self.values[feature.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    /// Responses with an empty answer.
    pub empty_answers: usize,
    /// Embedding vectors rescaled to unit norm on load.
    pub renormalized: usize,
    pub warnings: Vec<String>,
}

impl FeatureTable {
    /// Number of defined values per feature.
    pub fn coverage(&self) -> BTreeMap<FeatureName, usize> {
        FeatureName::ALL
            .into_iter()
            .map(|f| (f, self.rows.iter().filter(|r| r.get(f).is_some()).count()))
            .collect()
    }

    pub fn row(&self, response_id: &str) -> Option<&FeatureRow> {
        self.rows.iter().find(|r| r.response_id == response_id)
    }

    /// Tab-separated table with `NA` for undefined values.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "response_id")?;
        for f in FeatureName::ALL {
            write!(w, "\t{f}")?;
        }
        writeln!(w)?;
        for row in &self.rows {
            write!(w, "{}", row.response_id)?;
            for v in row.values {
                match v {
                    Some(x) => write!(w, "\t{x}")?,
                    None => write!(w, "\tNA")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Builds the feature table for `texts`, one row per text in input order.
///
/// The kNN pool is the set of answers in `texts` that have an embedding.
/// Missing embeddings or NLI scores leave the corresponding columns undefined.
pub fn assemble_features(
    texts: &[ResponseText],
    embeddings: Option<&EmbeddingSet>,
    nli: Option<&NliSet>,
    k: usize,
) -> Result<FeatureTable> {
    let mut seen = HashSet::new();
    for t in texts {
        if !seen.insert(t.response_id.as_str()) {
            return Err(Error::DuplicateKey {
                key: t.response_id.clone(),
                source_name: "feature inputs".into(),
            });
        }
    }
    let mut warnings = Vec::new();

    let mut knn: BTreeMap<String, semantic::KnnDistance> = BTreeMap::new();
    if let Some(emb) = embeddings {
        let pool: Vec<(String, Vec<f64>)> = texts
            .iter()
            .filter_map(|t| {
                emb.answers
                    .get(&t.response_id)
                    .map(|v| (t.response_id.clone(), v.clone()))
            })
            .collect();
        if pool.len() < texts.len() {
            warnings.push(format!(
                "{} of {} responses have no answer embedding",
                texts.len() - pool.len(),
                texts.len()
            ));
        }
        match knn_distances(&pool, k) {
            Ok(d) => knn.extend(pool.into_iter().map(|(id, _)| id).zip(d)),
            Err(e) => warnings.push(format!("kNN features skipped: {e}")),
        }
    } else {
        warnings.push("no embedding file; semantic similarity and kNN features undefined".into());
    }
    if nli.is_none() {
        warnings.push("no NLI file; NLI features undefined".into());
    }

    let mut empty_answers = 0;
    let rows = texts
        .iter()
        .map(|t| {
            if t.answer.trim().is_empty() {
                empty_answers += 1;
            }
            let lex = LexicalFeatures::compute(&t.reference, &t.answer);
            let mut values = [None; 12];
            values[FeatureName::TokenCount.index()] = Some(lex.token_count as f64);
            values[FeatureName::TypeTokenRatio.index()] = lex.ttr;
            values[FeatureName::UnigramOverlap.index()] = lex.unigram_overlap;
            values[FeatureName::BigramOverlap.index()] = lex.bigram_overlap;
            values[FeatureName::MissingSegments.index()] = Some(lex.missing_segments as f64);
            if let Some(emb) = embeddings {
                if let (Some(a), Some(r)) = (
                    emb.answers.get(&t.response_id),
                    emb.references.get(&t.response_id),
                ) {
                    values[FeatureName::SimRef.index()] = semantic::cosine_similarity(a, r).ok();
                }
            }
            if let Some(d) = knn.get(&t.response_id) {
                values[FeatureName::AvgKnnDist.index()] = Some(d.avg);
                values[FeatureName::MinKnnDist.index()] = Some(d.min);
            }
            if let Some(rec) = nli.and_then(|n| n.records.get(&t.response_id)) {
                values[FeatureName::NliEntail.index()] = Some(rec.p_entail);
                values[FeatureName::NliContradict.index()] = Some(rec.p_contradict);
                values[FeatureName::NliNeutral.index()] = Some(rec.p_neutral);
                values[FeatureName::NliMargin.index()] = Some(nli_margin(rec));
            }
            FeatureRow {
                response_id: t.response_id.clone(),
                values,
            }
        })
        .collect();

    Ok(FeatureTable {
        rows,
        empty_answers,
        renormalized: embeddings.map_or(0, |e| e.renormalized),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use semantic::NliRecord;

    fn text(id: &str, answer: &str) -> ResponseText {
        ResponseText {
            response_id: id.into(),
            question: "What happens?".into(),
            reference: "The bulb lights because the circuit is closed.".into(),
            answer: answer.into(),
        }
    }

    fn inputs() -> (Vec<ResponseText>, EmbeddingSet, NliSet) {
        let texts = vec![
            text("r1", "the bulb lights"),
            text("r2", "circuit is closed"),
            text("r3", ""),
        ];
        let unit = |a: f64| vec![a.cos(), a.sin()];
        let emb = EmbeddingSet {
            encoder: "e".into(),
            dim: 2,
            answers: [("r1", 0.1), ("r2", 0.5), ("r3", 1.4)]
                .iter()
                .map(|(k, a)| (k.to_string(), unit(*a)))
                .collect(),
            references: ["r1", "r2", "r3"]
                .iter()
                .map(|k| (k.to_string(), unit(0.0)))
                .collect(),
            renormalized: 0,
        };
        let nli = NliSet {
            model: "m".into(),
            records: ["r1", "r2", "r3"]
                .iter()
                .map(|k| (k.to_string(), NliRecord::new(0.6, 0.1, 0.3).unwrap()))
                .collect(),
        };
        (texts, emb, nli)
    }

    #[test]
    fn full_inputs_give_complete_rows() {
        let (texts, emb, nli) = inputs();
        let table = assemble_features(&texts, Some(&emb), Some(&nli), 1).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.empty_answers, 1);
        let r1 = table.row("r1").unwrap();
        assert!(r1.values.iter().all(Option::is_some));
        // empty answer: ttr undefined, everything else present
        let r3 = table.row("r3").unwrap();
        assert_eq!(r3.get(FeatureName::TypeTokenRatio), None);
        assert_eq!(r3.get(FeatureName::TokenCount), Some(0.0));
        let cov = table.coverage();
        assert_eq!(cov[&FeatureName::TypeTokenRatio], 2);
        assert_eq!(cov[&FeatureName::NliMargin], 3);
    }

    #[test]
    fn missing_nli_leaves_columns_undefined() {
        let (texts, emb, _) = inputs();
        let table = assemble_features(&texts, Some(&emb), None, 1).unwrap();
        assert_eq!(table.rows.len(), texts.len());
        for row in &table.rows {
            assert_eq!(row.get(FeatureName::NliEntail), None);
            assert_eq!(row.get(FeatureName::NliMargin), None);
            assert!(row.get(FeatureName::SimRef).is_some());
        }
        assert!(table.warnings.iter().any(|w| w.contains("NLI")));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let texts = vec![text("r1", "a"), text("r1", "b")];
        assert!(matches!(
            assemble_features(&texts, None, None, 5),
            Err(Error::DuplicateKey { .. })
        ));
    }

    #[test]
    fn text_file_parsing() {
        let csv = "response_id,question,reference,answer\nr1,Q?,\"The bulb, lit.\",yes\nr2,Q?,Ref,\n";
        let texts = parse_texts(csv.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(texts.len(), 2);
        assert_eq!(texts[0].reference, "The bulb, lit.");
        assert_eq!(texts[1].answer, "");
        let bad = "response_id,question,reference,answer\nr1,Q?,  ,yes\n";
        assert!(parse_texts(bad.as_bytes(), RecordFormat::Csv).is_err());
    }

    #[test]
    fn tsv_output_marks_undefined() {
        let (texts, _, _) = inputs();
        let table = assemble_features(&texts, None, None, 5).unwrap();
        let mut out = Vec::new();
        table.write_tsv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("response_id\ttoken_count"));
        assert_eq!(s.lines().count(), 4);
        assert!(s.contains("\tNA"));
    }
}
