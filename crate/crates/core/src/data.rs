//! Label space, grading records, and the binary correctness matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five-way label space of the grading benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Correct,
    Contradictory,
    PartiallyCorrectIncomplete,
    Irrelevant,
    NonDomain,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Correct,
        Label::Contradictory,
        Label::PartiallyCorrectIncomplete,
        Label::Irrelevant,
        Label::NonDomain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "correct",
            Label::Contradictory => "contradictory",
            Label::PartiallyCorrectIncomplete => "partially_correct_incomplete",
            Label::Irrelevant => "irrelevant",
            Label::NonDomain => "non_domain",
        }
    }

    /// Position in [`Label::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label {s:?}")))
    }
}

/// A grader's output: one of the five labels, or an unparsable answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    Valid(Label),
    /// Raw text the grader produced that is not in the label set.
    Invalid(String),
}

impl Prediction {
    pub fn parse(raw: &str) -> Self {
        let trimmed = raw.trim();
        match trimmed.parse() {
            Ok(l) => Prediction::Valid(l),
            Err(_) => Prediction::Invalid(trimmed.to_string()),
        }
    }

    pub fn label(&self) -> Option<Label> {
        match self {
            Prediction::Valid(l) => Some(*l),
            Prediction::Invalid(_) => None,
        }
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Prediction::Invalid(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            Prediction::Valid(l) => l.as_str(),
            Prediction::Invalid(raw) => raw,
        }
    }
}

/// One grader's prediction for one student response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradingRecord {
    pub dataset_id: String,
    pub question_id: String,
    pub response_id: String,
    pub grader_id: String,
    pub predicted: Prediction,
    pub gold: Label,
}

impl GradingRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted == Prediction::Valid(self.gold)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    dataset_id: String,
    question_id: String,
    response_id: String,
    grader_id: String,
    predicted: String,
    gold: String,
}

/// Ingestion format for grading records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// Comma-separated with a header row.
    Csv,
    /// Tab-separated with a header row.
    Tsv,
    /// One JSON object per line.
    JsonLines,
}

impl RecordFormat {
    /// Guess the format from a file name; defaults to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => RecordFormat::JsonLines,
            Some("tsv") | Some("tab") => RecordFormat::Tsv,
            _ => RecordFormat::Csv,
        }
    }
}

/// Reads header-led delimited rows or JSON lines, returning each row with its
/// 1-based file line. Lines starting with `#` are comments.
pub(crate) fn read_rows<T: DeserializeOwned, R: Read>(
    reader: R,
    format: RecordFormat,
) -> Result<Vec<(usize, T)>> {
    let mut rows = Vec::new();
    match format {
        RecordFormat::Csv | RecordFormat::Tsv => {
            let delimiter = if format == RecordFormat::Tsv { b'\t' } else { b',' };
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(reader);
            let line_of = |e: &csv::Error| e.position().map_or(1, |p| p.line() as usize);
            let headers = rdr
                .headers()
                .map_err(|e| Error::Parse {
                    row: line_of(&e),
                    message: e.to_string(),
                })?
                .clone();
            let mut record = csv::StringRecord::new();
            loop {
                match rdr.read_record(&mut record) {
                    Ok(true) => {}
                    Ok(false) => break,
                    Err(e) => {
                        return Err(Error::Parse {
                            row: line_of(&e),
                            message: e.to_string(),
                        })
                    }
                }
                let row = record.position().map_or(0, |p| p.line() as usize);
                let value = record.deserialize(Some(&headers)).map_err(|e| Error::Parse {
                    row,
                    message: e.to_string(),
                })?;
                rows.push((row, value));
            }
        }
        RecordFormat::JsonLines => {
            for (idx, line) in BufReader::new(reader).lines().enumerate() {
                let row = idx + 1;
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let value = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                    row,
                    message: e.to_string(),
                })?;
                rows.push((row, value));
            }
        }
    }
    Ok(rows)
}

/// Parses grading records. Row numbers in errors are 1-based file lines
/// (the header of a delimited file is line 1).
pub fn parse_records<R: Read>(reader: R, format: RecordFormat) -> Result<Vec<GradingRecord>> {
    let rows: Vec<(usize, RawRow)> = read_rows(reader, format)?;

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (row, raw) in rows {
        let gold: Label = raw.gold.trim().parse().map_err(|_| Error::Parse {
            row,
            message: format!("unknown gold label {:?}", raw.gold),
        })?;
        for (name, value) in [
            ("dataset_id", &raw.dataset_id),
            ("question_id", &raw.question_id),
            ("response_id", &raw.response_id),
            ("grader_id", &raw.grader_id),
        ] {
            if value.trim().is_empty() {
                return Err(Error::Parse {
                    row,
                    message: format!("empty {name}"),
                });
            }
        }
        let key = (
            raw.dataset_id.clone(),
            raw.grader_id.clone(),
            raw.response_id.clone(),
        );
        if !seen.insert(key) {
            return Err(Error::DuplicatePair {
                row,
                dataset: raw.dataset_id,
                grader: raw.grader_id,
                response: raw.response_id,
            });
        }
        out.push(GradingRecord {
            dataset_id: raw.dataset_id,
            question_id: raw.question_id,
            response_id: raw.response_id,
            grader_id: raw.grader_id,
            predicted: Prediction::parse(&raw.predicted),
            gold,
        });
    }
    Ok(out)
}

/// Writes records as CSV with a header row, readable by [`parse_records`].
pub fn write_records_csv<W: Write>(writer: W, records: &[GradingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(RawRow {
            dataset_id: r.dataset_id.clone(),
            question_id: r.question_id.clone(),
            response_id: r.response_id.clone(),
            grader_id: r.grader_id.clone(),
            predicted: r.predicted.as_str().to_string(),
            gold: r.gold.as_str().to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Groups records by dataset id, in sorted dataset order.
pub fn split_by_dataset(records: Vec<GradingRecord>) -> BTreeMap<String, Vec<GradingRecord>> {
    let mut map: BTreeMap<String, Vec<GradingRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.dataset_id.clone()).or_default().push(r);
    }
    map
}

/// Gold and predicted labels behind every cell of a [`CorrectnessMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Gold label per response.
    pub gold: Vec<Label>,
    /// Row-major grader × response predictions.
    pub predicted: Vec<Prediction>,
}

/// Binary grader × response outcomes with the response → testlet map.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectnessMatrix {
    dataset_id: String,
    graders: Vec<String>,
    responses: Vec<String>,
    testlets: Vec<String>,
    testlet_of: Vec<usize>,
    y: Vec<u8>,
    provenance: Option<Provenance>,
}

impl CorrectnessMatrix {
    /// Builds a matrix from raw outcomes. `y` is row-major (grader, response).
    pub fn from_outcomes(
        dataset_id: impl Into<String>,
        graders: Vec<String>,
        responses: Vec<String>,
        testlets: Vec<String>,
        testlet_of: Vec<usize>,
        y: Vec<u8>,
    ) -> Result<Self> {
        let m = graders.len();
        let j = responses.len();
        if m == 0 || j == 0 || testlets.is_empty() {
            return Err(Error::Dimension(format!(
                "need at least one grader, response and testlet (got {m}, {j}, {})",
                testlets.len()
            )));
        }
        if y.len() != m * j {
            return Err(Error::Dimension(format!(
                "outcome vector has {} cells, expected {m}x{j}",
                y.len()
            )));
        }
        if testlet_of.len() != j {
            return Err(Error::Dimension(format!(
                "testlet map has {} entries for {j} responses",
                testlet_of.len()
            )));
        }
        if let Some(&t) = testlet_of.iter().find(|&&t| t >= testlets.len()) {
            return Err(Error::Dimension(format!(
                "testlet index {t} out of range 0..{}",
                testlets.len()
            )));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("outcomes must be 0 or 1".into()));
        }
        Ok(CorrectnessMatrix {
            dataset_id: dataset_id.into(),
            graders,
            responses,
            testlets,
            testlet_of,
            y,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Result<Self> {
        if provenance.gold.len() != self.n_responses()
            || provenance.predicted.len() != self.y.len()
        {
            return Err(Error::Dimension("provenance does not match matrix shape".into()));
        }
        self.provenance = Some(provenance);
        Ok(self)
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }
    pub fn graders(&self) -> &[String] {
        &self.graders
    }
    pub fn responses(&self) -> &[String] {
        &self.responses
    }
    pub fn testlets(&self) -> &[String] {
        &self.testlets
    }
    pub fn testlet_of(&self) -> &[usize] {
        &self.testlet_of
    }
    pub fn n_graders(&self) -> usize {
        self.graders.len()
    }
    pub fn n_responses(&self) -> usize {
        self.responses.len()
    }
    pub fn n_testlets(&self) -> usize {
        self.testlets.len()
    }
    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    #[inline]
    pub fn y(&self, grader: usize, response: usize) -> u8 {
        self.y[grader * self.responses.len() + response]
    }

    /// Row-major outcomes.
    pub fn outcomes(&self) -> &[u8] {
        &self.y
    }

    pub fn row(&self, grader: usize) -> &[u8] {
        let j = self.responses.len();
        &self.y[grader * j..(grader + 1) * j]
    }

    /// Number of cells whose prediction was not a valid label.
    pub fn invalid_count(&self) -> usize {
        self.provenance
            .as_ref()
            .map_or(0, |p| p.predicted.iter().filter(|p| p.is_invalid()).count())
    }

    /// Per-grader raw accuracy.
    pub fn grader_accuracy(&self) -> Vec<f64> {
        (0..self.n_graders())
            .map(|i| {
                self.row(i).iter().map(|&v| v as f64).sum::<f64>() / self.n_responses() as f64
            })
            .collect()
    }

    /// Sub-matrix over a subset of responses; graders and testlet labels are kept.
    pub fn select_responses(&self, keep: &[usize]) -> Self {
        let m = self.n_graders();
        let mut y = Vec::with_capacity(m * keep.len());
        for i in 0..m {
            y.extend(keep.iter().map(|&j| self.y(i, j)));
        }
        let provenance = self.provenance.as_ref().map(|p| Provenance {
            gold: keep.iter().map(|&j| p.gold[j]).collect(),
            predicted: (0..m)
                .flat_map(|i| {
                    keep.iter()
                        .map(move |&j| p.predicted[i * self.n_responses() + j].clone())
                })
                .collect(),
        });
        CorrectnessMatrix {
            dataset_id: self.dataset_id.clone(),
            graders: self.graders.clone(),
            responses: keep.iter().map(|&j| self.responses[j].clone()).collect(),
            testlets: self.testlets.clone(),
            testlet_of: keep.iter().map(|&j| self.testlet_of[j]).collect(),
            y,
            provenance,
        }
    }

    /// Sub-matrix over a subset of graders; all responses are kept.
    pub fn select_graders(&self, keep: &[usize]) -> Self {
        let y = keep.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let j = self.n_responses();
        let provenance = self.provenance.as_ref().map(|p| Provenance {
            gold: p.gold.clone(),
            predicted: keep
                .iter()
                .flat_map(|&i| p.predicted[i * j..(i + 1) * j].iter().cloned())
                .collect(),
        });
        CorrectnessMatrix {
            dataset_id: self.dataset_id.clone(),
            graders: keep.iter().map(|&i| self.graders[i].clone()).collect(),
            responses: self.responses.clone(),
            testlets: self.testlets.clone(),
            testlet_of: self.testlet_of.clone(),
            y,
            provenance,
        }
    }
}

/// Builds the correctness matrix for the records of a single dataset.
///
/// Graders, responses and questions are ordered lexicographically; testlet
/// indices follow the sorted question ids.
pub fn build_matrix(records: &[GradingRecord]) -> Result<CorrectnessMatrix> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("no records".into()))?;
    let dataset_id = first.dataset_id.clone();
    if let Some(r) = records.iter().find(|r| r.dataset_id != dataset_id) {
        return Err(Error::InvalidArgument(format!(
            "records span several datasets ({dataset_id}, {}); split them first",
            r.dataset_id
        )));
    }

    let graders: Vec<String> = records
        .iter()
        .map(|r| r.grader_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut question_of: BTreeMap<&str, &str> = BTreeMap::new();
    let mut gold_of: HashMap<&str, Label> = HashMap::new();
    for r in records {
        if let Some(q) = question_of.insert(&r.response_id, &r.question_id) {
            if q != r.question_id {
                return Err(Error::ConflictingQuestion {
                    response: r.response_id.clone(),
                });
            }
        }
        if let Some(g) = gold_of.insert(&r.response_id, r.gold) {
            if g != r.gold {
                return Err(Error::ConflictingGold {
                    response: r.response_id.clone(),
                });
            }
        }
    }
    let responses: Vec<String> = question_of.keys().map(|s| s.to_string()).collect();
    let testlets: Vec<String> = question_of
        .values()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let testlet_index: HashMap<&str, usize> = testlets
        .iter()
        .enumerate()
        .map(|(t, q)| (q.as_str(), t))
        .collect();
    let testlet_of = question_of.values().map(|q| testlet_index[q]).collect();

    let grader_index: HashMap<&str, usize> = graders
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let response_index: HashMap<&str, usize> = responses
        .iter()
        .enumerate()
        .map(|(j, r)| (r.as_str(), j))
        .collect();

    let (m, j) = (graders.len(), responses.len());
    let mut cells: Vec<Option<&GradingRecord>> = vec![None; m * j];
    for r in records {
        let cell = grader_index[r.grader_id.as_str()] * j + response_index[r.response_id.as_str()];
        if cells[cell].is_some() {
            return Err(Error::DuplicatePair {
                row: 0,
                dataset: dataset_id,
                grader: r.grader_id.clone(),
                response: r.response_id.clone(),
            });
        }
        cells[cell] = Some(r);
    }

    let mut y = Vec::with_capacity(m * j);
    let mut predicted = Vec::with_capacity(m * j);
    for (cell, rec) in cells.into_iter().enumerate() {
        let rec = rec.ok_or_else(|| Error::IncompleteDesign {
            grader: graders[cell / j].clone(),
            response: responses[cell % j].clone(),
        })?;
        y.push(rec.is_correct() as u8);
        predicted.push(rec.predicted.clone());
    }
    let gold = responses.iter().map(|r| gold_of[r.as_str()]).collect();

    CorrectnessMatrix::from_outcomes(dataset_id, graders, responses, testlets, testlet_of, y)?
        .with_provenance(Provenance { gold, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "dataset_id,question_id,response_id,grader_id,predicted,gold\n";

    fn rec(q: &str, r: &str, g: &str, pred: &str, gold: Label) -> GradingRecord {
        GradingRecord {
            dataset_id: "d".into(),
            question_id: q.into(),
            response_id: r.into(),
            grader_id: g.into(),
            predicted: Prediction::parse(pred),
            gold,
        }
    }

    #[test]
    fn label_parsing_is_closed() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("Correct".parse::<Label>().is_err());
        assert!("maybe".parse::<Label>().is_err());
    }

    #[test]
    fn parses_valid_and_invalid_predictions() {
        let text = format!("{HEADER}d,q1,r1,g1,correct,correct\nd,q1,r2,g1,maybe,irrelevant\n");
        let recs = parse_records(text.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(recs[0].predicted, Prediction::Valid(Label::Correct));
        assert_eq!(recs[0].gold, Label::Correct);
        assert_eq!(recs[1].predicted, Prediction::Invalid("maybe".into()));
        assert_eq!(recs[1].gold, Label::Irrelevant);
    }

    #[test]
    fn three_row_fixture_preserves_order() {
        let text = format!(
            "{HEADER}d,q2,r9,gB,contradictory,contradictory\nd,q1,r1,gA,non_domain,irrelevant\nd,q1,r1,gB,partially_correct_incomplete,irrelevant\n"
        );
        let recs = parse_records(text.as_bytes(), RecordFormat::Csv).unwrap();
        let ids: Vec<_> = recs
            .iter()
            .map(|r| (r.response_id.as_str(), r.grader_id.as_str()))
            .collect();
        assert_eq!(ids, vec![("r9", "gB"), ("r1", "gA"), ("r1", "gB")]);
    }

    #[test]
    fn jsonl_matches_csv() {
        let jsonl = r#"{"dataset_id":"d","question_id":"q1","response_id":"r1","grader_id":"g1","predicted":"correct","gold":"correct"}

{"dataset_id":"d","question_id":"q1","response_id":"r2","grader_id":"g1","predicted":"???","gold":"non_domain"}
"#;
        let a = parse_records(jsonl.as_bytes(), RecordFormat::JsonLines).unwrap();
        let csv = format!("{HEADER}d,q1,r1,g1,correct,correct\nd,q1,r2,g1,???,non_domain\n");
        let b = parse_records(csv.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_gold_with_row_number() {
        let text = format!("{HEADER}d,q1,r1,g1,correct,correct\nd,q1,r2,g1,correct,wrong\n");
        match parse_records(text.as_bytes(), RecordFormat::Csv) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comment_lines_are_skipped_and_counted() {
        let text = format!("# gradeirt seed=1\n{HEADER}# note\nd,q1,r1,g1,correct,correct\nd,q1,r2,g1,correct,wrong\n");
        match parse_records(text.as_bytes(), RecordFormat::Csv) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn writer_round_trips() {
        let recs = vec![
            rec("q1", "r1", "g1", "correct", Label::Correct),
            rec("q1", "r2", "g1", "not sure, really", Label::NonDomain),
        ];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        assert_eq!(parse_records(&buf[..], RecordFormat::Csv).unwrap(), recs);
    }

    #[test]
    fn rejects_duplicates_and_malformed_rows() {
        let dup = format!("{HEADER}d,q1,r1,g1,correct,correct\nd,q1,r1,g1,irrelevant,correct\n");
        assert!(matches!(
            parse_records(dup.as_bytes(), RecordFormat::Csv),
            Err(Error::DuplicatePair { row: 3, .. })
        ));
        let short = format!("{HEADER}d,q1,r1,g1,correct\n");
        assert!(matches!(
            parse_records(short.as_bytes(), RecordFormat::Csv),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            parse_records("{not json".as_bytes(), RecordFormat::JsonLines),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn same_pair_in_two_datasets_is_fine() {
        let text = format!("{HEADER}a,q1,r1,g1,correct,correct\nb,q1,r1,g1,correct,correct\n");
        assert_eq!(parse_records(text.as_bytes(), RecordFormat::Csv).unwrap().len(), 2);
    }

    #[test]
    fn one_by_one_matrix() {
        let m = build_matrix(&[rec("q", "r", "g", "correct", Label::Correct)]).unwrap();
        assert_eq!(m.outcomes(), &[1]);
    }

    #[test]
    fn invalid_prediction_scores_zero() {
        let m = build_matrix(&[rec("q", "r", "g", "garbage", Label::Correct)]).unwrap();
        assert_eq!(m.outcomes(), &[0]);
        assert_eq!(m.invalid_count(), 1);
    }

    #[test]
    fn two_graders_four_responses() {
        let mut recs = Vec::new();
        for g in ["g2", "g1"] {
            for (q, r) in [("q2", "r4"), ("q1", "r1"), ("q2", "r3"), ("q1", "r2")] {
                let pred = if g == "g1" && r == "r3" { "irrelevant" } else { "correct" };
                recs.push(rec(q, r, g, pred, Label::Correct));
            }
        }
        let m = build_matrix(&recs).unwrap();
        assert_eq!(m.graders(), &["g1", "g2"]);
        assert_eq!(m.responses(), &["r1", "r2", "r3", "r4"]);
        assert_eq!(m.testlet_of(), &[0, 0, 1, 1]);
        assert_eq!(m.row(0), &[1, 1, 0, 1]);
        assert_eq!(m.row(1), &[1, 1, 1, 1]);
    }

    #[test]
    fn incomplete_design_names_missing_cell() {
        let recs = vec![
            rec("q", "r1", "g1", "correct", Label::Correct),
            rec("q", "r2", "g1", "correct", Label::Correct),
            rec("q", "r1", "g2", "correct", Label::Correct),
        ];
        match build_matrix(&recs) {
            Err(Error::IncompleteDesign { grader, response }) => {
                assert_eq!((grader.as_str(), response.as_str()), ("g2", "r2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_gold_is_rejected() {
        let recs = vec![
            rec("q", "r1", "g1", "correct", Label::Correct),
            rec("q", "r1", "g2", "correct", Label::Irrelevant),
        ];
        assert!(matches!(build_matrix(&recs), Err(Error::ConflictingGold { .. })));
    }
}
