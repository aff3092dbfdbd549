//! Synthetic ground truth and a matching corpus of records, texts,
//! embeddings and NLI scores.
//!
//! Text-derived inputs are generated so that harder responses overlap less
//! with their reference, sit further from it in embedding space and are
//! less entailed by it.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{build_matrix, CorrectnessMatrix, GradingRecord, Label, Prediction};
use crate::error::{Error, Result};
use crate::features::semantic::{EmbeddingSet, NliRecord, NliSet};
use crate::features::ResponseText;
use crate::irt::{center_parameters, IrtParameters};
use crate::validation::{padded_ids, simulate_matrix};

const TRUTH_STREAM: u64 = 10;
const OUTCOME_STREAM: u64 = 11;
const LABEL_STREAM: u64 = 12;
const TEXT_STREAM: u64 = 13;
const EMBEDDING_STREAM: u64 = 14;
const NLI_STREAM: u64 = 15;

pub const EMBEDDING_DIM: usize = 16;
pub const DATASET_ID: &str = "synthetic";

/// Gold label frequencies in [`Label::ALL`] order.
const GOLD_WEIGHTS: [f64; 5] = [0.4, 0.15, 0.25, 0.15, 0.05];
const INVALID_RATE: f64 = 0.02;
const PCI_ERROR_SHARE: f64 = 0.5;

const VOCAB: &[&str] = &[
    "battery", "bulb", "circuit", "closed", "open", "switch", "wire", "current", "voltage",
    "terminal", "positive", "negative", "path", "connected", "series", "parallel", "resistance",
    "gap", "contact", "electrical", "state", "short", "damaged", "light", "flows", "through",
    "because", "both", "same", "different", "energy", "charge", "metal", "conductor", "insulator",
    "magnet", "iron", "nail", "attract", "repel", "pole", "north", "south", "force", "motion",
    "water", "heat", "temperature", "liquid", "solid", "gas", "mass", "volume", "density",
];
const FILLER: &[&str] = &["i", "think", "it", "is", "maybe", "so", "then", "that", "just", "yes"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_graders: usize,
    pub n_responses: usize,
    pub n_testlets: usize,
    pub sigma_u: f64,
    /// Center the generated parameters so the truth satisfies the same
    /// constraints as fitted estimates.
    pub center: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_graders: 17,
            n_responses: 3000,
            n_testlets: 150,
            sigma_u: 0.3,
            center: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_graders == 0 || self.n_testlets == 0 || self.n_responses < self.n_testlets {
            return Err(Error::InvalidArgument(format!(
                "synthetic design needs graders >= 1 and responses >= testlets >= 1 \
                 (got {}, {}, {})",
                self.n_graders, self.n_responses, self.n_testlets
            )));
        }
        if !(self.sigma_u.is_finite() && self.sigma_u >= 0.0) {
            return Err(Error::InvalidArgument("sigma_u must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: IrtParameters,
    pub testlet_of: Vec<usize>,
}

/// Assigns `n_responses` to `n_testlets` contiguous, near-equal groups.
pub fn contiguous_testlets(n_responses: usize, n_testlets: usize) -> Vec<usize> {
    (0..n_responses).map(|j| j * n_testlets / n_responses).collect()
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// θ, b ~ N(0, 1) and u ~ N(0, σ_u²).
pub fn generate_truth(config: &SynthConfig, seed: u64) -> Result<GroundTruth> {
    config.validate()?;
    let mut r = rng(seed, TRUTH_STREAM);
    let mut params = IrtParameters::zeros(config.n_graders, config.n_responses, config.n_testlets);
    params.theta.iter_mut().for_each(|v| *v = r.sample(StandardNormal));
    params.b.iter_mut().for_each(|v| *v = r.sample(StandardNormal));
    let u_dist = Normal::new(0.0, config.sigma_u)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    params.u.iter_mut().for_each(|v| *v = u_dist.sample(&mut r));
    let testlet_of = contiguous_testlets(config.n_responses, config.n_testlets);
    if config.center {
        params = center_parameters(&params, &testlet_of);
    }
    Ok(GroundTruth { params, testlet_of })
}

/// Draws outcomes from the ground truth with generated ids.
pub fn simulate_truth(truth: &GroundTruth, seed: u64) -> Result<CorrectnessMatrix> {
    simulate_matrix(&truth.params, &truth.testlet_of, rng(seed, OUTCOME_STREAM).random())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub truth: GroundTruth,
    /// Built from `records`, so it carries label provenance.
    pub matrix: CorrectnessMatrix,
    pub records: Vec<GradingRecord>,
    pub texts: Vec<ResponseText>,
    pub embeddings: EmbeddingSet,
    pub nli: NliSet,
}

fn wrong_label(gold: Label, r: &mut ChaCha8Rng) -> Prediction {
    if r.random::<f64>() < INVALID_RATE {
        return Prediction::Invalid("unsure".into());
    }
    let pci = Label::PartiallyCorrectIncomplete;
    if gold != pci && r.random::<f64>() < PCI_ERROR_SHARE {
        return Prediction::Valid(pci);
    }
    let others: Vec<Label> = Label::ALL
        .into_iter()
        .filter(|&l| l != gold && l != pci)
        .collect();
    Prediction::Valid(*others.choose(r).expect("at least three other labels"))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_unit(r: &mut ChaCha8Rng) -> Vec<f64> {
    unit((0..EMBEDDING_DIM).map(|_| r.sample(StandardNormal)).collect())
}

fn reference_text(r: &mut ChaCha8Rng) -> String {
    let segments = r.random_range(2..=3);
    (0..segments)
        .map(|_| {
            let words: Vec<&str> = (0..r.random_range(4..=6))
                .map(|_| *VOCAB.choose(r).expect("non-empty vocabulary"))
                .collect();
            let mut s = words.join(" ");
            s[..1].make_ascii_uppercase();
            s + "."
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn answer_text(reference: &str, keep: f64, r: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = reference
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .filter(|_| r.random::<f64>() < keep)
        .map(str::to_ascii_lowercase)
        .collect();
    for _ in 0..r.random_range(0..=3) {
        let at = r.random_range(0..=words.len());
        words.insert(at, FILLER.choose(r).expect("non-empty filler").to_string());
    }
    words.join(" ")
}

/// Generates ground truth, simulated grading records with five-way labels,
/// and text, embedding and NLI inputs whose signal tracks difficulty.
pub fn generate_corpus(config: &SynthConfig, seed: u64) -> Result<SyntheticCorpus> {
    let truth = generate_truth(config, seed)?;
    let sim = simulate_truth(&truth, seed)?;
    let b = &truth.params.b;
    let n_resp = sim.n_responses();

    let mut lr = rng(seed, LABEL_STREAM);
    let gold: Vec<Label> = (0..n_resp)
        .map(|_| {
            let mut x = lr.random::<f64>();
            for (l, w) in Label::ALL.into_iter().zip(GOLD_WEIGHTS) {
                if x < w {
                    return l;
                }
                x -= w;
            }
            Label::NonDomain
        })
        .collect();
    let grader_ids = padded_ids("grader_", sim.n_graders());
    let mut records = Vec::with_capacity(sim.outcomes().len());
    for (i, grader) in grader_ids.iter().enumerate() {
        for j in 0..n_resp {
            let predicted = if sim.y(i, j) == 1 {
                Prediction::Valid(gold[j])
            } else {
                wrong_label(gold[j], &mut lr)
            };
            records.push(GradingRecord {
                dataset_id: DATASET_ID.into(),
                question_id: sim.testlets()[sim.testlet_of()[j]].clone(),
                response_id: sim.responses()[j].clone(),
                grader_id: grader.clone(),
                predicted,
                gold: gold[j],
            });
        }
    }
    let matrix = build_matrix(&records)?;

    let mut tr = rng(seed, TEXT_STREAM);
    let references: Vec<String> = (0..sim.n_testlets()).map(|_| reference_text(&mut tr)).collect();
    let texts: Vec<ResponseText> = (0..n_resp)
        .map(|j| {
            let t = sim.testlet_of()[j];
            let keep = 0.1 + 0.8 * sigmoid(-1.5 * b[j]);
            ResponseText {
                response_id: sim.responses()[j].clone(),
                question: format!("Question {}?", sim.testlets()[t]),
                reference: references[t].clone(),
                answer: answer_text(&references[t], keep, &mut tr),
            }
        })
        .collect();

    let mut er = rng(seed, EMBEDDING_STREAM);
    let ref_vecs: Vec<Vec<f64>> = (0..sim.n_testlets()).map(|_| random_unit(&mut er)).collect();
    let mut answers = BTreeMap::new();
    let mut refs = BTreeMap::new();
    for j in 0..n_resp {
        let t = sim.testlet_of()[j];
        let w = sigmoid(-b[j]);
        let noise = random_unit(&mut er);
        let a = ref_vecs[t]
            .iter()
            .zip(&noise)
            .map(|(rv, nv)| w * rv + (1.0 - w * w).sqrt() * nv)
            .collect();
        answers.insert(sim.responses()[j].clone(), unit(a));
        refs.insert(sim.responses()[j].clone(), ref_vecs[t].clone());
    }
    let embeddings = EmbeddingSet {
        encoder: "synthetic-encoder".into(),
        dim: EMBEDDING_DIM,
        answers,
        references: refs,
        renormalized: 0,
    };

    let mut nr = rng(seed, NLI_STREAM);
    let mut nli_records = BTreeMap::new();
    for j in 0..n_resp {
        let logits: [f64; 3] = [
            -1.5 * b[j] + 0.5 * nr.sample::<f64, _>(StandardNormal),
            1.5 * b[j] + 0.5 * nr.sample::<f64, _>(StandardNormal),
            0.5 * nr.sample::<f64, _>(StandardNormal),
        ];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = logits.map(|l| (l - max).exp());
        let z: f64 = e.iter().sum();
        nli_records.insert(
            sim.responses()[j].clone(),
            NliRecord::new(e[0] / z, e[1] / z, e[2] / z)?,
        );
    }
    let nli = NliSet {
        model: "synthetic-nli".into(),
        records: nli_records,
    };

    Ok(SyntheticCorpus {
        truth,
        matrix,
        records,
        texts,
        embeddings,
        nli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_graders: 4,
            n_responses: 60,
            n_testlets: 6,
            sigma_u: 0.3,
            center: true,
        }
    }

    #[test]
    fn contiguous_groups() {
        assert_eq!(contiguous_testlets(6, 3), vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(contiguous_testlets(5, 2), vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn truth_is_centered() {
        let t = generate_truth(&small(), 1).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&t.params.theta).abs() < 1e-12);
        assert!(mean(&t.params.b).abs() < 1e-12);
    }

    #[test]
    fn corpus_is_consistent() {
        let c = generate_corpus(&small(), 3).unwrap();
        assert_eq!(c.records.len(), 240);
        assert_eq!(c.matrix.n_graders(), 4);
        assert_eq!(c.matrix.n_responses(), 60);
        assert_eq!(c.matrix.n_testlets(), 6);
        assert_eq!(c.texts.len(), 60);
        assert_eq!(c.embeddings.answers.len(), 60);
        assert_eq!(c.nli.records.len(), 60);
        for r in &c.records {
            let correct = r.is_correct();
            let i = c.matrix.graders().iter().position(|g| *g == r.grader_id).unwrap();
            let j = c.matrix.responses().iter().position(|x| *x == r.response_id).unwrap();
            assert_eq!(c.matrix.y(i, j) == 1, correct);
        }
    }

    #[test]
    fn corpus_is_seeded() {
        let a = generate_corpus(&small(), 5).unwrap();
        let b = generate_corpus(&small(), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, generate_corpus(&small(), 6).unwrap().records);
    }

    #[test]
    fn bad_design_rejected() {
        let mut c = small();
        c.n_testlets = 100;
        assert!(generate_truth(&c, 0).is_err());
    }
}
