use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use gradeirt::data::{parse_records, write_records_csv, RecordFormat};
use gradeirt::features::semantic::{EmbeddingSet, NliSet};
use gradeirt::features::{assemble_features, parse_texts, write_texts_csv, ResponseText};
use gradeirt::irt::IrtParameters;
use gradeirt::pipeline::{self, AnalysisOptions, FeatureInputs, FittedDataset};
use gradeirt::report::RunMeta;
use gradeirt::synth::generate_corpus;
use gradeirt::GradingRecord;
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{digest_inputs, slug, OutputDir};

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_records(path: &Path) -> Result<Vec<GradingRecord>> {
    let records = parse_records(open(path)?, RecordFormat::from_path(path))
        .with_context(|| format!("in records file {}", path.display()))?;
    info!("{} grading records from {}", records.len(), path.display());
    Ok(records)
}

fn load_texts(path: &Path) -> Result<Vec<ResponseText>> {
    parse_texts(open(path)?, RecordFormat::from_path(path))
        .with_context(|| format!("in texts file {}", path.display()))
}

fn load_embeddings(path: Option<&Path>) -> Result<Option<EmbeddingSet>> {
    path.map(|p| {
        EmbeddingSet::read(open(p)?).with_context(|| format!("in embedding file {}", p.display()))
    })
    .transpose()
}

fn load_nli(path: Option<&Path>) -> Result<Option<NliSet>> {
    path.map(|p| NliSet::read(open(p)?).with_context(|| format!("in NLI file {}", p.display())))
        .transpose()
}

fn fit_records(cfg: &RunConfig) -> Result<(RunMeta, BTreeMap<String, FittedDataset>)> {
    let records_path = cfg.records()?;
    let meta = RunMeta::new(cfg.seed, digest_inputs(&[("records", Some(records_path))])?);
    let fitted = pipeline::fit_datasets(load_records(records_path)?, &cfg.fit)?;
    Ok((meta, fitted))
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let (meta, fitted) = fit_records(cfg)?;
    let mut out = OutputDir::create(&cfg.out)?;
    for (id, report) in pipeline::params_reports(&meta, &fitted) {
        out.write_json(&format!("params_{}.json", slug(&id)), &report)?;
        out.write(&format!("ranking_{}.tsv", slug(&id)), report.ranking_text().as_bytes())?;
    }
    out.finish("fit", &meta)
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let (meta, fitted) = fit_records(cfg)?;
    let report = pipeline::validate(meta.clone(), &fitted, &cfg.fit, cfg.replications, cfg.seed)?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("validation.json", &report)?;
    out.write("recovery.tsv", report.recovery_table().as_bytes())?;
    out.write("stability.tsv", report.stability_table().as_bytes())?;
    out.finish("validate", &meta)
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    let records_path = cfg.records()?;
    let inputs = &cfg.inputs;
    let meta = RunMeta::new(
        cfg.seed,
        digest_inputs(&[
            ("records", Some(records_path)),
            ("texts", inputs.texts.as_deref()),
            ("embeddings", inputs.embeddings.as_deref()),
            ("nli", inputs.nli.as_deref()),
        ])?,
    );
    let texts = inputs.texts.as_deref().map(load_texts).transpose()?;
    if texts.is_none() {
        warn!("no texts file; correlation report skipped");
    }
    let embeddings = load_embeddings(inputs.embeddings.as_deref())?;
    let nli = load_nli(inputs.nli.as_deref())?;
    let fitted = pipeline::fit_datasets(load_records(records_path)?, &cfg.fit)?;
    let report = pipeline::analyze(
        meta.clone(),
        &fitted,
        FeatureInputs {
            texts: texts.as_deref(),
            embeddings: embeddings.as_ref(),
            nli: nli.as_ref(),
        },
        AnalysisOptions {
            n_bins: cfg.bins,
            k_nn: cfg.k_nn,
            alpha: cfg.alpha,
        },
    )?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("analysis.json", &report)?;
    out.write("bins.tsv", report.bin_table().as_bytes())?;
    out.write("bins_long.tsv", report.bin_long().as_bytes())?;
    out.write("confusion.tsv", report.confusion_table().as_bytes())?;
    out.write("confusion_long.tsv", report.confusion_long().as_bytes())?;
    if texts.is_some() {
        out.write("correlations.tsv", report.correlation_table().as_bytes())?;
    }
    out.finish("analyze", &meta)
}

pub fn features(cfg: &RunConfig) -> Result<()> {
    let texts_path = cfg.texts()?;
    let inputs = &cfg.inputs;
    let meta = RunMeta::new(
        cfg.seed,
        digest_inputs(&[
            ("texts", Some(texts_path)),
            ("embeddings", inputs.embeddings.as_deref()),
            ("nli", inputs.nli.as_deref()),
        ])?,
    );
    let texts = load_texts(texts_path)?;
    let embeddings = load_embeddings(inputs.embeddings.as_deref())?;
    let nli = load_nli(inputs.nli.as_deref())?;
    let table = assemble_features(&texts, embeddings.as_ref(), nli.as_ref(), cfg.k_nn)?;
    for w in &table.warnings {
        warn!("{w}");
    }
    let mut bytes = meta.header().into_bytes();
    for w in &table.warnings {
        bytes.extend(format!("# warning: {w}\n").into_bytes());
    }
    table.write_tsv(&mut bytes)?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write("features.tsv", &bytes)?;
    out.finish("features", &meta)
}

#[derive(Serialize)]
struct TruthReport<'a> {
    meta: &'a RunMeta,
    graders: &'a [String],
    responses: &'a [String],
    testlets: &'a [String],
    testlet_of: &'a [usize],
    params: &'a IrtParameters,
}

/// Puts the run header after a format's own first line.
fn after_first_line(body: Vec<u8>, header: &str) -> Vec<u8> {
    let split = body.iter().position(|&c| c == b'\n').map_or(body.len(), |k| k + 1);
    let mut out = body[..split].to_vec();
    out.extend(header.as_bytes());
    out.extend(&body[split..]);
    out
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let meta = RunMeta::new(cfg.seed, BTreeMap::new());
    let corpus = generate_corpus(&cfg.synth, cfg.seed)?;
    let header = meta.header();
    let mut out = OutputDir::create(&cfg.out)?;

    let mut records = header.clone().into_bytes();
    write_records_csv(&mut records, &corpus.records)?;
    out.write("records.csv", &records)?;
    let mut texts = header.clone().into_bytes();
    write_texts_csv(&mut texts, &corpus.texts)?;
    out.write("texts.csv", &texts)?;
    let mut emb = Vec::new();
    corpus.embeddings.write(&mut emb)?;
    out.write("embeddings.tsv", &after_first_line(emb, &header))?;
    let mut nli = Vec::new();
    corpus.nli.write(&mut nli)?;
    out.write("nli.tsv", &after_first_line(nli, &header))?;
    let m = &corpus.matrix;
    out.write_json(
        "truth.json",
        &TruthReport {
            meta: &meta,
            graders: m.graders(),
            responses: m.responses(),
            testlets: m.testlets(),
            testlet_of: m.testlet_of(),
            params: &corpus.truth.params,
        },
    )?;
    out.finish("simulate", &meta)
}
