use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn gradeirt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradeirt"))
        .args(args)
        .env_remove("GRADEIRT_LOG")
        .output()
        .expect("binary runs")
}

fn run_in(out: &Path, command: &str, extra: &[&str]) -> Output {
    let config = fixtures().join("config.toml");
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    gradeirt(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn fit_writes_parameter_files() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "fit", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["params_synthetic.json", "ranking_synthetic.tsv", "manifest_fit.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let params: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("params_synthetic.json")).unwrap()).unwrap();
    assert_eq!(params["meta"]["seed"], 11);
    assert_eq!(params["graders"].as_array().unwrap().len(), 8);
    assert_eq!(params["responses"].as_array().unwrap().len(), 300);
    assert_eq!(params["testlet_effects"].as_array().unwrap().len(), 8 * 30);
    assert_eq!(params["convergence"]["converged"], true);
    assert_eq!(params["meta"]["inputs"]["records"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    for command in ["fit", "validate", "analyze"] {
        let o = gradeirt(&[command, "--records", "/no/such/records.csv", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{command}");
        assert!(stderr(&o).contains("/no/such/records.csv"), "{command}: {}", stderr(&o));
    }
}

#[test]
fn records_are_required() {
    let dir = TempDir::new().unwrap();
    let o = gradeirt(&["fit", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("records"));
}

#[test]
fn malformed_records_report_the_row() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "dataset_id,question_id,response_id,grader_id,predicted,gold\nd,q,r1,g1,correct,correct\nd,q,r2,g1,correct,wrong\n",
    )
    .unwrap();
    let o = gradeirt(&["fit", "--records", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seeed = 3\n").unwrap();
    let o = gradeirt(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seeed"), "{}", stderr(&o));
}

#[test]
fn validate_writes_both_tables() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "validate", &["--replications", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recovery = fs::read_to_string(dir.path().join("recovery.tsv")).unwrap();
    let stability = fs::read_to_string(dir.path().join("stability.tsv")).unwrap();
    assert!(recovery.starts_with("# gradeirt "));
    assert!(recovery.contains("seed=11"));
    let rows: Vec<&str> = recovery.lines().filter(|l| l.starts_with("synthetic\t")).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("synthetic\ttheta\t"));
    assert!(rows[0].ends_with("\t2"));
    assert!(stability.contains("pearson\tspearman\trmse\tmae"));
}

#[test]
fn analyze_writes_every_report() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "analyze", &["--bins", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bins = fs::read_to_string(dir.path().join("bins.tsv")).unwrap();
    assert!(bins.contains("grader\tB1\tB2\tB3\tB4\tslope"));
    assert!(bins.contains("# bin sizes 75 75 75 75"));
    let correlations = fs::read_to_string(dir.path().join("correlations.tsv")).unwrap();
    let rows = correlations.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 12);
    let long = fs::read_to_string(dir.path().join("confusion_long.tsv")).unwrap();
    let data: Vec<&str> = long.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    // pooled plus 8 graders, 4 bins, 5 gold x 6 predicted cells
    assert_eq!(data.len(), 9 * 4 * 30);
    let pooled_total: u64 = data
        .iter()
        .filter(|l| l.split('\t').nth(1) == Some("pooled"))
        .map(|l| l.rsplit('\t').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(pooled_total, 8 * 300);
}

#[test]
fn analyze_without_embeddings_is_lexical_only() {
    let dir = TempDir::new().unwrap();
    let f = fixtures();
    let o = gradeirt(&[
        "analyze",
        "--records",
        f.join("records.csv").to_str().unwrap(),
        "--texts",
        f.join("texts.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("no embedding file"), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("correlations.tsv")).unwrap();
    let features: Vec<&str> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    let mut sorted = features.clone();
    sorted.sort_unstable();
    assert_eq!(
        sorted,
        ["bigram_overlap", "missing_segments", "token_count", "type_token_ratio", "unigram_overlap"]
    );
    assert!(table.contains("# warning synthetic: no embedding file"));
}

#[test]
fn features_table_has_one_row_per_response() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "features", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("features.tsv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 301);
    assert_eq!(rows[0].split('\t').count(), 13);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        for command in ["fit", "validate", "analyze", "features"] {
            let o = run_in(dir, command, &["--replications", "2"]);
            assert!(o.status.success(), "{command}: {}", stderr(&o));
        }
        let o = gradeirt(&[
            "simulate",
            "--seed",
            "5",
            "--graders",
            "4",
            "--responses",
            "40",
            "--testlets",
            "8",
            "--out",
            dir.join("sim").to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(fa.len(), fb.len());
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
    assert_eq!(read_dir_sorted(&a.path().join("sim")), read_dir_sorted(&b.path().join("sim")));
}

#[test]
fn different_seed_changes_validation() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_in(a.path(), "validate", &["--replications", "2"]).status.success());
    assert!(run_in(b.path(), "validate", &["--replications", "2", "--seed", "12"]).status.success());
    let va = fs::read(a.path().join("validation.json")).unwrap();
    let vb = fs::read(b.path().join("validation.json")).unwrap();
    assert_ne!(va, vb);
}

#[test]
fn simulated_corpus_feeds_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("sim");
    let o = gradeirt(&[
        "simulate",
        "--seed",
        "3",
        "--graders",
        "5",
        "--responses",
        "60",
        "--testlets",
        "6",
        "--out",
        sim.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let truth: serde_json::Value = serde_json::from_slice(&fs::read(sim.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["params"]["theta"].as_array().unwrap().len(), 5);
    let o = gradeirt(&[
        "analyze",
        "--records",
        sim.join("records.csv").to_str().unwrap(),
        "--texts",
        sim.join("texts.csv").to_str().unwrap(),
        "--embeddings",
        sim.join("embeddings.tsv").to_str().unwrap(),
        "--nli",
        sim.join("nli.tsv").to_str().unwrap(),
        "--out",
        dir.path().join("analysis").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stderr(&o).contains("renormalized"), "{}", stderr(&o));
}
