use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gradeirt::synth::SynthConfig;
use gradeirt::FitConfig;
use serde::Deserialize;

use crate::Cli;

/// Contents of a `--config` TOML file. Relative paths are resolved against
/// the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bins: Option<usize>,
    pub replications: Option<usize>,
    pub k_nn: Option<usize>,
    pub alpha: Option<f64>,
    pub inputs: InputPaths,
    pub fit: Option<FitConfig>,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub records: Option<PathBuf>,
    pub texts: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub nli: Option<PathBuf>,
}

/// Effective settings: command-line flags over the config file over defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub bins: usize,
    pub replications: usize,
    pub k_nn: usize,
    pub alpha: f64,
    pub inputs: InputPaths,
    pub fit: FitConfig,
    pub synth: SynthConfig,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(cli: &Cli) -> Result<Self> {
        let (file, base) = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                let file: FileConfig = toml::from_str(&text)
                    .with_context(|| format!("invalid config {}", path.display()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (file, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let pick = |flag: &Option<PathBuf>, from_file: Option<PathBuf>| {
            flag.clone().or_else(|| from_file.map(|p| resolve(&base, p)))
        };
        let inputs = InputPaths {
            records: pick(&cli.records, file.inputs.records),
            texts: pick(&cli.texts, file.inputs.texts),
            embeddings: pick(&cli.embeddings, file.inputs.embeddings),
            nli: pick(&cli.nli, file.inputs.nli),
        };
        for path in [&inputs.records, &inputs.texts, &inputs.embeddings, &inputs.nli]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                bail!("input file not found: {}", path.display());
            }
        }

        let seed = cli.seed.or(file.seed).unwrap_or(0);
        let mut fit = file.fit.unwrap_or_default();
        fit.seed = seed;
        fit.validate()?;
        let mut synth = file.synth.unwrap_or_default();
        if let Some(v) = cli.graders {
            synth.n_graders = v;
        }
        if let Some(v) = cli.responses {
            synth.n_responses = v;
        }
        if let Some(v) = cli.testlets {
            synth.n_testlets = v;
        }
        if let Some(v) = cli.sigma_u {
            synth.sigma_u = v;
        }
        synth.validate()?;

        let config = RunConfig {
            seed,
            out: cli
                .out
                .clone()
                .or_else(|| file.out.map(|p| resolve(&base, p)))
                .unwrap_or_else(|| PathBuf::from("gradeirt-out")),
            bins: cli.bins.or(file.bins).unwrap_or(gradeirt::difficulty::DEFAULT_BINS),
            replications: cli
                .replications
                .or(file.replications)
                .unwrap_or(gradeirt::validation::DEFAULT_REPLICATIONS),
            k_nn: cli.k_nn.or(file.k_nn).unwrap_or(gradeirt::features::semantic::DEFAULT_K),
            alpha: file.alpha.unwrap_or(gradeirt::pipeline::DEFAULT_ALPHA),
            inputs,
            fit,
            synth,
        };
        if config.bins < 2 {
            bail!("--bins must be at least 2");
        }
        if config.replications == 0 {
            bail!("--replications must be at least 1");
        }
        if config.k_nn == 0 {
            bail!("--k-nn must be at least 1");
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            bail!("alpha must lie in (0, 1)");
        }
        Ok(config)
    }

    pub fn records(&self) -> Result<&Path> {
        self.inputs
            .records
            .as_deref()
            .context("a records file is required (--records or [inputs] records)")
    }

    pub fn texts(&self) -> Result<&Path> {
        self.inputs
            .texts
            .as_deref()
            .context("a texts file is required (--texts or [inputs] texts)")
    }
}
