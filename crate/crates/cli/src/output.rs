use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gradeirt::report::RunMeta;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads every given input once and records its digest under its role.
pub fn digest_inputs(inputs: &[(&str, Option<&Path>)]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (role, path) in inputs {
        if let Some(p) = path {
            let bytes = fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
            out.insert(role.to_string(), sha256_hex(&bytes));
        }
    }
    Ok(out)
}

/// File name fragment for a dataset id.
pub fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    meta: &'a RunMeta,
    outputs: &'a BTreeMap<String, String>,
}

/// Writes files into the output directory and finishes with a manifest of
/// their digests.
pub struct OutputDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish(self, command: &str, meta: &RunMeta) -> Result<()> {
        let manifest = Manifest {
            command,
            meta,
            outputs: &self.written,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.root.join(format!("manifest_{command}.json"));
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}
