//! In-memory artifact collection, deterministic formatting and the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Floats in CSV files: 17 significant digits, exponent form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV text with a header row and comma-separated cells.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{}", c.as_ref());
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("result types serialize");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    tasks: Vec<&'static str>,
    failures: Vec<(&'static str, String)>,
    files: Vec<ManifestEntry<'a>>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Writes every artifact plus `manifest.json` into `dir`.
    pub fn write(
        &self,
        dir: &Path,
        config: &[u8],
        tasks: Vec<&'static str>,
        failures: Vec<(&'static str, String)>,
    ) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        let manifest = Manifest {
            tool: "quarterlab",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(config),
            tasks,
            failures,
            files: self
                .files
                .iter()
                .map(|(name, bytes)| ManifestEntry { name, bytes: bytes.len(), sha256: sha256_hex(bytes) })
                .collect(),
        };
        std::fs::write(dir.join("manifest.json"), json_bytes(&manifest))
    }
}
