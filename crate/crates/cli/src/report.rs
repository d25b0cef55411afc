//! Report headers and file writers. Every JSON report starts with a
//! [`Header`] carrying the config hash and the measured constants.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Constants {
    /// Sampled quasi-triangle constant of the domain norm.
    #[serde(rename = "C_Q")]
    pub c_q: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub l: Option<usize>,
    /// `content(f(Z)) / (δ R^N)`.
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub constants: Constants,
    pub config: serde_json::Value,
}

impl Header {
    pub fn new(command: &'static str, cfg: &RunConfig, constants: Constants) -> Self {
        Header {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: cfg.hash(),
            constants,
            config: serde_json::from_str(&cfg.canonical_json()).expect("canonical json parses"),
        }
    }

    /// Header for commands driven by flags; `inputs` plays the config's role.
    pub fn from_inputs<T: Serialize>(command: &'static str, inputs: &T, constants: Constants) -> Self {
        let text = serde_json::to_string(inputs).expect("inputs serialize");
        Header {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: hash_text(&text),
            constants,
            config: serde_json::from_str(&text).expect("inputs parse"),
        }
    }
}

pub fn hash_text(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A named pass/fail check; the exit status is nonzero iff one fails.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Writes files into one output directory, serially.
pub struct OutDir {
    root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv<F>(&mut self, name: &str, header: &[String], fill: F) -> Result<()>
    where
        F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
    {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            fill(&mut w)?;
            w.flush()?;
        }
        self.write(name, &buf)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p);
        Ok(())
    }
}

/// Shortest form that round-trips, in scientific notation for very small or
/// large magnitudes; `-0` is written as `0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:?}")
    }
}
