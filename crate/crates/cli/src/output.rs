//! Report envelope, checksums and atomic file output.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hyperent::OptBudget;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub cert_tol: f64,
    pub violation_tol: f64,
    pub fixed_point_tol: f64,
}

/// Fields shared by every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Option<InputFile>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub budget: OptBudget,
}

#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub meta: Meta,
    #[serde(flatten)]
    pub body: T,
}

/// Reads a file and returns its text with the checksum record.
pub fn read_input(path: &Path) -> anyhow::Result<(String, InputFile)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let record = InputFile {
        path: path.display().to_string(),
        sha256,
    };
    Ok((text, record))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports are plain data");
    s.push('\n');
    s
}

/// Writes `contents` to `path` via a temporary sibling and a rename, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
        }
        Some(path) => write_atomic(path, contents)?,
    }
    Ok(())
}

pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// `report.json` -> `report.<suffix>.csv`.
pub fn sibling_csv(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}
