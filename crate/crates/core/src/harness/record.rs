//! JSONL cell records.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::xrego::{RunRecord, StopReason, XregoResult};

/// Identity of one run: problem instance × algorithm × seed index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub problem: String,
    pub dim: usize,
    pub algorithm: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// Non-finite values are written as `null` and read back as `+∞`.
mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: usize,
    pub d: usize,
    #[serde(with = "nullable_f64")]
    pub f_x: f64,
    #[serde(with = "nullable_f64")]
    pub f_opt: f64,
    pub evals: u64,
    pub cumulative_evals: u64,
    pub stagnation: bool,
    pub resampled: bool,
    pub truncated: bool,
}

impl From<&RunRecord> for TracePoint {
    fn from(r: &RunRecord) -> Self {
        Self {
            k: r.k,
            d: r.d,
            f_x: r.f_x,
            f_opt: r.f_opt,
            evals: r.evals,
            cumulative_evals: r.cumulative_evals,
            stagnation: r.stagnation,
            resampled: r.resampled,
            truncated: r.truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub schema_version: u32,
    #[serde(flatten)]
    pub key: CellKey,
    pub name: String,
    pub effective_dim: Option<usize>,
    pub f_star: Option<f64>,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Evaluations until `f ≤ f* + ε`; `null` when never reached.
    pub n_f: Option<u64>,
    #[serde(with = "nullable_f64")]
    pub f_opt: f64,
    pub d_e_est: Option<usize>,
    pub k_f: Option<usize>,
    pub embeddings: usize,
    pub total_evals: u64,
    pub success: Option<bool>,
    pub stop_reason: Option<StopReason>,
    pub trace: Vec<TracePoint>,
}

/// Cumulative evaluations at the first trace point within `eps` of `f_star`.
pub fn evals_to_target(trace: &[RunRecord], f_star: Option<f64>, eps: f64) -> Option<u64> {
    let target = f_star? + eps;
    trace.iter().find(|r| r.f_opt <= target).map(|r| r.cumulative_evals)
}

impl CellRecord {
    pub fn from_result(
        key: CellKey,
        name: &str,
        effective_dim: Option<usize>,
        f_star: Option<f64>,
        eps: f64,
        res: &XregoResult,
    ) -> Self {
        Self {
            schema_version: super::config::SCHEMA_VERSION,
            key,
            name: name.to_string(),
            effective_dim,
            f_star,
            status: CellStatus::Ok,
            error: None,
            n_f: evals_to_target(&res.trace, f_star, eps),
            f_opt: res.f_opt,
            d_e_est: res.d_e_est,
            k_f: res.k_f,
            embeddings: res.embeddings,
            total_evals: res.total_evals,
            success: res.success,
            stop_reason: Some(res.stop_reason),
            trace: res.trace.iter().map(TracePoint::from).collect(),
        }
    }

    pub fn failed(key: CellKey, name: &str, effective_dim: Option<usize>, f_star: Option<f64>, error: String) -> Self {
        Self {
            schema_version: super::config::SCHEMA_VERSION,
            key,
            name: name.to_string(),
            effective_dim,
            f_star,
            status: CellStatus::Failed,
            error: Some(error),
            n_f: None,
            f_opt: f64::INFINITY,
            d_e_est: None,
            k_f: None,
            embeddings: 0,
            total_evals: 0,
            success: None,
            stop_reason: None,
            trace: Vec::new(),
        }
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Reads every complete record. A torn final line (no trailing newline and
/// not parseable) is ignored; any other malformed line is an error.
pub fn load_records(path: &Path) -> Result<Vec<CellRecord>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CellRecord>(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => {
                log::warn!("ignoring incomplete final record in {}", path.display());
            }
            Err(e) => return Err(Error::Config(format!("{}:{}: malformed record: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

pub fn existing_keys(records: &[CellRecord]) -> BTreeSet<CellKey> {
    records.iter().map(|r| r.key.clone()).collect()
}

/// Append-only record sink. Each record is one line, flushed immediately.
pub struct RecordWriter {
    file: File,
}

impl RecordWriter {
    /// Opens for appending, dropping a torn final line left by a crash.
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        let mut content = Vec::new();
        file.read_to_end(&mut content)?;
        if !content.is_empty() && content.last() != Some(&b'\n') {
            let keep = content.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            file.set_len(keep as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok(Self { file })
    }

    pub fn write(&mut self, record: &CellRecord) -> Result<()> {
        let mut line = record.to_json_line()?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}
