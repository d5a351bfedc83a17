use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dg,
    Dgnc,
    Oracle,
    Manual,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Dg => "dg",
            Algorithm::Dgnc => "dgnc",
            Algorithm::Oracle => "oracle",
            Algorithm::Manual => "manual",
        };
        f.write_str(name)
    }
}

/// Ordered selection of candidate indices with the log-determinant objective
/// after each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SensorSetRecord", try_from = "SensorSetRecord")]
pub struct SensorSet {
    pub n: usize,
    pub r: usize,
    pub algorithm: Algorithm,
    pub indices: Vec<usize>,
    pub objective_trace: Vec<f64>,
}

impl SensorSet {
    /// Validated hand-made set (no objective trace).
    pub fn manual(n: usize, r: usize, indices: Vec<usize>) -> Result<Self> {
        let set = Self { n, r, algorithm: Algorithm::Manual, indices, objective_trace: Vec::new() };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// First `p` sensors, as if the greedy run had stopped there.
    pub fn prefix(&self, p: usize) -> Self {
        let p = p.min(self.len());
        Self {
            n: self.n,
            r: self.r,
            algorithm: self.algorithm,
            indices: self.indices[..p].to_vec(),
            objective_trace: self.objective_trace[..p.min(self.objective_trace.len())].to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &i in &self.indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange { index: i, len: self.n });
            }
            if !seen.insert(i) {
                return Err(Error::IndexCollision(i));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sensor set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("sensor set JSON: {e}")))
    }
}

/// On-disk layout. Non-finite objective values are written as `null`.
#[derive(Serialize, Deserialize)]
struct SensorSetRecord {
    n: usize,
    r: usize,
    p: usize,
    algorithm: Algorithm,
    indices: Vec<usize>,
    objective_trace_logdet: Vec<Option<f64>>,
}

impl From<SensorSet> for SensorSetRecord {
    fn from(s: SensorSet) -> Self {
        Self {
            n: s.n,
            r: s.r,
            p: s.indices.len(),
            algorithm: s.algorithm,
            indices: s.indices,
            objective_trace_logdet: s
                .objective_trace
                .into_iter()
                .map(|v| v.is_finite().then_some(v))
                .collect(),
        }
    }
}

impl TryFrom<SensorSetRecord> for SensorSet {
    type Error = String;

    fn try_from(r: SensorSetRecord) -> std::result::Result<Self, String> {
        if r.p != r.indices.len() {
            return Err(format!("p = {} but {} indices", r.p, r.indices.len()));
        }
        let set = SensorSet {
            n: r.n,
            r: r.r,
            algorithm: r.algorithm,
            indices: r.indices,
            objective_trace: r
                .objective_trace_logdet
                .into_iter()
                .map(|v| v.unwrap_or(f64::NEG_INFINITY))
                .collect(),
        };
        set.validate().map_err(|e| e.to_string())?;
        Ok(set)
    }
}
