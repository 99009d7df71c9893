//! Column store of posterior draws, plus its CSV + JSON sidecar format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStat {
    pub accepted: u64,
    pub proposed: u64,
    pub rate: f64,
}

impl AcceptanceStat {
    pub fn new(accepted: u64, proposed: u64) -> Self {
        let rate = if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 };
        Self { accepted, proposed, rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub model: String,
    pub stage: String,
    pub seed: u64,
    pub acceptance: BTreeMap<String, AcceptanceStat>,
}

impl ChainMeta {
    pub fn new(model: impl Into<String>, stage: impl Into<String>, seed: u64) -> Self {
        Self { model: model.into(), stage: stage.into(), seed, acceptance: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    meta: ChainMeta,
}

impl Chain {
    pub fn with_capacity(names: Vec<String>, meta: ChainMeta, capacity: usize) -> Self {
        let columns = names.iter().map(|_| Vec::with_capacity(capacity)).collect();
        Self { names, columns, meta }
    }

    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>, meta: ChainMeta) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::data("column names and columns differ in number"));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::data("chain columns differ in length"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::data(format!("duplicate column `{dup}`")));
        }
        Ok(Self { names, columns, meta })
    }

    /// Number of retained draws.
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn meta(&self) -> &ChainMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut ChainMeta {
        &mut self.meta
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    /// Like [`Chain::column`] but reports which column was missing.
    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name)
            .ok_or_else(|| Error::data(format!("chain has no `{name}` column")))
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names.iter().map(String::as_str).zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[k]).collect()
    }

    pub fn row_into(&self, k: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.columns.iter().map(|c| c[k]));
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.len() && !self.columns.is_empty() {
            return Err(Error::data(format!("column `{name}` has the wrong length")));
        }
        if self.index_of(&name).is_some() {
            return Err(Error::data(format!("duplicate column `{name}`")));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    /// New chain whose `j`-th draw is draw `indices[j]` of this one.
    pub fn select(&self, indices: &[usize], meta: ChainMeta) -> Chain {
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&k| c[k]).collect())
            .collect();
        Chain { names: self.names.clone(), columns, meta }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            for (j, c) in self.columns.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                write!(line, "{}", c[k]).unwrap();
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, meta: ChainMeta) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut columns: Vec<Vec<f64>> = names.iter().map(|_| Vec::new()).collect();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            for (col, field) in columns.iter_mut().zip(record.iter()) {
                let v = field.parse::<f64>().map_err(|_| Error::Parse {
                    path: "chain".into(),
                    line,
                    msg: format!("`{field}` is not a number"),
                })?;
                col.push(v);
            }
        }
        Self::from_columns(names, columns, meta)
    }
}

/// JSON sidecar written next to each chain CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    #[serde(flatten)]
    pub meta: ChainMeta,
    pub draws: usize,
    pub columns: Vec<String>,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub fn chain_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.meta.json")))
}

/// Writes `<stem>.csv` and `<stem>.meta.json`; returns both paths.
pub fn write_chain(dir: &Path, stem: &str, chain: &Chain) -> Result<Vec<PathBuf>> {
    let (csv_path, meta_path) = chain_paths(dir, stem);
    let csv = chain.to_csv_string();
    let sidecar = ChainSidecar {
        meta: chain.meta.clone(),
        draws: chain.len(),
        columns: chain.names.clone(),
        sha256: sha256_hex(csv.as_bytes()),
    };
    std::fs::write(&csv_path, &csv)?;
    std::fs::write(&meta_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(vec![csv_path, meta_path])
}

/// Reads a chain back, refusing files whose checksum does not match the sidecar.
pub fn read_chain(dir: &Path, stem: &str) -> Result<Chain> {
    let (csv_path, meta_path) = chain_paths(dir, stem);
    let sidecar: ChainSidecar = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
    let bytes = std::fs::read(&csv_path)?;
    if sha256_hex(&bytes) != sidecar.sha256 {
        return Err(Error::Checksum(csv_path));
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Checksum(csv_path.clone()))?;
    let chain = Chain::from_csv_str(&text, sidecar.meta)?;
    if chain.len() != sidecar.draws || chain.names != sidecar.columns {
        return Err(Error::data(format!("{} disagrees with its sidecar", csv_path.display())));
    }
    Ok(chain)
}
