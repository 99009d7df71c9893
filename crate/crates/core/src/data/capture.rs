//! Non-spatial capture histories, reduced to per-individual detection counts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detection counts `y_i` of the observed individuals over `occasions` visits.
///
/// Only detected individuals are stored, so every count lies in
/// `1..=occasions`. An empty history can only come out of a simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureHistory {
    ids: Vec<String>,
    counts: Vec<u32>,
    occasions: u32,
}

impl CaptureHistory {
    pub fn new(counts: Vec<u32>, occasions: u32) -> Result<Self> {
        let ids = (1..=counts.len()).map(|i| i.to_string()).collect();
        Self::with_ids(ids, counts, occasions)
    }

    pub fn with_ids(ids: Vec<String>, counts: Vec<u32>, occasions: u32) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::data("capture history has no observed individuals"));
        }
        if ids.len() != counts.len() {
            return Err(Error::data("id and count columns differ in length"));
        }
        if let Some((i, &y)) = counts.iter().enumerate().find(|(_, &y)| y == 0 || y > occasions) {
            return Err(Error::data(format!(
                "individual {} has count {y}, outside 1..={occasions}",
                ids[i]
            )));
        }
        Ok(Self { ids, counts, occasions })
    }

    /// A history with nobody detected.
    pub(crate) fn empty(occasions: u32) -> Self {
        Self { ids: Vec::new(), counts: Vec::new(), occasions }
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn occasions(&self) -> u32 {
        self.occasions
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn total_detections(&self) -> u64 {
        self.counts.iter().map(|&y| y as u64).sum()
    }

    /// `(count, number of individuals with that count)`, ascending by count.
    pub fn frequencies(&self) -> Vec<(u32, usize)> {
        let mut tally = vec![0usize; self.occasions as usize + 1];
        for &y in &self.counts {
            tally[y as usize] += 1;
        }
        tally
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(y, c)| (y as u32, c))
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!("# J={}\nid,y\n", self.occasions);
        for (id, y) in self.ids.iter().zip(&self.counts) {
            writeln!(out, "{id},{y}").unwrap();
        }
        out
    }

    /// Parses the `id,y` format. `occasions` fills in for a missing `# J=` line.
    pub fn from_csv_str(text: &str, source: &str, occasions: Option<u32>) -> Result<Self> {
        let meta = parse_metadata(text, source)?;
        let occasions = match (meta.occasions, occasions) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::data(format!(
                    "{source}: file declares J={a} but J={b} was requested"
                )))
            }
            (Some(j), _) | (None, Some(j)) => j,
            (None, None) => {
                return Err(Error::data(format!("{source}: occasion count J not given")))
            }
        };
        if meta.region.is_some() {
            return Err(Error::data(format!("{source}: region metadata in a capture file")));
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() != 2 || &header[0] != "id" || &header[1] != "y" {
            return Err(Error::Parse {
                path: source.to_string(),
                line: header.position().map_or(1, |p| p.line()),
                msg: "expected header `id,y`".into(),
            });
        }

        let mut ids = Vec::new();
        let mut counts = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| parse_error(source, &e))?;
            let line = record.position().map_or(0, |p| p.line());
            let err = |msg: String| Error::Parse { path: source.to_string(), line, msg };
            if record.len() != 2 {
                return Err(err(format!("expected 2 fields, found {}", record.len())));
            }
            let y: u32 = record[1]
                .parse()
                .map_err(|_| err(format!("count `{}` is not a non-negative integer", &record[1])))?;
            if y == 0 {
                return Err(err("zero capture history".into()));
            }
            if y > occasions {
                return Err(err(format!("count {y} exceeds J={occasions}")));
            }
            ids.push(record[0].to_string());
            counts.push(y);
        }
        Self::with_ids(ids, counts, occasions)
    }
}

fn parse_error(source: &str, e: &csv::Error) -> Error {
    Error::Parse {
        path: source.to_string(),
        line: e.position().map_or(0, |p| p.line()),
        msg: e.to_string(),
    }
}

pub fn load_capture_csv(path: impl AsRef<Path>, occasions: Option<u32>) -> Result<CaptureHistory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    CaptureHistory::from_csv_str(&text, &path.display().to_string(), occasions)
}

pub fn write_capture_csv(path: impl AsRef<Path>, history: &CaptureHistory) -> Result<()> {
    std::fs::write(path, history.to_csv_string())?;
    Ok(())
}

/// `# key=value` lines shared by both CSV formats.
#[derive(Debug, Default)]
pub(crate) struct Metadata {
    pub occasions: Option<u32>,
    pub region: Option<[f64; 4]>,
}

pub(crate) fn parse_metadata(text: &str, source: &str) -> Result<Metadata> {
    let mut meta = Metadata::default();
    for (i, line) in text.lines().enumerate() {
        let Some(body) = line.trim().strip_prefix('#') else {
            continue;
        };
        let err = |msg: String| Error::Parse { path: source.to_string(), line: i as u64 + 1, msg };
        let Some((key, value)) = body.split_once('=') else {
            continue;
        };
        match key.trim() {
            "J" => {
                let j = value
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad occasion count `{}`", value.trim())))?;
                meta.occasions = Some(j);
            }
            "region" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(format!("bad region `{}`", value.trim())))?;
                let region: [f64; 4] = parts
                    .try_into()
                    .map_err(|_| err("region needs x0,x1,y0,y1".into()))?;
                meta.region = Some(region);
            }
            _ => {}
        }
    }
    Ok(meta)
}
