//! Spatial capture data: trap coordinates plus individual-by-trap counts.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::capture::parse_metadata;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Default buffer around the trap array, in meters.
pub const DEFAULT_BUFFER_M: f64 = 100.0;

/// Axis-aligned rectangle supporting the activity centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(Error::data(format!(
                "invalid region [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    /// Bounding box of `points` grown by `buffer` on every side.
    pub fn around(points: &[Point], buffer: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::data("no traps to bound"));
        }
        let (mut x0, mut x1, mut y0, mut y1) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        Self::new(x0 - buffer, x1 + buffer, y0 - buffer, y1 + buffer)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    /// Maps a point of the unit square onto the region.
    #[inline]
    pub fn from_unit(&self, u: f64, v: f64) -> Point {
        [
            self.x_min + u * (self.x_max - self.x_min),
            self.y_min + v * (self.y_max - self.y_min),
        ]
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
        }
    }
}

#[inline]
pub fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Detections of `n` individuals at `L` traps over `occasions` visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrData {
    trap_ids: Vec<String>,
    traps: Vec<Point>,
    /// Row-major `n x L`.
    counts: Vec<u32>,
    n: usize,
    occasions: u32,
    region: Region,
}

impl ScrData {
    /// `counts[i][l]` is the number of detections of individual `i` at trap `l`.
    pub fn new(traps: Vec<Point>, counts: Vec<Vec<u32>>, occasions: u32, region: Region) -> Result<Self> {
        let ids = (1..=traps.len()).map(|i| i.to_string()).collect();
        Self::with_trap_ids(ids, traps, counts, occasions, region)
    }

    pub fn with_trap_ids(
        trap_ids: Vec<String>,
        traps: Vec<Point>,
        counts: Vec<Vec<u32>>,
        occasions: u32,
        region: Region,
    ) -> Result<Self> {
        let data = Self::build(trap_ids, traps, counts, occasions, region)?;
        if data.n == 0 {
            return Err(Error::data("no detected individuals"));
        }
        Ok(data)
    }

    pub(crate) fn build(
        trap_ids: Vec<String>,
        traps: Vec<Point>,
        counts: Vec<Vec<u32>>,
        occasions: u32,
        region: Region,
    ) -> Result<Self> {
        let l = traps.len();
        if l == 0 {
            return Err(Error::data("trap array is empty"));
        }
        if trap_ids.len() != l {
            return Err(Error::data("trap id count differs from trap count"));
        }
        if let Some(t) = traps.iter().find(|t| !region.contains(**t)) {
            return Err(Error::data(format!("trap at ({}, {}) lies outside the region", t[0], t[1])));
        }
        let n = counts.len();
        let mut flat = Vec::with_capacity(n * l);
        for (i, row) in counts.iter().enumerate() {
            if row.len() != l {
                return Err(Error::data(format!("individual {} has {} trap counts, expected {l}", i + 1, row.len())));
            }
            if row.iter().all(|&y| y == 0) {
                return Err(Error::data(format!("individual {} was never detected", i + 1)));
            }
            if let Some(&y) = row.iter().find(|&&y| y > occasions) {
                return Err(Error::data(format!(
                    "individual {} has count {y} above J={occasions}",
                    i + 1
                )));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { trap_ids, traps, counts: flat, n, occasions, region })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_traps(&self) -> usize {
        self.traps.len()
    }

    pub fn occasions(&self) -> u32 {
        self.occasions
    }

    pub fn traps(&self) -> &[Point] {
        &self.traps
    }

    pub fn trap_ids(&self) -> &[String] {
        &self.trap_ids
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Counts of individual `i` across all traps.
    pub fn row(&self, i: usize) -> &[u32] {
        let l = self.traps.len();
        &self.counts[i * l..(i + 1) * l]
    }

    pub fn count(&self, i: usize, trap: usize) -> u32 {
        self.row(i)[trap]
    }

    /// Applies `f` to every trap and the region corners. Intended for rigid
    /// motions used in invariance checks; the region is recomputed as the
    /// bounding box of the moved corners.
    pub fn map_coordinates(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        let traps: Vec<Point> = self.traps.iter().map(|&t| f(t)).collect();
        let r = &self.region;
        let corners = [
            f([r.x_min, r.y_min]),
            f([r.x_min, r.y_max]),
            f([r.x_max, r.y_min]),
            f([r.x_max, r.y_max]),
        ];
        let region = Region::around(&corners, 0.0)?;
        let counts = (0..self.n).map(|i| self.row(i).to_vec()).collect();
        Self::build(self.trap_ids.clone(), traps, counts, self.occasions, region)
    }

    pub fn to_csv_string(&self) -> String {
        let r = &self.region;
        let mut out = format!(
            "# J={}\n# region={},{},{},{}\ntrap_id,x,y",
            self.occasions, r.x_min, r.x_max, r.y_min, r.y_max
        );
        for i in 1..=self.n {
            write!(out, ",ind{i}").unwrap();
        }
        out.push('\n');
        for (l, (id, t)) in self.trap_ids.iter().zip(&self.traps).enumerate() {
            write!(out, "{id},{},{}", t[0], t[1]).unwrap();
            for i in 0..self.n {
                write!(out, ",{}", self.count(i, l)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses `trap_id,x,y,ind1..indn` with `# J=` and optional `# region=` lines.
    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let meta = parse_metadata(text, source)?;
        let occasions = meta
            .occasions
            .ok_or_else(|| Error::data(format!("{source}: missing `# J=` metadata line")))?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() < 3 || &header[0] != "trap_id" || &header[1] != "x" || &header[2] != "y" {
            return Err(Error::Parse {
                path: source.to_string(),
                line: header.position().map_or(1, |p| p.line()),
                msg: "expected header `trap_id,x,y,ind1,...`".into(),
            });
        }
        let n = header.len() - 3;
        let mut ids = Vec::new();
        let mut traps = Vec::new();
        let mut by_trap: Vec<Vec<u32>> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                path: source.to_string(),
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let err = |msg: String| Error::Parse { path: source.to_string(), line, msg };
            let coord = |k: usize| {
                record[k]
                    .parse::<f64>()
                    .map_err(|_| err(format!("coordinate `{}` is not a number", &record[k])))
            };
            traps.push([coord(1)?, coord(2)?]);
            ids.push(record[0].to_string());
            let row = (3..3 + n)
                .map(|k| {
                    record[k]
                        .parse::<u32>()
                        .map_err(|_| err(format!("count `{}` is not a non-negative integer", &record[k])))
                })
                .collect::<Result<Vec<_>>>()?;
            by_trap.push(row);
        }
        let region = match meta.region {
            Some([x0, x1, y0, y1]) => Region::new(x0, x1, y0, y1)?,
            None => Region::around(&traps, DEFAULT_BUFFER_M)?,
        };
        let counts = (0..n).map(|i| by_trap.iter().map(|row| row[i]).collect()).collect();
        Self::with_trap_ids(ids, traps, counts, occasions, region)
    }
}

pub fn load_scr_csv(path: impl AsRef<Path>) -> Result<ScrData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ScrData::from_csv_str(&text, &path.display().to_string())
}

/// Reads a `trap_id,x,y` trap layout.
pub fn load_traps_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Point>)> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut ids = Vec::new();
    let mut traps = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 3 {
            return Err(Error::Parse { path: source, line, msg: "expected trap_id,x,y".into() });
        }
        let parse = |k: usize| {
            record[k].parse::<f64>().map_err(|_| Error::Parse {
                path: source.clone(),
                line,
                msg: format!("coordinate `{}` is not a number", &record[k]),
            })
        };
        traps.push([parse(1)?, parse(2)?]);
        ids.push(record[0].to_string());
    }
    if traps.is_empty() {
        return Err(Error::data(format!("{source}: no traps")));
    }
    Ok((ids, traps))
}
