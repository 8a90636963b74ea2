//! Instances, datasets, the synthetic generator, the dataset file format and
//! the benchmark report.
//!
//! A dataset file is JSON lines. The first line is a header
//! `{"name": .., "scale_factor": .., "seed": ..}`; each following line is one
//! order `{"order_id": .., "items": [[l, w, h], ..]}` with decimal side
//! lengths. On load every side is multiplied by `scale_factor` and must land
//! on an integer exactly.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Dim, Item};

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {value} × {scale} is not an integer")]
    InexactScaling { line: usize, value: String, scale: u32 },
    #[error("scale factor {0} is not a positive power of ten")]
    InvalidScale(u32),
    #[error("invalid generator bounds {low}..={high}")]
    InvalidBounds { low: Dim, high: Dim },
    #[error("duplicate order id {0:?}")]
    DuplicateOrderId(String),
    #[error("order {0:?} has no items")]
    EmptyInstance(String),
    #[error("no results to average")]
    NoResults,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub order_id: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub scale_factor: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(meta: DatasetMeta, instances: Vec<Instance>) -> Result<Self, DataError> {
        check_scale(meta.scale_factor)?;
        let mut ids = HashSet::new();
        for inst in &instances {
            if inst.items.is_empty() {
                return Err(DataError::EmptyInstance(inst.order_id.clone()));
            }
            if !ids.insert(inst.order_id.as_str()) {
                return Err(DataError::DuplicateOrderId(inst.order_id.clone()));
            }
        }
        Ok(Self { meta, instances })
    }
}

fn check_scale(scale: u32) -> Result<(), DataError> {
    let mut s = scale;
    while s > 1 && s.is_multiple_of(10) {
        s /= 10;
    }
    if s == 1 {
        Ok(())
    } else {
        Err(DataError::InvalidScale(scale))
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_items: usize,
    pub count: usize,
    pub dim_low: Dim,
    pub dim_high: Dim,
    pub seed: u64,
}

impl GenSpec {
    /// `count` orders of `n_items` items with sides in 10..=50.
    pub fn bin(n_items: usize, count: usize, seed: u64) -> Self {
        Self { n_items, count, dim_low: 10, dim_high: 50, seed }
    }
}

/// Every side of every item drawn i.i.d. uniform over `dim_low..=dim_high`.
pub fn generate(spec: &GenSpec) -> Result<Dataset, DataError> {
    if spec.dim_low < 1 || spec.dim_low > spec.dim_high {
        return Err(DataError::InvalidBounds { low: spec.dim_low, high: spec.dim_high });
    }
    if spec.n_items == 0 {
        return Err(DataError::EmptyInstance(String::from("<generated>")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let range = spec.dim_low..=spec.dim_high;
    let instances = (0..spec.count)
        .map(|k| Instance {
            order_id: format!("n{}-{k:06}", spec.n_items),
            items: (0..spec.n_items)
                .map(|id| Item {
                    id,
                    l: rng.gen_range(range.clone()),
                    w: rng.gen_range(range.clone()),
                    h: rng.gen_range(range.clone()),
                })
                .collect(),
        })
        .collect();
    let meta = DatasetMeta {
        name: format!("synthetic-n{}-{}..{}", spec.n_items, spec.dim_low, spec.dim_high),
        scale_factor: 1,
        seed: Some(spec.seed),
    };
    Dataset::new(meta, instances)
}

#[derive(Serialize, Deserialize)]
struct Record {
    order_id: String,
    items: Vec<[serde_json::Number; 3]>,
}

/// Exact decimal text for `value / scale`, where `scale` is a power of ten.
fn unscale(value: Dim, scale: u32) -> serde_json::Number {
    let digits = scale.ilog10() as usize;
    if digits == 0 {
        return value.into();
    }
    let text = format!("{value:0>width$}", width = digits + 1);
    let (int, frac) = text.split_at(text.len() - digits);
    let frac = frac.trim_end_matches('0');
    let literal = if frac.is_empty() { format!("{int}.0") } else { format!("{int}.{frac}") };
    serde_json::from_str(&literal).expect("decimal literal")
}

/// Multiplies a decimal literal by `scale` without leaving integer arithmetic.
fn scale_exact(number: &serde_json::Number, scale: u32, line: usize) -> Result<Dim, DataError> {
    let text = number.to_string();
    let inexact = || DataError::InexactScaling { line, value: text.clone(), scale };
    if text.contains(['e', 'E', '-']) {
        return Err(DataError::Parse { line, message: format!("unsupported side length {text}") });
    }
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let frac = frac.trim_end_matches('0');
    let digits: String = format!("{int}{frac}");
    let mantissa: u128 = digits.parse().map_err(|_| inexact())?;
    let denom = 10u128.pow(frac.len() as u32);
    let scaled = mantissa * scale as u128;
    if !scaled.is_multiple_of(denom) {
        return Err(inexact());
    }
    Dim::try_from(scaled / denom).map_err(|_| inexact())
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), DataError> {
    let header = serde_json::to_string(&dataset.meta).map_err(io::Error::from)?;
    writeln!(out, "{header}")?;
    let scale = dataset.meta.scale_factor;
    for inst in &dataset.instances {
        let record = Record {
            order_id: inst.order_id.clone(),
            items: inst
                .items
                .iter()
                .map(|it| [unscale(it.l, scale), unscale(it.w, scale), unscale(it.h, scale)])
                .collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&record).map_err(io::Error::from)?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset, DataError> {
    let mut meta: Option<DatasetMeta> = None;
    let mut instances = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| DataError::Parse { line: line_no, message: e.to_string() };
        let Some(meta) = meta.as_ref() else {
            let header: DatasetMeta = serde_json::from_str(&line).map_err(parse_err)?;
            check_scale(header.scale_factor)?;
            meta = Some(header);
            continue;
        };
        let record: Record = serde_json::from_str(&line).map_err(parse_err)?;
        let items = record
            .items
            .iter()
            .enumerate()
            .map(|(id, dims)| {
                let [l, w, h] = [0, 1, 2].map(|k| scale_exact(&dims[k], meta.scale_factor, line_no));
                Item::new(id, l?, w?, h?).map_err(|e| DataError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        instances.push(Instance { order_id: record.order_id, items });
    }
    let meta = meta.ok_or(DataError::Parse { line: 1, message: String::from("missing header") })?;
    Dataset::new(meta, instances)
}

pub fn save(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    write_dataset(dataset, BufWriter::new(File::create(path)?))
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Average objective over a set of results.
pub fn asa(results: &[u64]) -> Result<f64, DataError> {
    if results.is_empty() {
        return Err(DataError::NoResults);
    }
    Ok(results.iter().map(|&v| v as f64).sum::<f64>() / results.len() as f64)
}

/// One line of a benchmark report: either a single order (`solved_count`
/// 1, `asa` its objective) or a dataset summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub dataset: String,
    pub asa: f64,
    pub solved_count: usize,
    pub wall_ms: f64,
}

/// Appends rows to a report CSV, writing the header only for a new file.
pub fn append_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<(), DataError> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>, DataError> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}
