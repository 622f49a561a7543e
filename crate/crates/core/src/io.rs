//! Dataset and tree files.
//!
//! Binary datasets are a fixed header followed by the matrix:
//!
//! ```text
//! magic    [u8; 4]  "PDAT"
//! version  u16      1
//! n        u64
//! d        u32
//! values   n × d × f64, row-major
//! ```
//!
//! all little-endian. CSV datasets hold one point per line; a first line
//! that does not parse as numbers is taken as a header and skipped.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::tree::{read_tree, write_tree, PartitionTree};

pub const DATASET_MAGIC: [u8; 4] = *b"PDAT";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 8 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Csv,
    Binary,
}

impl DataFormat {
    /// `.csv` files are CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Binary,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "binary" | "bin" => Ok(DataFormat::Binary),
            other => Err(Error::param(format!("unknown data format {other:?}"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Csv => read_csv(path),
        DataFormat::Binary => read_binary(path),
    }
}

pub fn save_dataset(data: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Csv => write_csv(data, path),
        DataFormat::Binary => write_binary(data, path),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_binary(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let mut go = || -> std::io::Result<()> {
        w.write_all(&DATASET_MAGIC)?;
        w.write_all(&DATASET_VERSION.to_le_bytes())?;
        w.write_all(&(data.len() as u64).to_le_bytes())?;
        w.write_all(&(data.dim() as u32).to_le_bytes())?;
        for v in data.as_flat() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    go().map_err(|e| Error::io(path, e))
}

fn read_binary(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            actual,
        });
    }
    if bytes[0..4] != DATASET_MAGIC {
        return Err(Error::parse(path, format!("bad magic {:?}, expected \"PDAT\"", &bytes[0..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DATASET_VERSION {
        return Err(Error::parse(path, format!("unsupported dataset version {version}")));
    }
    let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let d = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as u64;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::parse(path, format!("header size n = {n}, d = {d} overflows")))?;
    if actual < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            actual,
        });
    }
    if actual > expected {
        return Err(Error::parse(
            path,
            format!("{} trailing bytes after {expected}-byte dataset", actual - expected),
        ));
    }
    let values = bytes[HEADER_LEN as usize..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::new(values, d as usize)
}

fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    let csv_err = |e: csv::Error| Error::parse(path, e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for row in data.rows() {
        // `{}` on f64 prints the shortest string that parses back exactly.
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let mut values = Vec::new();
    let mut dim = None;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::parse(path, format!("line {line}: {e}"))),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::parse(
                    path,
                    format!("line {line}: {} fields, expected {d}", row.len()),
                ))
            }
            _ => {}
        }
        values.extend(row);
    }
    let dim = dim.ok_or(Error::Empty("CSV file has no data rows"))?;
    Dataset::new(values, dim)
}

pub fn save_tree(tree: &PartitionTree, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_tree(tree, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_tree(path: &Path) -> Result<PartitionTree> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tree(BufReader::new(file), path)
}
