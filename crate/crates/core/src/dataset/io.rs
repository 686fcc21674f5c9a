//! `FVF1` binary feature files and CSV ingestion.
//!
//! Layout (little-endian):
//!
//! ```text
//! "FVF1" | u32 version=1 | u64 N | u32 d | u32 K
//! K x (u32 byte-length, UTF-8 class name)
//! u32 byte-length, UTF-8 JSON metadata
//! N*d f32, row-major
//! N u16 labels
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde_json::Value;

use super::FeatureDataset;
use crate::{Error, Result};

pub const FVF1_MAGIC: &[u8; 4] = b"FVF1";
pub const FVF1_VERSION: u32 = 1;

pub fn write_fvf1(ds: &FeatureDataset) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(ds.meta())?;
    let mut out = Vec::with_capacity(32 + ds.len() * (ds.dim() * 4 + 2) + meta.len());
    out.extend_from_slice(FVF1_MAGIC);
    out.extend_from_slice(&FVF1_VERSION.to_le_bytes());
    out.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    out.extend_from_slice(&u32_len(ds.dim())?.to_le_bytes());
    out.extend_from_slice(&u32_len(ds.num_classes())?.to_le_bytes());
    for name in ds.class_names() {
        out.extend_from_slice(&u32_len(name.len())?.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    out.extend_from_slice(&u32_len(meta.len())?.to_le_bytes());
    out.extend_from_slice(&meta);
    for v in ds.features().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for y in ds.labels() {
        out.extend_from_slice(&y.to_le_bytes());
    }
    Ok(out)
}

fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("length {n} does not fit in u32")))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated payload reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
}

pub fn read_fvf1(buf: &[u8]) -> Result<FeatureDataset> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != FVF1_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != FVF1_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = usize::try_from(r.u64("N")?).map_err(|_| Error::Format("N too large".into()))?;
    let d = r.u32("d")? as usize;
    let k = r.u32("K")? as usize;
    let names = (0..k)
        .map(|_| r.string("class name"))
        .collect::<Result<Vec<_>>>()?;
    let meta_text = r.string("metadata")?;
    let meta: Value = if meta_text.is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&meta_text)?
    };

    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("N*d overflows".into()))?;
    let raw = r.take(count.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?, "features")?;
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let raw = r.take(n * 2, "labels")?;
    let labels: Vec<u16> = raw
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if r.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after labels",
            buf.len() - r.pos
        )));
    }
    let features = Array2::from_shape_vec((n, d), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    FeatureDataset::new(features, labels, k, names, meta)
}

pub fn save(ds: &FeatureDataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_fvf1(ds)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<FeatureDataset> {
    read_fvf1(&fs::read(path)?)
}

/// Reads `f0,...,f{d-1},label` rows. Class names come from `names_path`
/// (one per line) when given; otherwise `K = max label + 1`.
pub fn load_csv(path: impl AsRef<Path>, names_path: Option<&Path>) -> Result<FeatureDataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let d = headers.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
        Error::Format("csv needs at least one feature column and a label column".into())
    })?;
    for (j, h) in headers.iter().take(d).enumerate() {
        if h.trim() != format!("f{j}") {
            return Err(Error::Format(format!("expected column f{j}, found {h:?}")));
        }
    }
    if headers[d].trim() != "label" {
        return Err(Error::Format("last column must be `label`".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for field in record.iter().take(d) {
            values.push(field.trim().parse::<f32>().map_err(|e| {
                Error::Format(format!("row {}: bad feature {field:?}: {e}", line + 2))
            })?);
        }
        let label = &record[d];
        labels.push(label.trim().parse::<u16>().map_err(|e| {
            Error::Format(format!("row {}: bad label {label:?}: {e}", line + 2))
        })?);
    }
    let n = labels.len();
    let names = match names_path {
        Some(p) => fs::read_to_string(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect(),
        None => {
            let k = labels.iter().copied().max().map_or(0, |m| usize::from(m) + 1);
            FeatureDataset::default_names(k)
        }
    };
    let features =
        Array2::from_shape_vec((n, d), values).map_err(|e| Error::Format(e.to_string()))?;
    let meta = serde_json::json!({ "source": path.as_ref().display().to_string() });
    FeatureDataset::new(features, labels, names.len(), names, meta)
}
