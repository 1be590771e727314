//! IDX tensor files, binary-class datasets, sharding and synthetic data.
//!
//! IDX layout: bytes `[0, 0, dtype, ndims]`, then `ndims` big-endian `u32`
//! sizes, then the row-major payload in big-endian element order.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("input shorter than the 4-byte IDX header")]
    TooShort,
    #[error("bad magic: leading bytes {0:#04x} {1:#04x}, expected 0x00 0x00")]
    BadMagic(u8, u8),
    #[error("unknown dtype code {0:#04x}")]
    UnknownDtype(u8),
    #[error("truncated dimension table: need {needed} bytes, have {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("payload length {actual} does not match declared {expected} bytes")]
    PayloadLength { expected: usize, actual: usize },
    #[error("{0} elements do not fit the declared shape")]
    ShapeMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxDtype {
    U8,
    I8,
    I16,
    I32,
    F32,
    F64,
}

impl IdxDtype {
    pub fn code(self) -> u8 {
        match self {
            IdxDtype::U8 => 0x08,
            IdxDtype::I8 => 0x09,
            IdxDtype::I16 => 0x0B,
            IdxDtype::I32 => 0x0C,
            IdxDtype::F32 => 0x0D,
            IdxDtype::F64 => 0x0E,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, IdxError> {
        Ok(match code {
            0x08 => IdxDtype::U8,
            0x09 => IdxDtype::I8,
            0x0B => IdxDtype::I16,
            0x0C => IdxDtype::I32,
            0x0D => IdxDtype::F32,
            0x0E => IdxDtype::F64,
            other => return Err(IdxError::UnknownDtype(other)),
        })
    }

    pub fn size(self) -> usize {
        match self {
            IdxDtype::U8 | IdxDtype::I8 => 1,
            IdxDtype::I16 => 2,
            IdxDtype::I32 | IdxDtype::F32 => 4,
            IdxDtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    U8(Vec<u8>),
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl IdxData {
    pub fn len(&self) -> usize {
        match self {
            IdxData::U8(v) => v.len(),
            IdxData::I8(v) => v.len(),
            IdxData::I16(v) => v.len(),
            IdxData::I32(v) => v.len(),
            IdxData::F32(v) => v.len(),
            IdxData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> IdxDtype {
        match self {
            IdxData::U8(_) => IdxDtype::U8,
            IdxData::I8(_) => IdxDtype::I8,
            IdxData::I16(_) => IdxDtype::I16,
            IdxData::I32(_) => IdxDtype::I32,
            IdxData::F32(_) => IdxDtype::F32,
            IdxData::F64(_) => IdxDtype::F64,
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            IdxData::U8(v) => v[i] as f64,
            IdxData::I8(v) => v[i] as f64,
            IdxData::I16(v) => v[i] as f64,
            IdxData::I32(v) => v[i] as f64,
            IdxData::F32(v) => v[i] as f64,
            IdxData::F64(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxTensor {
    dims: Vec<usize>,
    data: IdxData,
}

impl IdxTensor {
    pub fn new(dims: Vec<usize>, data: IdxData) -> Result<Self, IdxError> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(IdxError::ShapeMismatch(data.len()));
        }
        Ok(IdxTensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dtype(&self) -> IdxDtype {
        self.data.dtype()
    }

    pub fn data(&self) -> &IdxData {
        &self.data
    }

    /// Number of items along the leading dimension.
    pub fn items(&self) -> usize {
        self.dims.first().copied().unwrap_or(1)
    }

    /// Elements per item (product of the trailing dimensions).
    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }
}

/// Decodes an IDX byte stream. Trailing bytes beyond the declared payload are an error.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::TooShort);
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(IdxError::BadMagic(bytes[0], bytes[1]));
    }
    let dtype = IdxDtype::from_code(bytes[2])?;
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(IdxError::TruncatedHeader {
            needed: header,
            available: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let count: usize = dims.iter().product();
    let payload = &bytes[header..];
    let expected = count * dtype.size();
    if payload.len() != expected {
        return Err(IdxError::PayloadLength {
            expected,
            actual: payload.len(),
        });
    }
    let data = match dtype {
        IdxDtype::U8 => IdxData::U8(payload.to_vec()),
        IdxDtype::I8 => IdxData::I8(payload.iter().map(|&b| b as i8).collect()),
        IdxDtype::I16 => IdxData::I16(
            payload
                .chunks_exact(2)
                .map(|c| i16::from_be_bytes([c[0], c[1]]))
                .collect(),
        ),
        IdxDtype::I32 => IdxData::I32(
            payload
                .chunks_exact(4)
                .map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        IdxDtype::F32 => IdxData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        IdxDtype::F64 => IdxData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_be_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        ),
    };
    Ok(IdxTensor { dims, data })
}

pub fn serialize_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = vec![0, 0, tensor.dtype().code(), tensor.dims.len() as u8];
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    match &tensor.data {
        IdxData::U8(v) => out.extend_from_slice(v),
        IdxData::I8(v) => out.extend(v.iter().map(|&x| x as u8)),
        IdxData::I16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::I32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
        IdxData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
    }
    out
}

pub fn read_idx_file(path: &Path) -> Result<IdxTensor> {
    let bytes = std::fs::read(path)?;
    Ok(parse_idx(&bytes)?)
}

/// Feature rows with binary labels; the last feature column is a constant 1 bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Dataset("dataset has no samples".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::Dataset("labels must be 0 or 1".into()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Multiplies feature column `c` by `scales[c]`.
    pub fn scale_columns(&mut self, scales: &[f64]) -> Result<()> {
        if scales.len() != self.dim() {
            return Err(Error::Dataset(format!(
                "{} column scales for {} features",
                scales.len(),
                self.dim()
            )));
        }
        if let Some(bad) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Dataset(format!("column scale {bad} is not positive")));
        }
        for (c, s) in scales.iter().enumerate() {
            self.features.column_mut(c).scale_mut(*s);
        }
        Ok(())
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

/// Keeps the samples labelled `digit_a` (→ 0) or `digit_b` (→ 1), scales
/// pixels by 1/255 and appends a bias feature.
pub fn filter_binary(
    images: &IdxTensor,
    labels: &IdxTensor,
    digit_a: u8,
    digit_b: u8,
) -> Result<Dataset> {
    if digit_a == digit_b {
        return Err(Error::Dataset(format!(
            "classes must differ, got {digit_a} twice"
        )));
    }
    if images.items() != labels.data().len() {
        return Err(Error::Dataset(format!(
            "{} images but {} labels",
            images.items(),
            labels.data().len()
        )));
    }
    let pixels = images.item_len();
    let keep: Vec<(usize, f64)> = (0..labels.data().len())
        .filter_map(|i| {
            let y = labels.data().get_f64(i);
            if y == digit_a as f64 {
                Some((i, 0.0))
            } else if y == digit_b as f64 {
                Some((i, 1.0))
            } else {
                None
            }
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::Dataset(format!(
            "no samples labelled {digit_a} or {digit_b}"
        )));
    }
    let mut features = DMatrix::zeros(keep.len(), pixels + 1);
    for (row, (item, _)) in keep.iter().enumerate() {
        for p in 0..pixels {
            features[(row, p)] = images.data().get_f64(item * pixels + p) / 255.0;
        }
        features[(row, pixels)] = 1.0;
    }
    Dataset::new(features, keep.into_iter().map(|(_, y)| y).collect())
}

/// Seeded shuffle followed by a contiguous split; the first `n mod m` shards
/// get one extra sample.
pub fn partition(dataset: &Dataset, m: usize, seed: u64) -> Result<Vec<Dataset>> {
    let n = dataset.len();
    if m == 0 || n < m {
        return Err(Error::Dataset(format!(
            "cannot split {n} samples among {m} agents"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / m, n % m);
    let mut shards = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let len = base + usize::from(i < extra);
        shards.push(dataset.select(&order[start..start + len]));
        start += len;
    }
    Ok(shards)
}

/// Two unit-variance Gaussian clouds centred at `±separation·u` for a random
/// unit vector `u`; sample `j` belongs to class `j mod 2`. A bias feature is
/// appended, so rows have `d + 1` entries.
pub fn synthetic_logistic(n: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::Dataset("n and d must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
    let norm = u.norm();
    if norm > 0.0 {
        u /= norm;
    } else {
        u[0] = 1.0;
    }
    let mut features = DMatrix::zeros(n, d + 1);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let class = (j % 2) as f64;
        let sign = if class == 1.0 { 1.0 } else { -1.0 };
        for k in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features[(j, k)] = sign * separation * u[k] + noise;
        }
        features[(j, d)] = 1.0;
        labels.push(class);
    }
    Dataset::new(features, labels)
}
