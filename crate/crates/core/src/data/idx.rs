//! IDX container: big-endian `u32` magic, one big-endian `u32` per
//! dimension, then raw unsigned bytes.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;
const MAX_LABEL: u8 = 9;

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Length {
            what: format!("{what} header"),
            expected: offset + 4,
            actual: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let found = read_u32(bytes, 0, what)?;
    if found != expected {
        return Err(Error::Format(format!(
            "{what}: expected magic number {expected}, found {found}"
        )));
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, payload: usize, what: &str) -> Result<()> {
    let expected = header + payload;
    if bytes.len() != expected {
        return Err(Error::Length {
            what: what.to_string(),
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

/// Raw IDX3 image data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn count(&self) -> usize {
        self.count
    }

    /// Pixel `(r, c)` of image `n`, scaled to `[0, 1]`.
    pub fn pixel(&self, n: usize, r: usize, c: usize) -> f64 {
        self.pixels[(n * self.rows + r) * self.cols + c] as f64 / 255.0
    }

    /// One flattened row per image, pixels divided by 255.
    pub fn to_features(&self) -> Matrix {
        let data = self.pixels.iter().map(|&p| p as f64 / 255.0).collect();
        Matrix::from_vec(self.count(), self.rows * self.cols, data).expect("consistent shape")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        for v in [
            IMAGES_MAGIC,
            self.count() as u32,
            self.rows as u32,
            self.cols as u32,
        ] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    const WHAT: &str = "IDX image file";
    check_magic(bytes, IMAGES_MAGIC, WHAT)?;
    let n = read_u32(bytes, 4, WHAT)? as usize;
    let rows = read_u32(bytes, 8, WHAT)? as usize;
    let cols = read_u32(bytes, 12, WHAT)? as usize;
    check_payload(bytes, 16, n * rows * cols, WHAT)?;
    Ok(IdxImages {
        count: n,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    const WHAT: &str = "IDX label file";
    check_magic(bytes, LABELS_MAGIC, WHAT)?;
    let n = read_u32(bytes, 4, WHAT)? as usize;
    check_payload(bytes, 8, n, WHAT)?;
    let labels = &bytes[8..];
    if let Some(pos) = labels.iter().position(|&l| l > MAX_LABEL) {
        return Err(Error::Data(format!(
            "label {} at index {pos} outside [0, {MAX_LABEL}]",
            labels[pos]
        )));
    }
    Ok(labels.iter().map(|&l| l as usize).collect())
}

pub fn labels_to_bytes(labels: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend(labels.iter().map(|&l| l as u8));
    out
}
