//! Binary model checkpoint. All integers are `u32` and all reals `f64`,
//! little-endian:
//!
//! ```text
//! magic        8 bytes  "WAVKANCK"
//! version      u32      1
//! n_widths     u32
//! widths       u32 x n_widths
//! per layer k (n_widths - 1 of them):
//!   family     u32      0 mexican_hat, 1 morlet, 2 dog, 3 shannon
//!   hyper      f64      sigma, omega0, 0, or window_half_width
//!   weight     f64 x (out * in), row-major
//!   scale      f64 x (out * in)
//!   translation f64 x (out * in)
//! ```
//!
//! Reals are stored as raw bit patterns, so a save/load cycle is bitwise.

use std::path::Path;

use crate::error::{Error, Result};
use crate::layer::LayerParams;
use crate::matrix::Matrix;
use crate::model::ModelState;
use crate::wavelet::MotherWavelet;

const MAGIC: &[u8; 8] = b"WAVKANCK";
const VERSION: u32 = 1;

fn family_code(w: &MotherWavelet) -> u32 {
    match w {
        MotherWavelet::MexicanHat(_) => 0,
        MotherWavelet::Morlet(_) => 1,
        MotherWavelet::Dog(_) => 2,
        MotherWavelet::Shannon(_) => 3,
    }
}

fn wavelet_from_code(code: u32, hyper: f64) -> Result<MotherWavelet> {
    match code {
        0 => MotherWavelet::mexican_hat(hyper),
        1 => MotherWavelet::morlet(hyper),
        2 => Ok(MotherWavelet::dog()),
        3 => MotherWavelet::shannon(hyper),
        other => Err(Error::Format(format!("unknown wavelet family code {other}"))),
    }
}

pub fn to_bytes(model: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.architecture().len() as u32).to_le_bytes());
    for &w in model.architecture() {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    for layer in model.layers() {
        out.extend_from_slice(&family_code(&layer.wavelet).to_le_bytes());
        out.extend_from_slice(&layer.wavelet.hyperparameter().to_le_bytes());
        for (_, m) in layer.tensors() {
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| Error::Length {
            what: "checkpoint".into(),
            expected: end,
            actual: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let data = (0..rows * cols).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelState> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a Wav-KAN checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let n_widths = r.u32()? as usize;
    if n_widths < 2 {
        return Err(Error::Format(format!("checkpoint lists {n_widths} widths")));
    }
    let widths = (0..n_widths)
        .map(|_| r.u32().map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n_widths - 1);
    for pair in widths.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let code = r.u32()?;
        let hyper = r.f64()?;
        layers.push(LayerParams {
            wavelet: wavelet_from_code(code, hyper)?,
            weight: r.matrix(out_dim, in_dim)?,
            scale: r.matrix(out_dim, in_dim)?,
            translation: r.matrix(out_dim, in_dim)?,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Length {
            what: "checkpoint (trailing bytes)".into(),
            expected: r.pos,
            actual: bytes.len(),
        });
    }
    ModelState::from_layers(layers).map_err(|e| Error::Format(format!("invalid checkpoint: {e}")))
}

pub fn save(model: &ModelState, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::path(path, e))
}

pub fn load(path: &Path) -> Result<ModelState> {
    from_bytes(&std::fs::read(path).map_err(|e| Error::path(path, e))?)
}
