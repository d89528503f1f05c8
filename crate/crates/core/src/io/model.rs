//! Model file: `"MLSW"`, little-endian u32 feature and class counts, then the
//! weights row-major and the biases, all as little-endian f64.

use std::path::Path;

use super::{read_bytes, write_bytes, Reader};
use crate::error::{Error, Result};
use crate::learner::PredictorParams;
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 4] = b"MLSW";
const FORMAT: &str = "MLSW";

pub fn encode_model<T: Real>(params: &PredictorParams<T>) -> Vec<u8> {
    let mut out = MODEL_MAGIC.to_vec();
    out.extend_from_slice(&(params.n_features() as u32).to_le_bytes());
    out.extend_from_slice(&(params.n_classes() as u32).to_le_bytes());
    for v in params.weights().iter().chain(params.bias()) {
        out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    out
}

pub fn decode_model<T: Real>(bytes: &[u8]) -> Result<PredictorParams<T>> {
    let mut r = Reader::new(bytes, FORMAT);
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::format(FORMAT, "bad magic"));
    }
    let n_features = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    let count = n_features
        .checked_add(1)
        .and_then(|f| f.checked_mul(n_classes))
        .ok_or_else(|| Error::format(FORMAT, "dimensions overflow"))?;
    if r.remaining() != 8 * count {
        return Err(Error::format(
            FORMAT,
            format!("payload is {} bytes, header implies {}", r.remaining(), 8 * count),
        ));
    }
    let mut values = r
        .take(8 * count)?
        .chunks_exact(8)
        .map(|b| T::lit(f64::from_le_bytes(b.try_into().expect("8 bytes"))))
        .collect::<Vec<_>>();
    let bias = values.split_off(n_features * n_classes);
    PredictorParams::from_parts(n_features, n_classes, values, bias)
}

pub fn read_model<T: Real>(path: &Path) -> Result<PredictorParams<T>> {
    decode_model(&read_bytes(path)?)
}

pub fn write_model<T: Real>(path: &Path, params: &PredictorParams<T>) -> Result<()> {
    write_bytes(path, &encode_model(params))
}
