//! MLS1: `"MLS1"`, little-endian u32 height, width and plane count, then the
//! planes one after another, row-major, as little-endian f32.

use std::path::Path;

use super::{read_bytes, write_bytes, Reader};
use crate::error::{Error, Result};
use crate::fields::{Grid, Stack};
use crate::scalar::Real;

pub const STACK_MAGIC: &[u8; 4] = b"MLS1";
const FORMAT: &str = "MLS1";

pub fn encode_stack<T: Real>(stack: &Stack<T>) -> Vec<u8> {
    let (h, w) = stack.shape();
    let mut out = Vec::with_capacity(16 + 4 * h * w * stack.n_planes());
    out.extend_from_slice(STACK_MAGIC);
    for dim in [h, w, stack.n_planes()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for plane in stack.planes() {
        for v in plane.data() {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_stack<T: Real>(bytes: &[u8]) -> Result<Stack<T>> {
    let mut r = Reader::new(bytes, FORMAT);
    if r.take(4)? != STACK_MAGIC {
        return Err(Error::format(FORMAT, "bad magic"));
    }
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let n = r.u32()? as usize;
    if h == 0 || w == 0 || n == 0 {
        return Err(Error::format(FORMAT, format!("empty dimensions {h}x{w}x{n}")));
    }
    let expected = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(n))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format(FORMAT, "dimensions overflow"))?;
    if r.remaining() != expected {
        return Err(Error::format(
            FORMAT,
            format!("payload is {} bytes, header implies {expected}", r.remaining()),
        ));
    }
    let payload = r.take(expected)?;
    let planes = payload
        .chunks_exact(4 * h * w)
        .map(|chunk| {
            let data = chunk
                .chunks_exact(4)
                .map(|b| T::lit(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64))
                .collect();
            Grid::new(h, w, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Stack::new(planes)
}

pub fn read_stack<T: Real>(path: &Path) -> Result<Stack<T>> {
    decode_stack(&read_bytes(path)?)
}

pub fn write_stack<T: Real>(path: &Path, stack: &Stack<T>) -> Result<()> {
    write_bytes(path, &encode_stack(stack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_bytes() {
        let g0 = Grid::new(1, 2, vec![1.0f64, -2.0]).unwrap();
        let g1 = Grid::new(1, 2, vec![0.5f64, 0.0]).unwrap();
        let bytes = encode_stack(&Stack::new(vec![g0, g1]).unwrap());
        let expected: Vec<u8> = vec![
            b'M', b'L', b'S', b'1', //
            1, 0, 0, 0, // height
            2, 0, 0, 0, // width
            2, 0, 0, 0, // planes
            0x00, 0x00, 0x80, 0x3f, // 1.0
            0x00, 0x00, 0x00, 0xc0, // -2.0
            0x00, 0x00, 0x00, 0x3f, // 0.5
            0x00, 0x00, 0x00, 0x00, // 0.0
        ];
        assert_eq!(bytes, expected);
        let back: Stack<f64> = decode_stack(&bytes).unwrap();
        assert_eq!(back.plane(0).data(), &[1.0, -2.0]);
        assert_eq!(back.plane(1).data(), &[0.5, 0.0]);
    }

    #[test]
    fn round_trip_at_f32_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let planes = (0..4)
            .map(|_| Grid::from_fn(5, 7, |_, _| rng.random_range(-3.0..3.0)))
            .collect();
        let s: Stack<f64> = Stack::new(planes).unwrap();
        let back: Stack<f64> = decode_stack(&encode_stack(&s)).unwrap();
        for (a, b) in s.planes().iter().zip(back.planes()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(*x as f32, *y as f32);
                assert_eq!(*y, (*x as f32) as f64);
            }
        }
        let s32: Stack<f32> = s.cast();
        assert_eq!(decode_stack::<f32>(&encode_stack(&s32)).unwrap(), s32);
    }

    #[test]
    fn guards() {
        let mut bytes = b"MLS1".to_vec();
        for d in [2u32, 3, 4] {
            bytes.extend_from_slice(&d.to_le_bytes());
        }
        bytes.extend_from_slice(&[0u8; 8]);
        assert!(matches!(decode_stack::<f64>(&bytes), Err(Error::Format { .. })));

        let mut empty = b"MLS1".to_vec();
        for d in [2u32, 3, 0] {
            empty.extend_from_slice(&d.to_le_bytes());
        }
        assert!(decode_stack::<f64>(&empty).is_err());

        let mut bad = encode_stack(&Stack::<f64>::filled(1, 1, 1, 0.0));
        bad[3] = b'2';
        assert!(decode_stack::<f64>(&bad).is_err());
        assert!(decode_stack::<f64>(b"MLS").is_err());
    }
}
