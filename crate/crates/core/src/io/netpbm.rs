//! Binary netpbm: P6 color images and P5 gray maps, 8 bits per sample.

use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::dtrans::BinaryMask;
use crate::error::{Error, Result};
use crate::fields::{Grid, LabelMap, Stack};
use crate::scalar::Real;

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    offset: usize,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2], format: &'static str) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::format(format, "bad magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments may separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(format, "malformed header"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(format, "malformed header"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format(format, "empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(format, format!("unsupported maxval {maxval}")));
    }
    Ok(Header {
        width,
        height,
        maxval,
        offset: pos + 1,
    })
}

fn payload<'a>(bytes: &'a [u8], header: &Header, samples: usize, format: &'static str) -> Result<&'a [u8]> {
    let want = header.width * header.height * samples;
    let have = bytes.len() - header.offset;
    if have < want {
        return Err(Error::format(format, format!("payload is {have} bytes, expected {want}")));
    }
    Ok(&bytes[header.offset..header.offset + want])
}

/// 3-channel image with intensities scaled to `[0, 1]`.
pub fn decode_ppm<T: Real>(bytes: &[u8]) -> Result<Stack<T>> {
    let header = parse_header(bytes, b"P6", "PPM")?;
    if header.maxval != 255 {
        return Err(Error::format("PPM", format!("maxval must be 255, got {}", header.maxval)));
    }
    let data = payload(bytes, &header, 3, "PPM")?;
    let (h, w) = (header.height, header.width);
    let scale = T::lit(255.0);
    let planes = (0..3)
        .map(|ch| Grid::from_fn(h, w, |r, c| T::lit(data[3 * (r * w + c) + ch] as f64) / scale))
        .collect();
    Stack::new(planes)
}

/// Quantizes each channel to 8 bits after clamping to `[0, 1]`.
pub fn encode_ppm<T: Real>(image: &Stack<T>) -> Result<Vec<u8>> {
    if image.n_planes() != 3 {
        return Err(Error::PlaneMismatch {
            expected: 3,
            got: image.n_planes(),
        });
    }
    let (h, w) = image.shape();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * h * w);
    for p in 0..h * w {
        for ch in 0..3 {
            let v = image.at(ch, p).to_f64_lossy();
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            out.push((v * 255.0).round() as u8);
        }
    }
    Ok(out)
}

/// Label map stored as gray values; with `n_classes` every value must be a
/// valid class.
pub fn decode_labels(bytes: &[u8], n_classes: Option<usize>) -> Result<LabelMap> {
    let header = parse_header(bytes, b"P5", "PGM")?;
    let data = payload(bytes, &header, 1, "PGM")?;
    let labels = LabelMap::new(header.height, header.width, data.iter().map(|&b| b as u32).collect())?;
    if let Some(n) = n_classes {
        labels.check_classes(n)?;
    }
    Ok(labels)
}

pub fn encode_labels(labels: &LabelMap) -> Result<Vec<u8>> {
    if let Some(max) = labels.max_label().filter(|&m| m > 255) {
        return Err(Error::InvalidInput(format!("label {max} does not fit in 8 bits")));
    }
    let (h, w) = labels.shape();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(labels.data().iter().map(|&l| l as u8));
    Ok(out)
}

pub fn read_ppm<T: Real>(path: &Path) -> Result<Stack<T>> {
    decode_ppm(&read_bytes(path)?)
}

pub fn write_ppm<T: Real>(path: &Path, image: &Stack<T>) -> Result<()> {
    write_bytes(path, &encode_ppm(image)?)
}

pub fn read_labels(path: &Path, n_classes: Option<usize>) -> Result<LabelMap> {
    decode_labels(&read_bytes(path)?, n_classes)
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    write_bytes(path, &encode_labels(labels)?)
}

/// P5 mask; nonzero gray values are foreground.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let labels = read_labels(path, None)?;
    let (h, w) = labels.shape();
    BinaryMask::new(h, w, labels.data().iter().map(|&v| v != 0).collect())
}
