//! File formats: netpbm images and label maps, MLS1 plane stacks, model
//! parameters and `key = value` run configurations.

mod config;
mod model;
mod netpbm;
mod stack;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use model::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};
pub use netpbm::{
    decode_labels, decode_ppm, encode_labels, encode_ppm, read_labels, read_mask, read_ppm, write_labels, write_ppm,
};
pub use stack::{decode_stack, encode_stack, read_stack, write_stack, STACK_MAGIC};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Little-endian cursor over a byte slice.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], format: &'static str) -> Self {
        Self { bytes, pos: 0, format }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(self.format, "truncated data")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
