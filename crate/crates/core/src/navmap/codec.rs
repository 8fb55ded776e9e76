//! Run-length palettised mask codec.
//!
//! Wire layout (little-endian):
//!
//! ```text
//! "PMSK" | width: u16 | height: u16 | (class: u8, run: u16)*
//! ```
//!
//! Runs are row-major over the whole image and may cross row boundaries.
//! A run never exceeds `u16::MAX` pixels and is never zero.

use crate::raster::Raster;

use super::{SegClass, SegMask};

pub const MASK_MAGIC: &[u8; 4] = b"PMSK";
pub const MASK_HEADER_LEN: usize = 8;
const RUN_BYTES: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("mask dimensions {0}x{1} exceed the 16-bit header")]
    TooLarge(usize, usize),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PalettisedMask {
    pub width: u16,
    pub height: u16,
    pub runs: Vec<(SegClass, u16)>,
}

impl PalettisedMask {
    pub fn encoded_len(&self) -> usize {
        MASK_HEADER_LEN + RUN_BYTES * self.runs.len()
    }

    pub fn payload_len(&self) -> usize {
        RUN_BYTES * self.runs.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MASK_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for &(class, run) in &self.runs {
            out.push(class.index());
            out.extend_from_slice(&run.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < MASK_HEADER_LEN || &bytes[..4] != MASK_MAGIC {
            return Err(CodecError::CorruptPayload("missing PMSK header".into()));
        }
        let width = u16::from_le_bytes([bytes[4], bytes[5]]);
        let height = u16::from_le_bytes([bytes[6], bytes[7]]);
        let payload = &bytes[MASK_HEADER_LEN..];
        if payload.len() % RUN_BYTES != 0 {
            return Err(CodecError::CorruptPayload(format!(
                "payload length {} is not a multiple of {RUN_BYTES}",
                payload.len()
            )));
        }
        let runs = payload
            .chunks_exact(RUN_BYTES)
            .map(|c| {
                let class = SegClass::from_index(c[0])
                    .ok_or_else(|| CodecError::CorruptPayload(format!("class index {} out of range", c[0])))?;
                Ok((class, u16::from_le_bytes([c[1], c[2]])))
            })
            .collect::<Result<Vec<_>, CodecError>>()?;
        Ok(PalettisedMask { width, height, runs })
    }
}

pub fn encode_mask(mask: &SegMask) -> Result<PalettisedMask, CodecError> {
    if mask.width > u16::MAX as usize || mask.height > u16::MAX as usize {
        return Err(CodecError::TooLarge(mask.width, mask.height));
    }
    let mut runs: Vec<(SegClass, u16)> = Vec::new();
    for &class in &mask.data {
        match runs.last_mut() {
            Some((c, n)) if *c == class && *n < u16::MAX => *n += 1,
            _ => runs.push((class, 1)),
        }
    }
    Ok(PalettisedMask {
        width: mask.width as u16,
        height: mask.height as u16,
        runs,
    })
}

pub fn decode_mask(packed: &PalettisedMask) -> Result<SegMask, CodecError> {
    let n = packed.width as usize * packed.height as usize;
    let total: usize = packed.runs.iter().map(|r| r.1 as usize).sum();
    if total != n {
        return Err(CodecError::CorruptPayload(format!(
            "run lengths sum to {total}, expected {n}"
        )));
    }
    if packed.runs.iter().any(|r| r.1 == 0) {
        return Err(CodecError::CorruptPayload("zero-length run".into()));
    }
    let mut data = Vec::with_capacity(n);
    for &(class, run) in &packed.runs {
        data.extend(std::iter::repeat_n(class, run as usize));
    }
    Ok(Raster::from_vec(packed.width as usize, packed.height as usize, data).expect("length checked"))
}
