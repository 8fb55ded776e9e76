//! Binary PGM/PPM reading and writing backed by the `image` crate's PNM codec.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use crate::raster::Raster;

pub type Rgb = [u8; 3];

#[derive(Debug, thiserror::Error)]
pub enum PnmError {
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn encode(
    width: usize,
    height: usize,
    bytes: &[u8],
    subtype: PnmSubtype,
    color: ExtendedColorType,
) -> Result<Vec<u8>, PnmError> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out).with_subtype(subtype).write_image(
        bytes,
        width as u32,
        height as u32,
        color,
    )?;
    Ok(out)
}

pub fn encode_pgm8(img: &Raster<u8>) -> Result<Vec<u8>, PnmError> {
    encode(
        img.width,
        img.height,
        &img.data,
        PnmSubtype::Graymap(SampleEncoding::Binary),
        ExtendedColorType::L8,
    )
}

/// The `image` PNM encoder has no 16-bit support, so the header is written
/// here; samples are big-endian as the format requires.
pub fn encode_pgm16(img: &Raster<u16>) -> Result<Vec<u8>, PnmError> {
    let mut out = format!("P5\n{} {}\n65535\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().flat_map(|v| v.to_be_bytes()));
    Ok(out)
}

pub fn encode_ppm(img: &Raster<Rgb>) -> Result<Vec<u8>, PnmError> {
    let bytes: Vec<u8> = img.data.iter().flatten().copied().collect();
    encode(
        img.width,
        img.height,
        &bytes,
        PnmSubtype::Pixmap(SampleEncoding::Binary),
        ExtendedColorType::Rgb8,
    )
}

pub fn write_pgm8(path: &Path, img: &Raster<u8>) -> Result<(), PnmError> {
    Ok(std::fs::write(path, encode_pgm8(img)?)?)
}

pub fn write_pgm16(path: &Path, img: &Raster<u16>) -> Result<(), PnmError> {
    Ok(std::fs::write(path, encode_pgm16(img)?)?)
}

pub fn write_ppm(path: &Path, img: &Raster<Rgb>) -> Result<(), PnmError> {
    Ok(std::fs::write(path, encode_ppm(img)?)?)
}

pub fn decode_pgm8(bytes: &[u8]) -> Result<Raster<u8>, PnmError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Raster::from_vec(w as usize, h as usize, img.into_raw()).expect("luma buffer matches"))
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<Raster<u16>, PnmError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)?.to_luma16();
    let (w, h) = img.dimensions();
    Ok(Raster::from_vec(w as usize, h as usize, img.into_raw()).expect("luma buffer matches"))
}

pub fn read_pgm8(path: &Path) -> Result<Raster<u8>, PnmError> {
    decode_pgm8(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm8_round_trip() {
        let img = Raster::from_vec(3, 2, vec![0u8, 10, 20, 127, 200, 255]).unwrap();
        let bytes = encode_pgm8(&img).unwrap();
        assert!(bytes.starts_with(b"P5"));
        assert_eq!(decode_pgm8(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm16_round_trip() {
        let img = Raster::from_vec(2, 2, vec![0u16, 1000, 32768, 65535]).unwrap();
        let bytes = encode_pgm16(&img).unwrap();
        assert_eq!(decode_pgm16(&bytes).unwrap(), img);
    }

    #[test]
    fn ppm_header() {
        let img = Raster::filled(2, 2, [1u8, 2, 3]);
        assert!(encode_ppm(&img).unwrap().starts_with(b"P6"));
    }
}
