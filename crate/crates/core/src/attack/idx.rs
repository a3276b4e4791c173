//! IDX containers (MNIST layout), binarization and PGM output.
//!
//! An IDX file is a big-endian `u32` magic `0x000008NN` (unsigned bytes, `NN`
//! dimensions), `NN` big-endian `u32` dimension sizes, then the raw bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::encoding::Chromosome;
use crate::error::{Error, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const DEFAULT_THRESHOLD: u8 = 128;

/// One 28x28 grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image(Box<[u8; IMAGE_PIXELS]>);

impl Image {
    pub fn new(pixels: &[u8]) -> Result<Self> {
        let arr: [u8; IMAGE_PIXELS] = pixels.try_into().map_err(|_| {
            Error::InvalidArgument(format!("image has {} pixels, expected {IMAGE_PIXELS}", pixels.len()))
        })?;
        Ok(Image(Box::new(arr)))
    }

    pub fn pixels(&self) -> &[u8] {
        &self.0[..]
    }
}

/// Raw unsigned-byte IDX tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxData {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

fn format_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

/// Parses an unsigned-byte IDX buffer and checks its magic.
pub fn parse_idx(bytes: &[u8], expected_magic: Option<u32>, path: &Path) -> Result<IdxData> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: 4,
            actual: bytes.len() as u64,
        });
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if let Some(expected) = expected_magic {
        if magic != expected {
            return Err(format_err(
                path,
                0,
                format!("magic 0x{magic:08x}, expected 0x{expected:08x}"),
            ));
        }
    }
    if magic >> 16 != 0 || (magic >> 8) & 0xff != 0x08 {
        return Err(format_err(
            path,
            0,
            format!("magic 0x{magic:08x} is not an unsigned-byte IDX file"),
        ));
    }
    let ndims = (magic & 0xff) as usize;
    if ndims == 0 {
        return Err(format_err(path, 3, "zero dimensions"));
    }
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: header as u64,
            actual: bytes.len() as u64,
        });
    }
    let dims: Vec<u32> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
        .collect();
    let payload = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
    let expected = payload
        .and_then(|p| p.checked_add(header as u64))
        .ok_or_else(|| format_err(path, 4, "dimension product overflows"))?;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    Ok(IdxData {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn read_idx(path: &Path, expected_magic: Option<u32>) -> Result<IdxData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx(&bytes, expected_magic, path)
}

pub fn load_idx_images(path: &Path) -> Result<Vec<Image>> {
    let idx = read_idx(path, Some(IMAGE_MAGIC))?;
    let (rows, cols) = (idx.dims[1], idx.dims[2]);
    if rows as usize != IMAGE_SIDE || cols as usize != IMAGE_SIDE {
        return Err(format_err(path, 8, format!("images are {rows}x{cols}, expected 28x28")));
    }
    idx.data.chunks_exact(IMAGE_PIXELS).map(Image::new).collect()
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    Ok(read_idx(path, Some(LABEL_MAGIC))?.data)
}

pub fn encode_idx_images(images: &[Image]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * IMAGE_PIXELS);
    for word in [IMAGE_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img.pixels());
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// `1` where `pixel >= threshold`.
pub fn binarize(pixels: &[u8], threshold: u8) -> Result<Chromosome> {
    if pixels.len() != IMAGE_PIXELS {
        return Err(Error::InvalidArgument(format!(
            "image has {} pixels, expected {IMAGE_PIXELS}",
            pixels.len()
        )));
    }
    Chromosome::new(pixels.iter().map(|&p| (p >= threshold) as u8).collect())
}

/// Binary P5 PGM of a 784-bit image, ones drawn at 255.
pub fn encode_pgm(bits: &Chromosome) -> Result<Vec<u8>> {
    if bits.len() != IMAGE_PIXELS {
        return Err(Error::InvalidArgument(format!(
            "{} bits is not a 28x28 image",
            bits.len()
        )));
    }
    let mut out = Vec::with_capacity(IMAGE_PIXELS + 16);
    write!(out, "P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n").expect("writing to a Vec cannot fail");
    out.extend(bits.genes().iter().map(|&g| g * 255));
    Ok(out)
}

/// Bilinear resampling of a `w x h` grayscale image to `new_w x new_h`
/// (pixel centres aligned).
pub fn resample(pixels: &[u8], w: usize, h: usize, new_w: usize, new_h: usize) -> Vec<u8> {
    assert_eq!(pixels.len(), w * h);
    let at = |x: usize, y: usize| pixels[y * w + x] as f64;
    let mut out = Vec::with_capacity(new_w * new_h);
    for j in 0..new_h {
        let sy = ((j as f64 + 0.5) * h as f64 / new_h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for i in 0..new_w {
            let sx = ((i as f64 + 0.5) * w as f64 / new_w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            out.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn minimal_image_file() {
        let mut bytes = Vec::new();
        for w in [IMAGE_MAGIC, 1, 28, 28] {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        bytes.extend(std::iter::repeat_n(0, 784));
        let idx = parse_idx(&bytes, Some(IMAGE_MAGIC), p()).unwrap();
        assert_eq!(idx.dims, vec![1, 28, 28]);
        assert!(idx.data.iter().all(|&b| b == 0));
    }

    #[test]
    fn label_magic_rejected_as_images() {
        let bytes = encode_idx_labels(&[1, 2, 3]);
        assert!(matches!(
            parse_idx(&bytes, Some(IMAGE_MAGIC), p()),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn truncated_payload_rejected() {
        let img = Image::new(&[7; 784]).unwrap();
        let bytes = encode_idx_images(&[img.clone(), img]);
        assert!(matches!(
            parse_idx(&bytes[..bytes.len() - 1], Some(IMAGE_MAGIC), p()),
            Err(Error::Truncated {
                expected: 1584,
                actual: 1583,
                ..
            })
        ));
        assert!(matches!(
            parse_idx(&bytes[..10], None, p()),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            parse_idx(&bytes[..2], None, p()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn binarize_threshold_semantics() {
        assert_eq!(binarize(&[0; 784], 128).unwrap().count_ones(), 0);
        assert_eq!(binarize(&[255; 784], 128).unwrap().count_ones(), 784);
        let mut px = [0u8; 784];
        px[0] = 127;
        px[1] = 128;
        let c = binarize(&px, 128).unwrap();
        assert_eq!((c.gene(0), c.gene(1)), (0, 1));
        assert!(binarize(&[0; 10], 128).is_err());
    }

    #[test]
    fn pgm_layout() {
        let mut bits = vec![0u8; 784];
        bits[0] = 1;
        let pgm = encode_pgm(&Chromosome::new(bits).unwrap()).unwrap();
        assert!(pgm.starts_with(b"P5\n28 28\n255\n"));
        assert_eq!(pgm.len(), 13 + 784);
        assert_eq!(pgm[13], 255);
        assert_eq!(pgm[14], 0);
    }

    #[test]
    fn resample_constant_and_identity() {
        assert!(resample(&[9; 64], 8, 8, 28, 28).iter().all(|&v| v == 9));
        let src: Vec<u8> = (0..64).collect();
        assert_eq!(resample(&src, 8, 8, 8, 8), src);
    }
}
