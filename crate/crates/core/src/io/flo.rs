//! Middlebury `.flo` optical flow files.
//!
//! Layout, all little-endian: the float32 tag `202021.25` (bytes `PIEH`),
//! int32 width, int32 height, then `width * height` interleaved float32
//! `(u, v)` pairs in row-major order.

use std::path::Path;

use super::create_parent;
use crate::error::{Error, Result};
use crate::raster::FlowField;

/// Sanity tag at the start of every `.flo` file.
pub const FLO_MAGIC: f32 = 202021.25;

const HEADER_LEN: usize = 12;

/// Serializes a flow field to `.flo` bytes.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + flow.vectors().len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for [u, v] in flow.vectors() {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses `.flo` bytes; `origin` only labels error messages.
pub fn decode_flo(bytes: &[u8], origin: &Path) -> Result<FlowField> {
    let err = |message: String| Error::Flo {
        path: origin.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(err(format!(
            "file is {} bytes, shorter than the header",
            bytes.len()
        )));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(err(format!("bad magic {magic}, expected {FLO_MAGIC}")));
    }
    let width = i32::from_le_bytes(word(4));
    let height = i32::from_le_bytes(word(8));
    if width < 0 || height < 0 {
        return Err(err(format!("negative dimensions {width}x{height}")));
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| err(format!("dimensions {w}x{h} overflow")))?;
    if bytes.len() != expected {
        return Err(err(format!(
            "header says {w}x{h} ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let vectors = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            ]
        })
        .collect();
    FlowField::from_vec(w, h, vectors).map_err(|e| err(e.to_string()))
}

pub fn write_flo(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create_parent(path)?;
    std::fs::write(path, encode_flo(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn magic_is_the_pieh_tag() {
        assert_eq!(&FLO_MAGIC.to_le_bytes(), b"PIEH");
    }

    #[test]
    fn one_pixel_file_is_twenty_bytes() {
        let f = FlowField::zeros(1, 1);
        let bytes = encode_flo(&f);
        assert_eq!(bytes.len(), 20);
        assert_eq!(decode_flo(&bytes, Path::new("x")).unwrap(), f);
    }

    #[test]
    fn three_by_two_header_and_payload() {
        let f = FlowField::from_fn(3, 2, |x, y| [x as f32, -(y as f32)]);
        let bytes = encode_flo(&f);
        assert_eq!(bytes.len(), 12 + 12 * 4);
        assert_eq!(i32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(i32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        // second pixel of the first row: (1, -0)
        assert_eq!(f32::from_le_bytes(bytes[20..24].try_into().unwrap()), 1.0);
    }

    #[test]
    fn near_miss_magic_is_rejected() {
        let mut bytes = encode_flo(&FlowField::zeros(2, 2));
        bytes[..4].copy_from_slice(&202021.26f32.to_le_bytes());
        assert_ne!(202021.26f32, FLO_MAGIC);
        assert!(matches!(
            decode_flo(&bytes, Path::new("x")),
            Err(Error::Flo { .. })
        ));
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let mut bytes = encode_flo(&FlowField::zeros(2, 2));
        bytes.truncate(bytes.len() - 4);
        assert!(decode_flo(&bytes, Path::new("x")).is_err());
        assert!(decode_flo(&bytes[..6], Path::new("x")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            w in 1usize..12,
            h in 1usize..12,
            values in proptest::collection::vec(-1e6f32..1e6, 288),
        ) {
            let f = FlowField::from_fn(w, h, |x, y| {
                let i = (y * w + x) * 2;
                [values[i], values[i + 1]]
            });
            let back = decode_flo(&encode_flo(&f), Path::new("x")).unwrap();
            for (a, b) in f.vectors().iter().zip(back.vectors()) {
                prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
                prop_assert_eq!(a[1].to_bits(), b[1].to_bits());
            }
        }
    }
}
