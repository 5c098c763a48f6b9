//! Indexed-palette PNG annotations.
//!
//! Palette index `i` is label `i`; colors are only cosmetic. Masks are written
//! with the PASCAL VOC / DAVIS colormap (index 0 black, 1 dark red, 2 dark
//! green, ...), so output opens in the usual annotation viewers. Labels are
//! capped at 255.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::create_parent;
use crate::error::{Error, Result};
use crate::raster::{Bitmap, LabelMask};

/// The 256-entry DAVIS palette as packed RGB triples.
pub fn davis_palette() -> Vec<u8> {
    let mut palette = Vec::with_capacity(256 * 3);
    for i in 0..256u32 {
        let (mut r, mut g, mut b) = (0u8, 0u8, 0u8);
        let mut c = i;
        for j in 0..8 {
            r |= ((c & 1) as u8) << (7 - j);
            g |= (((c >> 1) & 1) as u8) << (7 - j);
            b |= (((c >> 2) & 1) as u8) << (7 - j);
            c >>= 3;
        }
        palette.extend_from_slice(&[r, g, b]);
    }
    palette
}

/// Reads an indexed PNG; palette indices become labels verbatim.
pub fn read_label_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Indexed {
        return Err(Error::NotIndexed {
            path: path.to_path_buf(),
            found: format!("{color:?}"),
        });
    }
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let bits = match depth {
        png::BitDepth::One => 1,
        png::BitDepth::Two => 2,
        png::BitDepth::Four => 4,
        png::BitDepth::Eight => 8,
        png::BitDepth::Sixteen => {
            return Err(Error::BitDepth {
                path: path.to_path_buf(),
                depth: "16-bit indexed".into(),
            })
        }
    };
    let mut labels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        if bits == 8 {
            labels.extend_from_slice(&row[..w]);
        } else {
            let per_byte = 8 / bits;
            let mask = (1u8 << bits) - 1;
            for x in 0..w {
                let byte = row[x / per_byte];
                let shift = 8 - bits * (x % per_byte + 1);
                labels.push((byte >> shift) & mask);
            }
        }
    }
    LabelMask::from_vec(w, h, labels)
}

/// Writes an 8-bit indexed PNG with the DAVIS palette.
pub fn write_label_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create_parent(path)?;
    let encode_err = |e: png::EncodingError| Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        mask.width() as u32,
        mask.height() as u32,
    );
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_palette(davis_palette());
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(mask.labels()).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

/// Writes a binary map (occlusion, holes) as a two-entry indexed PNG.
pub fn write_bitmap(bitmap: &Bitmap, path: impl AsRef<Path>) -> Result<()> {
    write_label_mask(&LabelMask::from_bitmap(bitmap, 1), path)
}

/// Reads a binary map written by [`write_bitmap`]: any non-zero index is set.
pub fn read_bitmap(path: impl AsRef<Path>) -> Result<Bitmap> {
    Ok(read_label_mask(path)?.foreground())
}
