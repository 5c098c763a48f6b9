use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use super::create_parent;
use crate::error::{Error, Result};
use crate::raster::Image;

/// Reads a PNG or JPEG into unit-interval floats.
///
/// Gray inputs stay single-channel, color inputs become RGB; alpha is dropped.
/// 8- and 16-bit inputs are supported.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, data): (usize, Vec<f32>) = match decoded {
        DynamicImage::ImageLuma8(buf) => (
            1,
            buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        ),
        DynamicImage::ImageLumaA8(_) => {
            let buf = decoded.to_luma8();
            (
                1,
                buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
            )
        }
        DynamicImage::ImageLuma16(buf) => (
            1,
            buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        ),
        DynamicImage::ImageLumaA16(_) => {
            let buf = decoded.to_luma16();
            (
                1,
                buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
            )
        }
        DynamicImage::ImageRgb8(buf) => (
            3,
            buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        ),
        DynamicImage::ImageRgba8(_) => {
            let buf = decoded.to_rgb8();
            (
                3,
                buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
            )
        }
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let buf = decoded.to_rgb16();
            (
                3,
                buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
            )
        }
        other => {
            return Err(Error::BitDepth {
                path: path.to_path_buf(),
                depth: format!("{:?}", other.color()),
            })
        }
    };
    Image::from_vec(w, h, channels, data)
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit PNG (gray or RGB depending on the channel count).
pub fn write_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    create_parent(path)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let result = if img.channels() == 1 {
        GrayImage::from_raw(w, h, bytes)
            .expect("buffer size matches")
            .save_with_format(path, image::ImageFormat::Png)
    } else {
        RgbImage::from_raw(w, h, bytes)
            .expect("buffer size matches")
            .save_with_format(path, image::ImageFormat::Png)
    };
    result.map_err(|e| Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a single-channel map as 8-bit gray, scaling `[0, 1]` to `[0, 255]`.
pub fn write_gray(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a single-channel map, got {} channels",
            img.channels()
        )));
    }
    write_image(img, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_png_reads_as_ones() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("white.png");
        RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255]))
            .save(&p)
            .unwrap();
        let img = read_image(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert!(img.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gray_128_is_128_over_255() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gray.png");
        GrayImage::from_pixel(3, 1, image::Luma([128]))
            .save(&p)
            .unwrap();
        let img = read_image(&p).unwrap();
        assert_eq!(img.channels(), 1);
        assert!((img.get(0, 0, 0) - 0.501_960_8).abs() < 1e-6);
    }

    #[test]
    fn truncated_file_is_a_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.png");
        RgbImage::from_pixel(16, 16, image::Rgb([10, 20, 30]))
            .save(&p)
            .unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(read_image(&p), Err(Error::Decode { .. })));
    }

    #[test]
    fn eight_bit_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.png");
        let img = Image::from_fn(7, 5, 3, |x, y, c| {
            ((x * 31 + y * 17 + c * 5) % 256) as f32 / 255.0
        });
        write_image(&img, &p).unwrap();
        let back = read_image(&p).unwrap();
        assert_eq!(back, img);
    }
}
