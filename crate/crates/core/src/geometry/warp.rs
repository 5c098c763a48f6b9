//! Backward-mapped resampling: each output pixel `p` reads the input at
//! `chain^-1(p)`.

use rayon::prelude::*;

use super::{Point, WarpChain};
use crate::error::Result;
use crate::raster::{Image, LabelMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Nearest,
    Bilinear,
}

/// What to read for sample positions outside the source raster.
///
/// A position is inside when it rounds to a valid pixel, i.e. it falls within
/// the outer edge of the border pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    /// Constant value in every channel.
    Fill(f32),
    /// Repeat the border pixels.
    Clamp,
    /// Mirror about the outer edge of the border pixels.
    Reflect,
}

#[inline]
fn inside(v: f64, len: usize) -> bool {
    let r = v.round();
    r >= 0.0 && r < len as f64
}

#[inline]
fn reflect(v: f64, len: usize) -> f64 {
    // Mirror about -0.5 and len - 0.5 with period 2 * len.
    let period = 2.0 * len as f64;
    let mut t = (v + 0.5).rem_euclid(period);
    if t >= len as f64 {
        t = period - t;
    }
    t - 0.5
}

#[inline]
fn clamp_coord(v: f64, len: usize) -> f64 {
    v.clamp(0.0, (len - 1) as f64)
}

/// Resolves a sample position under `boundary`; `None` means "use the fill".
#[inline]
fn resolve(p: Point, w: usize, h: usize, boundary: Boundary) -> Option<Point> {
    match boundary {
        Boundary::Fill(_) => {
            if inside(p.x, w) && inside(p.y, h) {
                Some(Point::new(clamp_coord(p.x, w), clamp_coord(p.y, h)))
            } else {
                None
            }
        }
        Boundary::Clamp => Some(Point::new(clamp_coord(p.x, w), clamp_coord(p.y, h))),
        Boundary::Reflect => Some(Point::new(
            clamp_coord(reflect(p.x, w), w),
            clamp_coord(reflect(p.y, h), h),
        )),
    }
}

/// Bilinear sample of channel `c`.
#[inline]
pub fn sample_bilinear(img: &Image, p: Point, c: usize, boundary: Boundary) -> f32 {
    let (w, h) = img.dimensions();
    let Some(q) = resolve(p, w, h, boundary) else {
        return match boundary {
            Boundary::Fill(v) => v,
            _ => unreachable!(),
        };
    };
    let (x0, y0) = (q.x.floor(), q.y.floor());
    let (fx, fy) = ((q.x - x0) as f32, (q.y - y0) as f32);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
    let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Nearest-neighbour sample of channel `c`.
#[inline]
pub fn sample_nearest(img: &Image, p: Point, c: usize, boundary: Boundary) -> f32 {
    let (w, h) = img.dimensions();
    match resolve(p, w, h, boundary) {
        Some(q) => img.get(q.x.round() as usize, q.y.round() as usize, c),
        None => match boundary {
            Boundary::Fill(v) => v,
            _ => unreachable!(),
        },
    }
}

/// Resamples `img` through `chain` onto a canvas of the same size.
pub fn warp_image(
    img: &Image,
    chain: &WarpChain,
    sampling: Sampling,
    boundary: Boundary,
) -> Result<Image> {
    warp_image_to(img, chain, sampling, boundary, img.dimensions())
}

/// Like [`warp_image`] but onto a canvas of the given size.
pub fn warp_image_to(
    img: &Image,
    chain: &WarpChain,
    sampling: Sampling,
    boundary: Boundary,
    (out_w, out_h): (usize, usize),
) -> Result<Image> {
    let inv = chain.inverter()?;
    let channels = img.channels();
    let rows: Vec<Vec<f32>> = (0..out_h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(out_w * channels);
            for x in 0..out_w {
                let q = inv.apply(Point::new(x as f64, y as f64));
                for c in 0..channels {
                    row.push(match sampling {
                        Sampling::Nearest => sample_nearest(img, q, c, boundary),
                        Sampling::Bilinear => sample_bilinear(img, q, c, boundary),
                    });
                }
            }
            row
        })
        .collect();
    Image::from_vec(out_w, out_h, channels, rows.concat())
}

/// Nearest-neighbour mask resampling; positions outside the source are background.
pub fn warp_mask(mask: &LabelMask, chain: &WarpChain) -> Result<LabelMask> {
    warp_mask_to(mask, chain, mask.dimensions())
}

pub fn warp_mask_to(
    mask: &LabelMask,
    chain: &WarpChain,
    (out_w, out_h): (usize, usize),
) -> Result<LabelMask> {
    let inv = chain.inverter()?;
    let (w, h) = mask.dimensions();
    let rows: Vec<Vec<u8>> = (0..out_h)
        .into_par_iter()
        .map(|y| {
            (0..out_w)
                .map(|x| {
                    let q = inv.apply(Point::new(x as f64, y as f64));
                    if inside(q.x, w) && inside(q.y, h) {
                        mask.get(q.x.round() as usize, q.y.round() as usize)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    LabelMask::from_vec(out_w, out_h, rows.concat())
}
