use rayon::prelude::*;

use super::params::{FrameIllumination, FrameParams};
use super::scene::{Layer, Scene};
use super::DreamConfig;
use crate::appearance::{perturb_illumination, poisson_blend};
use crate::error::{Error, Result};
use crate::geometry::{sample_bilinear, warp_image, Boundary, Point, Sampling, WarpChain};
use crate::raster::{Bitmap, Image, LabelMask};

/// One layer resampled onto the canvas.
#[derive(Clone, Debug)]
pub struct RenderedLayer {
    pub label: u8,
    /// Canvas pixels covered by the object.
    pub support: Bitmap,
    /// Layer colors; meaningful on and around the support.
    pub image: Image,
}

/// One synthesized frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedFrame {
    pub image: Image,
    /// Front-most object label per pixel.
    pub mask: LabelMask,
    /// Depth rank of the layer that won each pixel: 0 for background, 1 for
    /// the back-most object, increasing towards the viewer.
    pub provenance: LabelMask,
}

#[inline]
fn inside(v: f64, len: usize) -> bool {
    let r = v.round();
    r >= 0.0 && r < len as f64
}

/// Canvas window that can receive pixels of the crop under `chain`, padded
/// by two pixels; `None` when it misses the canvas.
fn footprint(
    crop: (usize, usize),
    chain: &WarpChain,
    canvas: (usize, usize),
) -> Option<(usize, usize, usize, usize)> {
    let (cw, ch) = (crop.0 as f64, crop.1 as f64);
    let mut border = Vec::new();
    let steps_x = 2 * crop.0;
    let steps_y = 2 * crop.1;
    for i in 0..=steps_x {
        let x = -0.5 + cw * i as f64 / steps_x as f64;
        border.push(Point::new(x, -0.5));
        border.push(Point::new(x, ch - 0.5));
    }
    for j in 0..=steps_y {
        let y = -0.5 + ch * j as f64 / steps_y as f64;
        border.push(Point::new(-0.5, y));
        border.push(Point::new(cw - 0.5, y));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in border {
        let q = chain.apply(p);
        x0 = x0.min(q.x);
        y0 = y0.min(q.y);
        x1 = x1.max(q.x);
        y1 = y1.max(q.y);
    }
    let (x0, y0) = ((x0.floor() - 2.0).max(0.0), (y0.floor() - 2.0).max(0.0));
    let (x1, y1) = (
        (x1.ceil() + 2.0).min(canvas.0 as f64 - 1.0),
        (y1.ceil() + 2.0).min(canvas.1 as f64 - 1.0),
    );
    if x0 > x1 || y0 > y1 {
        return None;
    }
    Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
}

/// Resamples a layer whose crop colors are `colors` through `chain`.
///
/// Each canvas pixel `p` reads the crop at `chain^-1(p)`: the support with
/// nearest sampling, the colors bilinearly with clamped edges.
pub fn render_layer(
    layer: &Layer,
    colors: &Image,
    chain: &WarpChain,
    canvas: (usize, usize),
) -> Result<RenderedLayer> {
    let (w, h) = canvas;
    let mut support = Bitmap::new(w, h);
    let mut image = Image::new(w, h, colors.channels());
    let Some((x0, y0, x1, y1)) = footprint(colors.dimensions(), chain, canvas) else {
        return Ok(RenderedLayer {
            label: layer.label,
            support,
            image,
        });
    };
    let inv = chain.inverter()?;
    let (cw, ch) = layer.mask.dimensions();
    let channels = colors.channels();
    let rows: Vec<Vec<(bool, [f32; 3])>> = (y0..=y1)
        .into_par_iter()
        .map(|y| {
            (x0..=x1)
                .map(|x| {
                    let q = inv.apply(Point::new(x as f64, y as f64));
                    let on = inside(q.x, cw)
                        && inside(q.y, ch)
                        && layer.mask.get(q.x.round() as usize, q.y.round() as usize);
                    let mut px = [0.0f32; 3];
                    for (c, v) in px.iter_mut().enumerate().take(channels) {
                        *v = sample_bilinear(colors, q, c, Boundary::Clamp);
                    }
                    (on, px)
                })
                .collect()
        })
        .collect();
    for (row, y) in rows.into_iter().zip(y0..) {
        for ((on, px), x) in row.into_iter().zip(x0..) {
            support.set(x, y, on);
            image.set_pixel(x, y, &px[..channels]);
        }
    }
    Ok(RenderedLayer {
        label: layer.label,
        support,
        image,
    })
}

/// Background and crop colors after the frame's illumination change.
pub fn illuminate(scene: &Scene, illumination: &FrameIllumination) -> Result<(Image, Vec<Image>)> {
    let FrameIllumination { saturation, value } = *illumination;
    let background = perturb_illumination(&scene.background, saturation, value)?;
    let crops = scene
        .layers
        .iter()
        .map(|l| perturb_illumination(&l.image, saturation, value))
        .collect::<Result<_>>()?;
    Ok((background, crops))
}

/// Renders one frame: the warped background, then each object from back to
/// front, Poisson-blended into the partial composite.
///
/// Support pixels on the canvas border have no complete neighbourhood for the
/// blend; they take the layer color directly and serve as boundary values,
/// so an object cut by the frame edge is not pulled towards the background
/// there.
pub fn compose_frame(
    scene: &Scene,
    frame: &FrameParams,
    depth_order: &[u8],
    config: &DreamConfig,
) -> Result<ComposedFrame> {
    let canvas = scene.dimensions();
    let (w, h) = canvas;
    let (background, crops) = illuminate(scene, &frame.illumination)?;
    let bg_chain = WarpChain::from_affine(frame.background.map);
    let mut image = warp_image(
        &background,
        &bg_chain,
        Sampling::Bilinear,
        Boundary::Reflect,
    )?;
    let mut mask = LabelMask::new(w, h);
    let mut provenance = LabelMask::new(w, h);
    for (rank, &label) in depth_order.iter().enumerate() {
        let index = scene
            .layers
            .iter()
            .position(|l| l.label == label)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("depth order names unknown label {label}"))
            })?;
        let pose = frame
            .object(label)
            .ok_or_else(|| Error::InvalidArgument(format!("no pose for label {label}")))?;
        let rendered = render_layer(&scene.layers[index], &crops[index], &pose.chain, canvas)?;
        if rendered.support.is_empty() {
            continue;
        }
        for (x, y) in rendered.support.iter_set() {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                image.set_pixel(x, y, rendered.image.pixel(x, y));
            }
        }
        image = poisson_blend(&rendered.image, &rendered.support, &image, &config.poisson)?;
        for (x, y) in rendered.support.iter_set() {
            mask.set(x, y, label);
            provenance.set(x, y, rank as u8 + 1);
        }
    }
    Ok(ComposedFrame {
        image,
        mask,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dreamer::{sample_dream_params, split_scene};
    use crate::geometry::{warp_mask, AffineMap};
    use crate::rng::SeededRng;

    fn textured_scene() -> (Image, LabelMask) {
        let img = Image::from_fn(64, 64, 3, |x, y, c| {
            let inside = (20..36).contains(&x) && (24..40).contains(&y);
            if inside {
                0.6 + 0.1 * ((x + y + c) % 3) as f32
            } else {
                0.2 + 0.002 * (x + y) as f32 + 0.05 * c as f32
            }
        });
        let mask = LabelMask::from_fn(64, 64, |x, y| {
            u8::from((20..36).contains(&x) && (24..40).contains(&y))
        });
        (img, mask)
    }

    #[test]
    fn zero_motion_reconstructs_the_source() {
        let (img, mask) = textured_scene();
        let config = DreamConfig::zero_ranges();
        let scene = split_scene(&img, &mask, &config).unwrap();
        let params = sample_dream_params(&mut SeededRng::new(0, 0), &scene, &config).unwrap();
        let frame = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        assert_eq!(frame.mask, mask);
        let err: f32 = frame
            .image
            .data()
            .iter()
            .zip(img.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f32>()
            / img.data().len() as f32;
        assert!(err <= 0.02, "mean abs error {err}");
    }

    #[test]
    fn translated_object_mask_is_the_nearest_warp() {
        let (img, mask) = textured_scene();
        let config = DreamConfig::zero_ranges();
        let scene = split_scene(&img, &mask, &config).unwrap();
        let mut params = sample_dream_params(&mut SeededRng::new(0, 0), &scene, &config).unwrap();
        let pose = &mut params.prev.objects[0];
        pose.chain =
            pose.chain
                .clone()
                .then(crate::geometry::Stage::Affine(AffineMap::translation(
                    20.0, 0.0,
                )));
        let frame = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        let expected = warp_mask(
            &mask,
            &WarpChain::from_affine(AffineMap::translation(20.0, 0.0)),
        )
        .unwrap();
        assert_eq!(frame.mask, expected);
    }

    #[test]
    fn front_layer_wins_overlaps() {
        let img = Image::filled(48, 48, 3, 0.5);
        let mask = LabelMask::from_fn(48, 48, |x, y| {
            if (5..15).contains(&x) && (5..15).contains(&y) {
                1
            } else if (30..40).contains(&x) && (30..40).contains(&y) {
                2
            } else {
                0
            }
        });
        let config = DreamConfig::zero_ranges();
        let scene = split_scene(&img, &mask, &config).unwrap();
        let mut params = sample_dream_params(&mut SeededRng::new(0, 0), &scene, &config).unwrap();
        // Move object 2 onto object 1 with a 5 px overlap.
        let shift = AffineMap::translation(-20.0, -20.0);
        let pose = params
            .prev
            .objects
            .iter_mut()
            .find(|o| o.label == 2)
            .unwrap();
        pose.chain = pose
            .chain
            .clone()
            .then(crate::geometry::Stage::Affine(shift));
        for (order, winner) in [(vec![2u8, 1], 1u8), (vec![1, 2], 2)] {
            let frame = compose_frame(&scene, &params.prev, &order, &config).unwrap();
            for y in 10..15 {
                for x in 10..15 {
                    assert_eq!(frame.mask.get(x, y), winner);
                    assert_eq!(frame.provenance.get(x, y), 2);
                }
            }
        }
    }

    #[test]
    fn objects_leaving_the_canvas_render_nothing() {
        let (img, mask) = textured_scene();
        let config = DreamConfig::zero_ranges();
        let scene = split_scene(&img, &mask, &config).unwrap();
        let chain = WarpChain::from_affine(AffineMap::translation(500.0, 0.0));
        let r = render_layer(&scene.layers[0], &scene.layers[0].image, &chain, (64, 64)).unwrap();
        assert!(r.support.is_empty());
    }
}
