use serde::{Deserialize, Serialize};

use super::DreamConfig;
use crate::appearance::inpaint;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::morphology::dilate;
use crate::raster::{check_dims, Bitmap, Image, LabelMask};

/// Context pixels kept around each object crop.
pub const CROP_MARGIN: usize = 1;

/// One object cut out of the annotated frame.
///
/// Crop coordinates are the canonical object coordinates: every warp chain
/// of the layer maps them into a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub label: u8,
    /// Source pixels of the crop window, object plus margin.
    pub image: Image,
    /// Object support inside the crop.
    pub mask: Bitmap,
    /// Source-frame position of the crop's top-left pixel.
    pub origin: (usize, usize),
}

/// Object bounding box in crop coordinates, by pixel edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl ObjectBox {
    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Larger side, the object size that motion ranges refer to.
    pub fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }
}

impl Layer {
    pub fn object_box(&self) -> ObjectBox {
        let (x0, y0, x1, y1) = self.mask.bounding_box().expect("layers are never empty");
        ObjectBox {
            x0: x0 as f64 - 0.5,
            y0: y0 as f64 - 0.5,
            x1: x1 as f64 + 0.5,
            y1: y1 as f64 + 0.5,
        }
    }

    /// Maps crop coordinates to source-frame coordinates.
    pub fn to_source(&self, p: Point) -> Point {
        Point::new(p.x + self.origin.0 as f64, p.y + self.origin.1 as f64)
    }

    pub fn area(&self) -> usize {
        self.mask.count()
    }
}

/// Background with the objects removed, plus the object layers in label order.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub background: Image,
    pub layers: Vec<Layer>,
}

impl Scene {
    pub fn dimensions(&self) -> (usize, usize) {
        self.background.dimensions()
    }

    pub fn layer(&self, label: u8) -> Option<&Layer> {
        self.layers.iter().find(|l| l.label == label)
    }
}

/// Separates `img` into an inpainted background and one cropped layer per
/// object label of `mask`.
pub fn split_scene(img: &Image, mask: &LabelMask, config: &DreamConfig) -> Result<Scene> {
    check_dims(img.dimensions(), mask.dimensions())?;
    let (w, h) = img.dimensions();
    let union = mask.foreground();
    let covered = union.count() as f64 / (w * h) as f64;
    if covered > config.max_object_fraction {
        return Err(Error::ObjectTooLarge {
            percent: 100.0 * covered,
        });
    }
    let layers = mask
        .object_labels()
        .into_iter()
        .map(|label| {
            let support = mask.object(label);
            let (bx0, by0, bx1, by1) = support.bounding_box().expect("label is present");
            let (x0, y0) = (
                bx0.saturating_sub(CROP_MARGIN),
                by0.saturating_sub(CROP_MARGIN),
            );
            let (x1, y1) = (
                (bx1 + CROP_MARGIN).min(w - 1),
                (by1 + CROP_MARGIN).min(h - 1),
            );
            let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
            Layer {
                label,
                image: img.crop(x0, y0, cw, ch),
                mask: Bitmap::from_fn(cw, ch, |x, y| support.get(x0 + x, y0 + y)),
                origin: (x0, y0),
            }
        })
        .collect();
    let background = if union.is_empty() {
        img.clone()
    } else {
        inpaint(img, &dilate(&union, config.hole_dilation), &config.inpaint)?
    };
    Ok(Scene { background, layers })
}
