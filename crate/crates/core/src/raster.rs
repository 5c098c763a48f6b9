//! In-memory raster types.
//!
//! All rasters are row-major with the origin at the top-left pixel. Pixel
//! centers sit at integer coordinates: pixel `(x, y)` covers
//! `[x - 0.5, x + 0.5) x [y - 0.5, y + 0.5)`, x grows to the right and y grows
//! downwards.

use crate::error::{Error, Result};

/// Largest object label a [`LabelMask`] can hold.
pub const MAX_LABEL: u8 = 255;

/// Floating point image with unit-interval intensities.
///
/// One channel (gray) or three channels (RGB, interleaved).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![value.clamp(0.0, 1.0); width * height * channels],
        }
    }

    /// Builds an image from raw data. Values are clamped into `[0, 1]`; NaN is rejected.
    pub fn from_vec(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f32>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "image data has {} values, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("image data contains NaN".into()));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Self::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    img.set(x, y, c, f(x, y, c));
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sets one sample, clamping into the unit interval.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        self.data[(y * self.width + x) * self.channels + c] = value.clamp(0.0, 1.0);
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, values: &[f32]) {
        debug_assert_eq!(values.len(), self.channels);
        for (c, v) in values.iter().enumerate() {
            self.set(x, y, c, *v);
        }
    }

    /// Copies a rectangular window. The window must lie inside the image.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Image {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        Image::from_fn(width, height, self.channels, |x, y, c| {
            self.get(x0 + x, y0 + y, c)
        })
    }

    /// Replicates a gray channel into three; color images are returned as is.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        Image::from_fn(self.width, self.height, 3, |x, y, _| self.get(x, y, 0))
    }
}

/// Binary raster used for holes, regions and single-object views.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Like [`Bitmap::get`] but `false` outside the raster.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Iterates over the coordinates of set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for (x, y) in self.iter_set() {
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bbox
    }

    pub fn union(&self, other: &Bitmap) -> Bitmap {
        assert_eq!(self.dimensions(), other.dimensions());
        Bitmap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Bitmap) -> Bitmap {
        assert_eq!(self.dimensions(), other.dimensions());
        Bitmap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn difference(&self, other: &Bitmap) -> Bitmap {
        assert_eq!(self.dimensions(), other.dimensions());
        Bitmap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a && !*b)
                .collect(),
        }
    }
}

/// Per-pixel object identifiers: 0 is background, `1..=N` are object instances.
///
/// Multi-object annotations are one integer plane; [`LabelMask::object`]
/// gives the binary view of a single instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask has {} labels, expected {}",
                labels.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            labels,
        }
    }

    /// Labels every set pixel of `bitmap` with `label`.
    pub fn from_bitmap(bitmap: &Bitmap, label: u8) -> Self {
        Self::from_fn(bitmap.width(), bitmap.height(), |x, y| {
            if bitmap.get(x, y) {
                label
            } else {
                0
            }
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        self.labels[y * self.width + x] = label;
    }

    /// Largest label present (0 when the mask is all background).
    pub fn max_label(&self) -> u8 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Sorted distinct non-background labels.
    pub fn object_labels(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (1..=MAX_LABEL).filter(|&l| seen[l as usize]).collect()
    }

    /// Pixel count per label, indexed by label.
    pub fn histogram(&self) -> [usize; 256] {
        let mut hist = [0usize; 256];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Binary view of one object.
    pub fn object(&self, label: u8) -> Bitmap {
        Bitmap::from_fn(self.width, self.height, |x, y| self.get(x, y) == label)
    }

    /// Union of all objects.
    pub fn foreground(&self) -> Bitmap {
        Bitmap::from_fn(self.width, self.height, |x, y| self.get(x, y) != 0)
    }

    /// One binary plane per object label `1..=max_label`.
    pub fn to_binary_planes(&self) -> Vec<Bitmap> {
        (1..=self.max_label()).map(|l| self.object(l)).collect()
    }

    /// Inverse of [`LabelMask::to_binary_planes`]. Planes must be pairwise
    /// disjoint; plane `i` becomes label `i + 1`.
    pub fn from_binary_planes(planes: &[Bitmap]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Empty("no binary planes".into()))?;
        if planes.len() > MAX_LABEL as usize {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_LABEL} objects are supported, got {}",
                planes.len()
            )));
        }
        let (w, h) = first.dimensions();
        let mut mask = LabelMask::new(w, h);
        for (i, plane) in planes.iter().enumerate() {
            if plane.dimensions() != (w, h) {
                return Err(Error::Dimensions {
                    expected: (w, h),
                    found: plane.dimensions(),
                });
            }
            for (x, y) in plane.iter_set() {
                if mask.get(x, y) != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "planes overlap at ({x}, {y})"
                    )));
                }
                mask.set(x, y, (i + 1) as u8);
            }
        }
        Ok(mask)
    }
}

/// Dense displacement field in pixels, from frame `t - 1` to frame `t` unless
/// stated otherwise by the producer.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vectors: vec![[0.0, 0.0]; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        Self {
            width,
            height,
            vectors: vec![[u, v]; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, vectors: Vec<[f32; 2]>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "flow has {} vectors, expected {}",
                vectors.len(),
                width * height
            )));
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "flow contains non-finite values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            vectors,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 2],
    ) -> Self {
        let mut vectors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                vectors.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            vectors,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn vectors(&self) -> &[[f32; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 2] {
        self.vectors[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, uv: [f32; 2]) {
        debug_assert!(uv[0].is_finite() && uv[1].is_finite());
        self.vectors[y * self.width + x] = uv;
    }
}

pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected != found {
        return Err(Error::Dimensions { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_values_are_clamped() {
        let img = Image::from_vec(2, 1, 1, vec![-0.5, 1.5]).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
        assert!(Image::from_vec(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(Image::from_vec(1, 1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn binary_planes_round_trip() {
        let mask = LabelMask::from_fn(6, 4, |x, _| (x % 3) as u8);
        let planes = mask.to_binary_planes();
        assert_eq!(planes.len(), 2);
        assert!(planes[0].intersection(&planes[1]).is_empty());
        assert_eq!(LabelMask::from_binary_planes(&planes).unwrap(), mask);
    }

    #[test]
    fn overlapping_planes_are_rejected() {
        let a = Bitmap::from_fn(3, 3, |x, _| x < 2);
        let b = Bitmap::from_fn(3, 3, |x, _| x > 0);
        assert!(LabelMask::from_binary_planes(&[a, b]).is_err());
    }

    #[test]
    fn bounding_box_of_empty_bitmap_is_none() {
        assert_eq!(Bitmap::new(4, 4).bounding_box(), None);
        let b = Bitmap::from_fn(5, 5, |x, y| (1..=2).contains(&x) && y == 3);
        assert_eq!(b.bounding_box(), Some((1, 3, 2, 3)));
    }

    #[test]
    fn flow_rejects_non_finite() {
        assert!(FlowField::from_vec(1, 1, vec![[f32::INFINITY, 0.0]]).is_err());
    }
}
