//! Exemplar-based hole filling in the style of Criminisi, Perez and Toyama.
//!
//! Repeatedly picks the fill-front pixel with the highest priority
//! `P(p) = C(p) * D(p)`, where the confidence `C(p)` is the mean confidence of
//! the patch around `p` and the data term `D(p) = |isophote(p) . n(p)|`
//! measures how strongly a linear structure flows into the hole. The patch is
//! then completed by copying from the known patch with the smallest sum of
//! squared differences over the already-known pixels, and the newly filled
//! pixels inherit `C(p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_dims, Bitmap, Image};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InpaintOptions {
    /// Odd patch side length, at least 3.
    pub patch_size: usize,
    /// Source patches are first searched in the band of this many patch radii
    /// around the hole; the whole image is used only if the band has none.
    pub search_band: usize,
}

impl Default for InpaintOptions {
    fn default() -> Self {
        Self {
            patch_size: 9,
            search_band: 4,
        }
    }
}

/// Keeps priorities positive on flat image regions.
const DATA_EPSILON: f64 = 1e-3;

struct Filler<'a> {
    img: Image,
    w: usize,
    h: usize,
    radius: usize,
    known: Vec<bool>,
    confidence: Vec<f64>,
    gray: Vec<f64>,
    source: &'a [usize],
}

impl Filler<'_> {
    fn patch_bounds(&self, cx: usize, cy: usize) -> (usize, usize, usize, usize) {
        let r = self.radius;
        (
            cx.saturating_sub(r),
            cy.saturating_sub(r),
            (cx + r).min(self.w - 1),
            (cy + r).min(self.h - 1),
        )
    }

    fn known_at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.w
            && (y as usize) < self.h
            && self.known[y as usize * self.w + x as usize]
    }

    fn is_front(&self, x: usize, y: usize) -> bool {
        if self.known[y * self.w + x] {
            return false;
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx != 0 || dy != 0) && self.known_at(x as i64 + dx, y as i64 + dy) {
                    return true;
                }
            }
        }
        false
    }

    /// Central-difference gradient of the gray image at a known pixel whose
    /// neighbours are known too.
    fn gradient(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        let (xi, yi) = (x as i64, y as i64);
        if !(self.known_at(xi - 1, yi)
            && self.known_at(xi + 1, yi)
            && self.known_at(xi, yi - 1)
            && self.known_at(xi, yi + 1))
        {
            return None;
        }
        let g = |x: usize, y: usize| self.gray[y * self.w + x];
        Some((
            (g(x + 1, y) - g(x - 1, y)) / 2.0,
            (g(x, y + 1) - g(x, y - 1)) / 2.0,
        ))
    }

    fn priority(&self, x: usize, y: usize) -> f64 {
        let (x0, y0, x1, y1) = self.patch_bounds(x, y);
        let side = 2 * self.radius + 1;
        let mut conf = 0.0;
        let mut best_iso = (0.0, 0.0);
        let mut best_mag = -1.0;
        for py in y0..=y1 {
            for px in x0..=x1 {
                if self.known[py * self.w + px] {
                    conf += self.confidence[py * self.w + px];
                    if let Some((gx, gy)) = self.gradient(px, py) {
                        let mag = gx * gx + gy * gy;
                        if mag > best_mag {
                            best_mag = mag;
                            // Isophote is the gradient rotated by 90 degrees.
                            best_iso = (-gy, gx);
                        }
                    }
                }
            }
        }
        let conf = conf / (side * side) as f64;

        // Front normal from a Sobel filter on the known-region indicator.
        let k = |dx: i64, dy: i64| -> f64 {
            if self.known_at(x as i64 + dx, y as i64 + dy) {
                1.0
            } else {
                0.0
            }
        };
        let nx = (k(1, -1) + 2.0 * k(1, 0) + k(1, 1)) - (k(-1, -1) + 2.0 * k(-1, 0) + k(-1, 1));
        let ny = (k(-1, 1) + 2.0 * k(0, 1) + k(1, 1)) - (k(-1, -1) + 2.0 * k(0, -1) + k(1, -1));
        let norm = nx.hypot(ny);
        let data = if norm > 0.0 {
            (best_iso.0 * nx + best_iso.1 * ny).abs() / norm
        } else {
            0.0
        };
        conf * (data + DATA_EPSILON)
    }

    /// Best source center for the patch at `(tx, ty)`; ties go to the first
    /// candidate in row-major order.
    fn best_source(&self, tx: usize, ty: usize, candidates: &[usize]) -> Option<(usize, usize)> {
        let (x0, y0, x1, y1) = self.patch_bounds(tx, ty);
        let channels = self.img.channels();
        let data = self.img.data();
        let mut best: Option<(f64, usize)> = None;
        'candidates: for &ci in candidates {
            let (cx, cy) = ((ci % self.w) as i64, (ci / self.w) as i64);
            let (ox, oy) = (cx - tx as i64, cy - ty as i64);
            let mut ssd = 0.0;
            let mut fills = false;
            for py in y0..=y1 {
                let sy = py as i64 + oy;
                for px in x0..=x1 {
                    let sx = px as i64 + ox;
                    let in_image =
                        sx >= 0 && sy >= 0 && (sx as usize) < self.w && (sy as usize) < self.h;
                    let ti = py * self.w + px;
                    if !self.known[ti] {
                        fills |= in_image;
                        continue;
                    }
                    if !in_image {
                        continue;
                    }
                    let si = sy as usize * self.w + sx as usize;
                    for c in 0..channels {
                        let d = (data[ti * channels + c] - data[si * channels + c]) as f64;
                        ssd += d * d;
                    }
                    if let Some((b, _)) = best {
                        if ssd >= b {
                            continue 'candidates;
                        }
                    }
                }
            }
            if fills && best.is_none_or(|(b, _)| ssd < b) {
                best = Some((ssd, ci));
            }
        }
        best.map(|(_, ci)| (ci % self.w, ci / self.w))
    }

    fn copy_patch(&mut self, tx: usize, ty: usize, sx: usize, sy: usize, conf: f64) -> usize {
        let (x0, y0, x1, y1) = self.patch_bounds(tx, ty);
        let (ox, oy) = (sx as i64 - tx as i64, sy as i64 - ty as i64);
        let mut filled = 0;
        for py in y0..=y1 {
            for px in x0..=x1 {
                let ti = py * self.w + px;
                if self.known[ti] {
                    continue;
                }
                let (qx, qy) = (px as i64 + ox, py as i64 + oy);
                if qx < 0 || qy < 0 || qx as usize >= self.w || qy as usize >= self.h {
                    continue;
                }
                let (qx, qy) = (qx as usize, qy as usize);
                let values = self.img.pixel(qx, qy).to_vec();
                self.img.set_pixel(px, py, &values);
                self.gray[ti] = self.gray[qy * self.w + qx];
                self.known[ti] = true;
                self.confidence[ti] = conf;
                filled += 1;
            }
        }
        filled
    }

    /// Averages the known 8-neighbours; used only when no source patch exists.
    fn diffuse(&mut self, x: usize, y: usize, conf: f64) {
        let channels = self.img.channels();
        let mut acc = vec![0.0f64; channels];
        let mut n = 0.0;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if (dx != 0 || dy != 0) && self.known_at(nx, ny) {
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += self.img.get(nx as usize, ny as usize, c) as f64;
                    }
                    n += 1.0;
                }
            }
        }
        let values: Vec<f32> = acc.iter().map(|a| (a / n) as f32).collect();
        self.img.set_pixel(x, y, &values);
        let i = y * self.w + x;
        self.gray[i] = luminance(self.img.pixel(x, y));
        self.known[i] = true;
        self.confidence[i] = conf;
    }
}

fn luminance(p: &[f32]) -> f64 {
    if p.len() == 3 {
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    } else {
        p[0] as f64
    }
}

/// Source patch centers whose in-image patch pixels are all outside the hole.
fn source_centers(hole: &Bitmap, radius: usize) -> Vec<bool> {
    let (w, h) = hole.dimensions();
    // Summed-area table of hole pixels.
    let mut sat = vec![0usize; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            sat[(y + 1) * (w + 1) + x + 1] =
                hole.get(x, y) as usize + sat[y * (w + 1) + x + 1] + sat[(y + 1) * (w + 1) + x]
                    - sat[y * (w + 1) + x];
        }
    }
    let boxed = |x0: usize, y0: usize, x1: usize, y1: usize| {
        sat[(y1 + 1) * (w + 1) + x1 + 1] + sat[y0 * (w + 1) + x0]
            - sat[y0 * (w + 1) + x1 + 1]
            - sat[(y1 + 1) * (w + 1) + x0]
    };
    let mut valid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let (x0, y0) = (x.saturating_sub(radius), y.saturating_sub(radius));
            let (x1, y1) = ((x + radius).min(w - 1), (y + radius).min(h - 1));
            valid[y * w + x] = boxed(x0, y0, x1, y1) == 0;
        }
    }
    valid
}

/// Fills every `hole` pixel of `img`; pixels outside the hole are untouched.
pub fn inpaint(img: &Image, hole: &Bitmap, options: &InpaintOptions) -> Result<Image> {
    check_dims(img.dimensions(), hole.dimensions())?;
    if options.patch_size < 3 || options.patch_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "patch size must be odd and at least 3, got {}",
            options.patch_size
        )));
    }
    let holes = hole.count();
    if holes == 0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dimensions();
    if holes == w * h {
        return Err(Error::HoleCoversImage);
    }
    let radius = options.patch_size / 2;

    let valid = source_centers(hole, radius);
    let band_reach = (options.search_band + 1) * radius;
    let near_hole = {
        let mut near = Bitmap::new(w, h);
        let (bx0, by0, bx1, by1) = hole.bounding_box().expect("hole is non-empty");
        let (x0, y0) = (
            bx0.saturating_sub(band_reach),
            by0.saturating_sub(band_reach),
        );
        let (x1, y1) = ((bx1 + band_reach).min(w - 1), (by1 + band_reach).min(h - 1));
        for (hx, hy) in hole.iter_set() {
            // Only hole pixels on the hole boundary matter for the band.
            let interior = (hx > 0 && hole.get(hx - 1, hy))
                && (hx + 1 < w && hole.get(hx + 1, hy))
                && (hy > 0 && hole.get(hx, hy - 1))
                && (hy + 1 < h && hole.get(hx, hy + 1));
            if interior {
                continue;
            }
            let (sx0, sy0) = (
                hx.saturating_sub(band_reach).max(x0),
                hy.saturating_sub(band_reach).max(y0),
            );
            let (sx1, sy1) = ((hx + band_reach).min(x1), (hy + band_reach).min(y1));
            for y in sy0..=sy1 {
                for x in sx0..=sx1 {
                    near.set(x, y, true);
                }
            }
        }
        near
    };
    let band: Vec<usize> = (0..w * h)
        .filter(|&i| valid[i] && near_hole.get(i % w, i / w))
        .collect();
    let everywhere: Vec<usize> = (0..w * h).filter(|&i| valid[i]).collect();
    let candidates: &[usize] = if band.is_empty() { &everywhere } else { &band };

    let known: Vec<bool> = hole.data().iter().map(|&b| !b).collect();
    let confidence: Vec<f64> = known.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
    let gray: Vec<f64> = (0..w * h)
        .map(|i| luminance(img.pixel(i % w, i / w)))
        .collect();
    let mut filler = Filler {
        img: img.clone(),
        w,
        h,
        radius,
        known,
        confidence,
        gray,
        source: candidates,
    };

    let (hx0, hy0, hx1, hy1) = hole.bounding_box().expect("hole is non-empty");
    let mut remaining = holes;
    let mut placements = 0;
    while remaining > 0 {
        let mut target: Option<(f64, usize, usize)> = None;
        for y in hy0..=hy1 {
            for x in hx0..=hx1 {
                if filler.is_front(x, y) {
                    let p = filler.priority(x, y);
                    if target.is_none_or(|(best, _, _)| p > best) {
                        target = Some((p, x, y));
                    }
                }
            }
        }
        let (_, tx, ty) = target.expect("unknown pixels always border known ones");
        let (x0, y0, x1, y1) = filler.patch_bounds(tx, ty);
        let side = (2 * radius + 1) as f64;
        let conf = (y0..=y1)
            .flat_map(|y| (x0..=x1).map(move |x| (x, y)))
            .filter(|&(x, y)| filler.known[y * w + x])
            .map(|(x, y)| filler.confidence[y * w + x])
            .sum::<f64>()
            / (side * side);
        let source = filler.source;
        match filler.best_source(tx, ty, source) {
            Some((sx, sy)) => remaining -= filler.copy_patch(tx, ty, sx, sy, conf),
            None => {
                filler.diffuse(tx, ty, conf);
                remaining -= 1;
            }
        }
        placements += 1;
        debug_assert!(placements <= holes);
    }
    Ok(filler.img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Bitmap {
        Bitmap::from_fn(w, h, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
    }

    #[test]
    fn empty_hole_is_a_no_op() {
        let img = Image::from_fn(10, 10, 3, |x, y, _| (x + y) as f32 / 20.0);
        let out = inpaint(&img, &Bitmap::new(10, 10), &InpaintOptions::default()).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn full_hole_is_an_error() {
        let img = Image::new(6, 6, 3);
        let hole = Bitmap::from_fn(6, 6, |_, _| true);
        assert!(matches!(
            inpaint(&img, &hole, &InpaintOptions::default()),
            Err(Error::HoleCoversImage)
        ));
    }

    #[test]
    fn constant_image_fills_with_the_constant() {
        let mut img = Image::filled(40, 30, 3, 0.35);
        let hole = rect(40, 30, 12, 8, 25, 20);
        for (x, y) in hole.iter_set() {
            img.set_pixel(x, y, &[1.0, 0.0, 0.5]);
        }
        let out = inpaint(&img, &hole, &InpaintOptions::default()).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.35));
    }

    #[test]
    fn two_tone_hole_takes_the_surrounding_tone() {
        // Left half dark, right half light; hole well inside the dark half.
        let mut img = Image::from_fn(60, 40, 3, |x, _, _| if x < 30 { 0.1 } else { 0.9 });
        let hole = rect(60, 40, 8, 14, 16, 26);
        for (x, y) in hole.iter_set() {
            img.set_pixel(x, y, &[0.5, 0.5, 0.5]);
        }
        let out = inpaint(
            &img,
            &hole,
            &InpaintOptions {
                patch_size: 5,
                search_band: 4,
            },
        )
        .unwrap();
        let dark = hole
            .iter_set()
            .filter(|&(x, y)| out.get(x, y, 0) == 0.1)
            .count();
        assert_eq!(dark, hole.count());
    }

    #[test]
    fn known_pixels_are_untouched_and_all_holes_filled() {
        let img = Image::from_fn(32, 32, 3, |x, y, c| {
            (((x * 5) ^ (y * 3)) % 13 + c) as f32 / 16.0
        });
        let hole = Bitmap::from_fn(32, 32, |x, y| {
            let (dx, dy) = (x as f64 - 15.0, y as f64 - 17.0);
            dx * dx + dy * dy < 40.0
        });
        let out = inpaint(&img, &hole, &InpaintOptions::default()).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                if !hole.get(x, y) {
                    assert_eq!(out.pixel(x, y), img.pixel(x, y));
                }
            }
        }
    }

    #[test]
    fn hole_touching_the_border_is_filled() {
        let img = Image::from_fn(20, 20, 1, |x, _, _| x as f32 / 19.0);
        let hole = rect(20, 20, 0, 0, 6, 20);
        let out = inpaint(
            &img,
            &hole,
            &InpaintOptions {
                patch_size: 3,
                search_band: 4,
            },
        )
        .unwrap();
        for (x, y) in hole.iter_set() {
            assert!(out.get(x, y, 0) >= 6.0 / 19.0 - 1e-6);
        }
    }
}
