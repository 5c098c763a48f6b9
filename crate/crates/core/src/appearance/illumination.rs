use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

/// Parameters of the power-law curve `x' = a * x^b + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlluminationParams {
    /// Gain.
    pub a: f64,
    /// Exponent.
    pub b: f64,
    /// Offset.
    pub c: f64,
}

impl Default for IlluminationParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl IlluminationParams {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 1.0,
        c: 0.0,
    };

    /// Applies the curve and clamps into `[0, 1]`.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (self.a * x.max(0.0).powf(self.b) + self.c).clamp(0.0, 1.0)
    }
}

/// Hexcone RGB to HSV; hue in `[0, 6)` sextants, saturation and value in `[0, 1]`.
#[inline]
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    (h, s, v)
}

#[inline]
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let c = v * s;
    let h = h.rem_euclid(6.0);
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    (r + m, g + m, b + m)
}

/// Global illumination change: the curves act independently on saturation
/// and value in HSV space; hue is left untouched.
pub fn perturb_illumination(
    img: &Image,
    saturation: IlluminationParams,
    value: IlluminationParams,
) -> Result<Image> {
    if img.channels() != 3 {
        return Err(Error::InvalidArgument(format!(
            "illumination perturbation needs an RGB image, got {} channels",
            img.channels()
        )));
    }
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.pixel(x, y);
            let (h, s, v) = rgb_to_hsv(p[0] as f64, p[1] as f64, p[2] as f64);
            let (r, g, b) = hsv_to_rgb(h, saturation.apply(s), value.apply(v));
            out.set_pixel(x, y, &[r as f32, g as f32, b as f32]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_params_round_trip() {
        let img = Image::from_fn(16, 16, 3, |x, y, c| {
            ((x * 13 + y * 7 + c * 29) % 64) as f32 / 63.0
        });
        let out = perturb_illumination(
            &img,
            IlluminationParams::IDENTITY,
            IlluminationParams::IDENTITY,
        )
        .unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn curve_matches_hand_evaluation() {
        let p = IlluminationParams {
            a: 1.05,
            b: 1.3,
            c: 0.07,
        };
        let expected = 1.05 * 0.5f64.powf(1.3) + 0.07;
        assert!((p.apply(0.5) - expected).abs() < 1e-12);
        assert!((p.apply(0.5) - 0.4964).abs() < 5e-5);
    }

    #[test]
    fn curve_clamps_at_one() {
        let p = IlluminationParams {
            a: 1.05,
            b: 1.0,
            c: 0.07,
        };
        assert_eq!(p.apply(1.0), 1.0);
    }

    #[test]
    fn value_channel_of_gray_pixel() {
        let img = Image::filled(1, 1, 3, 0.5);
        let v = IlluminationParams {
            a: 1.05,
            b: 1.3,
            c: 0.07,
        };
        let out = perturb_illumination(&img, IlluminationParams::IDENTITY, v).unwrap();
        let expected = (1.05 * 0.5f64.powf(1.3) + 0.07) as f32;
        assert!(out.data().iter().all(|&c| (c - expected).abs() < 1e-6));
    }

    #[test]
    fn gray_images_are_rejected() {
        assert!(
            perturb_illumination(&Image::new(2, 2, 1), Default::default(), Default::default())
                .is_err()
        );
    }

    proptest! {
        #[test]
        fn hue_is_preserved(
            r in 0.0f64..1.0, g in 0.0f64..1.0, b in 0.0f64..1.0,
            sa in 0.95f64..1.05, sb in 0.7f64..1.3, sc in -0.07f64..0.07,
            va in 0.95f64..1.05, vb in 0.7f64..1.3, vc in -0.07f64..0.07,
        ) {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let sp = IlluminationParams { a: sa, b: sb, c: sc };
            let vp = IlluminationParams { a: va, b: vb, c: vc };
            let (r2, g2, b2) = hsv_to_rgb(h, sp.apply(s), vp.apply(v));
            let (h2, s2, v2) = rgb_to_hsv(r2, g2, b2);
            // Hue is only defined for chromatic output pixels.
            if s2 > 1e-6 && v2 > 1e-6 && s > 1e-6 {
                let d = (h - h2).abs();
                prop_assert!(d.min(6.0 - d) < 1e-6, "hue {} -> {}", h, h2);
            }
        }

        #[test]
        fn curve_is_monotone(a in 0.95f64..1.05, b in 0.7f64..1.3, c in -0.07f64..0.07, x in 0.0f64..1.0, dx in 0.0f64..0.5) {
            let p = IlluminationParams { a, b, c };
            let raw = |x: f64| a * x.powf(b) + c;
            prop_assert!(raw(x + dx) >= raw(x));
            prop_assert!(p.apply(x + dx) >= p.apply(x));
        }

        #[test]
        fn hsv_round_trip(r in 0.0f64..1.0, g in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            prop_assert!((r - r2).abs() < 1e-12 && (g - g2).abs() < 1e-12 && (b - b2).abs() < 1e-12);
        }
    }
}
