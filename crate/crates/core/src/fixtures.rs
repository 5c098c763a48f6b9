//! Deterministic synthetic scenes for tests, benchmarks and documentation.
//!
//! Backgrounds are sums of low-frequency sinusoids; objects are ellipses
//! with their own base color and a finer texture, so both smooth and
//! structured regions are present.

use crate::raster::{Image, LabelMask};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug)]
struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amplitude: f64,
}

impl Wave {
    fn at(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (self.fx * x + self.fy * y + self.phase).sin()
    }
}

fn waves(rng: &mut SeededRng, count: usize, period: (f64, f64), amplitude: f64) -> Vec<Wave> {
    (0..count)
        .map(|_| {
            let p = rng.uniform(period.0, period.1);
            let angle = rng.uniform(0.0, std::f64::consts::TAU);
            let k = std::f64::consts::TAU / p;
            Wave {
                fx: k * angle.cos(),
                fy: k * angle.sin(),
                phase: rng.uniform(0.0, std::f64::consts::TAU),
                amplitude,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
        (u / self.rx).powi(2) + (v / self.ry).powi(2) <= 1.0
    }
}

/// A `width x height` RGB frame with `objects` elliptical objects (labels
/// `1..=objects`, later labels drawn on top) over a smooth background.
pub fn synthetic_scene(width: usize, height: usize, objects: u8, seed: u64) -> (Image, LabelMask) {
    let mut rng = SeededRng::new(seed, u64::MAX);
    let side = width.min(height) as f64;
    let bg: Vec<Vec<Wave>> = (0..3)
        .map(|_| waves(&mut rng, 3, (1.5 * side, 3.0 * side), 0.06))
        .collect();
    let bg_base: Vec<f64> = (0..3).map(|_| rng.uniform(0.35, 0.55)).collect();
    let shapes: Vec<(Ellipse, [f64; 3], Vec<Wave>)> = (0..objects)
        .map(|_| {
            let rx = rng.uniform(0.10, 0.18) * side;
            let ry = rng.uniform(0.10, 0.18) * side;
            let margin = rx.max(ry) + 2.0;
            let ellipse = Ellipse {
                cx: rng.uniform(margin, width as f64 - margin),
                cy: rng.uniform(margin, height as f64 - margin),
                rx,
                ry,
                angle: rng.uniform(0.0, std::f64::consts::PI),
            };
            let color = [
                rng.uniform(0.2, 0.8),
                rng.uniform(0.2, 0.8),
                rng.uniform(0.2, 0.8),
            ];
            (
                ellipse,
                color,
                waves(&mut rng, 2, (0.15 * side, 0.3 * side), 0.08),
            )
        })
        .collect();
    let mut mask = LabelMask::new(width, height);
    for (i, (ellipse, _, _)) in shapes.iter().enumerate() {
        for y in 0..height {
            for x in 0..width {
                if ellipse.contains(x as f64, y as f64) {
                    mask.set(x, y, i as u8 + 1);
                }
            }
        }
    }
    let image = Image::from_fn(width, height, 3, |x, y, c| {
        let (fx, fy) = (x as f64, y as f64);
        let label = mask.get(x, y);
        let v = if label == 0 {
            bg_base[c] + bg[c].iter().map(|w| w.at(fx, fy)).sum::<f64>()
        } else {
            let (_, color, texture) = &shapes[label as usize - 1];
            color[c] + texture.iter().map(|w| w.at(fx, fy)).sum::<f64>()
        };
        v.clamp(0.0, 1.0) as f32
    });
    (image, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_labelled() {
        let (a, ma) = synthetic_scene(64, 48, 2, 3);
        let (b, mb) = synthetic_scene(64, 48, 2, 3);
        assert_eq!((a.clone(), ma.clone()), (b, mb));
        assert_eq!(a.dimensions(), (64, 48));
        assert!(!ma.object_labels().is_empty());
        assert!(ma.max_label() <= 2);
        let (c, _) = synthetic_scene(64, 48, 2, 4);
        assert_ne!(a, c);
    }
}
