//! Seamless cloning by solving a discrete Poisson equation.
//!
//! Inside the region `R` the output `f` satisfies the 5-point equation
//!
//! ```text
//! 4 f_p - sum_{q in N(p), q in R} f_q = sum_{q in N(p), q not in R} bg_q + sum_{q in N(p)} (fg_p - fg_q)
//! ```
//!
//! i.e. the Laplacian of `f` matches the Laplacian of the foreground and `f`
//! equals the background on the pixels bordering `R`. The system matrix is
//! symmetric positive definite, so it is solved with conjugate gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_dims, Bitmap, Image};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoissonOptions {
    /// Stop once `||A f - b||_2 <= tolerance * ||b||_2`.
    pub tolerance: f64,
    /// Iteration cap is `ceil(iteration_factor * sqrt(unknowns))`.
    pub iteration_factor: f64,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            iteration_factor: 10.0,
        }
    }
}

/// The assembled linear system for one region.
#[derive(Clone, Debug)]
pub struct PoissonSystem {
    /// Region pixels in row-major order; unknown `i` is `pixels[i]`.
    pub pixels: Vec<(usize, usize)>,
    /// For each unknown, the indices of its in-region 4-neighbours.
    pub neighbours: Vec<Vec<usize>>,
    /// Right-hand side per channel.
    pub rhs: Vec<Vec<f64>>,
    /// Foreground values per channel, used as the initial guess.
    guess: Vec<Vec<f64>>,
}

impl PoissonSystem {
    pub fn unknowns(&self) -> usize {
        self.pixels.len()
    }

    /// `A x` for the 5-point operator restricted to the region.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.neighbours
            .iter()
            .enumerate()
            .map(|(i, nb)| 4.0 * x[i] - nb.iter().map(|&j| x[j]).sum::<f64>())
            .collect()
    }

    /// `max_i |(A x - b)_i|` for one channel.
    pub fn residual_inf(&self, x: &[f64], channel: usize) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.rhs[channel])
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Drops region pixels on the outermost image rows and columns, so every
/// region pixel has four in-image neighbours.
fn interior_region(region: &Bitmap) -> Bitmap {
    let (w, h) = region.dimensions();
    Bitmap::from_fn(w, h, |x, y| {
        region.get(x, y) && x > 0 && y > 0 && x + 1 < w && y + 1 < h
    })
}

/// Assembles the system for `fg` blended into `bg` over `region`.
pub fn poisson_system(fg: &Image, region: &Bitmap, bg: &Image) -> Result<PoissonSystem> {
    check_dims(bg.dimensions(), fg.dimensions())?;
    check_dims(bg.dimensions(), region.dimensions())?;
    if fg.channels() != bg.channels() {
        return Err(Error::InvalidArgument(format!(
            "foreground has {} channels, background {}",
            fg.channels(),
            bg.channels()
        )));
    }
    let region = interior_region(region);
    let (w, h) = region.dimensions();
    let pixels: Vec<(usize, usize)> = region.iter_set().collect();
    let mut index = vec![usize::MAX; w * h];
    for (i, &(x, y)) in pixels.iter().enumerate() {
        index[y * w + x] = i;
    }
    let channels = fg.channels();
    let mut neighbours = Vec::with_capacity(pixels.len());
    let mut rhs = vec![vec![0.0; pixels.len()]; channels];
    let mut guess = vec![vec![0.0; pixels.len()]; channels];
    for (i, &(x, y)) in pixels.iter().enumerate() {
        let nbs = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)];
        let mut inside = Vec::with_capacity(4);
        for &(nx, ny) in &nbs {
            let j = index[ny * w + nx];
            if j != usize::MAX {
                inside.push(j);
            }
        }
        for c in 0..channels {
            let fp = fg.get(x, y, c) as f64;
            let mut b = 0.0;
            for &(nx, ny) in &nbs {
                b += fp - fg.get(nx, ny, c) as f64;
                if index[ny * w + nx] == usize::MAX {
                    b += bg.get(nx, ny, c) as f64;
                }
            }
            rhs[c][i] = b;
            guess[c][i] = fp;
        }
        neighbours.push(inside);
    }
    Ok(PoissonSystem {
        pixels,
        neighbours,
        rhs,
        guess,
    })
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub system: PoissonSystem,
    /// Unclamped solution per channel, aligned with `system.pixels`.
    pub values: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(
    system: &PoissonSystem,
    b: &[f64],
    mut x: Vec<f64>,
    options: &PoissonOptions,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let cap = (options.iteration_factor * (n as f64).sqrt()).ceil() as usize;
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return (vec![0.0; n], 0);
    }
    let target = options.tolerance * b_norm;
    let ax = system.apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < cap && rr.sqrt() > target {
        let ap = system.apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        iterations += 1;
    }
    (x, iterations)
}

/// Solves the blending system without writing an image.
pub fn solve_poisson(
    fg: &Image,
    region: &Bitmap,
    bg: &Image,
    options: &PoissonOptions,
) -> Result<PoissonSolution> {
    let system = poisson_system(fg, region, bg)?;
    let mut values = Vec::with_capacity(system.rhs.len());
    let mut iterations = Vec::with_capacity(system.rhs.len());
    for c in 0..system.rhs.len() {
        let (x, it) = conjugate_gradient(&system, &system.rhs[c], system.guess[c].clone(), options);
        values.push(x);
        iterations.push(it);
    }
    Ok(PoissonSolution {
        system,
        values,
        iterations,
    })
}

/// Composites `fg` into `bg` over `region`. Pixels outside the region (and
/// region pixels on the image border) are copied from `bg` unchanged; the
/// blended values are clamped into `[0, 1]`.
pub fn poisson_blend(
    fg: &Image,
    region: &Bitmap,
    bg: &Image,
    options: &PoissonOptions,
) -> Result<Image> {
    let solution = solve_poisson(fg, region, bg, options)?;
    let mut out = bg.clone();
    for (i, &(x, y)) in solution.system.pixels.iter().enumerate() {
        for (c, channel) in solution.values.iter().enumerate() {
            out.set(x, y, c, channel[i] as f32);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn centered_square(n: usize, side: usize) -> Bitmap {
        let lo = (n - side) / 2;
        Bitmap::from_fn(n, n, |x, y| {
            (lo..lo + side).contains(&x) && (lo..lo + side).contains(&y)
        })
    }

    #[test]
    fn identical_images_reproduce_background() {
        let bg = Image::from_fn(20, 20, 3, |x, y, c| {
            ((x * 3 + y * 5 + c) % 11) as f32 / 10.0
        });
        let out = poisson_blend(
            &bg,
            &centered_square(20, 10),
            &bg,
            &PoissonOptions::default(),
        )
        .unwrap();
        for (a, b) in out.data().iter().zip(bg.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn constant_foreground_gives_harmonic_constant() {
        let fg = Image::filled(25, 25, 1, 0.9);
        let bg = Image::filled(25, 25, 1, 0.3);
        let out = poisson_blend(
            &fg,
            &centered_square(25, 11),
            &bg,
            &PoissonOptions::default(),
        )
        .unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.3).abs() <= 1e-6));
    }

    #[test]
    fn outside_region_is_background_exactly() {
        let mut rng = SeededRng::new(2, 0);
        let fg = Image::from_fn(17, 17, 3, |_, _, _| rng.uniform(0.0, 1.0) as f32);
        let bg = Image::from_fn(17, 17, 3, |_, _, _| rng.uniform(0.0, 1.0) as f32);
        let region = centered_square(17, 7);
        let out = poisson_blend(&fg, &region, &bg, &PoissonOptions::default()).unwrap();
        for y in 0..17 {
            for x in 0..17 {
                if !region.get(x, y) {
                    assert_eq!(out.pixel(x, y), bg.pixel(x, y));
                }
            }
        }
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn residual_is_within_bound() {
        let mut rng = SeededRng::new(3, 0);
        let fg = Image::from_fn(40, 40, 3, |_, _, _| rng.uniform(0.0, 1.0) as f32);
        let bg = Image::from_fn(40, 40, 3, |_, _, _| rng.uniform(0.0, 1.0) as f32);
        let region = Bitmap::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 18.0);
            dx * dx + dy * dy < 150.0
        });
        let sol = solve_poisson(&fg, &region, &bg, &PoissonOptions::default()).unwrap();
        for c in 0..3 {
            assert!(sol.system.residual_inf(&sol.values[c], c) <= 1e-4);
        }
    }

    #[test]
    fn border_pixels_are_excluded_from_the_region() {
        let region = Bitmap::from_fn(10, 10, |x, _| x < 4);
        let img = Image::filled(10, 10, 1, 0.5);
        let sys = poisson_system(&img, &region, &img).unwrap();
        assert!(sys.pixels.iter().all(|&(x, y)| x > 0 && y > 0 && y < 9));
        assert_eq!(sys.unknowns(), 3 * 8);
    }

    #[test]
    fn empty_region_returns_background() {
        let bg = Image::filled(8, 8, 3, 0.4);
        let fg = Image::filled(8, 8, 3, 0.9);
        let out = poisson_blend(&fg, &Bitmap::new(8, 8), &bg, &PoissonOptions::default()).unwrap();
        assert_eq!(out, bg);
    }
}
