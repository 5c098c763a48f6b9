//! Interpolating thin-plate splines.
//!
//! The warp is `f(p) = A p + sum_i w_i U(|p - c_i| / s)` with the radial
//! kernel `U(r) = r^2 log(r^2)`, an affine part `A` and one weight vector per
//! control point `c_i`. Distances are divided by the control-point spread `s`
//! before entering the kernel, which keeps the linear system well conditioned
//! for pixel-sized coordinates. Rescaling the kernel argument only adds a
//! quadratic term that the side conditions cancel, so the fitted warp is still
//! the minimum bending-energy interpolant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AffineMap, Point};
use crate::error::{Error, Result};

/// `U(r) = r^2 log(r^2)` expressed in terms of `r^2`, with `U(0) = 0`.
#[inline]
pub fn tps_kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpsWarp {
    /// Source-side control points.
    pub controls: Vec<Point>,
    /// Kernel coefficients, one `(wx, wy)` per control point.
    pub weights: Vec<Point>,
    /// Affine part in pixel coordinates.
    pub affine: AffineMap,
    /// Length that normalizes kernel distances.
    pub scale: f64,
}

impl TpsWarp {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let mut out = self.affine.apply(p);
        let inv_s2 = 1.0 / (self.scale * self.scale);
        for (c, w) in self.controls.iter().zip(&self.weights) {
            let (dx, dy) = (p.x - c.x, p.y - c.y);
            let u = tps_kernel((dx * dx + dy * dy) * inv_s2);
            out.x += w.x * u;
            out.y += w.y * u;
        }
        out
    }

    /// Bending energy `sum_x W^T K W`, finite for any successful fit.
    pub fn bending_energy(&self) -> f64 {
        let inv_s2 = 1.0 / (self.scale * self.scale);
        let mut e = 0.0;
        for (ci, wi) in self.controls.iter().zip(&self.weights) {
            for (cj, wj) in self.controls.iter().zip(&self.weights) {
                let u = tps_kernel(((ci.x - cj.x).powi(2) + (ci.y - cj.y).powi(2)) * inv_s2);
                e += u * (wi.x * wj.x + wi.y * wj.y);
            }
        }
        e
    }

    /// Euclidean norm of all kernel weights.
    pub fn weight_norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.x * w.x + w.y * w.y)
            .sum::<f64>()
            .sqrt()
    }
}

/// Fits the interpolating spline taking `src[i]` to `dst[i]`.
///
/// Needs at least three non-collinear, pairwise distinct source points.
pub fn tps_fit(src: &[Point], dst: &[Point]) -> Result<TpsWarp> {
    let n = src.len();
    if n != dst.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} source points but {} targets",
            dst.len()
        )));
    }
    if n < 3 {
        return Err(Error::Singular(format!(
            "thin-plate spline needs at least 3 control points, got {n}"
        )));
    }
    if src
        .iter()
        .chain(dst)
        .any(|p| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(Error::InvalidArgument("non-finite control point".into()));
    }

    let mean = Point::new(
        src.iter().map(|p| p.x).sum::<f64>() / n as f64,
        src.iter().map(|p| p.y).sum::<f64>() / n as f64,
    );
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in src {
        let (dx, dy) = (p.x - mean.x, p.y - mean.y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let scale = ((sxx + syy) / n as f64).sqrt();
    if scale == 0.0 {
        return Err(Error::Singular("all control points coincide".into()));
    }
    // Smallest eigenvalue of the scatter matrix relative to the largest.
    let tr = sxx + syy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    if (tr - disc) / (tr + disc) < 1e-12 {
        return Err(Error::Singular("control points are collinear".into()));
    }
    let min_sep = scale * 1e-9;
    for i in 0..n {
        for j in i + 1..n {
            if src[i].distance(src[j]) <= min_sep {
                return Err(Error::Singular(format!(
                    "duplicate control points {i} and {j}"
                )));
            }
        }
    }

    // Unknowns: n kernel weights, then the affine coefficients for
    // (1, x', y') with x' = (x - mean.x) / scale.
    let norm = |p: &Point| ((p.x - mean.x) / scale, (p.y - mean.y) / scale);
    let size = n + 3;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        let (xi, yi) = norm(&src[i]);
        for j in 0..n {
            let (xj, yj) = norm(&src[j]);
            a[(i, j)] = tps_kernel((xi - xj).powi(2) + (yi - yj).powi(2));
        }
        let row = [1.0, xi, yi];
        for (k, v) in row.iter().enumerate() {
            a[(i, n + k)] = *v;
            a[(n + k, i)] = *v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(size, 2);
    for (i, d) in dst.iter().enumerate() {
        rhs[(i, 0)] = d.x;
        rhs[(i, 1)] = d.y;
    }
    let lu = a.clone().lu();
    let solution = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("thin-plate system is singular".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "thin-plate solve produced non-finite values".into(),
        ));
    }
    // One step of iterative refinement squeezes the residual to round-off.
    let residual = &rhs - &a * &solution;
    let solution = match lu.solve(&residual) {
        Some(correction) => solution + correction,
        None => solution,
    };

    let weights: Vec<Point> = (0..n)
        .map(|i| Point::new(solution[(i, 0)], solution[(i, 1)]))
        .collect();
    // Affine part back in pixel coordinates.
    let coef = |col: usize| -> (f64, f64, f64) {
        let (c0, c1, c2) = (
            solution[(n, col)],
            solution[(n + 1, col)],
            solution[(n + 2, col)],
        );
        let (lx, ly) = (c1 / scale, c2 / scale);
        (lx, ly, c0 - lx * mean.x - ly * mean.y)
    };
    let (a00, a01, a02) = coef(0);
    let (a10, a11, a12) = coef(1);
    Ok(TpsWarp {
        controls: src.to_vec(),
        weights,
        affine: AffineMap {
            matrix: [[a00, a01, a02], [a10, a11, a12]],
        },
        scale,
    })
}
