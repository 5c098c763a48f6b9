use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Determinant magnitude below which a map counts as non-invertible.
pub const MIN_DETERMINANT: f64 = 1e-9;

/// `p' = L p + t` with `matrix = [[l00, l01, tx], [l10, l11, ty]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: [[f64; 3]; 2],
}

impl Default for AffineMap {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineMap {
    pub const fn identity() -> Self {
        Self {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        }
    }

    pub const fn translation(tx: f64, ty: f64) -> Self {
        Self {
            matrix: [[1.0, 0.0, tx], [0.0, 1.0, ty]],
        }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.matrix;
        Point::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    /// Applies only the linear part (for displacement vectors).
    #[inline]
    pub fn apply_linear(&self, v: Point) -> Point {
        let m = &self.matrix;
        Point::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `self` followed by `next`: `(self.then(next)).apply(p) == next.apply(self.apply(p))`.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        let a = &next.matrix;
        let b = &self.matrix;
        let mut m = [[0.0; 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            m[r][2] += a[r][2];
        }
        AffineMap { matrix: m }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let det = self.determinant();
        if det.abs() <= MIN_DETERMINANT || !det.is_finite() {
            return Err(Error::Singular(format!(
                "affine map has determinant {det:e}"
            )));
        }
        let m = &self.matrix;
        let (a, b, c, d) = (m[1][1] / det, -m[0][1] / det, -m[1][0] / det, m[0][0] / det);
        let tx = -(a * m[0][2] + b * m[1][2]);
        let ty = -(c * m[0][2] + d * m[1][2]);
        Ok(AffineMap {
            matrix: [[a, b, tx], [c, d, ty]],
        })
    }
}

/// Rotation by `rotation_deg` and isotropic `scale` about `center`, followed
/// by a translation.
pub fn affine_from_params(
    center: Point,
    rotation_deg: f64,
    scale: f64,
    translation: Point,
) -> Result<AffineMap> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let (sin, cos) = rotation_deg.to_radians().sin_cos();
    let (l00, l01, l10, l11) = (scale * cos, -scale * sin, scale * sin, scale * cos);
    let tx = center.x - (l00 * center.x + l01 * center.y) + translation.x;
    let ty = center.y - (l10 * center.x + l11 * center.y) + translation.y;
    Ok(AffineMap {
        matrix: [[l00, l01, tx], [l10, l11, ty]],
    })
}
