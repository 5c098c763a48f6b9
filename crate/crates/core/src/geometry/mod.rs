//! Spatial transforms and raster resampling.
//!
//! Coordinates follow the raster convention: x to the right, y downwards,
//! pixel centers at integer positions. A positive rotation angle turns the
//! +x axis towards +y, i.e. `(1, 0)` rotated by 90 degrees about the origin is
//! `(0, 1)` (clockwise on screen).

mod affine;
mod chain;
mod tps;
mod warp;

pub use self::affine::{affine_from_params, AffineMap};
pub use self::chain::{ChainInverse, InverseOptions, Stage, WarpChain};
pub use self::tps::{tps_fit, tps_kernel, TpsWarp};
pub use self::warp::{
    sample_bilinear, sample_nearest, warp_image, warp_image_to, warp_mask, warp_mask_to, Boundary,
    Sampling,
};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}
