use serde::{Deserialize, Serialize};

use crate::appearance::{InpaintOptions, PoissonOptions};
use crate::error::{Error, Result};
use crate::geometry::InverseOptions;

/// Half-widths of the illumination curve parameters around identity
/// (`a = 1 +- a`, `b = 1 +- b`, `c = 0 +- c`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IlluminationRanges {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for IlluminationRanges {
    fn default() -> Self {
        Self {
            a: 0.05,
            b: 0.3,
            c: 0.07,
        }
    }
}

/// Every knob of the synthesis, defaulting to the published ranges.
///
/// Lengths given as fractions refer to the object size (the larger side of
/// the object's bounding box) unless stated otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DreamConfig {
    pub illumination: IlluminationRanges,
    /// Draw separate illumination parameters for the two frames of a pair.
    pub illumination_per_frame: bool,
    /// How far the first-frame placement may move from the original
    /// position: 1 places the object center uniformly over the canvas, 0
    /// keeps it where it was annotated.
    pub placement: f64,
    /// Per-axis translation between the two frames.
    pub translation: f64,
    /// Rotation half-range in degrees, drawn independently per frame.
    pub rotation_deg: f64,
    /// Scale half-range around 1, drawn independently per frame.
    pub scale: f64,
    /// Per-axis displacement half-range of the spline control points.
    pub tps: f64,
    /// Control points per side of the spline grid.
    pub tps_grid: usize,
    pub background_rotation_deg: f64,
    pub background_scale: f64,
    /// Per-axis background shift between frames, as a fraction of the larger
    /// canvas side.
    pub background_translation: f64,
    /// Minimum fraction of each object's area that stays inside the canvas.
    pub visibility_floor: f64,
    pub max_placement_tries: usize,
    /// Dilation radius of the object union before inpainting the background.
    pub hole_dilation: usize,
    /// Objects covering more than this fraction of the frame are rejected.
    pub max_object_fraction: f64,
    pub inpaint: InpaintOptions,
    pub poisson: PoissonOptions,
    pub inverse: InverseOptions,
}

impl Default for DreamConfig {
    fn default() -> Self {
        Self {
            illumination: IlluminationRanges::default(),
            illumination_per_frame: false,
            placement: 1.0,
            translation: 0.10,
            rotation_deg: 30.0,
            scale: 0.15,
            tps: 0.10,
            tps_grid: 4,
            background_rotation_deg: 30.0,
            background_scale: 0.15,
            background_translation: 0.10,
            visibility_floor: 0.25,
            max_placement_tries: 100,
            hole_dilation: 5,
            max_object_fraction: 0.9,
            inpaint: InpaintOptions::default(),
            poisson: PoissonOptions::default(),
            inverse: InverseOptions::default(),
        }
    }
}

impl DreamConfig {
    /// No photometric or geometric change at all; useful as a baseline.
    pub fn zero_ranges() -> Self {
        Self {
            illumination: IlluminationRanges {
                a: 0.0,
                b: 0.0,
                c: 0.0,
            },
            placement: 0.0,
            translation: 0.0,
            rotation_deg: 0.0,
            scale: 0.0,
            tps: 0.0,
            background_rotation_deg: 0.0,
            background_scale: 0.0,
            background_translation: 0.0,
            ..Self::default()
        }
    }

    /// Checks every value against its hard bounds.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, value: f64, lo: f64, hi: f64| {
            if value.is_finite() && (lo..=hi).contains(&value) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} = {value} is outside [{lo}, {hi}]"
                )))
            }
        };
        check("illumination.a", self.illumination.a, 0.0, 0.5)?;
        check("illumination.b", self.illumination.b, 0.0, 0.9)?;
        check("illumination.c", self.illumination.c, 0.0, 0.5)?;
        check("placement", self.placement, 0.0, 1.0)?;
        check("translation", self.translation, 0.0, 1.0)?;
        check("rotation_deg", self.rotation_deg, 0.0, 180.0)?;
        check("scale", self.scale, 0.0, 0.9)?;
        check("tps", self.tps, 0.0, 0.25)?;
        check(
            "background_rotation_deg",
            self.background_rotation_deg,
            0.0,
            180.0,
        )?;
        check("background_scale", self.background_scale, 0.0, 0.9)?;
        check(
            "background_translation",
            self.background_translation,
            0.0,
            1.0,
        )?;
        check("visibility_floor", self.visibility_floor, 0.0, 1.0)?;
        check("max_object_fraction", self.max_object_fraction, 0.0, 1.0)?;
        check("poisson.tolerance", self.poisson.tolerance, 0.0, 1.0)?;
        check("inverse.tolerance", self.inverse.tolerance, 1e-9, 1.0)?;
        if self.tps_grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "tps_grid must be at least 2, got {}",
                self.tps_grid
            )));
        }
        if self.max_placement_tries == 0 {
            return Err(Error::InvalidArgument(
                "max_placement_tries must be positive".into(),
            ));
        }
        if self.inpaint.patch_size < 3 || self.inpaint.patch_size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "inpaint.patch_size must be odd and at least 3, got {}",
                self.inpaint.patch_size
            )));
        }
        Ok(())
    }
}
