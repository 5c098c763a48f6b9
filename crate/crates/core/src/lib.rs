//! Synthetic training pairs for video object segmentation.
//!
//! A [`dreamer::Dreamer`] turns one annotated frame into image pairs with
//! exact masks, optical flow and occlusion maps. The other modules hold mask
//! propagation along flow, benchmark scoring, a refinement grid search and
//! the file formats they use.

pub mod appearance;
pub mod dreamer;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod morphology;
pub mod propagation;
pub mod raster;
pub mod rng;
pub mod tuner;

pub use error::{Error, Result};
pub use raster::{Bitmap, FlowField, Image, LabelMask};
pub use rng::SeededRng;
