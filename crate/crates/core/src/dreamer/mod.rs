//! Lucid-dream synthesis: one annotated frame in, frame pairs with exact
//! masks, flow and occlusion out.
//!
//! The pipeline splits the frame into an inpainted background and one layer
//! per object ([`split_scene`]), draws a parameter record
//! ([`sample_dream_params`]), renders both frames back to front with
//! Poisson blending ([`compose_frame`]) and derives the flow and occlusion
//! from the same transforms ([`synthesize_flow`]).

mod compose;
mod config;
mod dataset;
mod flow;
mod params;
mod sample;
mod scene;

pub use compose::{compose_frame, illuminate, render_layer, ComposedFrame, RenderedLayer};
pub use config::{DreamConfig, IlluminationRanges};
pub use dataset::{
    generate_dataset, sample_id, DatasetOptions, Manifest, ManifestRecord, SampleFiles,
    DEFAULT_COUNT, MANIFEST_FILE,
};
pub use flow::{synthesize_backward_flow, synthesize_flow, synthesize_flows, FlowSynthesis};
pub use params::{
    control_grid, object_chain, sample_dream_params, sample_illumination, visible_fraction,
    BackgroundPose, DreamParams, FrameIllumination, FrameParams, ObjectMotion, ObjectPose,
};
pub use sample::{
    generate_pair, DreamSample, Dreamer, SampleStats, FLOW, IMAGE_NEXT, IMAGE_PREV, MASK_NEXT,
    MASK_PREV, OCCLUSION,
};
pub use scene::{split_scene, Layer, ObjectBox, Scene, CROP_MARGIN};
