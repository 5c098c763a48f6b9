use std::path::Path;

use serde::{Deserialize, Serialize};

use super::compose::compose_frame;
use super::flow::synthesize_flows;
use super::params::{sample_dream_params, DreamParams};
use super::scene::{split_scene, Scene};
use super::DreamConfig;
use crate::error::{Error, Result};
use crate::evaluation::iou;
use crate::geometry::{sample_bilinear, Boundary, Point};
use crate::io::{create_parent, write_bitmap, write_flo, write_image, write_label_mask};
use crate::propagation::warp_mask_with_flow;
use crate::raster::{Bitmap, FlowField, Image, LabelMask};
use crate::rng::SeededRng;

/// One synthesized frame pair with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct DreamSample {
    pub seed: u64,
    pub stream: u64,
    pub image_prev: Image,
    pub image_next: Image,
    pub mask_prev: LabelMask,
    pub mask_next: LabelMask,
    /// Depth rank of the winning layer per pixel, see
    /// [`ComposedFrame::provenance`](super::ComposedFrame::provenance).
    pub provenance_prev: LabelMask,
    pub provenance_next: LabelMask,
    /// First frame to second frame.
    pub flow: FlowField,
    /// Object pixels of the first frame hidden in the second.
    pub occlusion: Bitmap,
    /// Second frame to first frame.
    pub backward_flow: FlowField,
    pub disocclusion: Bitmap,
    pub params: DreamParams,
}

/// File names inside a sample directory.
pub const IMAGE_PREV: &str = "im_prev.png";
pub const IMAGE_NEXT: &str = "im_next.png";
pub const MASK_PREV: &str = "mask_prev.png";
pub const MASK_NEXT: &str = "mask_next.png";
pub const FLOW: &str = "flow.flo";
pub const OCCLUSION: &str = "occl.png";

/// Summary numbers stored next to each sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Median of `|I_prev(p) - I_next(p + F(p))|` over visible object pixels.
    pub median_photometric_error: Option<f64>,
    pub occluded_pixels: usize,
    /// Per-object IoU of the transported first-frame mask, see
    /// [`DreamSample::mask_transport`].
    pub mask_transport_iou: Vec<(u8, f64)>,
}

impl DreamSample {
    /// Object pixels of the first frame that stay visible in the second.
    pub fn visible_object_pixels(&self) -> Vec<(usize, usize)> {
        self.mask_prev
            .foreground()
            .difference(&self.occlusion)
            .iter_set()
            .collect()
    }

    /// Median absolute color difference between each visible object pixel of
    /// the first frame and the bilinear sample at its flow target, averaged
    /// over channels. `None` without visible object pixels.
    pub fn warp_consistency(&self) -> Option<f64> {
        let channels = self.image_prev.channels();
        let mut errors: Vec<f64> = self
            .visible_object_pixels()
            .into_iter()
            .map(|(x, y)| {
                let [u, v] = self.flow.get(x, y);
                let q = Point::new(x as f64 + u as f64, y as f64 + v as f64);
                (0..channels)
                    .map(|c| {
                        (self.image_prev.get(x, y, c)
                            - sample_bilinear(&self.image_next, q, c, Boundary::Clamp))
                        .abs() as f64
                    })
                    .sum::<f64>()
                    / channels as f64
            })
            .collect();
        if errors.is_empty() {
            return None;
        }
        errors.sort_by(f64::total_cmp);
        let n = errors.len();
        Some(if n % 2 == 1 {
            errors[n / 2]
        } else {
            (errors[n / 2 - 1] + errors[n / 2]) / 2.0
        })
    }

    /// Carries the first mask into the second frame along the backward flow
    /// and compares it per object with the second mask, ignoring pixels
    /// disoccluded in the second frame.
    pub fn mask_transport(&self) -> Result<Vec<(u8, f64)>> {
        let moved = warp_mask_with_flow(&self.mask_prev, &self.backward_flow)?;
        let keep = |m: &LabelMask, label: u8| m.object(label).difference(&self.disocclusion);
        self.params
            .depth_order
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|label| {
                Ok((
                    label,
                    iou(&keep(&moved, label), &keep(&self.mask_next, label))?,
                ))
            })
            .collect()
    }

    pub fn stats(&self) -> Result<SampleStats> {
        Ok(SampleStats {
            median_photometric_error: self.warp_consistency(),
            occluded_pixels: self.occlusion.count(),
            mask_transport_iou: self.mask_transport()?,
        })
    }

    /// Writes the six raster files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_parent(&dir.join(IMAGE_PREV))?;
        write_image(&self.image_prev, dir.join(IMAGE_PREV))?;
        write_image(&self.image_next, dir.join(IMAGE_NEXT))?;
        write_label_mask(&self.mask_prev, dir.join(MASK_PREV))?;
        write_label_mask(&self.mask_next, dir.join(MASK_NEXT))?;
        write_flo(&self.flow, dir.join(FLOW))?;
        write_bitmap(&self.occlusion, dir.join(OCCLUSION))
    }
}

/// Synthesizer bound to one annotated frame. The scene split (including the
/// inpainting) happens once, in [`Dreamer::new`].
#[derive(Clone, Debug)]
pub struct Dreamer {
    scene: Scene,
    config: DreamConfig,
}

impl Dreamer {
    pub fn new(frame: &Image, mask: &LabelMask, config: DreamConfig) -> Result<Self> {
        config.validate()?;
        if mask.object_labels().is_empty() {
            return Err(Error::Empty("annotation has no object labels".into()));
        }
        let scene = split_scene(&frame.to_rgb(), mask, &config)?;
        Ok(Self { scene, config })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn config(&self) -> &DreamConfig {
        &self.config
    }

    /// Draws parameters from `rng` and renders the pair.
    pub fn sample(&self, rng: &mut SeededRng) -> Result<DreamSample> {
        let params = sample_dream_params(rng, &self.scene, &self.config)?;
        self.render(params, rng.seed(), rng.stream())
    }

    /// Sample for a given seed and stream.
    pub fn sample_at(&self, seed: u64, stream: u64) -> Result<DreamSample> {
        self.sample(&mut SeededRng::new(seed, stream))
    }

    /// Renders a pair from an explicit parameter record.
    pub fn render(&self, params: DreamParams, seed: u64, stream: u64) -> Result<DreamSample> {
        let prev = compose_frame(&self.scene, &params.prev, &params.depth_order, &self.config)?;
        let next = compose_frame(&self.scene, &params.next, &params.depth_order, &self.config)?;
        let flows = synthesize_flows(
            &params,
            &prev.mask,
            &prev.provenance,
            &next.mask,
            &next.provenance,
        )?;
        Ok(DreamSample {
            seed,
            stream,
            image_prev: prev.image,
            image_next: next.image,
            mask_prev: prev.mask,
            mask_next: next.mask,
            provenance_prev: prev.provenance,
            provenance_next: next.provenance,
            flow: flows.forward,
            occlusion: flows.occlusion,
            backward_flow: flows.backward,
            disocclusion: flows.disocclusion,
            params,
        })
    }
}

/// One-off pair generation; prefer [`Dreamer`] for many samples of the same frame.
pub fn generate_pair(
    frame: &Image,
    mask: &LabelMask,
    config: &DreamConfig,
    rng: &mut SeededRng,
) -> Result<DreamSample> {
    Dreamer::new(frame, mask, config.clone())?.sample(rng)
}
