//! Ground-truth motion between the two frames of a dream pair.
//!
//! Flow is gathered per pixel of the source frame: an object pixel `p` of
//! label `k` is pulled back to crop coordinates with the inverse of its
//! source-frame chain and pushed through the target-frame chain, so
//! `F(p) = T_to(T_from^-1(p)) - p`. Background pixels use the two background
//! affinities the same way. Every pixel gets exactly one vector, so there
//! are no splatting gaps to fill.

use rayon::prelude::*;

use super::params::{DreamParams, FrameParams};
use crate::error::{Error, Result};
use crate::geometry::{ChainInverse, Point, WarpChain};
use crate::raster::{check_dims, Bitmap, FlowField, LabelMask};

/// Flow and visibility between the frames of a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSynthesis {
    /// First frame to second frame.
    pub forward: FlowField,
    /// Object pixels of the first frame with no visible counterpart in the
    /// second: mapped off the canvas or covered by a nearer layer.
    pub occlusion: Bitmap,
    /// Second frame to first frame.
    pub backward: FlowField,
    /// Pixels of the second frame, background included, whose counterpart in
    /// the first frame is off the canvas or hidden behind a nearer layer.
    pub disocclusion: Bitmap,
}

#[inline]
fn round_inside(p: Point, (w, h): (usize, usize)) -> Option<(usize, usize)> {
    let (x, y) = (p.x.round(), p.y.round());
    (x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64).then_some((x as usize, y as usize))
}

/// Maps every pixel of the `from` frame to its position in the `to` frame
/// and flags the ones that are hidden there. With `objects_only`, background
/// pixels are never flagged.
fn transfer(
    params: &DreamParams,
    from: &FrameParams,
    to: &FrameParams,
    from_mask: &LabelMask,
    to_provenance: &LabelMask,
    objects_only: bool,
) -> Result<(FlowField, Bitmap)> {
    let canvas = params.canvas;
    check_dims(canvas, from_mask.dimensions())?;
    check_dims(canvas, to_provenance.dimensions())?;
    let bg_from = WarpChain::from_affine(from.background.map);
    let bg_to = WarpChain::from_affine(to.background.map);
    let bg_inv = bg_from.inverter()?;
    let mut by_label: Vec<Option<(ChainInverse<'_>, &WarpChain, u8)>> =
        (0..=u8::MAX).map(|_| None).collect();
    for pose in &from.objects {
        let target = to.object(pose.label).ok_or_else(|| {
            Error::InvalidArgument(format!("no pose for label {} in target frame", pose.label))
        })?;
        by_label[pose.label as usize] = Some((
            pose.chain.inverter()?,
            &target.chain,
            params.depth_rank(pose.label),
        ));
    }
    let (w, h) = canvas;
    let rows: Vec<Vec<([f32; 2], bool)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let p = Point::new(x as f64, y as f64);
                    let label = from_mask.get(x, y);
                    let (target, rank) = match &by_label[label as usize] {
                        Some((inv, chain, rank)) if label != 0 => {
                            (chain.apply(inv.apply(p)), *rank)
                        }
                        _ => (bg_to.apply(bg_inv.apply(p)), 0),
                    };
                    let hidden = if objects_only && label == 0 {
                        false
                    } else {
                        match round_inside(target, canvas) {
                            None => true,
                            Some((tx, ty)) => to_provenance.get(tx, ty) > rank,
                        }
                    };
                    ([(target.x - p.x) as f32, (target.y - p.y) as f32], hidden)
                })
                .collect()
        })
        .collect();
    let mut vectors = Vec::with_capacity(w * h);
    let mut hidden = Bitmap::new(w, h);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, (v, flag)) in row.into_iter().enumerate() {
            vectors.push(v);
            hidden.set(x, y, flag);
        }
    }
    Ok((FlowField::from_vec(w, h, vectors)?, hidden))
}

/// Forward flow and occlusion of the first frame.
///
/// `prev_mask` is the first frame's label mask and `next_provenance` the
/// depth-rank map of the second frame.
pub fn synthesize_flow(
    params: &DreamParams,
    prev_mask: &LabelMask,
    next_provenance: &LabelMask,
) -> Result<(FlowField, Bitmap)> {
    transfer(
        params,
        &params.prev,
        &params.next,
        prev_mask,
        next_provenance,
        true,
    )
}

/// Backward flow and disocclusion of the second frame.
pub fn synthesize_backward_flow(
    params: &DreamParams,
    next_mask: &LabelMask,
    prev_provenance: &LabelMask,
) -> Result<(FlowField, Bitmap)> {
    transfer(
        params,
        &params.next,
        &params.prev,
        next_mask,
        prev_provenance,
        false,
    )
}

/// Both directions at once.
pub fn synthesize_flows(
    params: &DreamParams,
    prev_mask: &LabelMask,
    prev_provenance: &LabelMask,
    next_mask: &LabelMask,
    next_provenance: &LabelMask,
) -> Result<FlowSynthesis> {
    let (forward, occlusion) = synthesize_flow(params, prev_mask, next_provenance)?;
    let (backward, disocclusion) = synthesize_backward_flow(params, next_mask, prev_provenance)?;
    Ok(FlowSynthesis {
        forward,
        occlusion,
        backward,
        disocclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dreamer::{compose_frame, sample_dream_params, split_scene, DreamConfig};
    use crate::geometry::{AffineMap, Stage};
    use crate::raster::Image;
    use crate::rng::SeededRng;

    fn setup(
        objects: &[(usize, usize, usize)],
    ) -> (crate::dreamer::Scene, DreamParams, DreamConfig) {
        let mask = LabelMask::from_fn(64, 64, |x, y| {
            for (i, &(x0, y0, side)) in objects.iter().enumerate() {
                if (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y) {
                    return i as u8 + 1;
                }
            }
            0
        });
        let img = Image::from_fn(64, 64, 3, |x, y, c| ((x * 3 + y + c) % 7) as f32 / 6.0);
        let config = DreamConfig::zero_ranges();
        let scene = split_scene(&img, &mask, &config).unwrap();
        let params = sample_dream_params(&mut SeededRng::new(0, 0), &scene, &config).unwrap();
        (scene, params, config)
    }

    fn shift(params: &mut DreamParams, label: u8, dx: f64, dy: f64) {
        let pose = params
            .next
            .objects
            .iter_mut()
            .find(|o| o.label == label)
            .unwrap();
        pose.chain = pose
            .chain
            .clone()
            .then(Stage::Affine(AffineMap::translation(dx, dy)));
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let (scene, params, config) = setup(&[(10, 10, 12)]);
        let prev = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        let (flow, occl) = synthesize_flow(&params, &prev.mask, &prev.provenance).unwrap();
        assert!(flow
            .vectors()
            .iter()
            .all(|v| v[0].abs() < 1e-9 && v[1].abs() < 1e-9));
        assert!(occl.is_empty());
    }

    #[test]
    fn translated_object_has_exact_flow() {
        let (scene, mut params, config) = setup(&[(10, 10, 12)]);
        shift(&mut params, 1, 5.0, -3.0);
        let prev = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        let next = compose_frame(&scene, &params.next, &params.depth_order, &config).unwrap();
        let (flow, occl) = synthesize_flow(&params, &prev.mask, &next.provenance).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                let expected = if prev.mask.get(x, y) == 1 {
                    [5.0, -3.0]
                } else {
                    [0.0, 0.0]
                };
                let v = flow.get(x, y);
                assert!((v[0] - expected[0]).abs() < 1e-9 && (v[1] - expected[1]).abs() < 1e-9);
            }
        }
        assert!(occl.is_empty());
    }

    #[test]
    fn occlusion_marks_pixels_sliding_under_a_nearer_object() {
        let (scene, mut params, config) = setup(&[(10, 20, 10), (30, 20, 10)]);
        // Object 1 behind object 2, slides right by 15 px.
        params.depth_order = vec![1, 2];
        shift(&mut params, 1, 15.0, 0.0);
        let prev = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        let next = compose_frame(&scene, &params.next, &params.depth_order, &config).unwrap();
        let (_, occl) = synthesize_flow(&params, &prev.mask, &next.provenance).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                let expected = prev.mask.get(x, y) == 1 && x + 15 >= 30;
                assert_eq!(occl.get(x, y), expected, "({x}, {y})");
            }
        }
        let (_, disocc) = synthesize_backward_flow(&params, &next.mask, &prev.provenance).unwrap();
        // Background uncovered where object 1 used to be is disoccluded.
        assert!(disocc.get(12, 25));
        assert!(!disocc.get(50, 50));
    }

    #[test]
    fn leaving_the_canvas_is_occlusion() {
        let (scene, mut params, config) = setup(&[(50, 10, 10)]);
        shift(&mut params, 1, 10.0, 0.0);
        let prev = compose_frame(&scene, &params.prev, &params.depth_order, &config).unwrap();
        let next = compose_frame(&scene, &params.next, &params.depth_order, &config).unwrap();
        let (_, occl) = synthesize_flow(&params, &prev.mask, &next.provenance).unwrap();
        assert!(occl.get(55, 12) && !occl.get(52, 12));
        assert_eq!(occl.count(), 6 * 10);
    }
}
