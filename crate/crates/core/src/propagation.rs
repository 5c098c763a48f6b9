//! Non-learned mask propagation along optical flow.
//!
//! Masks move forward in time by backward warping: the mask at `t` reads the
//! mask at `t - 1` at `p + F_{t->t-1}(p)`. Flow direction is part of every
//! signature to make swapped fields hard to pass by accident.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_flo;
use crate::morphology::connected_components;
use crate::raster::{check_dims, FlowField, Image, LabelMask};

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn centered_magnitudes(flow: &FlowField) -> Vec<f64> {
    let mut us: Vec<f64> = flow.vectors().iter().map(|v| v[0] as f64).collect();
    let mut vs: Vec<f64> = flow.vectors().iter().map(|v| v[1] as f64).collect();
    let (mu, mv) = (median(&mut us), median(&mut vs));
    flow.vectors()
        .iter()
        .map(|v| (v[0] as f64 - mu).hypot(v[1] as f64 - mv))
        .collect()
}

/// Motion-saliency channel from a forward and a backward flow field.
///
/// Each field has its per-component median vector removed; the two
/// magnitude maps are averaged and scaled so the maximum becomes 1. An
/// all-zero map stays all zero.
pub fn flow_magnitude_channel(forward: &FlowField, backward: &FlowField) -> Result<Image> {
    check_dims(forward.dimensions(), backward.dimensions())?;
    let (w, h) = forward.dimensions();
    if w * h == 0 {
        return Ok(Image::new(w, h, 1));
    }
    let a = centered_magnitudes(forward);
    let b = centered_magnitudes(backward);
    let avg: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
    let max = avg.iter().copied().fold(0.0, f64::max);
    let data = if max > 0.0 {
        avg.iter().map(|v| (v / max) as f32).collect()
    } else {
        vec![0.0; w * h]
    };
    Image::from_vec(w, h, 1, data)
}

/// `output(p) = mask(round(p + flow(p)))`, background where that falls off
/// the raster. `flow_t_to_prev` points from the new frame into the frame the
/// mask belongs to.
pub fn warp_mask_with_flow(mask: &LabelMask, flow_t_to_prev: &FlowField) -> Result<LabelMask> {
    check_dims(mask.dimensions(), flow_t_to_prev.dimensions())?;
    let (w, h) = mask.dimensions();
    Ok(LabelMask::from_fn(w, h, |x, y| {
        let [u, v] = flow_t_to_prev.get(x, y);
        let (sx, sy) = ((x as f64 + u as f64).round(), (y as f64 + v as f64).round());
        if sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64 {
            mask.get(sx as usize, sy as usize)
        } else {
            0
        }
    }))
}

/// Drops every 8-connected component of each label in `m_prev` that shares
/// no pixel with the same label in `m_prevprev`. Labels absent from
/// `m_prevprev` are kept whole.
pub fn temporal_coherency_prune(m_prev: &LabelMask, m_prevprev: &LabelMask) -> Result<LabelMask> {
    check_dims(m_prev.dimensions(), m_prevprev.dimensions())?;
    let mut out = m_prev.clone();
    let before = m_prevprev.histogram();
    for label in m_prev.object_labels() {
        if before[label as usize] == 0 {
            continue;
        }
        for component in connected_components(&m_prev.object(label), true) {
            if !component
                .iter()
                .any(|&(x, y)| m_prevprev.get(x, y) == label)
            {
                for (x, y) in component {
                    out.set(x, y, 0);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Prune `M_{t-1}` against `M_{t-2}` before warping it.
    pub temporal_coherency: bool,
}

/// The only state that evolves along a video: the latest mask, the one
/// before it, and the frame index the latest mask belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationState {
    pub current: LabelMask,
    pub previous: Option<LabelMask>,
    pub frame: usize,
}

impl PropagationState {
    pub fn new(first: LabelMask) -> Self {
        Self {
            current: first,
            previous: None,
            frame: 0,
        }
    }

    /// Advances one frame using the flow from the new frame to the current one.
    /// `refine` sees the frame index and the warped mask and may replace it.
    pub fn step(
        &mut self,
        flow_t_to_prev: &FlowField,
        options: &PropagationOptions,
        refine: &mut dyn FnMut(usize, LabelMask) -> Result<LabelMask>,
    ) -> Result<&LabelMask> {
        let source = match (&self.previous, options.temporal_coherency) {
            (Some(before), true) => temporal_coherency_prune(&self.current, before)?,
            _ => self.current.clone(),
        };
        let t = self.frame + 1;
        let warped = warp_mask_with_flow(&source, flow_t_to_prev)?;
        let next = refine(t, warped)?;
        check_dims(source.dimensions(), next.dimensions())?;
        self.previous = Some(source);
        self.current = next;
        self.frame = t;
        Ok(&self.current)
    }
}

/// Propagates `first` through `flows`, where `flows[i]` maps frame `i + 1`
/// back to frame `i`. Returns the masks of frames `1..=flows.len()`.
pub fn propagate_sequence(
    first: &LabelMask,
    flows: &[FlowField],
    options: &PropagationOptions,
    mut refine: impl FnMut(usize, LabelMask) -> Result<LabelMask>,
) -> Result<Vec<LabelMask>> {
    let mut state = PropagationState::new(first.clone());
    let mut out = Vec::with_capacity(flows.len());
    for flow in flows {
        out.push(state.step(flow, options, &mut refine)?.clone());
    }
    Ok(out)
}

/// Pure warping without a refinement step.
pub fn propagate(
    first: &LabelMask,
    flows: &[FlowField],
    options: &PropagationOptions,
) -> Result<Vec<LabelMask>> {
    propagate_sequence(first, flows, options, |_, m| Ok(m))
}

/// Where the flow from frame `stem` back to its predecessor lives:
/// `<root>/<sequence>/<stem>.flo`.
pub fn flow_path(root: &Path, sequence: &str, stem: &str) -> PathBuf {
    root.join(sequence).join(format!("{stem}.flo"))
}

/// Loads the backward flows for frames `1..` of a sequence, given the frame
/// file stems in order.
pub fn load_backward_flows(
    root: &Path,
    sequence: &str,
    stems: &[String],
) -> Result<Vec<FlowField>> {
    stems
        .iter()
        .skip(1)
        .map(|stem| {
            let path = flow_path(root, sequence, stem);
            if !path.is_file() {
                return Err(Error::Io {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing flow file"),
                });
            }
            read_flo(&path)
        })
        .collect()
}
