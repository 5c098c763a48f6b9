use serde::{Deserialize, Serialize};

use super::scene::{Layer, ObjectBox, Scene};
use super::{DreamConfig, IlluminationRanges};
use crate::appearance::IlluminationParams;
use crate::error::Result;
use crate::geometry::{affine_from_params, tps_fit, AffineMap, Point, Stage, WarpChain};
use crate::rng::SeededRng;

/// Saturation and value curves for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameIllumination {
    pub saturation: IlluminationParams,
    pub value: IlluminationParams,
}

impl FrameIllumination {
    pub const IDENTITY: FrameIllumination = FrameIllumination {
        saturation: IlluminationParams::IDENTITY,
        value: IlluminationParams::IDENTITY,
    };
}

/// Global background motion of one frame, about the canvas center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPose {
    pub rotation_deg: f64,
    pub scale: f64,
    pub translation: Point,
    pub map: AffineMap,
}

/// One object in one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub label: u8,
    /// Frame position of the object's box center.
    pub placement: Point,
    pub rotation_deg: f64,
    pub scale: f64,
    /// Spline control points in crop coordinates, row-major over the grid.
    pub tps_controls: Vec<Point>,
    /// Displacement of each control point.
    pub tps_displacements: Vec<Point>,
    /// Crop coordinates to frame coordinates.
    pub chain: WarpChain,
}

/// Everything needed to render one frame of a pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    pub illumination: FrameIllumination,
    pub background: BackgroundPose,
    /// In label order.
    pub objects: Vec<ObjectPose>,
}

impl FrameParams {
    pub fn object(&self, label: u8) -> Option<&ObjectPose> {
        self.objects.iter().find(|o| o.label == label)
    }
}

/// Per-object facts shared by both frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectMotion {
    pub label: u8,
    /// Larger side of the object's bounding box, in source pixels.
    pub size: f64,
    /// Placement change from the first frame to the second.
    pub translation_delta: Point,
    /// Placements tried before the visibility floor was met.
    pub placement_attempts: usize,
    /// The floor was never met and the object kept its source position.
    pub fell_back: bool,
}

/// The full parameter record of a dream pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DreamParams {
    pub canvas: (usize, usize),
    /// Object labels from back to front, shared by both frames.
    pub depth_order: Vec<u8>,
    pub motions: Vec<ObjectMotion>,
    pub prev: FrameParams,
    pub next: FrameParams,
}

impl DreamParams {
    /// 1-based depth rank of `label` (larger is nearer), 0 for background.
    pub fn depth_rank(&self, label: u8) -> u8 {
        self.depth_order
            .iter()
            .position(|&l| l == label)
            .map_or(0, |i| i as u8 + 1)
    }
}

/// Draws the saturation and value curves of one frame.
pub fn sample_illumination(rng: &mut SeededRng, ranges: &IlluminationRanges) -> FrameIllumination {
    let r = *ranges;
    let mut curve = || IlluminationParams {
        a: rng.symmetric(1.0, r.a),
        b: rng.symmetric(1.0, r.b),
        c: rng.symmetric(0.0, r.c),
    };
    let saturation = curve();
    let value = curve();
    FrameIllumination { saturation, value }
}

fn background_pose(
    canvas: (usize, usize),
    rotation_deg: f64,
    scale: f64,
    translation: Point,
) -> BackgroundPose {
    let center = Point::new((canvas.0 as f64 - 1.0) / 2.0, (canvas.1 as f64 - 1.0) / 2.0);
    BackgroundPose {
        rotation_deg,
        scale,
        translation,
        map: affine_from_params(center, rotation_deg, scale, translation)
            .expect("sampled scale is positive"),
    }
}

/// Regular control grid spanning the object box.
pub fn control_grid(object: &ObjectBox, n: usize) -> Vec<Point> {
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut pts = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            pts.push(Point::new(
                step(object.x0, object.x1, i),
                step(object.y0, object.y1, j),
            ));
        }
    }
    pts
}

/// Builds the crop-to-frame chain: the spline deformation in crop
/// coordinates, then rotation and scale about the box center and the
/// translation that puts the center at `placement`.
pub fn object_chain(
    object: &ObjectBox,
    controls: &[Point],
    displacements: &[Point],
    rotation_deg: f64,
    scale: f64,
    placement: Point,
    config: &DreamConfig,
) -> Result<WarpChain> {
    let mut stages = Vec::with_capacity(2);
    if displacements.iter().any(|d| d.x != 0.0 || d.y != 0.0) {
        let targets: Vec<Point> = controls
            .iter()
            .zip(displacements)
            .map(|(c, d)| *c + *d)
            .collect();
        stages.push(Stage::Tps(tps_fit(controls, &targets)?));
    }
    let center = object.center();
    stages.push(Stage::Affine(affine_from_params(
        center,
        rotation_deg,
        scale,
        placement - center,
    )?));
    Ok(WarpChain::new(stages).with_inverse_options(config.inverse))
}

/// Fraction of the layer's support whose mapped pixel centers land on the canvas.
pub fn visible_fraction(layer: &Layer, chain: &WarpChain, canvas: (usize, usize)) -> f64 {
    let inside = |v: f64, len: usize| {
        let r = v.round();
        r >= 0.0 && r < len as f64
    };
    let mut total = 0usize;
    let mut visible = 0usize;
    for (x, y) in layer.mask.iter_set() {
        total += 1;
        let p = chain.apply(Point::new(x as f64, y as f64));
        if inside(p.x, canvas.0) && inside(p.y, canvas.1) {
            visible += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        visible as f64 / total as f64
    }
}

struct PoseDraw {
    rotation_deg: f64,
    scale: f64,
    displacements: Vec<Point>,
}

fn draw_pose(rng: &mut SeededRng, size: f64, controls: usize, config: &DreamConfig) -> PoseDraw {
    let rotation_deg = rng.symmetric(0.0, config.rotation_deg);
    let scale = rng.symmetric(1.0, config.scale);
    let reach = config.tps * size;
    let displacements = (0..controls)
        .map(|_| {
            let dx = rng.symmetric(0.0, reach);
            let dy = rng.symmetric(0.0, reach);
            Point::new(dx, dy)
        })
        .collect();
    PoseDraw {
        rotation_deg,
        scale,
        displacements,
    }
}

/// Draws a parameter record for `scene`.
///
/// The draw order is fixed: illumination (both frames), background (both
/// frames), depth order, then objects in label order with rejection sampling
/// against the visibility floor.
pub fn sample_dream_params(
    rng: &mut SeededRng,
    scene: &Scene,
    config: &DreamConfig,
) -> Result<DreamParams> {
    let canvas = scene.dimensions();
    let (w, h) = (canvas.0 as f64, canvas.1 as f64);

    let illum_prev = sample_illumination(rng, &config.illumination);
    let illum_next_draw = sample_illumination(rng, &config.illumination);
    let illum_next = if config.illumination_per_frame {
        illum_next_draw
    } else {
        illum_prev
    };

    // The camera view of the first frame takes the full rotation and scale
    // ranges; the second frame differs from it by a translation only.
    let bg_rotation = rng.symmetric(0.0, config.background_rotation_deg);
    let bg_scale = rng.symmetric(1.0, config.background_scale);
    let shift = config.background_translation * w.max(h);
    let bg_shift = Point::new(rng.symmetric(0.0, shift), rng.symmetric(0.0, shift));
    let bg_prev = background_pose(canvas, bg_rotation, bg_scale, Point::default());
    let bg_next = background_pose(canvas, bg_rotation, bg_scale, bg_shift);

    let mut depth_order: Vec<u8> = scene.layers.iter().map(|l| l.label).collect();
    rng.shuffle(&mut depth_order);

    let mut motions = Vec::with_capacity(scene.layers.len());
    let mut prev_objects = Vec::with_capacity(scene.layers.len());
    let mut next_objects = Vec::with_capacity(scene.layers.len());
    let grid = config.tps_grid;
    for layer in &scene.layers {
        let object = layer.object_box();
        let size = object.size();
        let controls = control_grid(&object, grid);
        let source_center = layer.to_source(object.center());
        let mut attempts = 0;
        let mut accepted = None;
        let mut last = None;
        while attempts < config.max_placement_tries {
            attempts += 1;
            let ux = rng.uniform(-0.5, w - 0.5);
            let uy = rng.uniform(-0.5, h - 0.5);
            let placement = Point::new(
                source_center.x + config.placement * (ux - source_center.x),
                source_center.y + config.placement * (uy - source_center.y),
            );
            let reach = config.translation * size;
            let delta = Point::new(rng.symmetric(0.0, reach), rng.symmetric(0.0, reach));
            let prev = draw_pose(rng, size, controls.len(), config);
            let next = draw_pose(rng, size, controls.len(), config);
            let chain_prev = object_chain(
                &object,
                &controls,
                &prev.displacements,
                prev.rotation_deg,
                prev.scale,
                placement,
                config,
            )?;
            let chain_next = object_chain(
                &object,
                &controls,
                &next.displacements,
                next.rotation_deg,
                next.scale,
                placement + delta,
                config,
            )?;
            let visible = visible_fraction(layer, &chain_prev, canvas) >= config.visibility_floor
                && visible_fraction(layer, &chain_next, canvas) >= config.visibility_floor;
            if visible {
                accepted = Some((placement, delta, prev, next, chain_prev, chain_next));
                break;
            }
            last = Some((prev, next));
        }
        let fell_back = accepted.is_none();
        let (placement, delta, prev, next, chain_prev, chain_next) = match accepted {
            Some(a) => a,
            None => {
                let (prev, next) = last.expect("at least one attempt");
                let chain_prev = object_chain(
                    &object,
                    &controls,
                    &prev.displacements,
                    prev.rotation_deg,
                    prev.scale,
                    source_center,
                    config,
                )?;
                let chain_next = object_chain(
                    &object,
                    &controls,
                    &next.displacements,
                    next.rotation_deg,
                    next.scale,
                    source_center,
                    config,
                )?;
                (
                    source_center,
                    Point::default(),
                    prev,
                    next,
                    chain_prev,
                    chain_next,
                )
            }
        };
        motions.push(ObjectMotion {
            label: layer.label,
            size,
            translation_delta: delta,
            placement_attempts: attempts,
            fell_back,
        });
        prev_objects.push(ObjectPose {
            label: layer.label,
            placement,
            rotation_deg: prev.rotation_deg,
            scale: prev.scale,
            tps_controls: controls.clone(),
            tps_displacements: prev.displacements,
            chain: chain_prev,
        });
        next_objects.push(ObjectPose {
            label: layer.label,
            placement: placement + delta,
            rotation_deg: next.rotation_deg,
            scale: next.scale,
            tps_controls: controls,
            tps_displacements: next.displacements,
            chain: chain_next,
        });
    }

    Ok(DreamParams {
        canvas,
        depth_order,
        motions,
        prev: FrameParams {
            illumination: illum_prev,
            background: bg_prev,
            objects: prev_objects,
        },
        next: FrameParams {
            illumination: illum_next,
            background: bg_next,
            objects: next_objects,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dreamer::split_scene;
    use crate::raster::{Image, LabelMask};

    fn scene(objects: usize) -> Scene {
        let mask = LabelMask::from_fn(64, 64, |x, y| {
            if (10..22).contains(&x) && (10..20).contains(&y) {
                1
            } else if objects > 1 && (35..50).contains(&x) && (30..44).contains(&y) {
                2
            } else {
                0
            }
        });
        let img = Image::from_fn(64, 64, 3, |x, y, c| ((x + 2 * y + c) % 13) as f32 / 12.0);
        split_scene(&img, &mask, &DreamConfig::default()).unwrap()
    }

    #[test]
    fn zero_ranges_give_identity_transforms() {
        let scene = scene(2);
        let mut rng = SeededRng::new(4, 0);
        let params = sample_dream_params(&mut rng, &scene, &DreamConfig::zero_ranges()).unwrap();
        for frame in [&params.prev, &params.next] {
            assert_eq!(frame.illumination, FrameIllumination::IDENTITY);
            assert_eq!(frame.background.map, AffineMap::identity());
            for (pose, layer) in frame.objects.iter().zip(&scene.layers) {
                assert!(pose.chain.is_affine());
                for (x, y) in layer.mask.iter_set() {
                    let q = Point::new(x as f64, y as f64);
                    assert!(pose.chain.apply(q).distance(layer.to_source(q)) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sampled_ranges_are_respected() {
        let scene = scene(1);
        let config = DreamConfig::default();
        let mut rng = SeededRng::new(0, 0);
        for _ in 0..300 {
            let p = sample_dream_params(&mut rng, &scene, &config).unwrap();
            let m = &p.motions[0];
            assert!(
                m.translation_delta.x.abs() <= 0.1 * m.size
                    && m.translation_delta.y.abs() <= 0.1 * m.size
            );
            for frame in [&p.prev, &p.next] {
                let o = &frame.objects[0];
                assert!(o.rotation_deg.abs() <= 30.0);
                assert!((0.85..=1.15).contains(&o.scale));
                assert!(o
                    .tps_displacements
                    .iter()
                    .all(|d| d.x.abs() <= 0.1 * m.size && d.y.abs() <= 0.1 * m.size));
                assert!((0.85..=1.15).contains(&frame.background.scale));
            }
            let moved = p.next.objects[0].placement - p.prev.objects[0].placement;
            assert!(moved.distance(m.translation_delta) < 1e-12);
            if !m.fell_back {
                for frame in [&p.prev, &p.next] {
                    assert!(
                        visible_fraction(&scene.layers[0], &frame.objects[0].chain, p.canvas)
                            >= 0.25
                    );
                }
            }
        }
    }

    #[test]
    fn same_stream_gives_same_params() {
        let scene = scene(2);
        let config = DreamConfig::default();
        let a = sample_dream_params(&mut SeededRng::new(9, 3), &scene, &config).unwrap();
        let b = sample_dream_params(&mut SeededRng::new(9, 3), &scene, &config).unwrap();
        let c = sample_dream_params(&mut SeededRng::new(9, 4), &scene, &config).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn depth_rank_counts_from_the_back() {
        let scene = scene(2);
        let p = sample_dream_params(&mut SeededRng::new(1, 0), &scene, &DreamConfig::default())
            .unwrap();
        assert_eq!(p.depth_rank(0), 0);
        assert_eq!(p.depth_rank(p.depth_order[0]), 1);
        assert_eq!(p.depth_rank(p.depth_order[1]), 2);
    }

    #[test]
    fn params_survive_json() {
        let scene = scene(2);
        let p = sample_dream_params(&mut SeededRng::new(2, 0), &scene, &DreamConfig::default())
            .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<DreamParams>(&text).unwrap(), p);
    }
}
