use lucid_dream::dreamer::{generate_dataset, DatasetOptions, DreamConfig, Dreamer, Manifest};
use lucid_dream::evaluation::iou;
use lucid_dream::fixtures::synthetic_scene;
use lucid_dream::io::{read_flo, read_label_mask};
use lucid_dream::propagation::{propagate, PropagationOptions};
use lucid_dream::tuner::{build_tuning_set, grid_search, Axis, ParamGrid, ReferenceRefiner};
use lucid_dream::SeededRng;

#[test]
fn dreamed_flow_carries_the_mask_forward() {
    let (frame, mask) = synthetic_scene(96, 96, 2, 11);
    let dreamer = Dreamer::new(&frame, &mask, DreamConfig::default()).unwrap();
    for stream in 0..4 {
        let s = dreamer.sample_at(3, stream).unwrap();
        let carried = propagate(
            &s.mask_prev,
            &[s.backward_flow.clone()],
            &PropagationOptions::default(),
        )
        .unwrap();
        let a = carried[0].foreground().difference(&s.disocclusion);
        let b = s.mask_next.foreground().difference(&s.disocclusion);
        assert!(iou(&a, &b).unwrap() > 0.85, "stream {stream}");
    }
}

#[test]
fn written_dataset_reads_back_and_tunes() {
    let dir = tempfile::tempdir().unwrap();
    let (frame, mask) = synthetic_scene(64, 64, 1, 5);
    let dreamer = Dreamer::new(&frame, &mask, DreamConfig::default()).unwrap();
    let options = DatasetOptions {
        count: 6,
        base_seed: 2,
        video: "toy".into(),
        jobs: Some(3),
    };
    generate_dataset(&dreamer, &options, dir.path()).unwrap();

    let manifest = Manifest::read(dir.path()).unwrap();
    let first = &manifest.records[0];
    let sample = dreamer.sample_at(2, 0).unwrap();
    assert_eq!(
        read_flo(&manifest.resolve(&first.files.flow)).unwrap(),
        sample.flow
    );
    assert_eq!(
        read_label_mask(&manifest.resolve(&first.files.mask_next)).unwrap(),
        sample.mask_next
    );

    let set = build_tuning_set(&manifest, 4, &mut SeededRng::new(0, 0)).unwrap();
    assert_eq!(set.triples.len(), 4);
    let grid = ParamGrid::new(vec![Axis {
        name: "open_radius".into(),
        values: vec![0.0, 1.0],
    }])
    .unwrap();
    let result = grid_search(&ReferenceRefiner, &grid, &set).unwrap();
    assert_eq!(result.table.len(), 2);
    assert!(result
        .table
        .iter()
        .all(|row| row.error.is_none() && (0.0..=1.0).contains(&row.score)));
}
