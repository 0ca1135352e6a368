use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gsaug_bench::Workload;
use gsaug_core::geometry::BevRect;
use gsaug_core::placement::{
    build_drivable_space, collision_check, place_agents, sample_placement, FrameInput, VisibilityContext,
};
use gsaug_core::render::{rasterize, render_depth};
use gsaug_core::{PlacementMode, PlacementPolicy};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn render(c: &mut Criterion) {
    let mut g = c.benchmark_group("render");
    for (name, w) in [("small", Workload::small()), ("default", Workload::default_scene())] {
        let prims = w.synth.scene.world_primitives(&[], 0).unwrap();
        let cam = &w.synth.cameras[0];
        g.bench_with_input(BenchmarkId::new("camera", name), &prims, |b, prims| {
            b.iter(|| rasterize(prims, cam, [0.5; 3]).unwrap())
        });
    }
    g.finish();
}

fn collision(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rects: Vec<BevRect> = (0..1024)
        .map(|_| BevRect {
            center: Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)),
            half_length: rng.random_range(0.5..2.5),
            half_width: rng.random_range(0.3..1.0),
            yaw: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    c.bench_function("collision/sat_1024_pairs", |b| {
        b.iter(|| rects.chunks(2).filter(|p| p[0].intersects(&p[1])).count())
    });
    let w = Workload::default_scene();
    let probe = w.boxes[0].clone();
    c.bench_function("collision/check_against_scene", |b| {
        b.iter(|| collision_check(&probe, &w.boxes, 0.1))
    });
}

fn sampling(c: &mut Criterion) {
    let w = Workload::default_scene();
    let policy = PlacementPolicy::default();
    let depths: Vec<_> = w.synth.cameras.iter().map(|cam| render_depth(&w.synth.scene, cam, 0).unwrap()).collect();
    let space = build_drivable_space(
        &w.synth.road,
        &w.boxes,
        &w.synth.cameras,
        w.library.max_footprint(),
        policy.cell_size,
        policy.margin,
    )
    .unwrap();
    c.bench_function("sampling/drivable_space", |b| {
        b.iter(|| {
            build_drivable_space(
                &w.synth.road,
                &w.boxes,
                &w.synth.cameras,
                w.library.max_footprint(),
                policy.cell_size,
                policy.margin,
            )
            .unwrap()
        })
    });
    let vis = VisibilityContext {
        cameras: &w.synth.cameras,
        depths: &depths,
    };
    let agent = &w.library.agents()[0];
    c.bench_function("sampling/one_placement", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        b.iter(|| sample_placement(&space, &policy, &w.boxes, agent, &vis, &mut rng).ok())
    });

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    let frame = FrameInput {
        scene: &w.synth.scene,
        timestep: 0,
        cameras: &w.synth.cameras,
        existing_boxes: &w.boxes,
        road: &w.synth.road,
        background: [0.5; 3],
    };
    for mode in [PlacementMode::RandomPose, PlacementMode::MaxOcclusion] {
        let policy = PlacementPolicy {
            mode,
            agents_per_camera: 3,
            ..PlacementPolicy::default()
        };
        g.bench_function(format!("{mode:?}_3_per_camera"), |b| {
            b.iter(|| place_agents(&frame, &w.library, &policy, None, &mut ChaCha8Rng::seed_from_u64(3)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, render, collision, sampling);
criterion_main!(benches);
