use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use ssp_core::hrr::{random_sp, unbind, RngSeed};
use ssp_core::scene::{
    instance_outcomes, summarize, AxisConfig, DecodeStrategy, GridPose, ImageSize, SSPMemory, SceneObject, SspSpace,
};

fn random_objects(n: usize, seed: RngSeed) -> Vec<SceneObject> {
    let mut rng = seed.rng();
    (0..n)
        .map(|i| {
            let w = rng.gen_range(40.0..250.0f64).round();
            let h = rng.gen_range(40.0..250.0f64).round();
            let x = rng.gen_range(0.0..640.0 - w).round();
            let y = rng.gen_range(0.0..480.0 - h).round();
            SceneObject::new(format!("{i}"), format!("thing{}", i % 7), x, y, w, h)
        })
        .collect()
}

fn image() -> ImageSize {
    ImageSize::new(640.0, 480.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn encoding_ignores_object_order(seed in any::<u64>(), n in 1usize..30) {
        let space = SspSpace::with_defaults(1024, RngSeed(1)).unwrap();
        let objects = random_objects(n, RngSeed(seed));
        let mut shuffled = objects.clone();
        shuffled.shuffle(&mut RngSeed(seed ^ 5).rng());
        let a = SSPMemory::encode(&objects, image(), space.clone()).unwrap();
        let b = SSPMemory::encode(&shuffled, image(), space).unwrap();
        prop_assert!(a.m().max_abs_diff(b.m()) < 1e-9);
        prop_assert!(a.loc2d().max_abs_diff(b.loc2d()) < 1e-9);
    }
}

#[test]
fn decoding_a_point_vector_returns_the_point() {
    let space = SspSpace::with_defaults(1024, RngSeed(2)).unwrap();
    let mut rng = RngSeed(77).rng();
    for _ in 0..200 {
        let p = GridPose {
            x: f64::from(rng.gen_range(0..=100u32)),
            y: f64::from(rng.gen_range(0..=100u32)),
            w: f64::from(rng.gen_range(0..=10u32)),
            h: f64::from(rng.gen_range(0..=10u32)),
        };
        let q = space.axes.pose_vector(&p);
        let got = space.grid.decode(&q, DecodeStrategy::Exhaustive, false).unwrap().pose;
        assert_eq!(got, p);
    }
}

#[test]
fn mean_iou_does_not_increase_with_object_count() {
    let counts = [5usize, 10, 20, 35, 50];
    let mut means = Vec::new();
    for &n in &counts {
        let mut total = 0.0;
        for seed in 0..20u64 {
            let space = SspSpace::with_defaults(1024, RngSeed(seed)).unwrap();
            let mem = SSPMemory::encode(&random_objects(n, RngSeed(1000 + seed)), image(), space).unwrap();
            total += summarize(&instance_outcomes(&mem, DecodeStrategy::two_stage())).unwrap().mean_iou;
        }
        means.push(total / 20.0);
    }
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "mean IoU by count {counts:?}: {means:?}");
    }
}

#[test]
fn two_stage_matches_exhaustive_on_single_objects() {
    let (mut same, total) = (0usize, 300usize);
    for i in 0..total as u64 {
        let space = SspSpace::new(1024, RngSeed(i), AxisConfig::default()).unwrap();
        let objects = random_objects(1, RngSeed(5000 + i));
        let mem = SSPMemory::encode(&objects, image(), space.clone()).unwrap();
        let e = &mem.entries()[0];
        let a = mem.decode_instance(e, DecodeStrategy::Exhaustive).pose;
        let b = mem.decode_instance(e, DecodeStrategy::two_stage()).pose;
        same += usize::from(a == b);
    }
    assert!(same as f64 >= 0.98 * total as f64, "agreement {same}/{total}");
}

#[test]
fn unbinding_with_a_foreign_pointer_gives_low_scores() {
    let space = SspSpace::with_defaults(1024, RngSeed(4)).unwrap();
    let mem = SSPMemory::encode(&random_objects(10, RngSeed(9)), image(), space).unwrap();
    let own = mem.decode_instance(&mem.entries()[0], DecodeStrategy::Exhaustive).score;
    let stranger = random_sp(1024, RngSeed(12345)).unwrap();
    let q = unbind(mem.m(), &stranger).unwrap();
    let foreign = mem.space().grid.decode(&q, DecodeStrategy::Exhaustive, false).unwrap().score;
    assert!(foreign < 0.5 * own, "own {own} foreign {foreign}");
}
