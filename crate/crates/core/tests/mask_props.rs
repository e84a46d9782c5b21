use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use ssp_core::hrr::{bind, RngSeed};
use ssp_core::masks::{
    accumulate, encode_region, learn_mask, region_cells, BoxPx, QueryMask, RelationSample, FRAME, FRAME_CENTER,
    ANCHOR_CELLS,
};
use ssp_core::scene::{GridPose, SspSpace};
use ssp_core::stats::pearson;

fn random_box<R: Rng>(rng: &mut R) -> BoxPx {
    BoxPx {
        x: rng.gen_range(0.0..500.0),
        y: rng.gen_range(0.0..400.0),
        w: rng.gen_range(10.0..200.0),
        h: rng.gen_range(10.0..200.0),
    }
}

fn samples(n: usize, seed: u64) -> Vec<RelationSample> {
    let mut rng = RngSeed(seed).rng();
    (0..n)
        .map(|_| RelationSample {
            relation: "near".into(),
            anchor_box: random_box(&mut rng),
            relative_box: random_box(&mut rng),
        })
        .collect()
}

/// Samples whose relative box starts at or right of the anchor centre.
fn right_offset(n: usize, seed: u64) -> Vec<RelationSample> {
    let mut rng = RngSeed(seed).rng();
    (0..n)
        .map(|_| {
            let a = random_box(&mut rng);
            let mut r = random_box(&mut rng);
            r.x = a.x + a.w / 2.0 + rng.gen_range(0.0..150.0);
            RelationSample {
                relation: "right".into(),
                anchor_box: a,
                relative_box: r,
            }
        })
        .collect()
}

/// Per-cell count computed independently of the range rasterizer: a cell is
/// covered when its centre, mapped back to pixels, lies in the box.
fn brute_force_counts(samples: &[RelationSample]) -> Vec<u32> {
    let mut counts = vec![0u32; FRAME * FRAME];
    for s in samples {
        let (a, b) = (&s.anchor_box, &s.relative_box);
        let (sx, sy) = (ANCHOR_CELLS / a.w, ANCHOR_CELLS / a.h);
        let (acx, acy) = (a.x + a.w / 2.0, a.y + a.h / 2.0);
        let (x0, x1) = (FRAME_CENTER + (b.x - acx) * sx, FRAME_CENTER + (b.x + b.w - acx) * sx);
        let (y0, y1) = (FRAME_CENTER + (b.y - acy) * sy, FRAME_CENTER + (b.y + b.h - acy) * sy);
        for r in 0..FRAME {
            let cy = r as f64 + 0.5;
            if !(y0 <= cy && cy < y1) {
                continue;
            }
            for c in 0..FRAME {
                let cx = c as f64 + 0.5;
                if x0 <= cx && cx < x1 {
                    counts[r * FRAME + c] += 1;
                }
            }
        }
    }
    counts
}

#[test]
fn right_offset_mask_matches_brute_force() {
    let data = right_offset(1200, 3);
    let mask = learn_mask("right", &data, 0.05, 1000).unwrap();
    assert!(mask.active_cells().all(|(_, c)| c >= 250));
    let acc = accumulate(&data);
    let counts = brute_force_counts(&data);
    for r in 0..FRAME {
        for c in 0..FRAME {
            assert_eq!(acc.count(r, c), counts[r * FRAME + c], "cell ({r}, {c})");
            let expected = f64::from(counts[r * FRAME + c]) / data.len() as f64 >= 0.05;
            assert_eq!(mask.get(r, c), expected, "cell ({r}, {c})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn learning_ignores_sample_order(seed in any::<u64>()) {
        let data = samples(300, seed);
        let mut shuffled = data.clone();
        shuffled.shuffle(&mut RngSeed(seed ^ 1).rng());
        prop_assert_eq!(accumulate(&data), accumulate(&shuffled));
        prop_assert_eq!(learn_mask("near", &data, 0.05, 1).ok(), learn_mask("near", &shuffled, 0.05, 1).ok());
    }

    #[test]
    fn raising_threshold_never_adds_cells(seed in any::<u64>(), t in 0.0f64..0.5, dt in 0.0f64..0.5) {
        let acc = accumulate(&samples(200, seed));
        let (lo, hi) = (acc.binarize(t), acc.binarize(t + dt));
        prop_assert!(lo.iter().zip(&hi).all(|(l, h)| *l || !*h));
    }

    #[test]
    fn region_translates_by_binding(seed in 0u64..1000, x in 10.0f64..40.0, y in 10.0f64..40.0, dx in -8i32..8) {
        let space = SspSpace::with_defaults(512, RngSeed(seed)).unwrap();
        let mask = QueryMask::from_fn("block", 1, |r, c| (200..300).contains(&r) && (260..400).contains(&c)).unwrap();
        let a = GridPose { x: x.round(), y: y.round(), w: 2.0, h: 2.0 };
        let b = GridPose { x: a.x + f64::from(dx), ..a };
        let (ca, cb) = (region_cells(&mask, &a).unwrap(), region_cells(&mask, &b).unwrap());
        prop_assume!(ca.len() == cb.len());
        let moved = bind(&encode_region(&mask, &a, &space).unwrap(), &space.axes.x.power(f64::from(dx)).unwrap()).unwrap();
        let direct = encode_region(&mask, &b, &space).unwrap();
        prop_assert!(moved.max_abs_diff(&direct) < 1e-6);
    }

    #[test]
    fn pearson_of_a_sample_with_itself(v in prop::collection::vec(-1e6f64..1e6, 3..50)) {
        prop_assume!(v.iter().any(|x| *x != v[0]));
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(pearson(&v, &v).unwrap(), 1.0);
        prop_assert_eq!(pearson(&v, &neg).unwrap(), -1.0);
    }
}
