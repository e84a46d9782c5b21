use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use ssp_core::hrr::RngSeed;
use ssp_core::masks::{relate_from, Anchor, HypernymTable, MaskLibrary, RelateConfig};
use ssp_core::oracle::{AttributeDictionary, MockOracle};
use ssp_core::program::{parse_program, Executor};
use ssp_core::scene::{AxisConfig, DecodeStrategy, SSPMemory, SceneGraph, SspSpace};
use ssp_eval::synth::{aligned_scene, DEFAULT_LABELS};
use ssp_eval::suite::{relation_corpus, train_masks, DEFAULT_CORPUS_SCENES};

fn masks() -> MaskLibrary {
    train_masks(DEFAULT_CORPUS_SCENES, RngSeed(7)).0
}

fn encode(g: &SceneGraph, seed: u64) -> SSPMemory {
    let space = SspSpace::new(1024, RngSeed(seed), AxisConfig::default()).unwrap();
    let (objects, _) = g.valid_scene_objects();
    SSPMemory::encode(&objects, g.image().unwrap(), space).unwrap()
}

fn anchor(mem: &SSPMemory, id: &str) -> Anchor {
    let e = mem.entry(id).unwrap();
    Anchor {
        object_id: id.to_string(),
        label: e.label.clone(),
        pose: mem.decode_instance(e, DecodeStrategy::Exhaustive).pose,
    }
}

#[test]
fn right_left_consistency_on_aligned_scenes() {
    let lib = masks();
    let cfg = RelateConfig::default();
    let (mut held, mut total) = (0usize, 0usize);
    for i in 0..100u64 {
        let g = aligned_scene(RngSeed(500 + i), format!("aligned{i}"));
        let mem = encode(&g, i);
        for a in g.objects.keys() {
            let right = relate_from(&mem, &anchor(&mem, a), "to the right of", &lib, true, &cfg).unwrap();
            for b in right {
                total += 1;
                let back = relate_from(&mem, &anchor(&mem, &b.object_id), "to the left of", &lib, true, &cfg).unwrap();
                if back.iter().any(|p| &p.object_id == a && p.score > 0.0) {
                    held += 1;
                }
            }
        }
    }
    let rate = held as f64 / total as f64;
    println!("right/left consistency {held}/{total} = {rate:.3}");
    assert!(total > 100);
    assert!(rate >= 0.95, "consistency {rate:.3}");
}

/// Relabels objects with distinct names so programs can address them.
fn unique_labels(g: &mut SceneGraph, seed: RngSeed) {
    let mut rng = seed.rng();
    let mut labels = DEFAULT_LABELS.to_vec();
    labels.shuffle(&mut rng);
    for (o, l) in g.objects.values_mut().zip(labels) {
        o.name = l.to_string();
    }
}

#[test]
fn verify_rel_agrees_with_annotations() {
    let lib = masks();
    let masked: BTreeSet<String> = lib.relations().map(str::to_string).collect();
    let dict = AttributeDictionary::bundled();
    let hyp = HypernymTable::bundled();
    let mut scenes: Vec<SceneGraph> = relation_corpus(100, RngSeed(4242))
        .into_iter()
        .filter(|g| (2..=DEFAULT_LABELS.len()).contains(&g.objects.len()))
        .collect();
    for (i, g) in scenes.iter_mut().enumerate() {
        unique_labels(g, RngSeed(i as u64));
    }
    let oracle = MockOracle::from_graphs(&scenes);
    let mut rng = RngSeed(99).rng();
    let (mut agree, mut total) = (0usize, 0usize);
    for (i, g) in scenes.iter().enumerate() {
        let mem = encode(g, i as u64);
        let exec = Executor::new(&mem, &lib, &oracle, &dict, &hyp, g.image_id.clone());
        let triples = g.relation_triples();
        let annotated: BTreeSet<(String, String, String)> = triples.iter().cloned().collect();
        let ids: Vec<&String> = g.objects.keys().collect();
        let mut sample: Vec<(String, String, String, bool)> = triples
            .choose_multiple(&mut rng, 4)
            .filter(|(_, r, _)| masked.contains(r))
            .map(|(s, r, o)| (s.clone(), r.clone(), o.clone(), true))
            .collect();
        for _ in 0..4 {
            let s = (*ids.choose(&mut rng).unwrap()).clone();
            let o = (*ids.choose(&mut rng).unwrap()).clone();
            let r = masked.iter().nth(rng.gen_range(0..masked.len())).unwrap().clone();
            if s != o && !annotated.contains(&(s.clone(), r.clone(), o.clone())) {
                sample.push((s, r, o, false));
            }
        }
        for (s, r, o, truth) in sample {
            let program = format!(
                "select({}); verify_rel(#0, {r}, {})",
                g.objects[&s].name, g.objects[&o].name
            );
            let got = exec.execute(&parse_program(&program).unwrap()).answer().map(|a| a == "yes");
            total += 1;
            if got == Some(truth) {
                agree += 1;
            }
        }
    }
    let rate = agree as f64 / total as f64;
    println!("verify_rel agreement {agree}/{total} = {rate:.3}");
    assert!(total >= 300);
    assert!(rate >= 0.80, "agreement {rate:.3}");
}
