//! Dataset-update poisoning under a per-pixel budget, next to the
//! three-stage schedule with the same step counts.
//!
//! cargo run --release --example baseline -- <clean_scene.txt> [epochs]

use std::path::Path;

use splatlab::gaussian::Scene;
use splatlab::harness::{RigSpec, ToyRig};
use splatlab::metrics::psnr;
use splatlab::render::render;
use splatlab::train::{ipa_baseline_train, three_stage_poison, AttackSpec, TrainConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        anyhow::bail!("usage: baseline <clean_scene.txt> [epochs]  (see the train_clean example)");
    };
    let clean = Scene::load(Path::new(path))?;
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let mut config = TrainConfig::desk_scale();
    if let Some(e) = args.get(1) {
        config.epochs = e.parse()?;
    }
    let target = rig.attack_image()?;
    let cam = rig.attack_cameras[0];
    let attack = AttackSpec::single(cam, target.clone())?;

    let base = ipa_baseline_train(&clean, &attack, &rig.train, &config)?;
    let ours = three_stage_poison(&clean, &attack, &rig.train, &config)?;
    let max_shift = base
        .working
        .views
        .iter()
        .zip(&rig.train.views)
        .flat_map(|(w, o)| w.image.data().iter().zip(o.image.data()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    println!("largest pixel change in the working dataset {max_shift:.4} (epsilon {:.4})", config.epsilon);
    for (name, s) in [("baseline", &base.scene), ("three-stage", &ours.scene)] {
        println!("{name:12} attack view {:.2} dB", psnr(&render(s, &cam, rig.background), &target)?);
    }
    Ok(())
}
