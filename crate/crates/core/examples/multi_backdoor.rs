//! Several attack viewpoints at once, each with its own target image.
//!
//! cargo run --release --example multi_backdoor -- <clean_scene.txt> [n] [epochs]

use std::path::Path;

use splatlab::gaussian::Scene;
use splatlab::geometry::Vec3;
use splatlab::harness::{checkerboard, RigSpec, ToyRig};
use splatlab::metrics::{evaluate_group, psnr, Group};
use splatlab::render::render;
use splatlab::train::{three_stage_poison, AttackSpec, TrainConfig};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        anyhow::bail!("usage: multi_backdoor <clean_scene.txt> [n] [epochs]");
    };
    let clean = Scene::load(Path::new(path))?;
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let n: usize = args.get(1).map_or(Ok(3), |s| s.parse())?;
    let mut config = TrainConfig::desk_scale();
    if let Some(e) = args.get(2) {
        config.epochs = e.parse()?;
    }
    let colors = [
        (Vec3::new(0.9, 0.1, 0.1), Vec3::new(0.1, 0.1, 0.9)),
        (Vec3::new(0.1, 0.8, 0.2), Vec3::new(0.9, 0.9, 0.1)),
        (Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.9, 0.5, 0.1)),
    ];
    let pairs = rig
        .attack_cameras
        .iter()
        .take(n)
        .zip(colors.iter().cycle())
        .enumerate()
        .map(|(i, (cam, (a, b)))| Ok((*cam, checkerboard(cam.width(), cam.height(), 2 + 2 * i, *a, *b)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let attack = AttackSpec::new(pairs)?;
    let run = three_stage_poison(&clean, &attack, &rig.train, &config)?;
    for (i, (cam, img)) in attack.pairs().iter().enumerate() {
        println!("backdoor {i}: {:.2} dB", psnr(&render(&run.scene, cam, rig.background), img)?);
    }
    for (g, ds) in [(Group::Train, &rig.train), (Group::Test, &rig.test)] {
        println!("{:5} {:.2} dB", g.as_str(), evaluate_group(&run.scene, ds, g, rig.background)?.mean_psnr());
    }
    Ok(())
}
