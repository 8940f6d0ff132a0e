//! Score a scene file on the toy rig's four view groups and write the
//! per-view CSVs.
//!
//! cargo run --release --example evaluate -- <scene.txt> [clean_scene.txt] [out_dir]

use std::path::{Path, PathBuf};

use splatlab::gaussian::Scene;
use splatlab::harness::{metrics_file, RigSpec, ToyRig};
use splatlab::metrics::{evaluate_group, Group};
use splatlab::train::AttackSpec;
use splatlab::ves::{build_stab_dataset, ves_viewpoints_multi, AngleSet};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        anyhow::bail!("usage: evaluate <scene.txt> [clean_scene.txt] [out_dir]");
    };
    let scene = Scene::load(Path::new(path))?;
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let clean = match args.get(1) {
        Some(p) => Scene::load(Path::new(p))?,
        None => rig.reference.clone(),
    };
    let out = args.get(2).map_or_else(|| PathBuf::from("eval"), PathBuf::from);
    std::fs::create_dir_all(&out)?;
    let bg = rig.background;

    let attack = AttackSpec::single(rig.attack_cameras[0], rig.attack_image()?)?;
    let stab_cams = ves_viewpoints_multi(&attack.cameras(), &AngleSet::new(vec![13.0, 15.0])?)?;
    let groups = [
        (Group::Attack, attack.to_dataset()),
        (Group::Stabilization, build_stab_dataset(&clean, &stab_cams, bg)),
        (Group::Train, rig.train.clone()),
        (Group::Test, rig.test.clone()),
    ];
    for (g, ds) in &groups {
        let r = evaluate_group(&scene, ds, *g, bg)?;
        r.write_csv(&out.join(metrics_file(*g)))?;
        println!("{:14} {:3} views  PSNR {:6.2} dB  SSIM {:.4}", g.as_str(), ds.len(), r.mean_psnr(), r.mean_ssim());
    }
    Ok(())
}
