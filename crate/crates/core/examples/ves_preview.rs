//! List the stabilization viewpoints around an attack camera and render
//! them from the reference scene.
//!
//! cargo run --example ves_preview -- [angles, e.g. 13,15] [out.png]

use std::path::PathBuf;

use splatlab::harness::{RigSpec, ToyRig};
use splatlab::image::Image;
use splatlab::ves::{build_stab_dataset, generate_offsets, ves_viewpoints, AngleSet};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let angles = AngleSet::parse(&args.next().unwrap_or_else(|| "13,15".into()))?;
    let out = args.next().map_or_else(|| PathBuf::from("ves_preview.png"), PathBuf::from);
    let rig = ToyRig::build(&RigSpec::default(), 0)?;
    let attack = rig.attack_cameras[0];
    let cams = ves_viewpoints(&attack, &angles)?;
    for ((pitch, yaw), c) in generate_offsets(&angles).iter().zip(&cams) {
        let moved = (c.center() - attack.center()).norm();
        println!("pitch {pitch:+6.1}  yaw {yaw:+6.1}  center moved {moved:.3}");
    }
    let stab = build_stab_dataset(&rig.reference, &cams, rig.background);
    let rows: Vec<Vec<&Image>> = stab.views.chunks(8).map(|c| c.iter().map(|v| &v.image).collect()).collect();
    Image::grid(&rows)?.save_png(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
