//! Acceptance suite: one PASS/FAIL line per criterion, then a summary.
//! Exits nonzero on failure only when ACCEPTANCE_STRICT=1.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use splatlab::dataset::ViewDataset;
use splatlab::gaussian::{Gaussian, Scene, PARAM_COUNT};
use splatlab::geometry::{perturb_camera, rot_x, rot_y, Camera, Intrinsics, Mat3, Vec3};
use splatlab::harness::{
    checkerboard, render_dataset, run_experiment, ExperimentManifest, RigSpec, ToyRig, Trainer, MANIFEST_FILE,
};
use splatlab::image::Image;
use splatlab::metrics::{evaluate_group, psnr, psnr_from_mse, ssim, training_loss, Group};
use splatlab::render::{render, render_backward};
use splatlab::train::{
    ipa_baseline_train, plan_three_stage, three_stage_poison, train_clean, AttackSpec, PoisonRun, TrainConfig,
};
use splatlab::ves::{build_stab_dataset, generate_offsets, ves_viewpoints_multi, AngleSet};

struct Outcome {
    pass: bool,
    detail: String,
}

struct Suite {
    results: BTreeMap<u8, (&'static str, Outcome)>,
}

impl Suite {
    fn record(&mut self, id: u8, name: &'static str, pass: bool, detail: String) {
        println!("criterion {id:2} {:4} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.insert(id, (name, Outcome { pass, detail }));
    }
}

/// Mean PSNR of `scene` on the attack, train, test and stabilization groups.
#[derive(Clone, Copy, Debug)]
struct Scores {
    attack: f64,
    train: f64,
    test: f64,
    stab: f64,
}

fn board(i: usize, w: usize, h: usize) -> Image {
    let colors = [
        (Vec3::new(0.9, 0.1, 0.1), Vec3::new(0.1, 0.1, 0.9)),
        (Vec3::new(0.1, 0.8, 0.2), Vec3::new(0.9, 0.9, 0.1)),
        (Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.9, 0.5, 0.1)),
    ];
    let (a, b) = colors[i % colors.len()];
    checkerboard(w, h, 4 + 2 * i, a, b).unwrap()
}

fn attack_spec(rig: &ToyRig, n: usize) -> AttackSpec {
    AttackSpec::new(
        rig.attack_cameras[..n]
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, board(i, c.width(), c.height())))
            .collect(),
    )
    .unwrap()
}

fn score(scene: &Scene, clean: &Scene, attack: &AttackSpec, rig: &ToyRig) -> Scores {
    let bg = rig.background;
    let stab_cams = ves_viewpoints_multi(&attack.cameras(), &AngleSet::new(vec![13.0, 15.0]).unwrap()).unwrap();
    let stab = build_stab_dataset(clean, &stab_cams, bg);
    let p = |g, ds: &ViewDataset| evaluate_group(scene, ds, g, bg).unwrap().mean_psnr();
    Scores {
        attack: p(Group::Attack, &attack.to_dataset()),
        train: p(Group::Train, &rig.train),
        test: p(Group::Test, &rig.test),
        stab: p(Group::Stabilization, &stab),
    }
}

fn fmt(s: &Scores) -> String {
    format!("attack {:.2} / stab {:.2} / train {:.2} / test {:.2} dB", s.attack, s.stab, s.train, s.test)
}

fn orthonormal_error(r: &Mat3) -> (f64, f64) {
    ((r.transpose() * r - Mat3::identity()).abs().max(), (r.determinant() - 1.0).abs())
}

fn criterion_1(suite: &mut Suite) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let intr = Intrinsics::from_fov_x(64, 48, 0.8);
    let (mut worst_orth, mut worst_det, mut moved) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let b = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let eye = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.3..5.0));
        let cam = Camera::look_at(intr, eye, Vec3::zeros(), Vec3::z()).unwrap();
        let p = perturb_camera(&cam, a, b).unwrap();
        for r in [rot_x(a).unwrap(), rot_y(b).unwrap(), p.rotation] {
            let (o, d) = orthonormal_error(&r);
            worst_orth = worst_orth.max(o);
            worst_det = worst_det.max(d);
        }
        let same = p.translation.iter().zip(cam.translation.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        if !same || p.intrinsics != cam.intrinsics {
            moved += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst_orth <= 1e-9 && worst_det <= 1e-9 && moved == 0 && secs < 5.0;
    suite.record(
        1,
        "geometry suite",
        pass,
        format!(
            "1000 cases, max |RtR-I| {worst_orth:.1e} (<= 1e-9), max |det-1| {worst_det:.1e} (<= 1e-9), translation changed in {moved} (0), {secs:.2} s (< 5)"
        ),
    );
}

fn criterion_2(suite: &mut Suite, stab_before: u64, run: &PoisonRun, rerender: u64) {
    let offsets = generate_offsets(&AngleSet::new(vec![13.0, 15.0]).unwrap());
    let mut brute = HashSet::new();
    for d in [13.0f64, 15.0] {
        for p in [-d, 0.0, d] {
            for y in [-d, 0.0, d] {
                if p != 0.0 || y != 0.0 {
                    brute.insert((p.to_bits(), y.to_bits()));
                }
            }
        }
    }
    let got: HashSet<(u64, u64)> = offsets.iter().map(|(p, y)| (p.to_bits(), y.to_bits())).collect();
    let after = run.plan.stab.fingerprint();
    let pass = offsets.len() == 16 && got == brute && stab_before == after && after == rerender;
    suite.record(
        2,
        "stabilization enumeration",
        pass,
        format!(
            "{} pairs (16), set equal to brute force: {}, ground-truth hash before/after/re-render {stab_before:016x}/{after:016x}/{rerender:016x}",
            offsets.len(),
            got == brute
        ),
    );
}

fn random_gaussians(n: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gs = (0..n)
        .map(|_| {
            let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            Gaussian {
                mean: Vec3::from_fn(|_, _| rng.random_range(-0.5..0.5)),
                log_scale: Vec3::from_fn(|_, _| rng.random_range(-2.6..-1.4)),
                rotation: q,
                color: Vec3::from_fn(|_, _| rng.random_range(0.05..0.95)),
                opacity_logit: rng.random_range(-1.5..2.0),
            }
        })
        .collect();
    Scene::new(gs, 1.0).unwrap()
}

fn criterion_3(suite: &mut Suite) {
    let t = Instant::now();
    let scene = random_gaussians(20, 3);
    let cam = Camera::look_at(
        Intrinsics::from_fov_x(16, 16, 0.9),
        Vec3::new(0.4, -0.3, -2.4),
        Vec3::zeros(),
        Vec3::new(0.0, -1.0, 0.0),
    )
    .unwrap();
    let bg = Vec3::new(0.9, 0.85, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let weights: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |s: &Scene| -> f64 { render(s, &cam, bg).data().iter().zip(&weights).map(|(a, b)| a * b).sum() };
    let grads = render_backward(&scene, &cam, bg, &Image::from_data(16, 16, weights.clone()).unwrap());
    let (mut ok, mut total) = (0usize, 0usize);
    for i in 0..scene.len() {
        for k in 0..PARAM_COUNT {
            let h = 1e-6;
            let mut s = scene.clone();
            let mut p = s.gaussians()[i].to_params();
            p[k] += h;
            s.gaussians_mut()[i] = Gaussian::from_params(&p);
            let fp = objective(&s);
            p[k] -= 2.0 * h;
            s.gaussians_mut()[i] = Gaussian::from_params(&p);
            let fd = (fp - objective(&s)) / (2.0 * h);
            let a = grads.params[i][k];
            total += 1;
            if (a - fd).abs() <= (1e-3 * a.abs().max(fd.abs())).max(1e-6) {
                ok += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let frac = ok as f64 / total as f64;
    suite.record(
        3,
        "gradient oracle",
        frac >= 0.99 && secs < 60.0,
        format!("{ok}/{total} coordinates agree ({:.2}% >= 99%), {secs:.2} s (< 60)", 100.0 * frac),
    );
}

fn criterion_4(suite: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data: Vec<f64> = (0..32 * 24 * 3).map(|_| rng.random()).collect();
    let x = Image::from_data(32, 24, data.clone()).unwrap();
    let y = Image::from_data(32, 24, data).unwrap();
    let s = ssim(&x, &y).unwrap();
    let p = psnr_from_mse(0.01);
    let losses: Vec<f64> = [0.0, 0.2, 1.0].iter().map(|l| training_loss(&x, &y, *l).unwrap().0).collect();
    let pass = (s - 1.0).abs() <= 1e-12 && p == 20.0 && losses.iter().all(|l| *l == 0.0);
    suite.record(
        4,
        "metric unit checks",
        pass,
        format!("ssim(x,x) = {s} (1 +- 1e-12), psnr at mse 0.01 = {p} (20 exactly), loss(x,x) for lambda 0/0.2/1 = {losses:?}"),
    );
}

fn main() {
    let mut suite = Suite { results: BTreeMap::new() };
    let total = Instant::now();

    criterion_1(&mut suite);
    criterion_3(&mut suite);
    criterion_4(&mut suite);

    let rig = ToyRig::build(&RigSpec::default(), 0).unwrap();
    let bg = rig.background;
    let config = TrainConfig::desk_scale();

    // 5: clean model from random initialization
    let t = Instant::now();
    let init = Scene::init_random(200, 1.0, 0).unwrap();
    let (clean, _) = train_clean(&init, &rig.train, 5000, &config, &mut |_, _| Ok(())).unwrap();
    let clean_train = evaluate_group(&clean, &rig.train, Group::Train, bg).unwrap().mean_psnr();
    let clean_test = evaluate_group(&clean, &rig.test, Group::Test, bg).unwrap().mean_psnr();
    suite.record(
        5,
        "clean training convergence",
        clean_train >= 25.0,
        format!(
            "5000 steps, {} Gaussians, train {clean_train:.2} dB (>= 25), test {clean_test:.2} dB, {:.0} s",
            clean.len(),
            t.elapsed().as_secs_f64()
        ),
    );

    // 6 and 2: one backdoor with stabilization
    let one = attack_spec(&rig, 1);
    let stab_before = plan_three_stage(&clean, &one, &config).unwrap().stab.fingerprint();
    let t = Instant::now();
    let ves_run = three_stage_poison(&clean, &one, &rig.train, &config).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ves = score(&ves_run.scene, &clean, &one, &rig);
    let rerender =
        build_stab_dataset(&clean, &ves_viewpoints_multi(&one.cameras(), &config.angles).unwrap(), bg).fingerprint();
    criterion_2(&mut suite, stab_before, &ves_run, rerender);
    let pass = ves.attack >= 30.0 && (clean_train - ves.train) <= 2.0 && ves.stab >= 25.0 && secs < 900.0;
    suite.record(
        6,
        "backdoor efficacy",
        pass,
        format!(
            "{} (attack >= 30, train within 2 of clean {clean_train:.2}, stab >= 25), {secs:.0} s (< 900)",
            fmt(&ves)
        ),
    );

    // 7: same attack without stabilization views
    let no_ves_cfg = TrainConfig {
        angles: AngleSet::empty(),
        ..config.clone()
    };
    let no_ves_run = three_stage_poison(&clean, &one, &rig.train, &no_ves_cfg).unwrap();
    let no_ves = score(&no_ves_run.scene, &clean, &one, &rig);
    let pass = no_ves.stab <= ves.stab - 3.0 && no_ves.train <= ves.train + 0.5 && no_ves.test <= ves.test + 0.5;
    suite.record(
        7,
        "stabilization ablation",
        pass,
        format!(
            "without: {} vs with: {} (stab at least 3 lower, train/test at most 0.5 higher)",
            fmt(&no_ves),
            fmt(&ves)
        ),
    );

    // 8: baseline under the same budgets
    let base_run = ipa_baseline_train(&clean, &one, &rig.train, &config).unwrap();
    let base = score(&base_run.scene, &clean, &one, &rig);
    suite.record(
        8,
        "baseline dominance",
        ves.attack - base.attack >= 5.0,
        format!(
            "attack view {:.2} vs baseline {:.2} dB, margin {:.2} (>= 5); baseline {}",
            ves.attack,
            base.attack,
            ves.attack - base.attack,
            fmt(&base)
        ),
    );

    // 9: clipping contract over one epoch
    let one_epoch = TrainConfig { epochs: 1, ..config.clone() };
    let clipped = ipa_baseline_train(&clean, &one, &rig.train, &one_epoch).unwrap();
    let (mut worst, mut changed) = (0.0f64, 0usize);
    for (w, o) in clipped.working.views.iter().zip(&rig.train.views) {
        for (a, b) in w.image.data().iter().zip(o.image.data()) {
            worst = worst.max((a - b).abs());
            changed += usize::from(a != b);
        }
    }
    let frozen = ipa_baseline_train(&clean, &one, &rig.train, &TrainConfig { epsilon: 0.0, ..one_epoch }).unwrap();
    let eps = config.epsilon;
    let identical = frozen.working.fingerprint() == rig.train.fingerprint();
    suite.record(
        9,
        "baseline clipping contract",
        worst <= eps + 1e-12 && identical,
        format!("{changed} pixels changed, max |V_new - V_ori| {worst:.6} (<= {eps:.6} + 1e-12), zero budget leaves dataset identical: {identical}"),
    );

    // 10: several simultaneous backdoors
    let mut rows = vec![(1usize, ves_run.scene.clone(), one.clone())];
    for n in [2, 3] {
        let spec = attack_spec(&rig, n);
        rows.push((n, three_stage_poison(&clean, &spec, &rig.train, &config).unwrap().scene, spec));
    }
    let mut detail = Vec::new();
    let mut all_hit = true;
    let mut normal = Vec::new();
    for (n, scene, spec) in &rows {
        let per: Vec<f64> = spec
            .pairs()
            .iter()
            .map(|(c, img)| psnr(&render(scene, c, bg), img).unwrap())
            .collect();
        all_hit &= per.iter().all(|p| *p >= 25.0);
        let s = score(scene, &clean, spec, &rig);
        let non_attack = 0.5 * (s.train + s.test);
        normal.push(non_attack);
        detail.push(format!(
            "n={n}: attack {} train/test mean {non_attack:.2}",
            per.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join("/")
        ));
    }
    let drop = normal[0] - normal[2];
    suite.record(
        10,
        "multi-backdoor trend",
        all_hit && drop <= 3.0,
        format!("{}; every attack >= 25, train/test drop n=1 to n=3 {drop:.2} (<= 3)", detail.join("; ")),
    );

    // 11: byte-identical outputs for identical manifests
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    render_dataset(&rig.reference, &rig.entries, bg, &d.join("data")).unwrap();
    clean.save(&d.join("clean.txt")).unwrap();
    for (i, c) in one.pairs().iter().enumerate() {
        c.1.save_png(&d.join(format!("board_{i}.png"))).unwrap();
    }
    let manifest = |out: &str| -> ExperimentManifest {
        let text = format!(
            "trainer = \"three_stage\"\ncameras = \"data/{MANIFEST_FILE}\"\nclean_scene = \"clean.txt\"\n\
             attack_images = [\"board_0.png\", \"board_0.png\", \"board_0.png\"]\nout_dir = \"{out}\"\nseed = 3\n\n\
             [config]\nepochs = 6\ncheckpoint_every = 2\ndensify_budget = 20000\ntau_g = 2e-3\n"
        );
        let p = d.join(format!("{out}.toml"));
        std::fs::write(&p, text).unwrap();
        ExperimentManifest::load(&p).unwrap()
    };
    let (m1, m2) = (manifest("run1"), manifest("run2"));
    assert_eq!(m1.trainer, Trainer::ThreeStage);
    run_experiment(&m1).unwrap();
    run_experiment(&m2).unwrap();
    let (files, mismatched) = compare_trees(&d.join("run1"), &d.join("run2"));
    suite.record(
        11,
        "determinism",
        files > 0 && mismatched.is_empty(),
        format!("{files} files compared, mismatched: {mismatched:?}"),
    );

    println!("\nsummary ({:.0} s):", total.elapsed().as_secs_f64());
    let mut passed = 0;
    for (id, (name, o)) in &suite.results {
        passed += usize::from(o.pass);
        println!("  {id:2} {:4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{passed}/{} criteria passed", suite.results.len());
    if passed < suite.results.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

/// Number of files under `a`, and the relative paths whose bytes differ in
/// (or are missing from) `b`.
fn compare_trees(a: &Path, b: &Path) -> (usize, Vec<String>) {
    let mut stack = vec![a.to_path_buf()];
    let (mut files, mut bad) = (0, Vec::new());
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            files += 1;
            let rel = p.strip_prefix(a).unwrap();
            if std::fs::read(&p).ok() != std::fs::read(b.join(rel)).ok() {
                bad.push(rel.display().to_string());
            }
        }
    }
    (files, bad)
}
