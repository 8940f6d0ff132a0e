//! Compare the analytic backward pass against central differences on a
//! random 20-Gaussian scene.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splatlab::gaussian::{Gaussian, Scene, PARAM_COUNT};
use splatlab::geometry::{Camera, Intrinsics, Vec3};
use splatlab::image::Image;
use splatlab::render::{render, render_backward};

fn main() -> anyhow::Result<()> {
    let scene = Scene::init_random(20, 0.6, 5)?;
    let cam = Camera::look_at(
        Intrinsics::from_fov_x(16, 16, 0.9),
        Vec3::new(0.3, -0.4, -2.5),
        Vec3::zeros(),
        Vec3::new(0.0, -1.0, 0.0),
    )?;
    let bg = Vec3::new(0.9, 0.8, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // objective: <weights, image>, so d objective / d image = weights
    let weights: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |s: &Scene| -> f64 { render(s, &cam, bg).data().iter().zip(&weights).map(|(a, b)| a * b).sum() };
    let grads = render_backward(&scene, &cam, bg, &Image::from_data(16, 16, weights.clone())?);

    let names = ["mean", "mean", "mean", "lscale", "lscale", "lscale", "q", "q", "q", "q", "color", "color", "color", "opacity"];
    let mut worst = [0.0f64; PARAM_COUNT];
    let (mut ok, mut total) = (0, 0);
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
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            worst[k] = worst[k].max(err);
            total += 1;
            if (a - fd).abs() <= (1e-3 * a.abs().max(fd.abs())).max(1e-6) {
                ok += 1;
            }
        }
    }
    for k in 0..PARAM_COUNT {
        println!("param {k:2} ({:7}) worst relative error {:.2e}", names[k], worst[k]);
    }
    println!("{ok}/{total} coordinates within tolerance");
    Ok(())
}
