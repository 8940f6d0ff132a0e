//! Depth-sorted front-to-back splatting and its exact reverse-mode gradient.
//!
//! The whole image shares one depth order (ascending camera-space depth, ties
//! broken by scene index). Each pixel blends the splats whose 3σ box contains
//! it; pixel `(x, y)` samples the image plane at the integer coordinates
//! `(x, y)`. Cost is `O(Σ footprint area)` per pass, which is fine for the
//! ≤128² images this crate targets.

mod project;

pub use project::{project_gaussian, Splat2D, COV2D_REGULARIZATION, CULL_SIGMA};

use nalgebra::Matrix2;

use crate::gaussian::{quat_to_rotmat, quat_to_rotmat_vjp, Scene, PARAM_COUNT};
use crate::geometry::{Camera, Mat3, Vec2, Vec3};
use crate::image::Image;

/// Per-splat opacity ceiling.
pub const MAX_ALPHA: f64 = 0.99;
/// Contributions below this opacity are skipped.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;

/// Forward render with everything the backward pass needs.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub image: Image,
    /// Visible splats in blending order.
    pub splats: Vec<Splat2D>,
    background: Vec3,
    bin_offsets: Vec<usize>,
    bin_splats: Vec<u32>,
    n_gaussians: usize,
}

/// Gradients of a scalar loss with respect to every Gaussian parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    /// Same flat layout as [`crate::gaussian::Gaussian::to_params`].
    pub params: Vec<[f64; PARAM_COUNT]>,
    /// Norm of the loss gradient with respect to the projected mean, in
    /// normalized device coordinates (pixel gradient times half the image
    /// size).
    pub mean2d_norm: Vec<f64>,
    /// Gaussians that survived culling in this view.
    pub visible: Vec<bool>,
}

impl Gradients {
    pub fn zeros(n: usize) -> Self {
        Gradients {
            params: vec![[0.0; PARAM_COUNT]; n],
            mean2d_norm: vec![0.0; n],
            visible: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Sums parameter gradients; visibility is OR-ed and the 2D norms added.
    pub fn accumulate(&mut self, other: &Gradients) {
        assert_eq!(self.len(), other.len());
        for i in 0..self.len() {
            for k in 0..PARAM_COUNT {
                self.params[i][k] += other.params[i][k];
            }
            self.mean2d_norm[i] += other.mean2d_norm[i];
            self.visible[i] |= other.visible[i];
        }
    }
}

pub fn render(scene: &Scene, cam: &Camera, background: Vec3) -> Image {
    render_forward(scene, cam, background).image
}

/// Gradients of `Σ dloss_dimage ⊙ render(scene, cam, background)`.
pub fn render_backward(scene: &Scene, cam: &Camera, background: Vec3, dloss_dimage: &Image) -> Gradients {
    render_forward(scene, cam, background).backward(scene, cam, dloss_dimage)
}

pub fn render_forward(scene: &Scene, cam: &Camera, background: Vec3) -> ForwardPass {
    let (w, h) = (cam.width(), cam.height());
    let mut splats: Vec<Splat2D> = scene
        .gaussians()
        .iter()
        .enumerate()
        .filter_map(|(i, g)| project_gaussian(g, i, cam))
        .collect();
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));

    // Per-pixel splat lists in blending order, stored as CSR.
    let mut counts = vec![0usize; w * h + 1];
    for s in &splats {
        for y in s.y_range.0..=s.y_range.1 {
            for x in s.x_range.0..=s.x_range.1 {
                counts[y * w + x + 1] += 1;
            }
        }
    }
    for i in 0..w * h {
        counts[i + 1] += counts[i];
    }
    let bin_offsets = counts;
    let mut cursor = bin_offsets.clone();
    let mut bin_splats = vec![0u32; bin_offsets[w * h]];
    for (si, s) in splats.iter().enumerate() {
        for y in s.y_range.0..=s.y_range.1 {
            for x in s.x_range.0..=s.x_range.1 {
                let p = y * w + x;
                bin_splats[cursor[p]] = si as u32;
                cursor[p] += 1;
            }
        }
    }

    let mut image = Image::new(w, h);
    {
        let data = image.data_mut();
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let px = Vec2::new(x as f64, y as f64);
                let mut color = Vec3::zeros();
                let mut trans = 1.0;
                for &si in &bin_splats[bin_offsets[p]..bin_offsets[p + 1]] {
                    let s = &splats[si as usize];
                    let Some((alpha, _, _)) = splat_alpha(s, &px) else {
                        continue;
                    };
                    color += s.color * (trans * alpha);
                    trans *= 1.0 - alpha;
                }
                color += background * trans;
                data[3 * p..3 * p + 3].copy_from_slice(color.as_slice());
            }
        }
    }

    ForwardPass {
        image,
        splats,
        background,
        bin_offsets,
        bin_splats,
        n_gaussians: scene.len(),
    }
}

/// `(alpha, gaussian value, clamped)` or `None` when below [`MIN_ALPHA`].
#[inline]
fn splat_alpha(s: &Splat2D, px: &Vec2) -> Option<(f64, f64, bool)> {
    let d = px - s.mean;
    let power = -0.5 * (s.conic[(0, 0)] * d.x * d.x + s.conic[(1, 1)] * d.y * d.y) - s.conic[(0, 1)] * d.x * d.y;
    if power > 0.0 {
        return None;
    }
    let g = power.exp();
    let raw = s.opacity * g;
    let clamped = raw > MAX_ALPHA;
    let alpha = if clamped { MAX_ALPHA } else { raw };
    if alpha < MIN_ALPHA {
        None
    } else {
        Some((alpha, g, clamped))
    }
}

struct Contribution {
    splat: usize,
    alpha: f64,
    gauss: f64,
    clamped: bool,
    trans: f64,
}

impl ForwardPass {
    pub fn backward(&self, scene: &Scene, cam: &Camera, dloss_dimage: &Image) -> Gradients {
        assert_eq!(scene.len(), self.n_gaussians, "scene changed between forward and backward");
        assert!(self.image.same_size(dloss_dimage), "loss gradient image size mismatch");
        let (w, h) = (self.image.width(), self.image.height());
        let n_splats = self.splats.len();

        // Per-splat accumulators in screen space.
        let mut d_color = vec![Vec3::zeros(); n_splats];
        let mut d_opacity = vec![0.0; n_splats];
        let mut d_mean2d = vec![Vec2::zeros(); n_splats];
        let mut d_conic = vec![Matrix2::<f64>::zeros(); n_splats];

        let grad = dloss_dimage.data();
        let mut contribs: Vec<Contribution> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let g_pix = Vec3::new(grad[3 * p], grad[3 * p + 1], grad[3 * p + 2]);
                if g_pix == Vec3::zeros() {
                    continue;
                }
                let px = Vec2::new(x as f64, y as f64);
                contribs.clear();
                let mut trans = 1.0;
                for &si in &self.bin_splats[self.bin_offsets[p]..self.bin_offsets[p + 1]] {
                    let s = &self.splats[si as usize];
                    let Some((alpha, gauss, clamped)) = splat_alpha(s, &px) else {
                        continue;
                    };
                    contribs.push(Contribution {
                        splat: si as usize,
                        alpha,
                        gauss,
                        clamped,
                        trans,
                    });
                    trans *= 1.0 - alpha;
                }

                // Light arriving from behind splat i, already attenuated by
                // everything in front of i+1.
                let mut behind = self.background * trans;
                for c in contribs.iter().rev() {
                    let s = &self.splats[c.splat];
                    d_color[c.splat] += g_pix * (c.trans * c.alpha);
                    let dc_dalpha = s.color * c.trans - behind / (1.0 - c.alpha);
                    behind += s.color * (c.trans * c.alpha);
                    if c.clamped {
                        continue;
                    }
                    let dl_dalpha = g_pix.dot(&dc_dalpha);
                    d_opacity[c.splat] += dl_dalpha * c.gauss;
                    let dl_dpower = dl_dalpha * s.opacity * c.gauss;
                    let d = px - s.mean;
                    d_mean2d[c.splat] += (s.conic * d) * dl_dpower;
                    d_conic[c.splat] += (d * d.transpose()) * (-0.5 * dl_dpower);
                }
            }
        }

        let mut out = Gradients::zeros(self.n_gaussians);
        let k = &cam.intrinsics;
        let gaussians = scene.gaussians();
        for (si, s) in self.splats.iter().enumerate() {
            let i = s.index;
            let g = &gaussians[i];
            out.visible[i] = true;
            let dm = d_mean2d[si];
            out.mean2d_norm[i] = Vec2::new(dm.x * 0.5 * w as f64, dm.y * 0.5 * h as f64).norm();

            // conic = cov⁻¹
            let d_cov2 = -(s.conic * d_conic[si] * s.conic);
            // cov2 = JW Σ (JW)ᵀ + reg
            let d_cov3 = s.jw.transpose() * d_cov2 * s.jw;
            let d_jw = d_cov2 * s.jw * s.cov3d * 2.0;
            let d_j = d_jw * cam.rotation.transpose();

            let t = s.t_cam;
            let iz = 1.0 / t.z;
            let iz2 = iz * iz;
            let iz3 = iz2 * iz;
            let mut d_t = Vec3::new(
                -k.fx * iz2 * d_j[(0, 2)],
                -k.fy * iz2 * d_j[(1, 2)],
                -k.fx * iz2 * d_j[(0, 0)] + 2.0 * k.fx * t.x * iz3 * d_j[(0, 2)] - k.fy * iz2 * d_j[(1, 1)]
                    + 2.0 * k.fy * t.y * iz3 * d_j[(1, 2)],
            );
            d_t.x += dm.x * k.fx * iz;
            d_t.y += dm.y * k.fy * iz;
            d_t.z += -dm.x * k.fx * t.x * iz2 - dm.y * k.fy * t.y * iz2;
            let d_mean = cam.rotation.transpose() * d_t;

            // Σ = M Mᵀ with M = R·diag(s)
            let rot = quat_to_rotmat(&g.rotation);
            let scale = g.scale();
            let m = rot * Mat3::from_diagonal(&scale);
            let d_m = d_cov3 * m * 2.0;
            let mut d_log_scale = Vec3::zeros();
            let mut d_rot = Mat3::zeros();
            for c in 0..3 {
                let mut ds = 0.0;
                for r in 0..3 {
                    ds += d_m[(r, c)] * rot[(r, c)];
                    d_rot[(r, c)] = d_m[(r, c)] * scale[c];
                }
                d_log_scale[c] = ds * scale[c];
            }
            let d_q = quat_to_rotmat_vjp(&g.rotation, &d_rot);

            let alpha = s.opacity;
            let p = &mut out.params[i];
            p[0..3].copy_from_slice(d_mean.as_slice());
            p[3..6].copy_from_slice(d_log_scale.as_slice());
            p[6..10].copy_from_slice(&d_q);
            for c in 0..3 {
                p[10 + c] = if (0.0..=1.0).contains(&g.color[c]) {
                    d_color[si][c]
                } else {
                    0.0
                };
            }
            p[13] = d_opacity[si] * alpha * (1.0 - alpha);
        }
        out
    }

    pub fn background(&self) -> Vec3 {
        self.background
    }

    /// Per-pixel transmittance after each blended splat, front to back.
    /// Used by tests and diagnostics.
    pub fn transmittance_trace(&self, x: usize, y: usize) -> Vec<f64> {
        let w = self.image.width();
        let p = y * w + x;
        let px = Vec2::new(x as f64, y as f64);
        let mut trans = 1.0;
        let mut out = vec![trans];
        for &si in &self.bin_splats[self.bin_offsets[p]..self.bin_offsets[p + 1]] {
            if let Some((alpha, _, _)) = splat_alpha(&self.splats[si as usize], &px) {
                trans *= 1.0 - alpha;
                out.push(trans);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{inverse_sigmoid, Gaussian};
    use crate::geometry::{Intrinsics, DEFAULT_NEAR};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(size: u32) -> Camera {
        Camera::new(
            Intrinsics {
                width: size,
                height: size,
                fx: size as f64,
                fy: size as f64,
                cx: size as f64 / 2.0,
                cy: size as f64 / 2.0,
            },
            Mat3::identity(),
            Vec3::new(0.0, 0.0, 3.0),
            DEFAULT_NEAR,
        )
        .unwrap()
    }

    fn random_scene(n: usize, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs = (0..n)
            .map(|_| Gaussian {
                mean: Vec3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)),
                log_scale: Vec3::new(rng.random_range(-2.5..-1.2), rng.random_range(-2.5..-1.2), rng.random_range(-2.5..-1.2)),
                rotation: [rng.random_range(0.5..1.0), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
                color: Vec3::new(rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)),
                opacity_logit: rng.random_range(-1.5..1.0),
            })
            .collect();
        Scene::new(gs, 1.0).unwrap()
    }

    #[test]
    fn empty_scene_is_background() {
        let s = Scene::new(vec![], 1.0).unwrap();
        let bg = Vec3::new(0.2, 0.5, 0.7);
        let img = render(&s, &cam(8), bg);
        assert!(img.data().chunks(3).all(|p| p == bg.as_slice()));
    }

    #[test]
    fn single_opaque_splat_clamps() {
        let mut g = Gaussian::isotropic(Vec3::zeros(), 0.1, Vec3::new(1.0, 0.0, 0.0), 0.5);
        g.opacity_logit = 50.0;
        let s = Scene::new(vec![g], 1.0).unwrap();
        let img = render(&s, &cam(16), Vec3::zeros());
        let p = img.pixel(8, 8);
        assert!((p[0] - 0.99).abs() < 1e-12 && p[1] == 0.0 && p[2] == 0.0);
    }

    #[test]
    fn two_term_blend() {
        // alpha 0.5 at the shared centre: opacity 0.5 and kernel value 1.
        let mut front = Gaussian::isotropic(Vec3::new(0.0, 0.0, -0.5), 0.1, Vec3::new(1.0, 0.0, 0.0), 0.5);
        let mut back = Gaussian::isotropic(Vec3::new(0.0, 0.0, 0.5), 0.1, Vec3::new(0.0, 1.0, 0.0), 0.5);
        front.opacity_logit = inverse_sigmoid(0.5);
        back.opacity_logit = inverse_sigmoid(0.5);
        let s = Scene::new(vec![back, front], 1.0).unwrap();
        let img = render(&s, &cam(16), Vec3::zeros());
        let p = img.pixel(8, 8);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn outputs_bounded_and_transmittance_monotone() {
        let s = random_scene(40, 3);
        let c = cam(24);
        let fwd = render_forward(&s, &c, Vec3::repeat(1.0));
        assert!(fwd.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        for y in 0..24 {
            for x in 0..24 {
                let tr = fwd.transmittance_trace(x, y);
                assert!(tr.windows(2).all(|w| w[1] <= w[0]));
                assert!(tr.iter().all(|t| (0.0..=1.0).contains(t)));
            }
        }
    }

    #[test]
    fn deterministic_and_permutation_invariant() {
        let s = random_scene(30, 8);
        let c = cam(20);
        let a = render(&s, &c, Vec3::repeat(1.0));
        let b = render(&s, &c, Vec3::repeat(1.0));
        assert_eq!(a, b);
        let mut gs = s.gaussians().to_vec();
        gs.reverse();
        let p = Scene::new(gs, 1.0).unwrap();
        let r = render(&p, &c, Vec3::repeat(1.0));
        for (x, y) in a.data().iter().zip(r.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let s = random_scene(10, 1);
        let c = cam(16);
        let g = render_backward(&s, &c, Vec3::repeat(1.0), &Image::new(16, 16));
        assert!(g.params.iter().flatten().all(|v| *v == 0.0));
        assert!(g.mean2d_norm.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_splat_color_gradient_l1() {
        let g = Gaussian {
            mean: Vec3::new(0.05, -0.03, 0.1),
            log_scale: Vec3::new(-1.8, -2.0, -1.6),
            rotation: [0.9, 0.1, -0.2, 0.3],
            color: Vec3::new(0.3, 0.6, 0.45),
            opacity_logit: 0.2,
        };
        let c = cam(16);
        let bg = Vec3::repeat(1.0);
        let target = Image::filled(16, 16, Vec3::new(0.2, 0.5, 0.9));
        let loss = |s: &Scene| crate::metrics::l1(&render(s, &c, bg), &target).unwrap();
        let scene = Scene::new(vec![g], 1.0).unwrap();
        let img = render(&scene, &c, bg);
        let n = img.data().len() as f64;
        let dl: Vec<f64> = img
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| (a - b).signum() / n)
            .collect();
        let grads = render_backward(&scene, &c, bg, &Image::from_data(16, 16, dl).unwrap());
        for k in 10..13 {
            let h = 1e-4;
            let mut p = g.to_params();
            p[k] += h;
            let lp = loss(&Scene::new(vec![Gaussian::from_params(&p)], 1.0).unwrap());
            p[k] -= 2.0 * h;
            let lm = loss(&Scene::new(vec![Gaussian::from_params(&p)], 1.0).unwrap());
            let fd = (lp - lm) / (2.0 * h);
            let a = grads.params[0][k];
            assert!((a - fd).abs() <= 1e-4 * a.abs().max(fd.abs()), "k={k} analytic={a} fd={fd}");
        }
    }

    #[test]
    fn full_parameter_gradient_matches_finite_differences() {
        let scene = random_scene(20, 42);
        let c = cam(16);
        let bg = Vec3::new(0.9, 0.8, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let weights: Vec<f64> = (0..16 * 16 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let objective = |s: &Scene| -> f64 {
            render(s, &c, bg).data().iter().zip(&weights).map(|(a, b)| a * b).sum()
        };
        let grads = render_backward(&scene, &c, bg, &Image::from_data(16, 16, weights.clone()).unwrap());
        let (mut ok, mut total) = (0, 0);
        for i in 0..scene.len() {
            for k in 0..PARAM_COUNT {
                let h = 1e-6;
                let mut sp = scene.clone();
                let mut p = sp.gaussians()[i].to_params();
                p[k] += h;
                sp.gaussians_mut()[i] = Gaussian::from_params(&p);
                let fp = objective(&sp);
                p[k] -= 2.0 * h;
                sp.gaussians_mut()[i] = Gaussian::from_params(&p);
                let fm = objective(&sp);
                let fd = (fp - fm) / (2.0 * h);
                let a = grads.params[i][k];
                total += 1;
                if (a - fd).abs() <= (1e-3 * a.abs().max(fd.abs())).max(1e-6) {
                    ok += 1;
                }
            }
        }
        assert!(ok as f64 >= 0.99 * total as f64, "{ok}/{total} coordinates agree");
    }
}
