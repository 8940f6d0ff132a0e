use nalgebra::{Matrix2, Matrix2x3};

use crate::gaussian::{covariance_unchecked, Gaussian};
use crate::geometry::{jacobian_unchecked, Camera, Mat3, Vec2, Vec3};

/// Added to the diagonal of every projected covariance (pixels²).
pub const COV2D_REGULARIZATION: f64 = 0.3;

/// Footprint half-size in standard deviations.
pub const CULL_SIGMA: f64 = 3.0;

/// A Gaussian after projection to the image plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Splat2D {
    pub index: usize,
    /// Pixel coordinates of the projected mean.
    pub mean: Vec2,
    /// Regularized 2D covariance.
    pub cov: Matrix2<f64>,
    /// Inverse of `cov`.
    pub conic: Matrix2<f64>,
    pub depth: f64,
    pub opacity: f64,
    pub color: Vec3,
    /// Inclusive pixel bounds of the footprint, clipped to the image.
    pub x_range: (usize, usize),
    pub y_range: (usize, usize),
    // Intermediates reused by the backward pass.
    pub(crate) t_cam: Vec3,
    pub(crate) cov3d: Mat3,
    pub(crate) jw: Matrix2x3<f64>,
}

/// `None` when the Gaussian is behind the near plane or its footprint misses
/// the image.
pub fn project_gaussian(g: &Gaussian, index: usize, cam: &Camera) -> Option<Splat2D> {
    let t = cam.to_camera(&g.mean);
    if !(t.z > cam.near) {
        return None;
    }
    let k = &cam.intrinsics;
    let cov3d = covariance_unchecked(&g.log_scale, &g.rotation);
    let jw = jacobian_unchecked(k, &t) * cam.rotation;
    let cov = jw * cov3d * jw.transpose() + Matrix2::identity() * COV2D_REGULARIZATION;
    let det = cov.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let conic = Matrix2::new(cov[(1, 1)], -cov[(0, 1)], -cov[(1, 0)], cov[(0, 0)]) / det;

    let mean = Vec2::new(k.fx * t.x / t.z + k.cx, k.fy * t.y / t.z + k.cy);
    let mid = 0.5 * (cov[(0, 0)] + cov[(1, 1)]);
    let half_diff = 0.5 * (cov[(0, 0)] - cov[(1, 1)]);
    let lambda_max = mid + (half_diff * half_diff + cov[(0, 1)] * cov[(0, 1)]).sqrt();
    let radius = CULL_SIGMA * lambda_max.sqrt();

    let x_range = pixel_span(mean.x - radius, mean.x + radius, k.width as usize)?;
    let y_range = pixel_span(mean.y - radius, mean.y + radius, k.height as usize)?;

    Some(Splat2D {
        index,
        mean,
        cov,
        conic,
        depth: t.z,
        opacity: g.opacity(),
        color: g.render_color(),
        x_range,
        y_range,
        t_cam: t,
        cov3d,
        jw,
    })
}

fn pixel_span(lo: f64, hi: f64, size: usize) -> Option<(usize, usize)> {
    if !(lo.is_finite() && hi.is_finite()) {
        return None;
    }
    let lo = lo.ceil().max(0.0);
    let hi = hi.floor().min(size as f64 - 1.0);
    if lo > hi {
        None
    } else {
        Some((lo as usize, hi as usize))
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, DEFAULT_NEAR};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam() -> Camera {
        Camera::new(
            Intrinsics {
                width: 64,
                height: 64,
                fx: 80.0,
                fy: 80.0,
                cx: 32.0,
                cy: 32.0,
            },
            Mat3::identity(),
            Vec3::zeros(),
            DEFAULT_NEAR,
        )
        .unwrap()
    }

    #[test]
    fn isotropic_on_axis() {
        let (s, z) = (0.05, 2.0);
        let g = Gaussian::isotropic(Vec3::new(0.0, 0.0, z), s, Vec3::zeros(), 0.5);
        let sp = project_gaussian(&g, 0, &cam()).unwrap();
        let expect = (80.0 * s / z).powi(2) + COV2D_REGULARIZATION;
        assert!((sp.cov - Matrix2::identity() * expect).abs().max() < 1e-6);
        assert_eq!(sp.mean, Vec2::new(32.0, 32.0));
        assert!((sp.conic * sp.cov - Matrix2::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn near_and_offscreen_culled() {
        let g = Gaussian::isotropic(Vec3::new(0.0, 0.0, 0.005), 0.05, Vec3::zeros(), 0.5);
        assert!(project_gaussian(&g, 0, &cam()).is_none());
        let g = Gaussian::isotropic(Vec3::new(0.0, 0.0, -1.0), 0.05, Vec3::zeros(), 0.5);
        assert!(project_gaussian(&g, 0, &cam()).is_none());
        let g = Gaussian::isotropic(Vec3::new(50.0, 0.0, 1.0), 0.01, Vec3::zeros(), 0.5);
        assert!(project_gaussian(&g, 0, &cam()).is_none());
    }

    #[test]
    fn matches_dense_matrix_oracle() {
        fn mm(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
            let (n, k, m) = (a.len(), b.len(), b[0].len());
            let mut c = vec![vec![0.0; m]; n];
            for i in 0..n {
                for j in 0..m {
                    for l in 0..k {
                        c[i][j] += a[i][l] * b[l][j];
                    }
                }
            }
            c
        }
        fn tr(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
            (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let w = *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), rng.random_range(-0.3..0.3)).matrix();
            let camera = Camera::new(cam().intrinsics, w, Vec3::new(0.0, 0.0, 4.0), DEFAULT_NEAR).unwrap();
            let g = Gaussian {
                mean: Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)),
                log_scale: Vec3::new(rng.random_range(-4.0..-1.0), rng.random_range(-4.0..-1.0), rng.random_range(-4.0..-1.0)),
                rotation: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.5],
                color: Vec3::zeros(),
                opacity_logit: 0.0,
            };
            let sp = project_gaussian(&g, 0, &camera).unwrap();
            let t = camera.to_camera(&g.mean);
            let (fx, fy) = (80.0, 80.0);
            let j = vec![
                vec![fx / t.z, 0.0, -fx * t.x / (t.z * t.z)],
                vec![0.0, fy / t.z, -fy * t.y / (t.z * t.z)],
            ];
            let wv: Vec<Vec<f64>> = (0..3).map(|r| (0..3).map(|c| w[(r, c)]).collect()).collect();
            let sig = covariance_unchecked(&g.log_scale, &g.rotation);
            let sv: Vec<Vec<f64>> = (0..3).map(|r| (0..3).map(|c| sig[(r, c)]).collect()).collect();
            let jw = mm(&j, &wv);
            let out = mm(&mm(&jw, &sv), &tr(&jw));
            for r in 0..2 {
                for c in 0..2 {
                    let reg = if r == c { COV2D_REGULARIZATION } else { 0.0 };
                    assert!((sp.cov[(r, c)] - (out[r][c] + reg)).abs() < 1e-10);
                }
            }
        }
    }
}
