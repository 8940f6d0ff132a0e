//! Trainable anisotropic Gaussians and the scene container.
//!
//! Every parameter is stored unconstrained: scale as `log_scale`, opacity as a
//! logit, rotation as an unnormalized quaternion `(w, x, y, z)`. The
//! activations (`exp`, `sigmoid`, normalization, color clamp) are applied on
//! use.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::io_util::write_atomic;

/// Number of scalar parameters per Gaussian.
pub const PARAM_COUNT: usize = 14;

/// Offsets of each parameter group inside the flat 14-vector.
pub mod layout {
    use std::ops::Range;
    pub const MEAN: Range<usize> = 0..3;
    pub const LOG_SCALE: Range<usize> = 3..6;
    pub const ROTATION: Range<usize> = 6..10;
    pub const COLOR: Range<usize> = 10..13;
    pub const OPACITY: usize = 13;
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn inverse_sigmoid(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub mean: Vec3,
    pub log_scale: Vec3,
    /// `(w, x, y, z)`, normalized on use.
    pub rotation: [f64; 4],
    /// Pre-activation RGB; clamped to `[0, 1]` when rendered.
    pub color: Vec3,
    pub opacity_logit: f64,
}

impl Gaussian {
    pub fn isotropic(mean: Vec3, scale: f64, color: Vec3, opacity: f64) -> Self {
        Gaussian {
            mean,
            log_scale: Vec3::repeat(scale.ln()),
            rotation: [1.0, 0.0, 0.0, 0.0],
            color,
            opacity_logit: inverse_sigmoid(opacity),
        }
    }

    pub fn scale(&self) -> Vec3 {
        self.log_scale.map(f64::exp)
    }

    pub fn max_scale(&self) -> f64 {
        self.scale().max()
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    pub fn render_color(&self) -> Vec3 {
        self.color.map(|c| c.clamp(0.0, 1.0))
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        quat_to_rotmat(&self.rotation)
    }

    pub fn to_params(&self) -> [f64; PARAM_COUNT] {
        let mut p = [0.0; PARAM_COUNT];
        p[layout::MEAN].copy_from_slice(self.mean.as_slice());
        p[layout::LOG_SCALE].copy_from_slice(self.log_scale.as_slice());
        p[layout::ROTATION].copy_from_slice(&self.rotation);
        p[layout::COLOR].copy_from_slice(self.color.as_slice());
        p[layout::OPACITY] = self.opacity_logit;
        p
    }

    pub fn from_params(p: &[f64; PARAM_COUNT]) -> Self {
        Gaussian {
            mean: Vec3::from_column_slice(&p[layout::MEAN]),
            log_scale: Vec3::from_column_slice(&p[layout::LOG_SCALE]),
            rotation: [p[6], p[7], p[8], p[9]],
            color: Vec3::from_column_slice(&p[layout::COLOR]),
            opacity_logit: p[layout::OPACITY],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_params().iter().all(|v| v.is_finite())
    }
}

/// Rotation matrix of the normalized quaternion `(w, x, y, z)`.
///
/// A zero quaternion yields NaNs; callers that accept user input go through
/// [`covariance_from`], which rejects it.
pub fn quat_to_rotmat(q: &[f64; 4]) -> Mat3 {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Pulls `dL/dR` back through [`quat_to_rotmat`] onto the raw quaternion.
pub fn quat_to_rotmat_vjp(q: &[f64; 4], d_r: &Mat3) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    let g = |i: usize, j: usize| d_r[(i, j)];

    let dw = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    let dx = 2.0
        * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) + w * g(2, 1)
            - 2.0 * x * g(2, 2));
    let dy = 2.0
        * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) + z * g(2, 1)
            - 2.0 * y * g(2, 2));
    let dz = 2.0
        * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) + y * g(1, 2)
            + x * g(2, 0)
            + y * g(2, 1));

    // Through the normalization qn = q / |q|.
    let dn = [dw, dx, dy, dz];
    let qn = [w, x, y, z];
    let dot: f64 = (0..4).map(|i| dn[i] * qn[i]).sum();
    [
        (dn[0] - qn[0] * dot) / n,
        (dn[1] - qn[1] * dot) / n,
        (dn[2] - qn[2] * dot) / n,
        (dn[3] - qn[3] * dot) / n,
    ]
}

/// World-space covariance `R·S·Sᵀ·Rᵀ` with `S = diag(exp(log_scale))`.
pub fn covariance_from(log_scale: &Vec3, q: &[f64; 4]) -> Result<Mat3> {
    let n2 = q.iter().map(|v| v * v).sum::<f64>();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::InvalidInput(format!("quaternion must be nonzero and finite, got {q:?}")));
    }
    Ok(covariance_unchecked(log_scale, q))
}

pub(crate) fn covariance_unchecked(log_scale: &Vec3, q: &[f64; 4]) -> Mat3 {
    let m = quat_to_rotmat(q) * Mat3::from_diagonal(&log_scale.map(f64::exp));
    m * m.transpose()
}

/// The Gaussian set plus per-Gaussian densification statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    gaussians: Vec<Gaussian>,
    grad_accum: Vec<f64>,
    grad_count: Vec<u32>,
    extent: f64,
}

impl Scene {
    pub fn new(gaussians: Vec<Gaussian>, extent: f64) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidInput(format!("scene extent must be > 0, got {extent}")));
        }
        let n = gaussians.len();
        Ok(Scene {
            gaussians,
            grad_accum: vec![0.0; n],
            grad_count: vec![0; n],
            extent,
        })
    }

    /// Means uniform in the cube `[-extent, extent]³`, isotropic scales sized
    /// to the average spacing, random colors and opacity 0.1.
    pub fn init_random(n: usize, extent: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("init_random needs at least one Gaussian".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spacing = 2.0 * extent / (n as f64).cbrt();
        let gaussians = (0..n)
            .map(|_| {
                let mean = Vec3::new(
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                    rng.random_range(-extent..extent),
                );
                let color = Vec3::new(rng.random(), rng.random(), rng.random());
                Gaussian::isotropic(mean, 0.5 * spacing, color, 0.1)
            })
            .collect();
        Scene::new(gaussians, extent)
    }

    pub fn gaussians(&self) -> &[Gaussian] {
        &self.gaussians
    }

    /// Mutable access to parameters. The length cannot change through this,
    /// so statistics stay aligned.
    pub fn gaussians_mut(&mut self) -> &mut [Gaussian] {
        &mut self.gaussians
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn set_extent(&mut self, extent: f64) -> Result<()> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidInput(format!("scene extent must be > 0, got {extent}")));
        }
        self.extent = extent;
        Ok(())
    }

    /// Running mean of accumulated 2D gradient norms; zero for Gaussians never
    /// seen since the last reset.
    pub fn mean_grad(&self, i: usize) -> f64 {
        match self.grad_count[i] {
            0 => 0.0,
            c => self.grad_accum[i] / c as f64,
        }
    }

    pub fn grad_count(&self, i: usize) -> u32 {
        self.grad_count[i]
    }

    /// Adds one observation of the projected-mean gradient norm for every
    /// Gaussian flagged visible in the last render.
    pub fn accumulate_grad_stats(&mut self, norms: &[f64], visible: &[bool]) {
        assert_eq!(norms.len(), self.len(), "gradient statistics length mismatch");
        assert_eq!(visible.len(), self.len(), "visibility mask length mismatch");
        for i in 0..self.len() {
            if visible[i] {
                self.grad_accum[i] += norms[i];
                self.grad_count[i] += 1;
            }
        }
    }

    pub fn reset_grad_stats(&mut self) {
        self.grad_accum.iter_mut().for_each(|v| *v = 0.0);
        self.grad_count.iter_mut().for_each(|v| *v = 0);
    }

    /// Replaces the Gaussian list, resetting statistics.
    pub(crate) fn replace_gaussians(&mut self, gaussians: Vec<Gaussian>) {
        let n = gaussians.len();
        self.gaussians = gaussians;
        self.grad_accum = vec![0.0; n];
        self.grad_count = vec![0; n];
    }

    /// Same parameters, ignoring statistics.
    pub fn same_parameters(&self, other: &Scene) -> bool {
        self.gaussians == other.gaussians
    }

    /// Text form: count line, then 14 reals per Gaussian with nine
    /// significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.len() * 14 * 17);
        writeln!(out, "{}", self.len()).unwrap();
        for g in &self.gaussians {
            let p = g.to_params();
            for (k, v) in p.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                write!(out, "{v:.8e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Scene::to_text`] output. `path` only labels errors. The
    /// extent is estimated from the means; trainers overwrite it from their
    /// cameras.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty scene file"))?;
        let count: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, 1, format!("expected Gaussian count, got {header:?}")))?;
        let mut gaussians = Vec::with_capacity(count);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            if gaussians.len() == count {
                return Err(Error::parse(path, lineno, format!("more than {count} Gaussian rows")));
            }
            let mut p = [0.0; PARAM_COUNT];
            let mut fields = line.split_whitespace();
            for (k, slot) in p.iter_mut().enumerate() {
                let f = fields
                    .next()
                    .ok_or_else(|| Error::parse(path, lineno, format!("expected 14 values, found {k}")))?;
                *slot = f
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad number {f:?}")))?;
            }
            if fields.next().is_some() {
                return Err(Error::parse(path, lineno, "expected 14 values, found more"));
            }
            gaussians.push(Gaussian::from_params(&p));
        }
        if gaussians.len() != count {
            return Err(Error::parse(
                path,
                gaussians.len() + 2,
                format!("truncated: header says {count} Gaussians, found {}", gaussians.len()),
            ));
        }
        let extent = estimate_extent(&gaussians);
        Scene::new(gaussians, extent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scene::from_text(&text, path)
    }
}

fn estimate_extent(gaussians: &[Gaussian]) -> f64 {
    if gaussians.is_empty() {
        return 1.0;
    }
    let centroid = gaussians.iter().map(|g| g.mean).sum::<Vec3>() / gaussians.len() as f64;
    let r = gaussians.iter().map(|g| (g.mean - centroid).norm()).fold(0.0, f64::max);
    if r > 0.0 {
        r
    } else {
        1.0
    }
}
