//! Pinhole cameras and the small amount of rigid-body geometry the renderer
//! and the viewpoint-ensemble generator need.
//!
//! Camera frame convention: world-to-camera extrinsics, `+z` forward, `+x`
//! right, `+y` down. A world point `p` lands at `t = R·p + T` in camera
//! coordinates and at pixel `(fx·t.x/t.z + cx, fy·t.y/t.z + cy)`.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2x3 = Matrix2x3<f64>;

/// Default near-plane distance in scene units.
pub const DEFAULT_NEAR: f64 = 0.01;

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Rotation about the camera X axis (pitch).
pub fn rot_x(angle: f64) -> Result<Mat3> {
    check_finite(angle, "rot_x angle")?;
    let (s, c) = angle.sin_cos();
    Ok(Mat3::new(
        1.0, 0.0, 0.0, //
        0.0, c, -s, //
        0.0, s, c,
    ))
}

/// Rotation about the camera Y axis (yaw).
pub fn rot_y(angle: f64) -> Result<Mat3> {
    check_finite(angle, "rot_y angle")?;
    let (s, c) = angle.sin_cos();
    Ok(Mat3::new(
        c, 0.0, s, //
        0.0, 1.0, 0.0, //
        -s, 0.0, c,
    ))
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite, got {v}")))
    }
}

/// `true` when `RᵀR = I` and `det R = 1`, both within `tol`.
pub fn is_rotation(m: &Mat3, tol: f64) -> bool {
    let orth = (m.transpose() * m - Mat3::identity()).abs().max();
    orth <= tol && (m.determinant() - 1.0).abs() <= tol
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Square pixels, principal point at the image centre, focal length from
    /// the horizontal field of view.
    pub fn from_fov_x(width: u32, height: u32, fov_x: f64) -> Self {
        let fx = 0.5 * width as f64 / (0.5 * fov_x).tan();
        Intrinsics {
            width,
            height,
            fx,
            fy: fx,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    /// World-to-camera rotation.
    pub rotation: Mat3,
    /// World-to-camera translation.
    pub translation: Vec3,
    pub near: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub uv: Vec2,
    pub depth: f64,
}

impl Camera {
    pub fn new(intrinsics: Intrinsics, rotation: Mat3, translation: Vec3, near: f64) -> Result<Self> {
        let cam = Camera {
            intrinsics,
            rotation,
            translation,
            near,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if k.width == 0 || k.height == 0 {
            return Err(Error::InvalidInput(format!(
                "camera image size must be at least 1x1, got {}x{}",
                k.width, k.height
            )));
        }
        if !(k.fx > 0.0 && k.fy > 0.0) || !k.cx.is_finite() || !k.cy.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bad intrinsics fx={} fy={} cx={} cy={}",
                k.fx, k.fy, k.cx, k.cy
            )));
        }
        if !(self.near > 0.0) {
            return Err(Error::InvalidInput(format!("near plane must be > 0, got {}", self.near)));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("camera translation is not finite".into()));
        }
        if !is_rotation(&self.rotation, ROTATION_TOL) {
            return Err(Error::InvalidInput("camera rotation is not a proper rotation".into()));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, with `up` the approximate world up
    /// direction (image rows run opposite to it).
    pub fn look_at(intrinsics: Intrinsics, eye: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::InvalidInput("look_at: eye coincides with target".into()));
        }
        let forward = forward.normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-12 {
            return Err(Error::InvalidInput("look_at: view direction parallel to up".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Camera::new(intrinsics, rotation, translation, DEFAULT_NEAR)
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p_world: &Vec3) -> Vec3 {
        self.rotation * p_world + self.translation
    }

    /// Pinhole projection; `None` when the point is not beyond the near plane.
    pub fn project_point(&self, p_world: &Vec3) -> Option<Projection> {
        let t = self.to_camera(p_world);
        if t.z <= self.near {
            return None;
        }
        let k = &self.intrinsics;
        Some(Projection {
            uv: Vec2::new(k.fx * t.x / t.z + k.cx, k.fy * t.y / t.z + k.cy),
            depth: t.z,
        })
    }

    /// Jacobian of the pixel coordinates with respect to the camera-space point.
    pub fn projection_jacobian(&self, t_cam: &Vec3) -> Result<Mat2x3> {
        if !(t_cam.z > self.near) {
            return Err(Error::InvalidInput(format!(
                "projection_jacobian: depth {} not beyond near plane {}",
                t_cam.z, self.near
            )));
        }
        Ok(jacobian_unchecked(&self.intrinsics, t_cam))
    }
}

pub(crate) fn jacobian_unchecked(k: &Intrinsics, t: &Vec3) -> Mat2x3 {
    let iz = 1.0 / t.z;
    let iz2 = iz * iz;
    Mat2x3::new(
        k.fx * iz, 0.0, -k.fx * t.x * iz2, //
        0.0, k.fy * iz, -k.fy * t.y * iz2,
    )
}

/// Pitch/yaw perturbation of a camera: `R' = Rx(pitch)·Ry(yaw)·R`, with the
/// translation and intrinsics untouched.
///
/// Because `T` stays fixed in camera coordinates, the world origin keeps its
/// camera-space position, so the result orbits the camera about the world
/// origin rather than spinning it in place.
pub fn perturb_camera(cam: &Camera, pitch: f64, yaw: f64) -> Result<Camera> {
    cam.validate()?;
    if pitch == 0.0 && yaw == 0.0 {
        return Ok(*cam);
    }
    let rotation = rot_x(pitch)? * rot_y(yaw)? * cam.rotation;
    Ok(Camera { rotation, ..*cam })
}
