//! Viewpoint ensemble around an attack camera.
//!
//! For every magnitude `δ` the ensemble holds the eight pitch/yaw offsets
//! `{-δ, 0, δ}² \ {(0, 0)}`; each offset becomes a camera through
//! [`perturb_camera`]. Angles are degrees at this boundary and converted to
//! radians exactly once, in [`ves_viewpoints`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{View, ViewDataset};
use crate::error::{Error, Result};
use crate::gaussian::Scene;
use crate::geometry::{perturb_camera, Camera, Vec3};
use crate::render::render;

/// Perturbation magnitudes in degrees, each strictly inside `(0, 90)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AngleSet(Vec<f64>);

impl TryFrom<Vec<f64>> for AngleSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        AngleSet::new(v)
    }
}

impl From<AngleSet> for Vec<f64> {
    fn from(a: AngleSet) -> Self {
        a.0
    }
}

impl AngleSet {
    pub fn new(degrees: Vec<f64>) -> Result<Self> {
        for &d in &degrees {
            if !(d > 0.0 && d < 90.0) {
                return Err(Error::InvalidInput(format!(
                    "stabilization angle must lie in (0, 90) degrees, got {d}"
                )));
            }
        }
        Ok(AngleSet(degrees))
    }

    pub fn empty() -> Self {
        AngleSet(Vec::new())
    }

    pub fn degrees(&self) -> &[f64] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Parses `"13,15"`; the empty string gives the empty set.
    pub fn parse(s: &str) -> Result<Self> {
        let degrees = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad angle {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        AngleSet::new(degrees)
    }
}

impl std::fmt::Display for AngleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// `(pitch, yaw)` offsets in degrees; pitch-major, `-δ < 0 < δ` on each axis.
pub fn generate_offsets(angles: &AngleSet) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(8 * angles.len());
    for &d in angles.degrees() {
        for pitch in [-d, 0.0, d] {
            for yaw in [-d, 0.0, d] {
                if pitch != 0.0 || yaw != 0.0 {
                    out.push((pitch, yaw));
                }
            }
        }
    }
    out
}

/// One camera per offset, sharing the attack camera's translation and
/// intrinsics.
pub fn ves_viewpoints(attack: &Camera, angles: &AngleSet) -> Result<Vec<Camera>> {
    generate_offsets(angles)
        .into_iter()
        .map(|(pitch, yaw)| perturb_camera(attack, pitch.to_radians(), yaw.to_radians()))
        .collect()
}

/// Ensembles for several attack cameras, concatenated in attack order.
pub fn ves_viewpoints_multi(attacks: &[Camera], angles: &AngleSet) -> Result<Vec<Camera>> {
    let mut out = Vec::new();
    for cam in attacks {
        out.extend(ves_viewpoints(cam, angles)?);
    }
    Ok(out)
}

/// Supervision for the ensemble: each camera paired with the clean scene's
/// render. View ids are positions in `cameras`.
pub fn build_stab_dataset(clean: &Scene, cameras: &[Camera], background: Vec3) -> ViewDataset {
    let views = cameras
        .par_iter()
        .enumerate()
        .map(|(id, cam)| View {
            id,
            camera: *cam,
            image: render(clean, cam, background),
        })
        .collect();
    ViewDataset::new(views)
}
