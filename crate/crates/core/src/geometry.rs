//! Contact primitives and penetration queries.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::Pose;

/// Ellipsoid with semi-axes along the axes of its local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub name: String,
    pub semi_axes: Vector3<f64>,
    /// Placement in the owning body's frame.
    pub pose: Pose,
}

impl Ellipsoid {
    pub fn new(name: impl Into<String>, semi_axes: Vector3<f64>, pose: Pose) -> Self {
        Self { name: name.into(), semi_axes, pose }
    }

    pub fn validate(&self) -> Result<()> {
        if self.semi_axes.iter().all(|a| a.is_finite() && *a > 0.0) {
            Ok(())
        } else {
            Err(Error::DegenerateEllipsoid(self.semi_axes.into()))
        }
    }
}

/// Half-space boundary `normal · x = offset`; the solid side is `normal · x < offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// World point where the contact force acts.
    pub point: Vector3<f64>,
    /// Unit normal pointing from surface A towards surface B.
    pub normal: Vector3<f64>,
}

/// Deepest point of an ellipsoid (world pose `pose`, semi-axes `axes`) below a
/// plane. The returned normal is the plane normal, i.e. it points from the
/// plane towards the ellipsoid.
pub fn ellipsoid_plane_penetration(
    pose: &Pose,
    axes: &Vector3<f64>,
    plane: &Plane,
) -> Result<Option<Penetration>> {
    if !axes.iter().all(|a| a.is_finite() && *a > 0.0) {
        return Err(Error::DegenerateEllipsoid((*axes).into()));
    }
    let d = Matrix3::from_diagonal(axes);
    let scaled = d * pose.rot.transpose() * plane.normal;
    let deepest = pose.pos - pose.rot * d * scaled / scaled.norm();
    let depth = plane.offset - plane.normal.dot(&deepest);
    Ok((depth > 0.0).then_some(Penetration { depth, point: deepest, normal: plane.normal }))
}

/// Distance from an ellipsoid's center to its surface along a unit direction
/// given in world coordinates.
pub fn radial_extent(pose: &Pose, axes: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    let local = pose.rot.transpose() * dir;
    let s = (local.x / axes.x).powi(2) + (local.y / axes.y).powi(2) + (local.z / axes.z).powi(2);
    1.0 / s.sqrt()
}

/// Line-of-centers overlap estimate for two ellipsoids. The normal points
/// from A's center towards B's center.
pub fn ellipsoid_ellipsoid_penetration(
    pose_a: &Pose,
    axes_a: &Vector3<f64>,
    pose_b: &Pose,
    axes_b: &Vector3<f64>,
) -> Result<Option<Penetration>> {
    for axes in [axes_a, axes_b] {
        if !axes.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(Error::DegenerateEllipsoid((*axes).into()));
        }
    }
    let delta = pose_b.pos - pose_a.pos;
    let dist = delta.norm();
    if dist < 1e-12 {
        return Err(Error::CoincidentCenters);
    }
    let n = delta / dist;
    Ok(line_of_centers(pose_a, axes_a, pose_b, axes_b, &n, dist))
}

/// Same as [`ellipsoid_ellipsoid_penetration`] but falls back to `prev_normal`
/// when the centers coincide.
pub fn ellipsoid_ellipsoid_penetration_or(
    pose_a: &Pose,
    axes_a: &Vector3<f64>,
    pose_b: &Pose,
    axes_b: &Vector3<f64>,
    prev_normal: &Vector3<f64>,
) -> Result<Option<Penetration>> {
    match ellipsoid_ellipsoid_penetration(pose_a, axes_a, pose_b, axes_b) {
        Err(Error::CoincidentCenters) => {
            Ok(line_of_centers(pose_a, axes_a, pose_b, axes_b, prev_normal, 0.0))
        }
        other => other,
    }
}

fn line_of_centers(
    pose_a: &Pose,
    axes_a: &Vector3<f64>,
    pose_b: &Pose,
    axes_b: &Vector3<f64>,
    n: &Vector3<f64>,
    dist: f64,
) -> Option<Penetration> {
    let ra = radial_extent(pose_a, axes_a, n);
    let rb = radial_extent(pose_b, axes_b, &(-n));
    let depth = ra + rb - dist;
    if depth <= 0.0 {
        return None;
    }
    let surf_a = pose_a.pos + ra * n;
    let surf_b = pose_b.pos - rb * n;
    Some(Penetration { depth, point: 0.5 * (surf_a + surf_b), normal: *n })
}
