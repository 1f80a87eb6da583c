//! Spatial (6D) vector algebra in the motion/force convention used by the
//! articulated-body routines: `[angular; linear]`, expressed in body coordinates.

use nalgebra::{Matrix3, Matrix6, Rotation3, Unit, Vector3, Vector6};
use serde::{Deserialize, Serialize};

pub type SpatialVec = Vector6<f64>;
pub type SpatialMat = Matrix6<f64>;

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[inline]
pub fn angular(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

#[inline]
pub fn linear(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

#[inline]
pub fn spatial(ang: &Vector3<f64>, lin: &Vector3<f64>) -> SpatialVec {
    SpatialVec::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

/// Motion cross product `v ×m w`.
pub fn cross_motion(v: &SpatialVec, w: &SpatialVec) -> SpatialVec {
    let (wv, lv) = (angular(v), linear(v));
    let (ww, lw) = (angular(w), linear(w));
    spatial(&wv.cross(&ww), &(wv.cross(&lw) + lv.cross(&ww)))
}

/// Force cross product `v ×f f`.
pub fn cross_force(v: &SpatialVec, f: &SpatialVec) -> SpatialVec {
    let (wv, lv) = (angular(v), linear(v));
    let (nf, ff) = (angular(f), linear(f));
    spatial(&(wv.cross(&nf) + lv.cross(&ff)), &wv.cross(&ff))
}

/// Rigid placement of a child frame inside a parent frame.
///
/// `rot` maps child coordinates to parent coordinates and `pos` is the child
/// origin in parent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rot: Matrix3<f64>,
    pub pos: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self { rot: Matrix3::identity(), pos: Vector3::zeros() }
    }

    pub fn new(rot: Matrix3<f64>, pos: Vector3<f64>) -> Self {
        Self { rot, pos }
    }

    pub fn translation(pos: Vector3<f64>) -> Self {
        Self { rot: Matrix3::identity(), pos }
    }

    /// `self ∘ other`: pose of `other`'s frame expressed in `self`'s parent.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose { rot: self.rot * other.rot, pos: self.pos + self.rot * other.pos }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rot.transpose();
        Pose { rot: rt, pos: -(rt * self.pos) }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.pos + self.rot * p
    }

    /// Plücker transform taking motion vectors from parent to child coordinates.
    pub fn motion_to_child(&self) -> Plucker {
        Plucker { e: self.rot.transpose(), r: self.pos }
    }
}

/// Plücker coordinate transform `ᴮX_A` stored as (E, r): `E` rotates A
/// coordinates into B coordinates, `r` is B's origin in A coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plucker {
    pub e: Matrix3<f64>,
    pub r: Vector3<f64>,
}

impl Plucker {
    pub fn identity() -> Self {
        Self { e: Matrix3::identity(), r: Vector3::zeros() }
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn mul(&self, other: &Plucker) -> Plucker {
        Plucker { e: self.e * other.e, r: other.r + other.e.transpose() * self.r }
    }

    pub fn apply_motion(&self, v: &SpatialVec) -> SpatialVec {
        let w = angular(v);
        let l = linear(v);
        spatial(&(self.e * w), &(self.e * (l - self.r.cross(&w))))
    }

    /// Transposed transform: maps a force in B coordinates back to A.
    pub fn apply_force_transpose(&self, f: &SpatialVec) -> SpatialVec {
        let n = angular(f);
        let fl = linear(f);
        let fa = self.e.transpose() * fl;
        spatial(&(self.e.transpose() * n + self.r.cross(&fa)), &fa)
    }

    /// Force transform A → B (`X*`).
    pub fn apply_force(&self, f: &SpatialVec) -> SpatialVec {
        let n = angular(f);
        let fl = linear(f);
        spatial(&(self.e * (n - self.r.cross(&fl))), &(self.e * fl))
    }

    pub fn motion_matrix(&self) -> SpatialMat {
        let mut m = SpatialMat::zeros();
        let erx = -self.e * skew(&self.r);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.e);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.e);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&erx);
        m
    }

    /// `Xᵀ · I · X`: express a body-B spatial inertia in A coordinates.
    pub fn inertia_to_parent(&self, inertia: &SpatialMat) -> SpatialMat {
        let x = self.motion_matrix();
        x.transpose() * inertia * x
    }
}

/// Spatial inertia about a body frame origin for mass `m`, COM `c` and
/// rotational inertia `ic` about the COM, all in body coordinates.
pub fn spatial_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> SpatialMat {
    let cx = skew(c);
    let mut out = SpatialMat::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ic + m * cx * cx.transpose()));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(m * cx));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(m * cx.transpose()));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(m * Matrix3::identity()));
    out
}

pub fn rot_axis(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Intrinsic x-y-z Cardan rotation `Rx(a)·Ry(b)·Rz(c)`.
pub fn cardan_xyz(a: f64, b: f64, c: f64) -> Matrix3<f64> {
    rot_x(a) * rot_y(b) * rot_z(c)
}

/// Inverse of [`cardan_xyz`]; the middle angle lies in [-π/2, π/2].
pub fn cardan_xyz_angles(r: &Matrix3<f64>) -> Vector3<f64> {
    // R[0,2] = sin b, R[1,2] = -sin a cos b, R[2,2] = cos a cos b,
    // R[0,1] = -cos b sin c, R[0,0] = cos b cos c
    let b = r[(0, 2)].clamp(-1.0, 1.0).asin();
    let a = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let c = (-r[(0, 1)]).atan2(r[(0, 0)]);
    Vector3::new(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cardan_round_trip() {
        let angles = Vector3::new(0.3, -0.7, 1.1);
        let r = cardan_xyz(angles.x, angles.y, angles.z);
        assert_relative_eq!(cardan_xyz_angles(&r), angles, epsilon = 1e-12);
    }

    #[test]
    fn plucker_matrix_matches_apply() {
        let pose = Pose::new(cardan_xyz(0.2, 0.4, -0.3), Vector3::new(0.1, -0.5, 0.3));
        let x = pose.motion_to_child();
        let v = SpatialVec::new(0.3, -1.0, 2.0, 0.5, 0.25, -0.75);
        assert_relative_eq!(x.motion_matrix() * v, x.apply_motion(&v), epsilon = 1e-12);
        assert_relative_eq!(
            x.motion_matrix().transpose() * v,
            x.apply_force_transpose(&v),
            epsilon = 1e-12
        );
        // power is invariant
        let f = SpatialVec::new(1.0, 2.0, -0.5, 0.1, 0.7, -0.2);
        let p_a = v.dot(&x.apply_force_transpose(&f));
        let p_b = x.apply_motion(&v).dot(&f);
        assert_relative_eq!(p_a, p_b, epsilon = 1e-12);
    }

    #[test]
    fn composition_matches_matrix_product() {
        let a = Pose::new(cardan_xyz(0.1, 0.2, 0.3), Vector3::new(0.3, 0.0, -0.2));
        let b = Pose::new(cardan_xyz(-0.4, 0.1, 0.9), Vector3::new(-0.1, 0.6, 0.2));
        let xa = a.motion_to_child();
        let xb = b.motion_to_child();
        let xab = a.compose(&b).motion_to_child();
        assert_relative_eq!(
            xab.motion_matrix(),
            xb.motion_matrix() * xa.motion_matrix(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            xb.mul(&xa).motion_matrix(),
            xab.motion_matrix(),
            epsilon = 1e-12
        );
    }
}
