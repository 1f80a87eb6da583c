//! Joint models: configuration-dependent transform, motion subspace and
//! velocity-product term for every supported joint kind.
//!
//! Generalized velocities are the time derivatives of the generalized
//! coordinates for every joint, so `q̇ = u` holds globally. Rotational joints
//! with more than one DoF use x-y-z Cardan angles.

use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use crate::spatial::{cardan_xyz, rot_axis, skew, spatial, Pose, SpatialVec};

/// Middle Cardan angle beyond which a joint is considered too close to gimbal lock.
pub const GIMBAL_GUARD: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JointKind {
    /// Translation (x, y, z in the parent joint frame) followed by Cardan rotation.
    Free6,
    Spherical3,
    Universal2 { axes: [Vector3<f64>; 2] },
    Revolute1 { axis: Vector3<f64> },
    Translational1 { axis: Vector3<f64> },
    /// Cardan rotation plus a slide along `axis` of the rotated (child) frame.
    SphericalTranslational4 { axis: Vector3<f64> },
}

impl JointKind {
    pub fn dof(&self) -> usize {
        match self {
            JointKind::Free6 => 6,
            JointKind::Spherical3 => 3,
            JointKind::Universal2 { .. } => 2,
            JointKind::Revolute1 { .. } | JointKind::Translational1 { .. } => 1,
            JointKind::SphericalTranslational4 { .. } => 4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            JointKind::Free6 => "free6",
            JointKind::Spherical3 => "spherical3",
            JointKind::Universal2 { .. } => "universal2",
            JointKind::Revolute1 { .. } => "revolute1",
            JointKind::Translational1 { .. } => "translational1",
            JointKind::SphericalTranslational4 { .. } => "spherical_translational4",
        }
    }

    /// Offset of the Cardan triple inside this joint's coordinates, if any.
    pub fn cardan_offset(&self) -> Option<usize> {
        match self {
            JointKind::Free6 => Some(3),
            JointKind::Spherical3 | JointKind::SphericalTranslational4 { .. } => Some(0),
            _ => None,
        }
    }

    /// Whether coordinate `k` of this joint is a translation.
    pub fn is_translational(&self, k: usize) -> bool {
        match self {
            JointKind::Free6 => k < 3,
            JointKind::Translational1 { .. } => true,
            JointKind::SphericalTranslational4 { .. } => k == 3,
            _ => false,
        }
    }

    /// Per-coordinate suffixes used for channel names.
    pub fn coordinate_names(&self) -> &'static [&'static str] {
        match self {
            JointKind::Free6 => &["x", "y", "z", "roll", "pitch", "yaw"],
            JointKind::Spherical3 => &["roll", "pitch", "yaw"],
            JointKind::Universal2 { .. } => &["a1", "a2"],
            JointKind::Revolute1 { .. } => &["angle"],
            JointKind::Translational1 { .. } => &["slide"],
            JointKind::SphericalTranslational4 { .. } => &["roll", "pitch", "yaw", "slide"],
        }
    }
}

/// Joint transform and motion subspace at one configuration.
#[derive(Debug, Clone)]
pub struct JointMotion {
    /// Joint output frame relative to the joint input frame.
    pub pose: Pose,
    /// Motion subspace in output-frame coordinates; only the first `dof` columns are used.
    pub s: Matrix6<f64>,
    /// Velocity-product term `Ṡ·q̇` in output-frame coordinates.
    pub c: SpatialVec,
}

/// Angular block of the Cardan motion subspace and its product `Ṡ·θ̇`.
fn cardan_rates(theta: &[f64], rate: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let (sb, cb) = theta[1].sin_cos();
    let (sc, cc) = theta[2].sin_cos();
    let s = Matrix3::new(cb * cc, sc, 0.0, -cb * sc, cc, 0.0, sb, 0.0, 1.0);
    let (ad, bd, cd) = (rate[0], rate[1], rate[2]);
    let dcol0 = Vector3::new(-sb * bd * cc - cb * sc * cd, sb * bd * sc - cb * cc * cd, cb * bd);
    let dcol1 = Vector3::new(cc * cd, -sc * cd, 0.0);
    (s, ad * dcol0 + bd * dcol1)
}

pub fn joint_motion(kind: &JointKind, q: &[f64], qd: &[f64]) -> JointMotion {
    let mut s = Matrix6::zeros();
    match kind {
        JointKind::Revolute1 { axis } => {
            s.fixed_view_mut::<3, 1>(0, 0).copy_from(axis);
            JointMotion {
                pose: Pose::new(rot_axis(axis, q[0]), Vector3::zeros()),
                s,
                c: SpatialVec::zeros(),
            }
        }
        JointKind::Translational1 { axis } => {
            s.fixed_view_mut::<3, 1>(3, 0).copy_from(axis);
            JointMotion { pose: Pose::translation(axis * q[0]), s, c: SpatialVec::zeros() }
        }
        JointKind::Universal2 { axes } => {
            let [e1, e2] = axes;
            let r2 = rot_axis(e2, q[1]);
            let col0 = r2.transpose() * e1;
            s.fixed_view_mut::<3, 1>(0, 0).copy_from(&col0);
            s.fixed_view_mut::<3, 1>(0, 1).copy_from(e2);
            let c_ang = -qd[0] * qd[1] * e2.cross(&col0);
            JointMotion {
                pose: Pose::new(rot_axis(e1, q[0]) * r2, Vector3::zeros()),
                s,
                c: spatial(&c_ang, &Vector3::zeros()),
            }
        }
        JointKind::Spherical3 => {
            let (sa, c_ang) = cardan_rates(q, qd);
            s.fixed_view_mut::<3, 3>(0, 0).copy_from(&sa);
            JointMotion {
                pose: Pose::new(cardan_xyz(q[0], q[1], q[2]), Vector3::zeros()),
                s,
                c: spatial(&c_ang, &Vector3::zeros()),
            }
        }
        JointKind::Free6 => {
            let rot = cardan_xyz(q[3], q[4], q[5]);
            let (sa, c_ang) = cardan_rates(&q[3..6], &qd[3..6]);
            let rt = rot.transpose();
            s.fixed_view_mut::<3, 3>(3, 0).copy_from(&rt);
            s.fixed_view_mut::<3, 3>(0, 3).copy_from(&sa);
            let omega = sa * Vector3::new(qd[3], qd[4], qd[5]);
            let v = rt * Vector3::new(qd[0], qd[1], qd[2]);
            JointMotion {
                pose: Pose::new(rot, Vector3::new(q[0], q[1], q[2])),
                s,
                c: spatial(&c_ang, &(-omega.cross(&v))),
            }
        }
        JointKind::SphericalTranslational4 { axis } => {
            let rot = cardan_xyz(q[0], q[1], q[2]);
            let (sa, c_ang) = cardan_rates(&q[0..3], &qd[0..3]);
            let offset = axis * q[3];
            s.fixed_view_mut::<3, 3>(0, 0).copy_from(&sa);
            s.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-skew(&offset) * sa));
            s.fixed_view_mut::<3, 1>(3, 3).copy_from(axis);
            let omega = sa * Vector3::new(qd[0], qd[1], qd[2]);
            let c_lin = c_ang.cross(&offset) + omega.cross(&(axis * qd[3]));
            JointMotion { pose: Pose::new(rot, rot * offset), s, c: spatial(&c_ang, &c_lin) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{angular, linear};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn kinds() -> Vec<JointKind> {
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        let e2 = Vector3::new(0.0, 0.6, 0.8);
        vec![
            JointKind::Free6,
            JointKind::Spherical3,
            JointKind::Universal2 { axes: [e1, e2] },
            JointKind::Revolute1 { axis: Vector3::new(0.0, 0.6, -0.8) },
            JointKind::Translational1 { axis: Vector3::new(0.0, 0.0, 1.0) },
            JointKind::SphericalTranslational4 { axis: Vector3::z() },
        ]
    }

    fn sample(n: usize, scale: f64, phase: f64) -> DVector<f64> {
        DVector::from_fn(n, |i, _| scale * ((i as f64 + 1.0) * 1.7 + phase).sin())
    }

    /// Body-frame spatial velocity recovered by differentiating the joint pose.
    fn velocity_from_pose(kind: &JointKind, q: &DVector<f64>, qd: &DVector<f64>) -> SpatialVec {
        let h = 1e-6;
        let plus = joint_motion(kind, (q + qd * h).as_slice(), qd.as_slice()).pose;
        let minus = joint_motion(kind, (q - qd * h).as_slice(), qd.as_slice()).pose;
        let mid = joint_motion(kind, q.as_slice(), qd.as_slice()).pose;
        let rdot = (plus.rot - minus.rot) / (2.0 * h);
        let pdot = (plus.pos - minus.pos) / (2.0 * h);
        let w = mid.rot.transpose() * rdot;
        let omega = Vector3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)]);
        spatial(&omega, &(mid.rot.transpose() * pdot))
    }

    #[test]
    fn dof_counts() {
        let dofs: Vec<usize> = kinds().iter().map(JointKind::dof).collect();
        assert_eq!(dofs, vec![6, 3, 2, 1, 1, 4]);
    }

    #[test]
    fn motion_subspace_matches_pose_derivative() {
        for kind in kinds() {
            let n = kind.dof();
            for trial in 0..5 {
                let q = sample(n, 0.6, trial as f64);
                let qd = sample(n, 1.3, 2.0 * trial as f64 + 0.5);
                let jm = joint_motion(&kind, q.as_slice(), qd.as_slice());
                let v = jm.s.columns(0, n) * &qd;
                let v = SpatialVec::from_column_slice(v.as_slice());
                let fd = velocity_from_pose(&kind, &q, &qd);
                assert_relative_eq!(angular(&v), angular(&fd), epsilon = 1e-7);
                assert_relative_eq!(linear(&v), linear(&fd), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn bias_term_matches_subspace_derivative() {
        for kind in kinds() {
            let n = kind.dof();
            for trial in 0..5 {
                let q = sample(n, 0.5, 0.3 * trial as f64);
                let qd = sample(n, 0.9, 1.1 + trial as f64);
                let h = 1e-6;
                let sp = joint_motion(&kind, (&q + &qd * h).as_slice(), qd.as_slice()).s;
                let sm = joint_motion(&kind, (&q - &qd * h).as_slice(), qd.as_slice()).s;
                let sdot = (sp - sm) / (2.0 * h);
                let expected = sdot.columns(0, n) * &qd;
                let c = joint_motion(&kind, q.as_slice(), qd.as_slice()).c;
                for k in 0..6 {
                    assert_relative_eq!(c[k], expected[k], epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn revolute_quarter_turn_about_z() {
        let kind = JointKind::Revolute1 { axis: Vector3::z() };
        let jm = joint_motion(&kind, &[std::f64::consts::FRAC_PI_2], &[0.0]);
        assert_relative_eq!(jm.pose.rot * Vector3::x(), Vector3::y(), epsilon = 1e-15);
    }
}
