//! Forward kinematics and body velocities.

use nalgebra::{Matrix6, Vector3};

use super::joint::joint_motion;
use super::tree::KinematicTree;
use crate::error::Result;
use crate::spatial::{angular, cross_motion, linear, spatial, Plucker, Pose, SpatialVec};

/// Per-body quantities from the outward kinematic pass.
#[derive(Debug, Clone)]
pub struct BodyKinematics {
    /// Motion transform parent body → this body.
    pub x_up: Plucker,
    pub s: Matrix6<f64>,
    pub ndof: usize,
    /// Velocity-product acceleration `c_J + v × S q̇`, body coordinates.
    pub c: SpatialVec,
    /// Spatial velocity, body coordinates.
    pub v: SpatialVec,
    /// Segment frame pose in the world.
    pub world: Pose,
}

impl BodyKinematics {
    /// World-frame velocity of a point fixed on the body, given in body coordinates.
    pub fn point_velocity(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.world.rot * (linear(&self.v) + angular(&self.v).cross(local))
    }

    pub fn angular_velocity_world(&self) -> Vector3<f64> {
        self.world.rot * angular(&self.v)
    }
}

#[derive(Debug, Clone)]
pub struct TreeKinematics {
    pub bodies: Vec<BodyKinematics>,
}

impl TreeKinematics {
    pub fn compute(tree: &KinematicTree, q: &[f64], u: &[f64]) -> Result<Self> {
        tree.check_len(q.len())?;
        tree.check_len(u.len())?;
        let mut out: Vec<BodyKinematics> = Vec::with_capacity(tree.len());
        for body in tree.bodies() {
            let r = body.dofs.clone();
            let jm = joint_motion(&body.joint.kind, &q[r.clone()], &u[r.clone()]);
            let n = r.len();
            let x_up = jm.pose.motion_to_child().mul(&body.x_tree);
            let vj = jm.s.columns(0, n) * nalgebra::DVector::from_column_slice(&u[r]);
            let vj = SpatialVec::from_column_slice(vj.as_slice());
            let joint_pose = body.joint.parent_frame.compose(&jm.pose);
            let (v, world) = match body.parent {
                Some(p) => {
                    let parent = &out[p];
                    (x_up.apply_motion(&parent.v) + vj, parent.world.compose(&joint_pose))
                }
                None => (vj, joint_pose),
            };
            let c = jm.c + cross_motion(&v, &vj);
            out.push(BodyKinematics { x_up, s: jm.s, ndof: n, c, v, world });
        }
        Ok(Self { bodies: out })
    }

    /// World position of a segment's COM.
    pub fn com_world(&self, tree: &KinematicTree, body: usize) -> Vector3<f64> {
        self.bodies[body].world.transform_point(&tree.bodies()[body].segment.com_offset)
    }
}

/// World pose of every segment frame and COM position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPose {
    pub frame: Pose,
    pub com: Vector3<f64>,
}

pub fn forward_kinematics(tree: &KinematicTree, q: &[f64]) -> Result<Vec<SegmentPose>> {
    let zeros = vec![0.0; q.len()];
    let kin = TreeKinematics::compute(tree, q, &zeros)?;
    Ok(tree
        .bodies()
        .iter()
        .zip(&kin.bodies)
        .map(|(b, k)| SegmentPose { frame: k.world, com: k.world.transform_point(&b.segment.com_offset) })
        .collect())
}

/// Classical (non-spatial) world acceleration of a body-fixed point.
///
/// `a` is the body's spatial acceleration in body coordinates.
pub fn point_acceleration(bk: &BodyKinematics, a: &SpatialVec, local: &Vector3<f64>) -> Vector3<f64> {
    let w = angular(&bk.v);
    let v_point = linear(&bk.v) + w.cross(local);
    let acc = linear(a) + angular(a).cross(local) + w.cross(&v_point);
    bk.world.rot * acc
}

/// Spatial accelerations of all bodies for given generalized accelerations.
pub fn body_accelerations(tree: &KinematicTree, kin: &TreeKinematics, udot: &[f64]) -> Vec<SpatialVec> {
    let mut acc: Vec<SpatialVec> = Vec::with_capacity(tree.len());
    for (body, bk) in tree.bodies().iter().zip(&kin.bodies) {
        let n = bk.ndof;
        let qdd = nalgebra::DVector::from_column_slice(&udot[body.dofs.clone()]);
        let sq = bk.s.columns(0, n) * qdd;
        let mut a = bk.c + SpatialVec::from_column_slice(sq.as_slice());
        if let Some(p) = body.parent {
            a += bk.x_up.apply_motion(&acc[p]);
        }
        acc.push(a);
    }
    acc
}

/// Converts a world force applied at a world point on body `bk` into a
/// body-coordinate spatial force about the body origin.
pub fn point_force_to_spatial(bk: &BodyKinematics, point: &Vector3<f64>, force: &Vector3<f64>) -> SpatialVec {
    let rt = bk.world.rot.transpose();
    let p = rt * (point - bk.world.pos);
    let f = rt * force;
    spatial(&p.cross(&f), &f)
}

/// `Jᵀ f`: generalized force produced by body-coordinate spatial forces.
pub fn generalized_from_spatial(
    tree: &KinematicTree,
    kin: &TreeKinematics,
    wrenches: &[SpatialVec],
) -> nalgebra::DVector<f64> {
    let mut f: Vec<SpatialVec> = wrenches.to_vec();
    let mut tau = nalgebra::DVector::zeros(tree.dof());
    for (i, body) in tree.bodies().iter().enumerate().rev() {
        let bk = &kin.bodies[i];
        let proj = bk.s.columns(0, bk.ndof).transpose() * f[i];
        tau.rows_mut(body.dofs.start, bk.ndof).copy_from(&proj);
        if let Some(p) = body.parent {
            let up = bk.x_up.apply_force_transpose(&f[i]);
            f[p] += up;
        }
    }
    tau
}
