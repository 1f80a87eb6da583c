//! Reduced-coordinate articulated rigid-body kinematics and dynamics.

pub mod dynamics;
pub mod joint;
pub mod kinematics;
pub mod tree;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use dynamics::{forward_dynamics_aba, forward_dynamics_oracle, mass_matrix, PrescribedJoint};
pub use joint::JointKind;
pub use kinematics::{forward_kinematics, SegmentPose, TreeKinematics};
pub use tree::{build_tree, Body, JointDef, KinematicTree, SegmentDef};

/// Generalized positions and velocities plus the simulation clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub q: DVector<f64>,
    pub u: DVector<f64>,
    pub t: f64,
    /// Step counter; `t` is always `step · h` for fixed-step runs.
    pub step: u64,
}

impl SystemState {
    pub fn zeros(tree: &KinematicTree) -> Self {
        Self {
            q: DVector::zeros(tree.dof()),
            u: DVector::zeros(tree.dof()),
            t: 0.0,
            step: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.u.iter()).all(|v| v.is_finite()) && self.t.is_finite()
    }
}
