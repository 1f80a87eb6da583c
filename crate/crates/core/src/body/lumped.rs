//! Three-mass vertical chain: pelvis on the seat, trunk on the pelvis, head
//! on the trunk. Same engine, far fewer coordinates; used to check that the
//! calibration loop can recover known parameters.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::{CardanRestraint, PointRestraint, PLATFORM};
use crate::rigidbody::{build_tree, JointDef, JointKind, KinematicTree, SegmentDef};
use crate::spatial::Pose;

pub const SEGMENTS: [&str; 3] = ["pelvis", "trunk", "head"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LumpedConfig {
    pub masses: [f64; 3],
    /// seat–pelvis, pelvis–trunk, trunk–head (N/m)
    pub stiffness: [f64; 3],
    /// N·s/m
    pub damping: [f64; 3],
    #[serde(default)]
    pub gravity: f64,
}

impl Default for LumpedConfig {
    fn default() -> Self {
        Self {
            masses: [25.0, 30.0, 6.0],
            stiffness: [60_000.0, 40_000.0, 15_000.0],
            damping: [800.0, 600.0, 100.0],
            gravity: 0.0,
        }
    }
}

pub struct LumpedParts {
    pub tree: KinematicTree,
    pub restraints: Vec<CardanRestraint>,
    pub points: Vec<PointRestraint>,
}

pub fn build_lumped(c: &LumpedConfig) -> Result<LumpedParts> {
    let all = c.masses.iter().chain(&c.stiffness).chain(&c.damping);
    if c.masses.iter().any(|m| !(*m > 0.0)) || all.clone().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config(format!("lumped model needs positive masses and non-negative gains: {c:?}")));
    }
    let heights = [0.1, 0.4, 0.75];
    let mut segments = Vec::new();
    let mut joints = Vec::new();
    for (i, name) in SEGMENTS.iter().enumerate() {
        // inertia is irrelevant for a pure slide but must be positive
        segments.push(SegmentDef::new(*name, c.masses[i], Matrix3::identity() * 0.01 * c.masses[i], Vector3::zeros()));
        let (parent, origin) = match i {
            0 => (None, Vector3::new(0.0, 0.0, heights[0])),
            _ => (Some(SEGMENTS[i - 1]), Vector3::new(0.0, 0.0, heights[i] - heights[i - 1])),
        };
        joints.push(JointDef::new(
            format!("{name}_z"),
            JointKind::Translational1 { axis: Vector3::z() },
            parent,
            *name,
            Pose::translation(origin),
        ));
    }
    let tree = build_tree(segments, joints)?;
    let restraints = (1..3)
        .map(|i| CardanRestraint::new(format!("{}_z", SEGMENTS[i]), vec![c.stiffness[i]], vec![c.damping[i]]))
        .collect();
    let points = vec![PointRestraint {
        name: "seat".into(),
        body_a: "pelvis".into(),
        attach_a: Vector3::zeros(),
        body_b: PLATFORM.into(),
        attach_b: Vector3::new(0.0, 0.0, heights[0]),
        stiffness: c.stiffness[0],
        damping: c.damping[0],
    }];
    Ok(LumpedParts { tree, restraints, points })
}
