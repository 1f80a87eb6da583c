use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::joint::JointKind;
use crate::error::{Error, Result};
use crate::geometry::Ellipsoid;
use crate::spatial::{spatial_inertia, Plucker, Pose, SpatialMat};

/// Rigid segment with inertial data expressed in its joint (segment) frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDef {
    pub name: String,
    pub mass: f64,
    /// Rotational inertia about the COM, segment-frame axes.
    pub inertia: Matrix3<f64>,
    pub com_offset: Vector3<f64>,
    #[serde(default)]
    pub geometry: Vec<Ellipsoid>,
}

impl SegmentDef {
    pub fn new(name: impl Into<String>, mass: f64, inertia: Matrix3<f64>, com: Vector3<f64>) -> Self {
        Self { name: name.into(), mass, inertia, com_offset: com, geometry: Vec::new() }
    }

    pub fn with_geometry(mut self, e: Ellipsoid) -> Self {
        self.geometry.push(e);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidSegment { name: self.name.clone(), reason: reason.into() };
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(bad("mass must be positive"));
        }
        let i = &self.inertia;
        let asym = (i - i.transpose()).amax();
        if !i.iter().all(|v| v.is_finite()) || asym > 1e-12 * (1.0 + i.amax()) {
            return Err(bad("inertia must be symmetric"));
        }
        if i.cholesky().is_none() {
            return Err(bad("inertia must be positive definite"));
        }
        for e in &self.geometry {
            e.validate().map_err(|_| bad(&format!("ellipsoid `{}` has non-positive semi-axes", e.name)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: JointKind,
    /// `None` attaches the joint to the inertial world frame.
    pub parent: Option<String>,
    pub child: String,
    /// Joint frame placement in the parent segment frame (or world).
    #[serde(default)]
    pub parent_frame: Pose,
}

impl JointDef {
    pub fn new(
        name: impl Into<String>,
        kind: JointKind,
        parent: Option<&str>,
        child: impl Into<String>,
        parent_frame: Pose,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            parent: parent.map(str::to_owned),
            child: child.into(),
            parent_frame,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidJoint { name: self.name.clone(), reason: reason.into() };
        let unit = |a: &Vector3<f64>| (a.norm() - 1.0).abs() < 1e-9;
        match &self.kind {
            JointKind::Universal2 { axes } => {
                if !axes.iter().all(unit) {
                    return Err(bad("axes must be unit length"));
                }
                if axes[0].dot(&axes[1]).abs() > 1e-9 {
                    return Err(bad("universal axes must be orthogonal"));
                }
            }
            JointKind::Revolute1 { axis }
            | JointKind::Translational1 { axis }
            | JointKind::SphericalTranslational4 { axis } => {
                if !unit(axis) {
                    return Err(bad("axis must be unit length"));
                }
            }
            JointKind::Free6 | JointKind::Spherical3 => {}
        }
        let r = &self.parent_frame.rot;
        if (r.transpose() * r - Matrix3::identity()).amax() > 1e-9 || r.determinant() < 0.0 {
            return Err(bad("parent frame rotation must be proper orthonormal"));
        }
        Ok(())
    }
}

/// One segment together with the joint that connects it to its parent.
#[derive(Debug, Clone)]
pub struct Body {
    pub segment: SegmentDef,
    pub joint: JointDef,
    /// Index of the parent body, `None` for the world.
    pub parent: Option<usize>,
    pub dofs: Range<usize>,
    pub spatial_inertia: SpatialMat,
    /// Motion transform from parent body frame to the joint input frame.
    pub x_tree: Plucker,
}

/// Rooted joint tree with bodies stored in topological order (parents first).
#[derive(Debug, Clone)]
pub struct KinematicTree {
    bodies: Vec<Body>,
    dof: usize,
    index: HashMap<String, usize>,
}

impl KinematicTree {
    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn body_index(&self, segment: &str) -> Option<usize> {
        self.index.get(segment).copied()
    }

    pub fn body(&self, segment: &str) -> Option<&Body> {
        self.body_index(segment).map(|i| &self.bodies[i])
    }

    /// Body whose joint is named `joint`.
    pub fn joint_body(&self, joint: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.joint.name == joint)
    }

    pub fn dof_map(&self) -> impl Iterator<Item = (&str, Range<usize>)> {
        self.bodies.iter().map(|b| (b.joint.name.as_str(), b.dofs.clone()))
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.segment.mass).sum()
    }

    /// Names `<joint>.<coordinate>` for every generalized coordinate.
    pub fn coordinate_names(&self) -> Vec<String> {
        self.bodies
            .iter()
            .flat_map(|b| {
                b.joint.kind.coordinate_names().iter().map(move |c| format!("{}.{}", b.joint.name, c))
            })
            .collect()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dof {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dof, got: len })
        }
    }

    /// Fails when any Cardan joint's middle angle exceeds the gimbal guard.
    pub fn check_gimbal(&self, q: &[f64]) -> Result<()> {
        for b in &self.bodies {
            if let Some(off) = b.joint.kind.cardan_offset() {
                let angle = q[b.dofs.start + off + 1];
                if angle.abs() > super::joint::GIMBAL_GUARD {
                    return Err(Error::GimbalGuard { joint: b.joint.name.clone(), angle });
                }
            }
        }
        Ok(())
    }
}

/// Assembles a tree from segments and joints, ordering bodies breadth-first from the world.
pub fn build_tree(segments: Vec<SegmentDef>, joints: Vec<JointDef>) -> Result<KinematicTree> {
    let mut seg_by_name: HashMap<&str, usize> = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        s.validate()?;
        if seg_by_name.insert(s.name.as_str(), i).is_some() {
            return Err(Error::InvalidSegment { name: s.name.clone(), reason: "duplicate name".into() });
        }
    }

    let mut joint_of_child: Vec<Option<usize>> = vec![None; segments.len()];
    for (j, jd) in joints.iter().enumerate() {
        jd.validate()?;
        let dangling = |seg: &str| Error::DanglingReference { joint: jd.name.clone(), segment: seg.into() };
        let child = *seg_by_name.get(jd.child.as_str()).ok_or_else(|| dangling(&jd.child))?;
        if let Some(p) = &jd.parent {
            if !seg_by_name.contains_key(p.as_str()) {
                return Err(dangling(p));
            }
        }
        if joint_of_child[child].replace(j).is_some() {
            return Err(Error::DuplicateChild(jd.child.clone()));
        }
    }

    let order = bfs_order(&segments, &joints, &seg_by_name, &joint_of_child)?;

    let mut bodies = Vec::with_capacity(order.len());
    let mut index = HashMap::new();
    let mut dof = 0;
    for &s in &order {
        let seg = segments[s].clone();
        let jd = joints[joint_of_child[s].expect("ordered segments have joints")].clone();
        let parent = jd.parent.as_ref().map(|p| index[p.as_str()]);
        let n = jd.kind.dof();
        let inertia = spatial_inertia(seg.mass, &seg.com_offset, &seg.inertia);
        index.insert(seg.name.clone(), bodies.len());
        bodies.push(Body {
            x_tree: jd.parent_frame.motion_to_child(),
            segment: seg,
            joint: jd,
            parent,
            dofs: dof..dof + n,
            spatial_inertia: inertia,
        });
        dof += n;
    }
    Ok(KinematicTree { bodies, dof, index })
}

fn bfs_order(
    segments: &[SegmentDef],
    joints: &[JointDef],
    seg_by_name: &HashMap<&str, usize>,
    joint_of_child: &[Option<usize>],
) -> Result<Vec<usize>> {
    let mut order = Vec::with_capacity(segments.len());
    let mut queue = std::collections::VecDeque::from([None::<usize>]);
    let mut placed = vec![false; segments.len()];
    while let Some(parent) = queue.pop_front() {
        let parent_name = parent.map(|p| segments[p].name.as_str());
        for jd in joints.iter().filter(|jd| jd.parent.as_deref() == parent_name) {
            let c = seg_by_name[jd.child.as_str()];
            if !placed[c] {
                placed[c] = true;
                order.push(c);
                queue.push_back(Some(c));
            }
        }
    }
    if let Some(missing) = (0..segments.len()).find(|&i| !placed[i]) {
        // an unreachable segment with a parent joint sits on a cycle
        return Err(match joint_of_child[missing] {
            Some(_) => Error::Cycle(segments[missing].name.clone()),
            None => Error::Unattached(segments[missing].name.clone()),
        });
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(name: &str) -> SegmentDef {
        SegmentDef::new(name, 1.0, Matrix3::identity() * 0.01, Vector3::zeros())
    }

    fn free(child: &str) -> JointDef {
        JointDef::new(format!("j_{child}"), JointKind::Free6, None, child, Pose::identity())
    }

    fn rev(parent: &str, child: &str) -> JointDef {
        JointDef::new(
            format!("j_{child}"),
            JointKind::Revolute1 { axis: Vector3::y() },
            Some(parent),
            child,
            Pose::identity(),
        )
    }

    #[test]
    fn single_free_body_has_six_dof() {
        let tree = build_tree(vec![seg("pelvis")], vec![free("pelvis")]).unwrap();
        assert_eq!(tree.dof(), 6);
        assert_eq!(tree.len(), 1);
    }

    #[test]
    fn bodies_are_topologically_ordered() {
        // declared out of order on purpose
        let segs = vec![seg("c"), seg("a"), seg("b")];
        let joints = vec![rev("b", "c"), free("a"), rev("a", "b")];
        let tree = build_tree(segs, joints).unwrap();
        let names: Vec<_> = tree.bodies().iter().map(|b| b.segment.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(tree.dof(), 8);
        assert_eq!(tree.bodies()[2].dofs, 7..8);
        for (i, b) in tree.bodies().iter().enumerate() {
            if let Some(p) = b.parent {
                assert!(p < i);
            }
        }
    }

    #[test]
    fn shared_child_rejected() {
        let err = build_tree(vec![seg("a"), seg("b")], vec![free("a"), rev("a", "b"), rev("a", "b")])
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateChild(name) if name == "b"));
    }

    #[test]
    fn dangling_reference_rejected() {
        let err = build_tree(vec![seg("a")], vec![free("a"), rev("a", "ghost")]).unwrap_err();
        assert!(matches!(err, Error::DanglingReference { .. }));
    }

    #[test]
    fn cycle_rejected() {
        let segs = vec![seg("a"), seg("b"), seg("c")];
        let joints = vec![free("a"), rev("c", "b"), rev("b", "c")];
        assert!(matches!(build_tree(segs, joints).unwrap_err(), Error::Cycle(_)));
    }

    #[test]
    fn unattached_segment_rejected() {
        let err = build_tree(vec![seg("a"), seg("b")], vec![free("a")]).unwrap_err();
        assert!(matches!(err, Error::Unattached(name) if name == "b"));
    }

    #[test]
    fn invalid_inertia_rejected() {
        let mut s = seg("a");
        s.inertia[(0, 1)] = 0.5;
        assert!(build_tree(vec![s], vec![free("a")]).is_err());
        let mut s = seg("a");
        s.mass = 0.0;
        assert!(build_tree(vec![s], vec![free("a")]).is_err());
    }
}
