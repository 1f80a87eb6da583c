//! Force elements and their assembly into generalized forces.
//!
//! Elements are declared by name ([`PointRestraint`], [`ContactPair`],
//! [`CardanRestraint`]) and resolved against a tree and an [`Environment`]
//! into a [`ForceSet`] of index-based elements used inside the step loop.

pub mod contact;
pub mod restraint;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

pub use contact::{contact_force, ContactForce, ContactLaw};
pub use restraint::{cardan_restraint_load, point_restraint_force, CardanRestraint, PointRestraintLaw};

use crate::error::{Error, Result};
use crate::geometry::{
    ellipsoid_ellipsoid_penetration_or, ellipsoid_plane_penetration, Ellipsoid, Penetration, Plane,
};
use crate::rigidbody::kinematics::{generalized_from_spatial, point_force_to_spatial, TreeKinematics};
use crate::rigidbody::{KinematicTree, SystemState};
use crate::spatial::{Pose, SpatialVec};

pub const WORLD: &str = "world";
pub const PLATFORM: &str = "platform";

/// Frame a force element attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRef {
    World,
    /// The translating seat platform carrying floor, seat pan and backrest.
    Platform,
    Body(usize),
}

impl FrameRef {
    pub fn resolve(tree: &KinematicTree, name: &str) -> Result<Self> {
        match name {
            WORLD => Ok(FrameRef::World),
            PLATFORM => Ok(FrameRef::Platform),
            seg => tree
                .body_index(seg)
                .map(FrameRef::Body)
                .ok_or_else(|| Error::Config(format!("unknown segment `{seg}`"))),
        }
    }
}

/// Prescribed translation of the seat platform.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlatformState {
    pub displacement: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Plane { name: String, plane: Plane },
    Ellipsoid(Ellipsoid),
}

impl Primitive {
    pub fn name(&self) -> &str {
        match self {
            Primitive::Plane { name, .. } => name,
            Primitive::Ellipsoid(e) => &e.name,
        }
    }
}

/// Named group of primitives fixed to the platform (floor, seat pan, backrest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSurface {
    pub name: String,
    pub primitives: Vec<Primitive>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    pub surfaces: Vec<EnvSurface>,
}

impl Environment {
    pub fn primitive(&self, surface: &str, primitive: &str) -> Option<&Primitive> {
        self.surfaces
            .iter()
            .find(|s| s.name == surface)
            .and_then(|s| s.primitives.iter().find(|p| p.name() == primitive))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRestraint {
    pub name: String,
    pub body_a: String,
    pub attach_a: Vector3<f64>,
    pub body_b: String,
    pub attach_b: Vector3<f64>,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    pub name: String,
    /// Segment owning the ellipsoid.
    pub segment: String,
    pub ellipsoid: String,
    /// Environment surface and primitive.
    pub surface: String,
    pub primitive: String,
    pub law: ContactLaw,
}

#[derive(Debug, Clone)]
struct ResolvedRestraint {
    body: usize,
    restraint: CardanRestraint,
}

#[derive(Debug, Clone)]
struct ResolvedPoint {
    a: FrameRef,
    attach_a: Vector3<f64>,
    b: FrameRef,
    attach_b: Vector3<f64>,
    law: PointRestraintLaw,
}

#[derive(Debug, Clone)]
enum OtherShape {
    Plane(Plane),
    Ellipsoid { axes: Vector3<f64>, pose: Pose },
}

#[derive(Debug, Clone)]
struct ResolvedContact {
    name: String,
    body: usize,
    axes: Vector3<f64>,
    local: Pose,
    shape: OtherShape,
    law: ContactLaw,
}

/// Index-resolved force elements of one model.
#[derive(Debug, Clone)]
pub struct ForceSet {
    pub gravity: Vector3<f64>,
    restraints: Vec<ResolvedRestraint>,
    points: Vec<ResolvedPoint>,
    contacts: Vec<ResolvedContact>,
}

impl ForceSet {
    pub fn new(
        tree: &KinematicTree,
        env: &Environment,
        gravity: Vector3<f64>,
        restraints: &[CardanRestraint],
        points: &[PointRestraint],
        contacts: &[ContactPair],
    ) -> Result<Self> {
        let restraints = restraints
            .iter()
            .map(|r| {
                let body = tree
                    .joint_body(&r.joint)
                    .ok_or_else(|| Error::Config(format!("restraint on unknown joint `{}`", r.joint)))?;
                let n = tree.bodies()[body].dofs.len();
                if r.stiffness.len() != n || !r.is_valid() {
                    return Err(Error::Config(format!(
                        "restraint on `{}` needs {n} non-negative stiffness/damping/neutral entries",
                        r.joint
                    )));
                }
                Ok(ResolvedRestraint { body, restraint: r.clone() })
            })
            .collect::<Result<Vec<_>>>()?;

        let points = points
            .iter()
            .map(|p| {
                if !(p.stiffness >= 0.0 && p.damping >= 0.0) {
                    return Err(Error::Config(format!("point restraint `{}` has negative gains", p.name)));
                }
                Ok(ResolvedPoint {
                    a: FrameRef::resolve(tree, &p.body_a)?,
                    attach_a: p.attach_a,
                    b: FrameRef::resolve(tree, &p.body_b)?,
                    attach_b: p.attach_b,
                    law: PointRestraintLaw { stiffness: p.stiffness, damping: p.damping },
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let contacts = contacts
            .iter()
            .map(|c| {
                let body = tree
                    .body_index(&c.segment)
                    .ok_or_else(|| Error::Config(format!("contact `{}`: unknown segment `{}`", c.name, c.segment)))?;
                let ell = tree.bodies()[body]
                    .segment
                    .geometry
                    .iter()
                    .find(|e| e.name == c.ellipsoid)
                    .ok_or_else(|| Error::Config(format!("contact `{}`: unknown ellipsoid `{}`", c.name, c.ellipsoid)))?;
                let shape = match env.primitive(&c.surface, &c.primitive) {
                    Some(Primitive::Plane { plane, .. }) => OtherShape::Plane(*plane),
                    Some(Primitive::Ellipsoid(e)) => OtherShape::Ellipsoid { axes: e.semi_axes, pose: e.pose },
                    None => {
                        return Err(Error::Config(format!(
                            "contact `{}`: unknown surface `{}/{}`",
                            c.name, c.surface, c.primitive
                        )))
                    }
                };
                if !c.law.is_valid() {
                    return Err(Error::Config(format!("contact `{}` has invalid law parameters", c.name)));
                }
                Ok(ResolvedContact {
                    name: c.name.clone(),
                    body,
                    axes: ell.semi_axes,
                    local: ell.pose,
                    shape,
                    law: c.law,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self { gravity, restraints, points, contacts })
    }

    pub fn contact_names(&self) -> impl Iterator<Item = &str> {
        self.contacts.iter().map(|c| c.name.as_str())
    }

    pub fn contact_count(&self) -> usize {
        self.contacts.len()
    }

    /// Copy with every restraint gain replaced by `f(joint, coordinate, k, c)`.
    pub fn map_restraints(&self, f: impl Fn(&str, usize, f64, f64) -> (f64, f64)) -> Self {
        let mut out = self.clone();
        for r in &mut out.restraints {
            let r = &mut r.restraint;
            for i in 0..r.stiffness.len() {
                let (k, c) = f(&r.joint, i, r.stiffness[i], r.damping[i]);
                r.stiffness[i] = k;
                r.damping[i] = c;
            }
        }
        out
    }

    /// Linear damping of the joint restraints per generalized coordinate.
    pub fn joint_damping(&self, tree: &KinematicTree) -> DVector<f64> {
        let mut c = DVector::zeros(tree.dof());
        for r in &self.restraints {
            let start = tree.bodies()[r.body].dofs.start;
            for (i, d) in r.restraint.damping.iter().enumerate() {
                c[start + i] += d;
            }
        }
        c
    }

    /// Initial penetration depth of every contact pair at the given state.
    pub fn penetrations(&self, tree: &KinematicTree, q: &[f64], platform: &PlatformState) -> Result<Vec<(String, f64)>> {
        let kin = TreeKinematics::compute(tree, q, &vec![0.0; q.len()])?;
        let mut memory = ContactMemory::new(self.contacts.len());
        Ok(self
            .contacts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let depth = contact_geometry(c, &kin, platform, &mut memory, i).map_or(0.0, |p| p.depth);
                (c.name.clone(), depth)
            })
            .collect())
    }

    /// Gravity plus conservative restraint energy (contacts excluded).
    pub fn potential_energy(&self, tree: &KinematicTree, q: &[f64], platform: &PlatformState) -> Result<f64> {
        let kin = TreeKinematics::compute(tree, q, &vec![0.0; q.len()])?;
        let mut v = 0.0;
        for (i, body) in tree.bodies().iter().enumerate() {
            v -= body.segment.mass * self.gravity.dot(&kin.com_world(tree, i));
        }
        for r in &self.restraints {
            v += r.restraint.energy(&q[tree.bodies()[r.body].dofs.clone()]);
        }
        for p in &self.points {
            let (pa, _) = frame_point(&kin, platform, p.a, &p.attach_a);
            let (pb, _) = frame_point(&kin, platform, p.b, &p.attach_b);
            v += 0.5 * p.law.stiffness * (pa - pb).norm_squared();
        }
        Ok(v)
    }
}

/// Last valid contact normal per pair, used when ellipsoid centers coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMemory {
    pub normals: Vec<[f64; 3]>,
}

impl ContactMemory {
    pub fn new(n: usize) -> Self {
        Self { normals: vec![[0.0, 0.0, 1.0]; n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactReport {
    pub depth: f64,
    /// Force on the body ellipsoid, world frame.
    pub force: ContactForce,
    pub point: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct ForceOutput {
    pub generalized: DVector<f64>,
    pub contacts: Vec<ContactReport>,
}

fn frame_point(
    kin: &TreeKinematics,
    platform: &PlatformState,
    frame: FrameRef,
    local: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    match frame {
        FrameRef::World => (*local, Vector3::zeros()),
        FrameRef::Platform => (local + platform.displacement, platform.velocity),
        FrameRef::Body(i) => {
            let bk = &kin.bodies[i];
            (bk.world.transform_point(local), bk.point_velocity(local))
        }
    }
}

fn contact_geometry(
    c: &ResolvedContact,
    kin: &TreeKinematics,
    platform: &PlatformState,
    memory: &mut ContactMemory,
    index: usize,
) -> Option<Penetration> {
    let pose_a = kin.bodies[c.body].world.compose(&c.local);
    let shift = Pose::translation(platform.displacement);
    let pen = match &c.shape {
        OtherShape::Plane(plane) => {
            let moved = Plane { normal: plane.normal, offset: plane.offset + plane.normal.dot(&platform.displacement) };
            ellipsoid_plane_penetration(&pose_a, &c.axes, &moved).ok().flatten()
        }
        OtherShape::Ellipsoid { axes, pose } => {
            let pose_b = shift.compose(pose);
            let prev = Vector3::from(memory.normals[index]);
            ellipsoid_ellipsoid_penetration_or(&pose_b, axes, &pose_a, &c.axes, &prev).ok().flatten()
        }
    };
    if let Some(p) = &pen {
        memory.normals[index] = p.normal.into();
    }
    pen
}

/// Sum of all element contributions mapped to generalized forces, with the
/// kinematics of the current state already computed.
pub fn assemble_with_kinematics(
    tree: &KinematicTree,
    kin: &TreeKinematics,
    q: &[f64],
    u: &[f64],
    forces: &ForceSet,
    platform: &PlatformState,
    memory: &mut ContactMemory,
) -> ForceOutput {
    let mut wrenches = vec![SpatialVec::zeros(); tree.len()];

    if forces.gravity != Vector3::zeros() {
        for (i, body) in tree.bodies().iter().enumerate() {
            let com = kin.com_world(tree, i);
            wrenches[i] += point_force_to_spatial(&kin.bodies[i], &com, &(body.segment.mass * forces.gravity));
        }
    }

    let mut apply = |frame: FrameRef, point: &Vector3<f64>, force: &Vector3<f64>| {
        if let FrameRef::Body(i) = frame {
            wrenches[i] += point_force_to_spatial(&kin.bodies[i], point, force);
        }
    };

    for p in &forces.points {
        let (pa, va) = frame_point(kin, platform, p.a, &p.attach_a);
        let (pb, vb) = frame_point(kin, platform, p.b, &p.attach_b);
        let f = point_restraint_force(&p.law, &(pa - pb), &(va - vb));
        apply(p.a, &pa, &f);
        apply(p.b, &pb, &(-f));
    }

    let mut reports = Vec::with_capacity(forces.contacts.len());
    for (idx, c) in forces.contacts.iter().enumerate() {
        let Some(pen) = contact_geometry(c, kin, platform, memory, idx) else {
            reports.push(ContactReport::default());
            continue;
        };
        let bk = &kin.bodies[c.body];
        let local = bk.world.rot.transpose() * (pen.point - bk.world.pos);
        let rel = bk.point_velocity(&local) - platform.velocity;
        let normal_speed = rel.dot(&pen.normal);
        let v_t = rel - normal_speed * pen.normal;
        let f = contact_force(pen.depth, -normal_speed, &pen.normal, &v_t, &c.law);
        apply(FrameRef::Body(c.body), &pen.point, &f.total());
        reports.push(ContactReport { depth: pen.depth, force: f, point: pen.point });
    }

    let mut generalized = generalized_from_spatial(tree, kin, &wrenches);
    for r in &forces.restraints {
        let dofs = tree.bodies()[r.body].dofs.clone();
        let tau = cardan_restraint_load(&r.restraint, &q[dofs.clone()], &u[dofs.clone()]);
        for (k, t) in dofs.zip(tau) {
            generalized[k] += t;
        }
    }
    ForceOutput { generalized, contacts: reports }
}

/// Generalized force vector of all force elements at `state`.
pub fn assemble_generalized_forces(
    tree: &KinematicTree,
    state: &SystemState,
    forces: &ForceSet,
    platform: &PlatformState,
) -> Result<DVector<f64>> {
    let kin = TreeKinematics::compute(tree, state.q.as_slice(), state.u.as_slice())?;
    let mut memory = ContactMemory::new(forces.contacts.len());
    Ok(assemble_with_kinematics(tree, &kin, state.q.as_slice(), state.u.as_slice(), forces, platform, &mut memory)
        .generalized)
}
