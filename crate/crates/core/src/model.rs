//! A fully assembled simulation model: tree, force elements, controller
//! layout and the identity hash used by restart snapshots.

use std::fmt::Write as _;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::lumped::{build_lumped, LumpedConfig};
use crate::body::{build_ehm, build_seat, EhmConfig, SeatConfig};
use crate::control::{ControllerBank, JointControl};
use crate::error::Result;
use crate::forces::{CardanRestraint, ContactPair, Environment, ForceSet, PointRestraint};
use crate::rigidbody::{JointDef, KinematicTree, SegmentDef};

/// Model section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Ehm(Box<EhmConfig>),
    Lumped3(LumpedConfig),
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Ehm(Box::default())
    }
}

/// Ingredients of a hand-assembled model.
#[derive(Debug, Clone)]
pub struct ModelParts {
    pub tree: KinematicTree,
    pub environment: Environment,
    pub restraints: Vec<CardanRestraint>,
    pub points: Vec<PointRestraint>,
    pub contacts: Vec<ContactPair>,
    pub gravity: Vector3<f64>,
    pub controls: Vec<JointControl>,
    pub initial_q: DVector<f64>,
    pub motion: [bool; 3],
    pub outputs: Vec<OutputBody>,
}

impl ModelParts {
    /// Bare tree at `q = 0`: no force elements, no gravity, no driven axes,
    /// every segment reported under its own name.
    pub fn new(tree: KinematicTree) -> Self {
        let outputs = tree
            .bodies()
            .iter()
            .map(|b| OutputBody { label: "segment", segment: b.segment.name.clone() })
            .collect();
        Self {
            initial_q: DVector::zeros(tree.dof()),
            tree,
            environment: Environment::default(),
            restraints: Vec::new(),
            points: Vec::new(),
            contacts: Vec::new(),
            gravity: Vector3::zeros(),
            controls: Vec::new(),
            motion: [false; 3],
            outputs,
        }
    }
}

/// Body of interest for reporting, with the segment that represents it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBody {
    pub label: &'static str,
    pub segment: String,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub kind: &'static str,
    pub tree: KinematicTree,
    pub environment: Environment,
    pub restraints: Vec<CardanRestraint>,
    pub points: Vec<PointRestraint>,
    pub contacts: Vec<ContactPair>,
    pub gravity: Vector3<f64>,
    pub forces: ForceSet,
    pub controls: Vec<JointControl>,
    pub initial_q: DVector<f64>,
    /// Platform axes driven by the excitation.
    pub motion: [bool; 3],
    pub outputs: Vec<OutputBody>,
    hash: String,
}

#[derive(Serialize)]
struct HashView<'a> {
    kind: &'a str,
    segments: Vec<&'a SegmentDef>,
    joints: Vec<&'a JointDef>,
    environment: &'a Environment,
    contacts: Vec<(&'a str, &'a str, &'a str, &'a str, &'a str)>,
    points: Vec<(&'a str, &'a str, [f64; 3], &'a str, [f64; 3])>,
    restrained: Vec<&'a str>,
    controlled: Vec<&'a str>,
    gravity: [f64; 3],
    initial_q: &'a [f64],
    motion: [bool; 3],
}

impl Model {
    pub fn build(spec: &ModelSpec, seat: &SeatConfig) -> Result<Self> {
        match spec {
            ModelSpec::Ehm(cfg) => Self::ehm(cfg, seat),
            ModelSpec::Lumped3(cfg) => Self::lumped(cfg),
        }
    }

    pub fn from_parts(p: ModelParts) -> Result<Self> {
        p.tree.check_len(p.initial_q.len())?;
        Self::assemble(
            "custom",
            p.tree,
            p.environment,
            p.restraints,
            p.points,
            p.contacts,
            p.gravity,
            p.controls,
            p.initial_q,
            p.motion,
            p.outputs,
        )
    }

    pub fn ehm(cfg: &EhmConfig, seat: &SeatConfig) -> Result<Self> {
        let body = build_ehm(cfg)?;
        let q0 = DVector::zeros(body.tree.dof());
        let env = build_seat(seat, &body, q0.as_slice(), &cfg.flesh, &cfg.contact)?;
        let outputs = vec![
            OutputBody { label: "head", segment: "head".into() },
            OutputBody { label: "trunk", segment: "upper_torso".into() },
            OutputBody { label: "pelvis", segment: "pelvis".into() },
        ];
        Self::assemble(
            "ehm",
            body.tree,
            env.environment,
            body.restraints,
            env.points,
            env.contacts,
            Vector3::from(cfg.gravity),
            body.controls,
            q0,
            seat.motion.mask(),
            outputs,
        )
    }

    pub fn lumped(cfg: &LumpedConfig) -> Result<Self> {
        let parts = build_lumped(cfg)?;
        let q0 = DVector::zeros(parts.tree.dof());
        let outputs = vec![
            OutputBody { label: "head", segment: "head".into() },
            OutputBody { label: "trunk", segment: "trunk".into() },
            OutputBody { label: "pelvis", segment: "pelvis".into() },
        ];
        Self::assemble(
            "lumped3",
            parts.tree,
            Environment::default(),
            parts.restraints,
            parts.points,
            Vec::new(),
            Vector3::new(0.0, 0.0, -cfg.gravity),
            Vec::new(),
            q0,
            [false, false, true],
            outputs,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: &'static str,
        tree: KinematicTree,
        environment: Environment,
        restraints: Vec<CardanRestraint>,
        points: Vec<PointRestraint>,
        contacts: Vec<ContactPair>,
        gravity: Vector3<f64>,
        controls: Vec<JointControl>,
        initial_q: DVector<f64>,
        motion: [bool; 3],
        outputs: Vec<OutputBody>,
    ) -> Result<Self> {
        let forces = ForceSet::new(&tree, &environment, gravity, &restraints, &points, &contacts)?;
        // validates the controller layout early
        ControllerBank::new(&tree, &controls)?;
        let mut model = Self {
            kind,
            tree,
            environment,
            restraints,
            points,
            contacts,
            gravity,
            forces,
            controls,
            initial_q,
            motion,
            outputs,
            hash: String::new(),
        };
        model.hash = model.compute_hash();
        Ok(model)
    }

    /// Identity of structure, inertia, geometry and controller layout.
    /// Calibratable gains (restraint, contact, flesh and PID values) are
    /// deliberately excluded so one settled snapshot serves a whole
    /// calibration run.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn compute_hash(&self) -> String {
        let view = HashView {
            kind: self.kind,
            segments: self.tree.bodies().iter().map(|b| &b.segment).collect(),
            joints: self.tree.bodies().iter().map(|b| &b.joint).collect(),
            environment: &self.environment,
            contacts: self
                .contacts
                .iter()
                .map(|c| (c.name.as_str(), c.segment.as_str(), c.ellipsoid.as_str(), c.surface.as_str(), c.primitive.as_str()))
                .collect(),
            points: self
                .points
                .iter()
                .map(|p| (p.name.as_str(), p.body_a.as_str(), p.attach_a.into(), p.body_b.as_str(), p.attach_b.into()))
                .collect(),
            restrained: self.restraints.iter().map(|r| r.joint.as_str()).collect(),
            controlled: self.controls.iter().map(|c| c.joint.as_str()).collect(),
            gravity: self.gravity.into(),
            initial_q: self.initial_q.as_slice(),
            motion: self.motion,
        };
        let bytes = serde_json::to_vec(&view).expect("hash view serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn controller_bank(&self) -> Result<ControllerBank> {
        ControllerBank::new(&self.tree, &self.controls)
    }

    pub fn segment_count(&self) -> usize {
        self.tree.len()
    }

    pub fn dof(&self) -> usize {
        self.tree.dof()
    }

    /// Canonical, diffable text description.
    pub fn dump(&self) -> String {
        let v = |x: &Vector3<f64>| format!("({:.6}, {:.6}, {:.6})", x.x, x.y, x.z);
        let list = |x: &[f64]| x.iter().map(|a| format!("{a:.6}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "model {}", self.kind);
        let _ = writeln!(s, "hash {}", self.hash);
        let _ = writeln!(
            s,
            "segments {} dof {} mass {:.6} gravity {}",
            self.tree.len(),
            self.tree.dof(),
            self.tree.total_mass(),
            v(&self.gravity)
        );
        for b in self.tree.bodies() {
            let i = &b.segment.inertia;
            let _ = writeln!(
                s,
                "segment {} mass {:.6} com {} inertia ({:.6}, {:.6}, {:.6}, {:.6}, {:.6}, {:.6})",
                b.segment.name,
                b.segment.mass,
                v(&b.segment.com_offset),
                i[(0, 0)],
                i[(1, 1)],
                i[(2, 2)],
                i[(0, 1)],
                i[(0, 2)],
                i[(1, 2)]
            );
            for e in &b.segment.geometry {
                let _ = writeln!(s, "  ellipsoid {} axes {} at {}", e.name, v(&e.semi_axes), v(&e.pose.pos));
            }
        }
        for b in self.tree.bodies() {
            let _ = writeln!(
                s,
                "joint {} {} {} -> {} dofs {}..{} origin {} coords [{}]",
                b.joint.name,
                b.joint.kind.label(),
                b.joint.parent.as_deref().unwrap_or("world"),
                b.joint.child,
                b.dofs.start,
                b.dofs.end,
                v(&b.joint.parent_frame.pos),
                b.joint.kind.coordinate_names().join(", ")
            );
        }
        for r in &self.restraints {
            let _ = writeln!(
                s,
                "restraint {} k [{}] c [{}] neutral [{}]",
                r.joint,
                list(&r.stiffness),
                list(&r.damping),
                list(&r.neutral)
            );
        }
        for p in &self.points {
            let _ = writeln!(
                s,
                "point {} {}{} <-> {}{} k {:.6} c {:.6}",
                p.name,
                p.body_a,
                v(&p.attach_a),
                p.body_b,
                v(&p.attach_b),
                p.stiffness,
                p.damping
            );
        }
        for surface in &self.environment.surfaces {
            for prim in &surface.primitives {
                match prim {
                    crate::forces::Primitive::Plane { name, plane } => {
                        let _ = writeln!(s, "surface {}/{} plane n {} d {:.6}", surface.name, name, v(&plane.normal), plane.offset);
                    }
                    crate::forces::Primitive::Ellipsoid(e) => {
                        let _ = writeln!(s, "surface {}/{} ellipsoid axes {} at {}", surface.name, e.name, v(&e.semi_axes), v(&e.pose.pos));
                    }
                }
            }
        }
        for c in &self.contacts {
            let _ = writeln!(
                s,
                "contact {} {}/{} <-> {}/{} k {:.6} c {:.6} mu {:.6} eps {:.6}",
                c.name,
                c.segment,
                c.ellipsoid,
                c.surface,
                c.primitive,
                c.law.stiffness,
                c.law.damping,
                c.law.friction_mu,
                c.law.friction_vel_eps
            );
        }
        for c in &self.controls {
            for g in &c.gains {
                let _ = writeln!(
                    s,
                    "control {} kp {:.6} ki {:.6} kd {:.6} limit {:.6}",
                    c.joint, g.kp, g.ki, g.kd, g.integrator_limit
                );
            }
        }
        s
    }
}
