//! The 12-segment seated occupant, its seat environment and a lumped
//! vertical surrogate used for calibration studies.

pub mod lumped;
pub mod seat;

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use seat::{build_seat, BackrestConfig, SeatConfig, SeatEnvironment};

use crate::control::tuning::TuningPlant;
use crate::control::{JointControl, PidGains};
use crate::error::{Error, Result};
use crate::forces::{CardanRestraint, ContactLaw};
use crate::geometry::Ellipsoid;
use crate::rigidbody::{build_tree, JointDef, JointKind, KinematicTree, SegmentDef};
use crate::spatial::Pose;

/// Built-in anthropometry, restraint and controller defaults.
pub const DEFAULTS_JSON: &str = include_str!("../../data/ehm_defaults.json");

/// Dimensions of the person the segment table was measured on.
pub const REFERENCE_STATURE: f64 = 1.76;
pub const REFERENCE_SITTING_HEIGHT: f64 = 0.92;

/// Segments in tree order with the joint connecting each to its parent.
const TOPOLOGY: [(&str, &str, Option<&str>); 9] = [
    ("pelvis", "base", None),
    ("lower_torso", "lumbosacral", Some("pelvis")),
    ("middle_torso", "l4_l5", Some("lower_torso")),
    ("upper_torso", "thoracic", Some("middle_torso")),
    ("neck", "t1_c7", Some("upper_torso")),
    ("head", "c1_c0", Some("neck")),
    ("thigh", "hip", Some("pelvis")),
    ("lower_leg", "knee", Some("thigh")),
    ("foot", "ankle", Some("lower_leg")),
];

fn joint_kind(joint: &str) -> JointKind {
    match joint {
        "base" => JointKind::Free6,
        "thoracic" => JointKind::SphericalTranslational4 { axis: Vector3::z() },
        "t1_c7" => JointKind::Universal2 { axes: [Vector3::x(), Vector3::y()] },
        "knee" | "ankle" => JointKind::Revolute1 { axis: Vector3::y() },
        _ => JointKind::Spherical3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleGroup {
    /// Scales with sitting height.
    Trunk,
    /// Scales with stature minus sitting height.
    Leg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidSpec {
    pub name: String,
    pub semi_axes: [f64; 3],
    pub center: [f64; 3],
}

impl EllipsoidSpec {
    pub fn to_ellipsoid(&self, scale: f64) -> Ellipsoid {
        Ellipsoid::new(
            self.name.clone(),
            Vector3::from(self.semi_axes) * scale,
            Pose::translation(Vector3::from(self.center) * scale),
        )
    }
}

/// One row of the segment table, at reference size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentAnthro {
    pub name: String,
    pub group: ScaleGroup,
    pub mass_fraction: f64,
    /// Joint location in the parent segment frame (left side for mirrored rows).
    pub joint_origin: [f64; 3],
    pub com: [f64; 3],
    pub gyration_radii: [f64; 3],
    #[serde(default)]
    pub geometry: Vec<EllipsoidSpec>,
    /// Present as a left/right pair.
    #[serde(default)]
    pub mirrored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anthropometry {
    pub total_mass: f64,
    pub stature: f64,
    pub sitting_height: f64,
    /// Pelvis frame origin above the undeformed seat surface.
    pub pelvis_origin: [f64; 3],
    pub segments: Vec<SegmentAnthro>,
    /// Top of the head in the head frame.
    pub vertex: [f64; 3],
}

impl Anthropometry {
    pub fn trunk_scale(&self) -> f64 {
        self.sitting_height / REFERENCE_SITTING_HEIGHT
    }

    pub fn leg_scale(&self) -> f64 {
        (self.stature - self.sitting_height) / (REFERENCE_STATURE - REFERENCE_SITTING_HEIGHT)
    }

    pub fn scale(&self, group: ScaleGroup) -> f64 {
        match group {
            ScaleGroup::Trunk => self.trunk_scale(),
            ScaleGroup::Leg => self.leg_scale(),
        }
    }

    pub fn segment(&self, name: &str) -> Option<&SegmentAnthro> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidAnthropometry(reason));
        if !(self.total_mass > 0.0 && self.total_mass.is_finite()) {
            return bad(format!("total mass {} must be positive", self.total_mass));
        }
        if !(self.sitting_height > 0.0 && self.stature > self.sitting_height) {
            return bad(format!(
                "stature {} must exceed sitting height {} > 0",
                self.stature, self.sitting_height
            ));
        }
        let sum: f64 =
            self.segments.iter().map(|s| if s.mirrored { 2.0 } else { 1.0 } * s.mass_fraction).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return bad(format!("mass fractions sum to {sum}, expected 1"));
        }
        for s in &self.segments {
            if !(s.mass_fraction > 0.0) || s.gyration_radii.iter().any(|r| !(*r > 0.0)) {
                return bad(format!("segment `{}` needs positive mass fraction and gyration radii", s.name));
            }
            for e in &s.geometry {
                if e.semi_axes.iter().any(|a| !(*a > 0.0)) {
                    return bad(format!("ellipsoid `{}` on `{}` has non-positive semi-axes", e.name, s.name));
                }
            }
        }
        for (seg, _, _) in TOPOLOGY {
            if self.segment(seg).is_none() {
                return bad(format!("segment table lacks `{seg}`"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestraintParams {
    pub stiffness: Vec<f64>,
    pub damping: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleshParams {
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleshConfig {
    pub pelvis_seat: FleshParams,
    pub torso_backrest: FleshParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGroup {
    pub name: String,
    /// Joint names; `hip`, `knee`, `ankle` expand to both sides.
    pub joints: Vec<String>,
    pub gains: PidGains,
    /// Gains for sliding coordinates (the thoracic slide).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translational_gains: Option<PidGains>,
    /// One-DoF analog the integral gain was tuned on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<TuningPlant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub enabled: bool,
    pub groups: Vec<ControllerGroup>,
}

/// Everything needed to assemble the occupant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EhmConfig {
    pub anthropometry: Anthropometry,
    pub gravity: [f64; 3],
    /// Keyed by joint name; `hip`, `knee`, `ankle` apply to both sides.
    pub restraints: BTreeMap<String, RestraintParams>,
    pub flesh: FleshConfig,
    pub contact: ContactLaw,
    pub controllers: ControllerConfig,
}

impl Default for EhmConfig {
    fn default() -> Self {
        let v: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).expect("built-in defaults parse");
        // field by field: going through `EhmConfig` itself would recurse into
        // this default
        fn field<T: serde::de::DeserializeOwned>(v: &serde_json::Value, key: &str) -> T {
            serde_json::from_value(v[key].clone()).expect("built-in defaults are valid")
        }
        Self {
            anthropometry: field(&v, "anthropometry"),
            gravity: field(&v, "gravity"),
            restraints: field(&v, "restraints"),
            flesh: field(&v, "flesh"),
            contact: field(&v, "contact"),
            controllers: field(&v, "controllers"),
        }
    }
}

/// Joint names produced for a topology entry.
fn expand(joint: &str, mirrored: bool) -> Vec<String> {
    if mirrored {
        vec![format!("{joint}_l"), format!("{joint}_r")]
    } else {
        vec![joint.to_string()]
    }
}

/// Group key under which restraints and controllers address a joint.
pub fn joint_group(joint: &str) -> &str {
    joint.strip_suffix("_l").or_else(|| joint.strip_suffix("_r")).unwrap_or(joint)
}

/// Named body points used by the seat builder.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks {
    /// Lowest point of the buttocks ellipsoid, pelvis frame.
    pub buttocks: Vector3<f64>,
    /// Most posterior point of the thoracic back ellipsoid, upper-torso frame.
    pub upper_back: Vector3<f64>,
    /// Top of the head, head frame.
    pub vertex: Vector3<f64>,
}

/// Assembled occupant before the seat is added.
#[derive(Debug, Clone)]
pub struct EhmBody {
    pub tree: KinematicTree,
    pub restraints: Vec<CardanRestraint>,
    pub controls: Vec<JointControl>,
    pub landmarks: Landmarks,
}

pub fn build_ehm(config: &EhmConfig) -> Result<EhmBody> {
    let anthro = &config.anthropometry;
    anthro.validate()?;
    let mut segments = Vec::new();
    let mut joints = Vec::new();
    for (seg_name, joint_name, parent) in TOPOLOGY {
        let row = anthro.segment(seg_name).expect("validated");
        let s = anthro.scale(row.group);
        let mass = row.mass_fraction * anthro.total_mass;
        let r = Vector3::from(row.gyration_radii) * s;
        let inertia = Matrix3::from_diagonal(&r.component_mul(&r)) * mass;
        let sides: Vec<(String, f64)> = if row.mirrored {
            vec![(format!("{seg_name}_l"), 1.0), (format!("{seg_name}_r"), -1.0)]
        } else {
            vec![(seg_name.to_string(), 1.0)]
        };
        let joint_names = expand(joint_name, row.mirrored);
        for ((name, side), jname) in sides.into_iter().zip(joint_names) {
            let mirror = |v: [f64; 3]| Vector3::new(v[0], side * v[1], v[2]) * s;
            let mut seg = SegmentDef::new(name.clone(), mass, inertia, mirror(row.com));
            for e in &row.geometry {
                let mut ell = e.to_ellipsoid(s);
                ell.pose.pos.y *= side;
                seg = seg.with_geometry(ell);
            }
            segments.push(seg);
            // child segments of a mirrored parent attach to the same side
            let parent_name = parent.map(|p| {
                let mirrored_parent = anthro.segment(p).is_some_and(|r| r.mirrored);
                if mirrored_parent {
                    format!("{p}{}", if side > 0.0 { "_l" } else { "_r" })
                } else {
                    p.to_string()
                }
            });
            let origin = match parent {
                None => Vector3::from(anthro.pelvis_origin) * anthro.trunk_scale(),
                Some(_) => mirror(row.joint_origin),
            };
            joints.push(JointDef::new(
                jname,
                joint_kind(joint_name),
                parent_name.as_deref(),
                name,
                Pose::translation(origin),
            ));
        }
    }
    let tree = build_tree(segments, joints)?;

    let mut restraints = Vec::new();
    for body in tree.bodies() {
        let key = joint_group(&body.joint.name);
        let n = body.dofs.len();
        let Some(p) = config.restraints.get(key) else {
            if key == "base" {
                continue;
            }
            return Err(Error::Config(format!("joint `{}` has no restraint parameters", body.joint.name)));
        };
        let neutral = p.neutral.clone().unwrap_or_else(|| vec![0.0; n]);
        let r = CardanRestraint {
            joint: body.joint.name.clone(),
            stiffness: p.stiffness.clone(),
            damping: p.damping.clone(),
            neutral,
        };
        if r.stiffness.len() != n || !r.is_valid() {
            return Err(Error::Config(format!(
                "restraint `{key}` needs {n} non-negative stiffness, damping and neutral values"
            )));
        }
        restraints.push(r);
    }
    if let Some(extra) = config.restraints.keys().find(|k| !tree.bodies().iter().any(|b| joint_group(&b.joint.name) == k.as_str())) {
        return Err(Error::Config(format!("restraint for unknown joint `{extra}`")));
    }

    let controls = if config.controllers.enabled { expand_controls(&tree, &config.controllers)? } else { Vec::new() };

    let pelvis = anthro.segment("pelvis").expect("validated");
    let butt = pelvis
        .geometry
        .first()
        .ok_or_else(|| Error::InvalidAnthropometry("pelvis needs a buttocks ellipsoid".into()))?;
    let upper = anthro.segment("upper_torso").expect("validated");
    let back = upper
        .geometry
        .first()
        .ok_or_else(|| Error::InvalidAnthropometry("upper torso needs a back ellipsoid".into()))?;
    let ts = anthro.trunk_scale();
    let landmarks = Landmarks {
        buttocks: Vector3::new(butt.center[0], butt.center[1], butt.center[2] - butt.semi_axes[2]) * ts,
        upper_back: Vector3::new(back.center[0] - back.semi_axes[0], back.center[1], back.center[2]) * ts,
        vertex: Vector3::from(anthro.vertex) * ts,
    };
    Ok(EhmBody { tree, restraints, controls, landmarks })
}

fn expand_controls(tree: &KinematicTree, cfg: &ControllerConfig) -> Result<Vec<JointControl>> {
    let mut out = Vec::new();
    for group in &cfg.groups {
        for key in &group.joints {
            let bodies: Vec<_> = tree.bodies().iter().filter(|b| joint_group(&b.joint.name) == key).collect();
            if bodies.is_empty() {
                return Err(Error::Config(format!("controller group `{}`: unknown joint `{key}`", group.name)));
            }
            for b in bodies {
                let gains = (0..b.dofs.len())
                    .map(|k| {
                        if b.joint.kind.is_translational(k) {
                            group.translational_gains.ok_or_else(|| {
                                Error::Config(format!(
                                    "controller group `{}` needs translational gains for `{}`",
                                    group.name, b.joint.name
                                ))
                            })
                        } else {
                            Ok(group.gains)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(JointControl { joint: b.joint.name.clone(), gains });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_validate() {
        let c = EhmConfig::default();
        c.anthropometry.validate().unwrap();
        assert_eq!(c.anthropometry.total_mass, 75.3);
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let mut c = EhmConfig::default();
        c.anthropometry.segments[0].mass_fraction += 0.01;
        assert!(matches!(build_ehm(&c), Err(Error::InvalidAnthropometry(_))));
    }

    #[test]
    fn mirrored_segments_are_symmetric() {
        let body = build_ehm(&EhmConfig::default()).unwrap();
        let l = body.tree.body("thigh_l").unwrap();
        let r = body.tree.body("thigh_r").unwrap();
        assert_eq!(l.joint.parent_frame.pos.y, -r.joint.parent_frame.pos.y);
        assert_eq!(l.segment.mass, r.segment.mass);
        assert_eq!(body.tree.body("foot_r").unwrap().joint.parent.as_deref(), Some("lower_leg_r"));
    }

    #[test]
    fn controlled_set_excludes_base_knees_ankles() {
        let body = build_ehm(&EhmConfig::default()).unwrap();
        let joints: Vec<_> = body.controls.iter().map(|c| c.joint.as_str()).collect();
        assert_eq!(joints, ["lumbosacral", "l4_l5", "thoracic", "t1_c7", "c1_c0", "hip_l", "hip_r"]);
        let n: usize = body.controls.iter().map(|c| c.gains.len()).sum();
        assert_eq!(n, 21);
    }
}
