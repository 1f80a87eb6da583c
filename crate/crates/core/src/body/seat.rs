//! Floor, seat pan and backrest pads on the driven platform.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{EhmBody, EllipsoidSpec, FleshConfig};
use crate::error::{Error, Result};
use crate::forces::{ContactLaw, ContactPair, EnvSurface, Environment, PlatformState, PointRestraint, Primitive, PLATFORM};
use crate::geometry::{Ellipsoid, Plane};
use crate::rigidbody::forward_kinematics;
use crate::spatial::{rot_y, Pose};

/// Deepest tolerated overlap of any contact pair in the initial posture.
pub const MAX_INITIAL_PENETRATION: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackrestConfig {
    /// Recline about the hinge, positive tilts the top backwards (rad).
    pub angle: f64,
    pub hinge: [f64; 3],
    /// At zero recline. Must contain `lower_pad` and `upper_pad`.
    pub pads: Vec<EllipsoidSpec>,
}

/// Which platform axes follow the excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionAxes {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl MotionAxes {
    pub fn mask(&self) -> [bool; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeatConfig {
    pub floor_height: f64,
    pub seat_pan: EllipsoidSpec,
    #[serde(default)]
    pub backrest: Option<BackrestConfig>,
    pub motion: MotionAxes,
}

impl Default for SeatConfig {
    fn default() -> Self {
        Self {
            floor_height: -0.41,
            // a large, nearly flat dome keeps line-of-centers normals close to vertical
            seat_pan: EllipsoidSpec { name: "pan".into(), semi_axes: [2.0, 2.0, 2.0], center: [0.1, 0.0, -2.0] },
            backrest: Some(BackrestConfig {
                angle: 0.0,
                hinge: [-0.18, 0.0, 0.0],
                pads: vec![
                    EllipsoidSpec { name: "lower_pad".into(), semi_axes: [0.06, 0.15, 0.06], center: [-0.24, 0.0, 0.23] },
                    EllipsoidSpec { name: "upper_pad".into(), semi_axes: [0.06, 0.15, 0.06], center: [-0.24, 0.0, 0.48] },
                ],
            }),
            motion: MotionAxes { x: true, y: true, z: true },
        }
    }
}

/// Surfaces, contact pairs and flesh restraints produced by [`build_seat`].
#[derive(Debug, Clone)]
pub struct SeatEnvironment {
    pub environment: Environment,
    pub contacts: Vec<ContactPair>,
    pub points: Vec<PointRestraint>,
}

fn pad_ellipsoid(spec: &EllipsoidSpec, back: &BackrestConfig) -> Ellipsoid {
    let hinge = Vector3::from(back.hinge);
    let rot = rot_y(-back.angle);
    let center = hinge + rot * (Vector3::from(spec.center) - hinge);
    Ellipsoid::new(spec.name.clone(), Vector3::from(spec.semi_axes), Pose::new(rot, center))
}

/// Instantiates the environment around `body` in its initial posture `q0`.
pub fn build_seat(
    seat: &SeatConfig,
    body: &EhmBody,
    q0: &[f64],
    flesh: &FleshConfig,
    law: &ContactLaw,
) -> Result<SeatEnvironment> {
    let pan = Ellipsoid::new(
        seat.seat_pan.name.clone(),
        Vector3::from(seat.seat_pan.semi_axes),
        Pose::translation(Vector3::from(seat.seat_pan.center)),
    );
    pan.validate()?;
    let mut surfaces = vec![
        EnvSurface {
            name: "floor".into(),
            primitives: vec![Primitive::Plane {
                name: "plane".into(),
                plane: Plane { normal: Vector3::z(), offset: seat.floor_height },
            }],
        },
        EnvSurface { name: "seat_pan".into(), primitives: vec![Primitive::Ellipsoid(pan.clone())] },
    ];
    let pair = |name: &str, segment: &str, ellipsoid: &str, surface: &str, primitive: &str| ContactPair {
        name: name.into(),
        segment: segment.into(),
        ellipsoid: ellipsoid.into(),
        surface: surface.into(),
        primitive: primitive.into(),
        law: *law,
    };
    let first_geometry = |segment: &str| -> Result<String> {
        let b = body
            .tree
            .body(segment)
            .ok_or_else(|| Error::Config(format!("seat needs segment `{segment}`")))?;
        b.segment
            .geometry
            .first()
            .map(|e| e.name.clone())
            .ok_or_else(|| Error::Config(format!("segment `{segment}` has no contact ellipsoid")))
    };
    let mut contacts = Vec::new();
    for side in ["l", "r"] {
        let foot = format!("foot_{side}");
        contacts.push(pair(&format!("{foot}_floor"), &foot, &first_geometry(&foot)?, "floor", "plane"));
    }
    contacts.push(pair("pelvis_pan", "pelvis", &first_geometry("pelvis")?, "seat_pan", &pan.name));
    for side in ["l", "r"] {
        let thigh = format!("thigh_{side}");
        contacts.push(pair(&format!("{thigh}_pan"), &thigh, &first_geometry(&thigh)?, "seat_pan", &pan.name));
    }

    let poses = forward_kinematics(&body.tree, q0)?;
    let world = |segment: &str, local: &Vector3<f64>| {
        let i = body.tree.body_index(segment).expect("segment exists");
        poses[i].frame.transform_point(local)
    };
    let mut points = vec![PointRestraint {
        name: "pelvis_seat".into(),
        body_a: "pelvis".into(),
        attach_a: body.landmarks.buttocks,
        body_b: PLATFORM.into(),
        attach_b: world("pelvis", &body.landmarks.buttocks),
        stiffness: flesh.pelvis_seat.stiffness,
        damping: flesh.pelvis_seat.damping,
    }];

    if let Some(back) = &seat.backrest {
        let find = |name: &str| {
            back.pads
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| Error::Config(format!("backrest needs a `{name}` pad")))
        };
        let pads = vec![pad_ellipsoid(find("lower_pad")?, back), pad_ellipsoid(find("upper_pad")?, back)];
        for p in &pads {
            p.validate()?;
        }
        surfaces.push(EnvSurface { name: "backrest".into(), primitives: pads.into_iter().map(Primitive::Ellipsoid).collect() });
        contacts.push(pair("lower_torso_backrest", "lower_torso", &first_geometry("lower_torso")?, "backrest", "lower_pad"));
        contacts.push(pair("upper_torso_backrest", "upper_torso", &first_geometry("upper_torso")?, "backrest", "upper_pad"));
        points.push(PointRestraint {
            name: "torso_backrest".into(),
            body_a: "upper_torso".into(),
            attach_a: body.landmarks.upper_back,
            body_b: PLATFORM.into(),
            attach_b: world("upper_torso", &body.landmarks.upper_back),
            stiffness: flesh.torso_backrest.stiffness,
            damping: flesh.torso_backrest.damping,
        });
    }

    let env = SeatEnvironment { environment: Environment { surfaces }, contacts, points };
    let probe = crate::forces::ForceSet::new(&body.tree, &env.environment, Vector3::zeros(), &[], &[], &env.contacts)?;
    for (pair, depth) in probe.penetrations(&body.tree, q0, &PlatformState::default())? {
        if depth > MAX_INITIAL_PENETRATION {
            return Err(Error::InitialPenetration { pair, depth });
        }
    }
    Ok(env)
}
