#![allow(dead_code)]

use ehm::rigidbody::{build_tree, JointDef, JointKind, KinematicTree, SegmentDef};
use ehm::spatial::{cardan_xyz, Pose};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

fn unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 0.2 {
            return v.normalize();
        }
    }
}

fn random_kind(rng: &mut impl Rng, root: bool) -> JointKind {
    if root && rng.gen_bool(0.5) {
        return JointKind::Free6;
    }
    match rng.gen_range(0..5) {
        0 => JointKind::Spherical3,
        1 => {
            let e1 = unit(rng);
            let e2 = e1.cross(&unit(rng)).normalize();
            JointKind::Universal2 { axes: [e1, e2] }
        }
        2 => JointKind::Revolute1 { axis: unit(rng) },
        3 => JointKind::Translational1 { axis: unit(rng) },
        _ => JointKind::SphericalTranslational4 { axis: unit(rng) },
    }
}

/// Random tree with `n` segments, arbitrary branching and all joint kinds.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> KinematicTree {
    let mut segments = Vec::new();
    let mut joints = Vec::new();
    for i in 0..n {
        let name = format!("s{i}");
        let mass = rng.gen_range(0.5..5.0);
        let d = Vector3::new(rng.gen_range(0.01..0.1), rng.gen_range(0.01..0.1), rng.gen_range(0.01..0.1));
        let r = cardan_xyz(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let inertia = r * Matrix3::from_diagonal(&d) * r.transpose();
        let inertia = 0.5 * (inertia + inertia.transpose());
        let com = Vector3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        segments.push(SegmentDef::new(name.clone(), mass, inertia, com));
        let parent = if i == 0 { None } else { Some(format!("s{}", rng.gen_range(0..i))) };
        let frame = Pose::new(
            cardan_xyz(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
            Vector3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
        );
        joints.push(JointDef::new(format!("j{i}"), random_kind(rng, i == 0), parent.as_deref(), name, frame));
    }
    build_tree(segments, joints).expect("random tree is valid")
}

/// Random state with Cardan middle angles away from the singularity.
pub fn random_state(rng: &mut impl Rng, tree: &KinematicTree) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = tree.dof();
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let tau: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    (q, u, tau)
}

/// Largest componentwise error scaled by `1 + |reference|`.
pub fn scaled_error(a: &[f64], reference: &[f64]) -> f64 {
    a.iter().zip(reference).map(|(x, r)| (x - r).abs() / (1.0 + r.abs())).fold(0.0, f64::max)
}

/// Mass on a vertical slide tied to the seat platform by a spring-damper.
pub fn base_oscillator(m: f64, k: f64, c: f64) -> ehm::model::Model {
    use ehm::forces::{PointRestraint, PLATFORM};
    use ehm::model::{Model, ModelParts};
    let seg = SegmentDef::new("mass", m, Matrix3::identity(), Vector3::zeros());
    let joint = JointDef::new("slide", JointKind::Translational1 { axis: Vector3::z() }, None, "mass", Pose::identity());
    let mut parts = ModelParts::new(build_tree(vec![seg], vec![joint]).unwrap());
    parts.points.push(PointRestraint {
        name: "spring".into(),
        body_a: "mass".into(),
        attach_a: Vector3::zeros(),
        body_b: PLATFORM.into(),
        attach_b: Vector3::zeros(),
        stiffness: k,
        damping: c,
    });
    parts.motion = [false, false, true];
    Model::from_parts(parts).unwrap()
}

/// Two uniform rods on parallel hinges under gravity, released from `q0`.
pub fn double_pendulum(q0: [f64; 2]) -> ehm::model::Model {
    use ehm::model::{Model, ModelParts};
    let (m, l) = (1.0, 0.5);
    let i = m * l * l / 12.0;
    let rod = |name: &str| SegmentDef::new(name, m, Matrix3::from_diagonal(&Vector3::new(i, i, 1e-4)), Vector3::new(0.0, 0.0, -l / 2.0));
    let hinge = JointKind::Revolute1 { axis: Vector3::y() };
    let tree = build_tree(
        vec![rod("upper"), rod("lower")],
        vec![
            JointDef::new("shoulder", hinge.clone(), None, "upper", Pose::identity()),
            JointDef::new("elbow", hinge, Some("upper"), "lower", Pose::translation(Vector3::new(0.0, 0.0, -l))),
        ],
    )
    .unwrap();
    let mut parts = ModelParts::new(tree);
    parts.gravity = Vector3::new(0.0, 0.0, -9.81);
    parts.initial_q = nalgebra::DVector::from_row_slice(&q0);
    Model::from_parts(parts).unwrap()
}

/// Kinetic plus potential energy of the simulator's current state.
pub fn mechanical_energy(model: &ehm::model::Model, q: &[f64], u: &[f64]) -> f64 {
    use ehm::rigidbody::{mass_matrix, TreeKinematics};
    let kin = TreeKinematics::compute(&model.tree, q, u).unwrap();
    let m = mass_matrix(&model.tree, &kin);
    let u = nalgebra::DVector::from_row_slice(u);
    0.5 * u.dot(&(m * &u)) + model.forces.potential_energy(&model.tree, q, &Default::default()).unwrap()
}

/// Absolute acceleration of a base-excited mass-spring-damper, integrated with
/// classical RK4 on the relative coordinate; the base acceleration is
/// interpolated linearly between samples.
pub fn oscillator_response(base_acc: &[f64], dt: f64, wn: f64, zeta: f64) -> Vec<f64> {
    let rhs = |z: f64, v: f64, a: f64| (v, -a - 2.0 * zeta * wn * v - wn * wn * z);
    let (mut z, mut v) = (0.0, 0.0);
    let mut out = Vec::with_capacity(base_acc.len());
    for n in 0..base_acc.len() {
        let a0 = base_acc[n];
        out.push(a0 + rhs(z, v, a0).1);
        let Some(&a1) = base_acc.get(n + 1) else { break };
        let am = 0.5 * (a0 + a1);
        let k1 = rhs(z, v, a0);
        let k2 = rhs(z + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1, am);
        let k3 = rhs(z + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1, am);
        let k4 = rhs(z + dt * k3.0, v + dt * k3.1, a1);
        z += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    out
}

/// |1 + 2iζr| / |1 − r² + 2iζr| with r = ω/ωn.
pub fn transmissibility(f: f64, fn_: f64, zeta: f64) -> f64 {
    let r = f / fn_;
    ((1.0 + (2.0 * zeta * r).powi(2)) / ((1.0 - r * r).powi(2) + (2.0 * zeta * r).powi(2))).sqrt()
}
