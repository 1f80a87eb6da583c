//! Drop an ellipsoidal body on a floor plane and let it come to rest. The
//! static penetration settles at m·g/k.
//!
//! cargo run --release --example contact

use ehm::forces::{ContactLaw, ContactPair, EnvSurface, Environment, Primitive};
use ehm::geometry::{Ellipsoid, Plane};
use ehm::model::{Model, ModelParts};
use ehm::rigidbody::{build_tree, JointDef, JointKind, SegmentDef};
use ehm::sim::{SimConfig, Simulator};
use ehm::spatial::Pose;
use nalgebra::{Matrix3, Vector3};

fn main() -> ehm::Result<()> {
    let (m, g) = (10.0, 9.81);
    let axes: Vector3<f64> = Vector3::new(0.15, 0.10, 0.08);
    let inertia = Matrix3::from_diagonal(&Vector3::new(
        m * (axes.y.powi(2) + axes.z.powi(2)) / 5.0,
        m * (axes.x.powi(2) + axes.z.powi(2)) / 5.0,
        m * (axes.x.powi(2) + axes.y.powi(2)) / 5.0,
    ));
    let seg = SegmentDef::new("buttock", m, inertia, Vector3::zeros())
        .with_geometry(Ellipsoid::new("shape", axes, Pose::identity()));
    let tree = build_tree(vec![seg], vec![JointDef::new("free", JointKind::Free6, None, "buttock", Pose::identity())])?;

    let law = ContactLaw::default();
    let mut parts = ModelParts::new(tree);
    parts.environment = Environment {
        surfaces: vec![EnvSurface {
            name: "floor".into(),
            primitives: vec![Primitive::Plane { name: "ground".into(), plane: Plane { normal: Vector3::z(), offset: 0.0 } }],
        }],
    };
    parts.contacts.push(ContactPair {
        name: "buttock_floor".into(),
        segment: "buttock".into(),
        ellipsoid: "shape".into(),
        surface: "floor".into(),
        primitive: "ground".into(),
        law,
    });
    parts.gravity = Vector3::new(0.0, 0.0, -g);
    // dropped from 5 cm with a small tilt
    parts.initial_q[2] = axes.z + 0.05;
    parts.initial_q[3] = 0.1;
    let model = Model::from_parts(parts)?;

    let mut sim = Simulator::new(&model, &SimConfig::default())?;
    for n in 0..5000 {
        sim.step(None, None)?;
        if n % 500 == 499 {
            let q = &sim.state.q;
            println!("t {:4.1} s  z {:+.5} m  roll {:+.4} rad  vz {:+.5} m/s", sim.state.t, q[2], q[3], sim.state.u[2]);
        }
    }
    let pen = model.forces.penetrations(&model.tree, sim.state.q.as_slice(), &Default::default())?;
    let depth = pen.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    println!("static penetration {:.4} mm, m·g/k = {:.4} mm", 1e3 * depth, 1e3 * m * g / law.stiffness);
    Ok(())
}
