//! Transmissibility of a single mass on a spring-damper seat, estimated from
//! a simulated run and compared with the closed form
//! |H| = |k + icω| / |k − mω² + icω|.
//!
//! cargo run --release --example frf

use std::f64::consts::PI;

use ehm::analysis::{frf, EstimatorConfig};
use ehm::forces::{PointRestraint, PLATFORM};
use ehm::model::{Model, ModelParts};
use ehm::rigidbody::{build_tree, JointDef, JointKind, SegmentDef};
use ehm::sim::{generate_excitation, run, ExcitationConfig, SimConfig};
use ehm::spatial::Pose;
use nalgebra::{Matrix3, Vector3};

fn main() -> ehm::Result<()> {
    let (m, f_n, zeta) = (60.0, 5.0, 0.3);
    let wn = 2.0 * PI * f_n;
    let (k, c) = (m * wn * wn, 2.0 * zeta * m * wn);

    let seg = SegmentDef::new("mass", m, Matrix3::identity(), Vector3::zeros());
    let joint = JointDef::new("slide", JointKind::Translational1 { axis: Vector3::z() }, None, "mass", Pose::identity());
    let mut parts = ModelParts::new(build_tree(vec![seg], vec![joint])?);
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
    let model = Model::from_parts(parts)?;

    let sim = SimConfig::default();
    let exc = generate_excitation(&ExcitationConfig { duration: 125.0, ..Default::default() }, 1.0 / sim.step)?;
    let out = run(&model, &sim, &exc, None)?;
    let log = out.log.from_time(exc.settle_time);
    let est = EstimatorConfig::default();
    let r = frf(log.channel("seat.acc_z")?, log.channel("mass.acc_z")?, log.sample_rate, &est, "seat.acc_z", "mass.acc_z")?;

    println!("{} segments averaged, {:.2} Hz resolution", r.segments, r.freqs[1] - r.freqs[0]);
    println!("{:>7} {:>9} {:>9} {:>8} {:>9}", "f Hz", "|H| est", "|H| true", "err %", "coh");
    for (i, &f) in r.freqs.iter().enumerate() {
        if ((f * 10.0).round() as i64) % 5 != 0 {
            continue;
        }
        let w = 2.0 * PI * f;
        let exact = ((k * k + (c * w).powi(2)) / ((k - m * w * w).powi(2) + (c * w).powi(2))).sqrt();
        println!("{f:7.2} {:9.4} {exact:9.4} {:+8.2} {:9.4}", r.gain[i], 100.0 * (r.gain[i] / exact - 1.0), r.coherence[i]);
    }
    Ok(())
}
