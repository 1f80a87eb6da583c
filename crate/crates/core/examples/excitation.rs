//! Generate the tri-axial seat acceleration and check its level.
//!
//! cargo run --example excitation

use ehm::analysis::rms;
use ehm::sim::{generate_excitation, ExcitationConfig};

fn main() -> ehm::Result<()> {
    let cfg = ExcitationConfig::default();
    let sig = generate_excitation(&cfg, 1000.0)?;
    let settle = sig.settle_index();
    println!("{} samples at {} Hz, band {:?} Hz, seed {}", sig.len(), sig.sample_rate, sig.band, sig.seed);
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        let quiet = sig.acc[axis][..settle].iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let peak_disp = sig.disp[axis].iter().fold(0.0f64, |m, d| m.max(d.abs()));
        println!(
            "{name}: rms {:.4} m/s² (target {}), max |a| before {} s = {quiet}, peak displacement {:.2} mm",
            rms(&sig.acc[axis][settle..]),
            cfg.rms,
            cfg.settle_time,
            1e3 * peak_disp
        );
    }
    Ok(())
}
