//! Compare the three controller variants on the same excitation: posture
//! drift and peak pitch transmissibility of head and trunk.
//!
//! cargo run --release --example ablation

use ehm::cli::{ablate, frf_set};
use ehm::config::RunConfig;
use ehm::sim::AblationMode;

fn main() -> ehm::Result<()> {
    let cfg = RunConfig::default();
    println!(
        "{:24} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "mode", "head deg", "trunk deg", "fwd mm", "head |H|max", "trunk |H|max"
    );
    for mode in AblationMode::ALL {
        let (out, d) = ablate(&cfg, mode)?;
        let set = frf_set(&cfg, &out.log)?;
        let peak = |seg: &str| {
            set.iter()
                .filter(|r| r.output == format!("{seg}.omega_y"))
                .map(|r| r.peak_gain())
                .fold(0.0, f64::max)
        };
        println!(
            "{:24} {:+10.3} {:+10.3} {:+10.2} {:12.4} {:12.4}",
            mode.label(),
            d.head_pitch_drift,
            d.trunk_pitch_drift,
            1e3 * d.trunk_forward,
            peak("head"),
            peak("upper_torso")
        );
    }
    Ok(())
}
