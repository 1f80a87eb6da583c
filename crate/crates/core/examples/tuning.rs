//! Settling time of each controller group on its one-joint tuning plant, and
//! the integral gain the tuning rule would pick.
//!
//! cargo run --release --example tuning

use ehm::body::EhmConfig;

fn main() -> ehm::Result<()> {
    let cfg = EhmConfig::default();
    println!("{:10} {:>8} {:>8} {:>10} {:>10}", "group", "ki", "ki(3 s)", "K_eff", "settle s");
    for g in &cfg.controllers.groups {
        let Some(plant) = &g.plant else { continue };
        let ts = plant.settling_time(&g.gains, 1.0);
        println!(
            "{:10} {:8.2} {:8.2} {:10.2} {:10.3}",
            g.name,
            g.gains.ki,
            plant.integral_gain_for(&g.gains, 3.0),
            plant.effective_stiffness(&g.gains),
            ts
        );
    }
    Ok(())
}
