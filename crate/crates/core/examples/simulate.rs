//! Settle and shake the default model, then write the trajectory.
//!
//! cargo run --release --example simulate -- out.csv

use ehm::config::RunConfig;
use ehm::sim::run;

fn main() -> ehm::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "trajectory.csv".into());
    let cfg = RunConfig::default();
    let model = cfg.build_model()?;
    let out = run(&model, &cfg.simulation, &cfg.excitation_signal()?, None)?;
    println!(
        "{} DoF, {:.0} s simulated in {:.2} s (real-time factor {:.1})",
        model.dof(),
        out.simulated_time,
        out.wall_time,
        out.real_time_factor()
    );
    println!("{} rows x {} channels -> {path}", out.log.len(), out.log.names.len());
    out.log.write_csv(path.as_ref())?;
    for name in ["head.acc_z", "head.pitch", "upper_torso.pos_x"] {
        if let Ok(x) = out.log.channel(name) {
            let (lo, hi) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
            println!("  {name:14} [{lo:+.4}, {hi:+.4}]");
        }
    }
    Ok(())
}
