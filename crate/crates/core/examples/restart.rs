//! Settle once, save the snapshot, and resume from it. The resumed run
//! reproduces the uninterrupted one bit for bit.
//!
//! cargo run --release --example restart

use ehm::config::RunConfig;
use ehm::sim::{load_restart, run, save_restart};

fn main() -> ehm::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.excitation.duration = 12.0;
    let model = cfg.build_model()?;
    let exc = cfg.excitation_signal()?;

    let full = run(&model, &cfg.simulation, &exc, None)?;
    let snap = full.snapshot.expect("run settled");
    let path = std::env::temp_dir().join("ehm_restart_example.json");
    save_restart(&path, &snap)?;
    let resumed = run(&model, &cfg.simulation, &exc, Some(&load_restart(&path)?))?;

    let offset = full.log.len() - resumed.log.len();
    let mut differing = 0;
    for (a, b) in full.log.data.iter().zip(&resumed.log.data) {
        differing += a[offset..].iter().zip(b).filter(|(x, y)| x.to_bits() != y.to_bits()).count();
    }
    println!("snapshot at t = {} s, {}", snap.state.t, path.display());
    println!("uninterrupted {:.2} s wall, resumed {:.2} s wall", full.wall_time, resumed.wall_time);
    println!("{} resumed rows compared, {differing} values differ", resumed.log.len());
    println!("final state identical: {}", full.final_state == resumed.final_state);
    Ok(())
}
