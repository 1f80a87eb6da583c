//! Assemble the default seated model and print its canonical description.
//!
//! cargo run --example build_model
//! cargo run --example build_model -- my_config.json

use ehm::config::RunConfig;

fn main() -> ehm::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let model = cfg.build_model()?;
    print!("{}", model.dump());
    println!();
    println!("{} segments, {} degrees of freedom, {:.2} kg", model.segment_count(), model.dof(), model.tree.total_mass());
    for (joint, dofs) in model.tree.dof_map() {
        println!("  {joint:14} {:2}..{:2}", dofs.start, dofs.end);
    }
    Ok(())
}
