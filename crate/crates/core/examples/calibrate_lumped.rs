//! Recover the six spring/damper values of the three-mass seated model from
//! gain curves it generated itself, starting from a deliberately wrong guess.
//!
//! cargo run --release --example calibrate_lumped

use ehm::analysis::log_frfs;
use ehm::body::lumped::LumpedConfig;
use ehm::calibration::{calibrate, ParameterSpec, Scale};
use ehm::config::RunConfig;
use ehm::model::ModelSpec;
use ehm::sim::run;

fn main() -> ehm::Result<()> {
    let truth = LumpedConfig::default();
    let mut cfg = RunConfig { model: ModelSpec::Lumped3(truth.clone()), ..Default::default() };

    // reference curves from the true parameters
    let model = cfg.build_model()?;
    let out = run(&model, &cfg.simulation, &cfg.excitation_signal()?, None)?;
    let pairs = cfg.analysis.pairs(&model);
    let references = log_frfs(&out.log, &pairs, &cfg.analysis.estimator, cfg.excitation.settle_time)?;

    let mut guess = truth.clone();
    for i in 0..3 {
        guess.stiffness[i] *= 1.6;
        guess.damping[i] *= 0.6;
    }
    cfg.model = ModelSpec::Lumped3(guess);
    for (field, values) in [("stiffness", truth.stiffness), ("damping", truth.damping)] {
        for (i, v) in values.iter().enumerate() {
            cfg.calibration.parameters.push(ParameterSpec {
                name: format!("{field}_{i}"),
                path: format!("/model/{field}/{i}"),
                lower: v / 4.0,
                upper: v * 4.0,
                scale: Scale::Log,
            });
        }
    }

    let t0 = std::time::Instant::now();
    let fit = calibrate(&cfg, references, None)?;
    println!("{} evaluations, {} restarts, {:.1} s", fit.trace.len(), fit.restarts, t0.elapsed().as_secs_f64());
    println!("best cost {:.3e}", fit.best_cost);
    let expected = truth.stiffness.iter().chain(&truth.damping);
    for ((name, got), want) in fit.names.iter().zip(&fit.best).zip(expected) {
        println!("{name:12} {got:12.3} (true {want:10.3}, {:+.2}%)", 100.0 * (got / want - 1.0));
    }
    Ok(())
}
