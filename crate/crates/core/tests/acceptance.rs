//! The eleven acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! cargo test --release --test acceptance

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use ehm::analysis::{frf, log_frfs, rms, EstimatorConfig, FrequencyResponse};
use ehm::body::lumped::LumpedConfig;
use ehm::calibration::{calibrate, ParameterSpec, Scale};
use ehm::cli::{ablate, frf_set, simulate};
use ehm::config::RunConfig;
use ehm::model::ModelSpec;
use ehm::rigidbody::{forward_dynamics_aba, forward_dynamics_oracle};
use ehm::sim::{run, AblationMode, Integrator, SimConfig, Simulator};
use ehm::spatial::SpatialVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = ehm::Result<(bool, String)>;

fn dof_accounting() -> Outcome {
    let model = RunConfig::default().build_model()?;
    let (dof, segs) = (model.dof(), model.segment_count());
    Ok((dof == 31 && segs == 12, format!("{dof} DoF, {segs} segments")))
}

fn excitation_rms() -> Outcome {
    let cfg = RunConfig::default();
    let sig = cfg.excitation_signal()?;
    let settle = sig.settle_index();
    let mut ok = true;
    let mut detail = Vec::new();
    for axis in 0..3 {
        let quiet = sig.acc[axis][..=settle].iter().all(|a| *a == 0.0);
        let r = rms(&sig.acc[axis][settle..]);
        ok &= quiet && (r / 0.1941 - 1.0).abs() <= 0.01;
        detail.push(format!("{r:.5}{}", if quiet { "" } else { " (not quiet)" }));
    }
    Ok((ok, format!("rms x/y/z = {} m/s², zero before {} s", detail.join(" / "), cfg.excitation.settle_time)))
}

fn faster_than_real_time() -> Outcome {
    let out = simulate(&RunConfig::default(), None)?;
    Ok((
        out.wall_time < out.simulated_time,
        format!("{:.0} s simulated in {:.2} s wall, real-time factor {:.1}", out.simulated_time, out.wall_time, out.real_time_factor()),
    ))
}

fn aba_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let tree = common::random_tree(&mut rng, 1 + trial % 15);
        let (q, u, tau) = common::random_state(&mut rng, &tree);
        let ext: Vec<SpatialVec> = (0..tree.len()).map(|_| SpatialVec::from_fn(|_, _| rng.gen_range(-3.0..3.0))).collect();
        let a = forward_dynamics_aba(&tree, &q, &u, &tau, Some(&ext), &[])?;
        let o = forward_dynamics_oracle(&tree, &q, &u, &tau, Some(&ext))?;
        worst = worst.max((a - &o).amax() / o.amax());
    }
    Ok((worst < 1e-9, format!("max relative difference {worst:.2e} over 1000 states")))
}

fn energy_conservation() -> Outcome {
    let model = common::double_pendulum([1.2, -0.6]);
    let cfg = SimConfig { integrator: Integrator::Rk4, ..Default::default() };
    let mut sim = Simulator::new(&model, &cfg)?;
    let floor = common::mechanical_energy(&model, &[0.0, 0.0], &[0.0, 0.0]);
    let e0 = common::mechanical_energy(&model, sim.state.q.as_slice(), sim.state.u.as_slice()) - floor;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        sim.step(None, None)?;
        let e = common::mechanical_energy(&model, sim.state.q.as_slice(), sim.state.u.as_slice()) - floor;
        worst = worst.max((e - e0).abs() / e0);
    }
    Ok((worst < 1e-3, format!("max energy drift {:.2e} % over 10 s (rk4)", 100.0 * worst)))
}

fn frf_fidelity() -> Outcome {
    let (fn_, zeta) = (5.0, 0.3);
    let mut cfg = RunConfig::default();
    cfg.excitation.duration = 125.0;
    let sig = cfg.excitation_signal()?;
    let base = &sig.acc[2][sig.settle_index()..];
    let resp = common::oscillator_response(base, cfg.simulation.step, 2.0 * PI * fn_, zeta);
    let est = EstimatorConfig { band: [0.5, 12.0], ..Default::default() };
    let r = frf(base, &resp, sig.sample_rate, &est, "base", "mass")?;
    let (mut n, mut worst) = (0, 0.0f64);
    for i in 0..r.len() {
        if r.coherence[i] > 0.95 {
            n += 1;
            worst = worst.max((r.gain[i] / common::transmissibility(r.freqs[i], fn_, zeta) - 1.0).abs());
        }
    }
    Ok((n > 0 && worst < 0.05, format!("max gain error {:.2} % over {n} coherent bins", 100.0 * worst)))
}

fn peak(set: &[FrequencyResponse], output: &str, input: &str) -> f64 {
    set.iter().find(|r| r.output == output && r.input == input).map_or(f64::NAN, |r| r.peak_gain())
}

struct Ablations {
    cfg: RunConfig,
    full: (ehm::sim::DriftReport, Vec<FrequencyResponse>),
}

fn integrator_drift(ab: &Ablations) -> Outcome {
    let (_, none) = ablate(&ab.cfg, AblationMode::NoIntegrator)?;
    let full = ab.full.0;
    let ok = none.head_pitch_drift > 2.0 && none.trunk_forward > 0.0 && full.head_pitch_drift.abs() < 0.5;
    Ok((
        ok,
        format!(
            "no_integrator head {:+.2}° trunk fwd {:+.1} mm; full_pid head {:+.3}°",
            none.head_pitch_drift,
            1e3 * none.trunk_forward,
            full.head_pitch_drift
        ),
    ))
}

fn settling_time() -> Outcome {
    let cfg = ehm::body::EhmConfig::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for g in &cfg.controllers.groups {
        let Some(plant) = &g.plant else { continue };
        let ts = plant.settling_time(&g.gains, 1.0);
        ok &= (2.0..=4.0).contains(&ts);
        detail.push(format!("{} {ts:.2} s", g.name));
    }
    Ok((ok && !detail.is_empty(), detail.join(", ")))
}

fn stiffness_tradeoff(ab: &Ablations) -> Outcome {
    let (out, _) = ablate(&ab.cfg, AblationMode::HighStiffnessPassive)?;
    let stiff = frf_set(&ab.cfg, &out.log)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for seg in ["head", "upper_torso"] {
        for axis in ["x", "z"] {
            let (o, i) = (format!("{seg}.omega_y"), format!("seat.acc_{axis}"));
            let (p, s) = (peak(&ab.full.1, &o, &i), peak(&stiff, &o, &i));
            ok &= s < p;
            detail.push(format!("{seg}/{axis} {s:.3} < {p:.3}"));
        }
    }
    Ok((ok, format!("peak pitch gain stiff < pid: {}", detail.join(", "))))
}

fn calibration_recovery() -> Outcome {
    let truth = LumpedConfig::default();
    let mut cfg = RunConfig { model: ModelSpec::Lumped3(truth.clone()), ..Default::default() };
    let model = cfg.build_model()?;
    let out = run(&model, &cfg.simulation, &cfg.excitation_signal()?, None)?;
    let refs = log_frfs(&out.log, &cfg.analysis.pairs(&model), &cfg.analysis.estimator, cfg.excitation.settle_time)?;
    let mut guess = truth.clone();
    for i in 0..3 {
        guess.stiffness[i] *= 1.6;
        guess.damping[i] *= 0.6;
    }
    cfg.model = ModelSpec::Lumped3(guess);
    let expected: Vec<f64> = truth.stiffness.iter().chain(&truth.damping).copied().collect();
    for (i, v) in expected.iter().enumerate() {
        let field = if i < 3 { "stiffness" } else { "damping" };
        cfg.calibration.parameters.push(ParameterSpec {
            name: format!("{field}_{}", i % 3),
            path: format!("/model/{field}/{}", i % 3),
            lower: v / 4.0,
            upper: v * 4.0,
            scale: Scale::Log,
        });
    }
    cfg.calibration.optimizer.budget = 1500;
    let fit = calibrate(&cfg, refs, Some(4))?;
    let worst = fit.best.iter().zip(&expected).map(|(g, w)| (g / w - 1.0).abs()).fold(0.0, f64::max);
    let ok = fit.trace.len() <= 1500 && (worst <= 0.10 || fit.best_cost < 1e-3);
    Ok((ok, format!("cost {:.2e}, worst parameter error {:.2} %, {} evaluations", fit.best_cost, 100.0 * worst, fit.trace.len())))
}

fn restart_equivalence() -> Outcome {
    let cfg = RunConfig::default();
    let model = cfg.build_model()?;
    let exc = cfg.excitation_signal()?;
    let full = run(&model, &cfg.simulation, &exc, None)?;
    let dir = tempfile::tempdir().map_err(|e| ehm::Error::Config(e.to_string()))?;
    let path = dir.path().join("restart.json");
    ehm::sim::save_restart(&path, full.snapshot.as_ref().expect("settled"))?;
    let resumed = run(&model, &cfg.simulation, &exc, Some(&ehm::sim::load_restart(&path)?))?;
    let offset = full.log.len() - resumed.log.len();
    let differing: usize = full
        .log
        .data
        .iter()
        .zip(&resumed.log.data)
        .map(|(a, b)| a[offset..].iter().zip(b).filter(|(x, y)| x.to_bits() != y.to_bits()).count())
        .sum();
    let ok = differing == 0 && full.final_state == resumed.final_state && resumed.log.time == full.log.time[offset..];
    Ok((ok, format!("{} rows after t = {} s, {differing} differing values", resumed.log.len(), cfg.excitation.settle_time)))
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("criterion {n:2} {} {name}: {detail} [{:.1} s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        if !ok {
            failed.push(n);
        }
    };
    report(1, "DoF accounting", &mut dof_accounting);
    report(2, "excitation RMS", &mut excitation_rms);
    report(3, "faster than real time", &mut faster_than_real_time);
    report(4, "dynamics oracle", &mut aba_oracle);
    report(5, "energy conservation", &mut energy_conservation);
    report(6, "FRF estimator fidelity", &mut frf_fidelity);

    let cfg = RunConfig::default();
    let ablations = ablate(&cfg, AblationMode::FullPid)
        .and_then(|(out, d)| Ok(Ablations { full: (d, frf_set(&cfg, &out.log)?), cfg: cfg.clone() }));
    match &ablations {
        Ok(ab) => report(7, "integrator-drift ablation", &mut || integrator_drift(ab)),
        Err(e) => report(7, "integrator-drift ablation", &mut || Err(ehm::Error::Config(e.to_string()))),
    }
    report(8, "settling-time tuning", &mut settling_time);
    match &ablations {
        Ok(ab) => report(9, "high-stiffness trade-off", &mut || stiffness_tradeoff(ab)),
        Err(e) => report(9, "high-stiffness trade-off", &mut || Err(ehm::Error::Config(e.to_string()))),
    }
    report(10, "calibration recovery", &mut calibration_recovery);
    report(11, "restart equivalence", &mut restart_equivalence);
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
