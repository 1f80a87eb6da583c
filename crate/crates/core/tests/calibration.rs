use ehm::analysis::log_frfs;
use ehm::calibration::{optimize, Bound, Calibration, OptimizerConfig, ParameterSpec, Scale};
use ehm::config::RunConfig;
use ehm::model::ModelSpec;
use ehm::sim::run;
use proptest::prelude::*;

fn lumped_problem() -> (RunConfig, Vec<ehm::analysis::FrequencyResponse>) {
    let mut cfg = RunConfig { model: ModelSpec::Lumped3(Default::default()), ..Default::default() };
    cfg.excitation.duration = 25.0;
    let model = cfg.build_model().unwrap();
    let out = run(&model, &cfg.simulation, &cfg.excitation_signal().unwrap(), None).unwrap();
    let refs = log_frfs(&out.log, &cfg.analysis.pairs(&model), &cfg.analysis.estimator, cfg.excitation.settle_time).unwrap();
    cfg.calibration.parameters = vec![
        ParameterSpec { name: "k0".into(), path: "/model/stiffness/0".into(), lower: 1e4, upper: 1e6, scale: Scale::Log },
        ParameterSpec { name: "c2".into(), path: "/model/damping/2".into(), lower: 0.0, upper: 1e3, scale: Scale::Linear },
    ];
    (cfg, refs)
}

#[test]
fn cost_vanishes_at_the_generating_parameters() {
    let (cfg, refs) = lumped_problem();
    let p = Calibration::new(&cfg, refs).unwrap();
    assert_eq!(p.start(), vec![60_000.0, 100.0]);
    assert_eq!(p.cost(&p.start()).unwrap(), 0.0);
    assert!(p.cost(&[90_000.0, 100.0]).unwrap() > 1e-3);
}

#[test]
fn failed_evaluations_cost_the_penalty() {
    let (mut cfg, refs) = lumped_problem();
    cfg.simulation.integrator = ehm::sim::Integrator::Rk4;
    let p = Calibration::new(&cfg, refs).unwrap();
    assert_eq!(p.evaluate(&[1e12, 100.0]), cfg.calibration.objective.penalty);
    assert_eq!(p.evaluate(&[-5.0, 100.0]), cfg.calibration.objective.penalty);
}

#[test]
fn unknown_parameter_path_is_rejected() {
    let (mut cfg, refs) = lumped_problem();
    cfg.calibration.parameters[0].path = "/model/stiffnesses/0".into();
    assert!(Calibration::new(&cfg, refs).is_err());
}

#[test]
fn rosenbrock_within_budget() {
    let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let bounds = [Bound { lower: -2.0, upper: 2.0, scale: Scale::Linear }; 2];
    let r = optimize(&f, &bounds, &[-1.2, 1.0], &OptimizerConfig { budget: 1500, ..Default::default() }).unwrap();
    assert!(r.trace.len() <= 1500);
    assert!((r.best[0] - 1.0).abs() < 1e-3 && (r.best[1] - 1.0).abs() < 1e-3, "{:?}", r.best);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shifted_quadratic_minimum_found(a in -3.0f64..3.0, b in 0.5f64..50.0, seed in 0u64..100) {
        let f = |x: &[f64]| (x[0] - a).powi(2) + ((x[1] / b).ln()).powi(2);
        let bounds = [
            Bound { lower: -5.0, upper: 5.0, scale: Scale::Linear },
            Bound { lower: 0.1, upper: 100.0, scale: Scale::Log },
        ];
        let r = optimize(&f, &bounds, &[0.0, 1.0], &OptimizerConfig { budget: 400, seed, ..Default::default() }).unwrap();
        prop_assert!((r.best[0] - a).abs() < 1e-3);
        prop_assert!((r.best[1] / b - 1.0).abs() < 1e-3);
    }
}
