//! Parameter identification against reference gain curves.
//!
//! Parameters are JSON pointers into the run configuration, so anything the
//! configuration holds (restraint, flesh, contact or PID values) can be fitted.
//! Every evaluation builds a model from the substituted configuration, resumes
//! from one settled snapshot when the model identity allows it, and compares
//! log gains over the band.

pub mod optimize;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use optimize::{optimize, Bound, OptimizeResult, OptimizerConfig, Scale, TraceEntry};

use crate::analysis::{log_frfs, ChannelPair, FrequencyResponse};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::sim::{generate_excitation, run, ExcitationConfig, ExcitationSignal, RestartSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    /// JSON pointer into the run configuration, e.g.
    /// `/model/restraints/lumbosacral/stiffness/1`.
    pub path: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
}

impl ParameterSpec {
    pub fn bound(&self) -> Bound {
        Bound { lower: self.lower, upper: self.upper, scale: self.scale }
    }
}

fn default_weights() -> BTreeMap<String, f64> {
    [("head", 1.0), ("trunk", 1.0), ("pelvis", 0.3)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Weight per reporting body (`head`, `trunk`, `pelvis`) or segment name;
    /// unlisted bodies weigh 1.
    pub weights: BTreeMap<String, f64>,
    /// Compared band, Hz; defaults to the analysis band.
    pub band: Option<[f64; 2]>,
    /// Cost of an evaluation that fails (divergence, invalid parameters).
    pub penalty: f64,
    /// Settle every evaluation from scratch instead of resuming from the
    /// snapshot settled with the starting parameters.
    pub resettle: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { weights: default_weights(), band: None, penalty: 1e6, resettle: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub parameters: Vec<ParameterSpec>,
    pub objective: ObjectiveConfig,
    pub optimizer: OptimizerConfig,
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        for p in &self.parameters {
            p.bound().validate(&p.name)?;
            if !p.path.starts_with('/') {
                return Err(Error::InvalidParameter { name: p.name.clone(), reason: format!("path `{}` is not a JSON pointer", p.path) });
            }
        }
        let w = &self.objective.weights;
        if w.values().any(|v| !(*v >= 0.0)) || (!w.is_empty() && w.values().all(|v| *v == 0.0)) {
            return Err(Error::Config("calibration weights must be non-negative and not all zero".into()));
        }
        if !(self.objective.penalty.is_finite() && self.objective.penalty > 0.0) {
            return Err(Error::Config("calibration penalty must be finite and positive".into()));
        }
        Ok(())
    }
}

/// Weighted band-mean squared log-gain error of `model` against `reference`.
///
/// `weight` maps an output channel name to its weight.
pub fn frf_cost(
    model: &[FrequencyResponse],
    reference: &[FrequencyResponse],
    band: [f64; 2],
    weight: impl Fn(&str) -> f64,
) -> Result<f64> {
    let mut cost = 0.0;
    for r in reference {
        let w = weight(&r.output);
        if w == 0.0 {
            continue;
        }
        let m = model
            .iter()
            .find(|m| m.input == r.input && m.output == r.output)
            .ok_or_else(|| Error::MissingChannel(format!("{} / {}", r.output, r.input)))?;
        let (mut sum, mut n) = (0.0, 0usize);
        for (f, g) in r.freqs.iter().zip(&r.gain) {
            if *f < band[0] || *f > band[1] {
                continue;
            }
            let Some(gm) = m.gain_at(*f) else { continue };
            let d = gm.max(1e-12).ln() - g.max(1e-12).ln();
            sum += d * d;
            n += 1;
        }
        if n > 0 {
            cost += w * sum / n as f64;
        }
    }
    Ok(cost)
}

fn set_pointer(doc: &mut Value, path: &str, value: f64, name: &str) -> Result<()> {
    let slot = doc.pointer_mut(path).ok_or_else(|| Error::InvalidParameter {
        name: name.into(),
        reason: format!("path `{path}` does not exist in the configuration"),
    })?;
    if !slot.is_number() {
        return Err(Error::InvalidParameter { name: name.into(), reason: format!("path `{path}` is not a number") });
    }
    *slot = serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| Error::InvalidParameter { name: name.into(), reason: format!("value {value} is not finite") })?;
    Ok(())
}

/// A calibration problem bound to one template configuration and reference set.
#[derive(Debug, Clone)]
pub struct Calibration {
    template: Value,
    base: RunConfig,
    specs: Vec<ParameterSpec>,
    references: Vec<FrequencyResponse>,
    pairs: Vec<ChannelPair>,
    band: [f64; 2],
    excitation: ExcitationSignal,
    snapshot: Option<RestartSnapshot>,
}

impl Calibration {
    /// Validates the references against the band and settles the template
    /// model once.
    pub fn new(cfg: &RunConfig, references: Vec<FrequencyResponse>) -> Result<Self> {
        cfg.validate()?;
        let specs = cfg.calibration.parameters.clone();
        if specs.is_empty() {
            return Err(Error::Config("calibration.parameters is empty".into()));
        }
        if references.is_empty() {
            return Err(Error::MissingChannel("reference FRF set is empty".into()));
        }
        let band = cfg.calibration.objective.band.unwrap_or(cfg.analysis.estimator.band);
        let outside: Vec<String> = references
            .iter()
            .filter(|r| !r.freqs.iter().any(|f| *f >= band[0] && *f <= band[1]))
            .map(|r| format!("{} / {} covers [{:.3}, {:.3}] Hz", r.output, r.input, r.freqs.first().unwrap_or(&0.0), r.freqs.last().unwrap_or(&0.0)))
            .collect();
        if !outside.is_empty() {
            return Err(Error::BandMismatch(format!("band [{}, {}] Hz; {}", band[0], band[1], outside.join("; "))));
        }
        let template = serde_json::to_value(cfg)?;
        for p in &specs {
            let v = template.pointer(&p.path).ok_or_else(|| Error::InvalidParameter {
                name: p.name.clone(),
                reason: format!("path `{}` does not exist in the configuration", p.path),
            })?;
            if !v.is_number() {
                return Err(Error::InvalidParameter { name: p.name.clone(), reason: format!("path `{}` is not a number", p.path) });
            }
        }
        let pairs = references.iter().map(|r| ChannelPair::new(&r.input, &r.output)).collect();
        let excitation = cfg.excitation_signal()?;
        let snapshot = if cfg.calibration.objective.resettle {
            None
        } else {
            let model = cfg.build_model()?;
            let settle_only = ExcitationConfig { duration: cfg.excitation.settle_time, ..cfg.excitation.clone() };
            let exc = generate_excitation(&settle_only, 1.0 / cfg.simulation.step)?;
            run(&model, &cfg.simulation, &exc, None)?.snapshot
        };
        Ok(Self { template, base: cfg.clone(), specs, references, pairs, band, excitation, snapshot })
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    /// Parameter values held by the template configuration.
    pub fn start(&self) -> Vec<f64> {
        self.specs.iter().map(|p| self.template.pointer(&p.path).and_then(Value::as_f64).unwrap_or(p.lower)).collect()
    }

    pub fn config_for(&self, x: &[f64]) -> Result<RunConfig> {
        let mut doc = self.template.clone();
        for (p, v) in self.specs.iter().zip(x) {
            set_pointer(&mut doc, &p.path, *v, &p.name)?;
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn weight_for(&self, model: &Model, output: &str) -> f64 {
        let segment = output.split('.').next().unwrap_or(output);
        let weights = &self.base.calibration.objective.weights;
        let label = model.outputs.iter().find(|o| o.segment == segment).map(|o| o.label);
        label.and_then(|l| weights.get(l)).or_else(|| weights.get(segment)).copied().unwrap_or(1.0)
    }

    /// Model FRFs at `x`.
    pub fn responses(&self, x: &[f64]) -> Result<(Model, Vec<FrequencyResponse>)> {
        let cfg = self.config_for(x)?;
        let model = cfg.build_model()?;
        let restart = self.snapshot.as_ref().filter(|s| s.model_hash == model.hash());
        let out = run(&model, &cfg.simulation, &self.excitation, restart)?;
        let frfs = log_frfs(&out.log, &self.pairs, &cfg.analysis.estimator, cfg.excitation.settle_time)?;
        Ok((model, frfs))
    }

    pub fn cost(&self, x: &[f64]) -> Result<f64> {
        let (model, frfs) = self.responses(x)?;
        frf_cost(&frfs, &self.references, self.band, |o| self.weight_for(&model, o))
    }

    /// [`Calibration::cost`] with failures mapped to the penalty.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self.cost(x) {
            Ok(c) if c.is_finite() => c,
            Ok(_) | Err(_) => self.base.calibration.objective.penalty,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub best_config: RunConfig,
    pub trace: Vec<TraceEntry>,
    pub restarts: usize,
}

impl CalibrationResult {
    /// `eval,cost,best_cost,<param>...`
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        write_trace(path, &self.names, &self.trace)
    }
}

pub fn write_trace(path: &Path, names: &[String], trace: &[TraceEntry]) -> Result<()> {
    let err = |e: csv::Error| Error::Format { path: path.into(), reason: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec!["eval".to_string(), "cost".into(), "best_cost".into()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(err)?;
    for e in trace {
        let mut rec = vec![e.eval.to_string(), e.cost.to_string(), e.best_cost.to_string()];
        rec.extend(e.params.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fits the configured parameters. `workers` bounds the evaluation threads
/// (default: all cores).
pub fn calibrate(cfg: &RunConfig, references: Vec<FrequencyResponse>, workers: Option<usize>) -> Result<CalibrationResult> {
    let problem = Calibration::new(cfg, references)?;
    let bounds: Vec<Bound> = problem.specs().iter().map(|p| p.bound()).collect();
    let x0 = problem.start();
    let opt = &cfg.calibration.optimizer;
    let f = |x: &[f64]| problem.evaluate(x);
    let result = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| optimize(&f, &bounds, &x0, opt))?
        }
        None => optimize(&f, &bounds, &x0, opt)?,
    };
    if result.best_cost >= cfg.calibration.objective.penalty {
        return Err(Error::NoStableEvaluation);
    }
    Ok(CalibrationResult {
        names: problem.specs().iter().map(|p| p.name.clone()).collect(),
        best_config: problem.config_for(&result.best)?,
        best: result.best,
        best_cost: result.best_cost,
        trace: result.trace,
        restarts: result.restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(output: &str, gains: &[f64]) -> FrequencyResponse {
        FrequencyResponse {
            input: "seat.acc_z".into(),
            output: output.into(),
            freqs: (1..=gains.len()).map(|f| f as f64).collect(),
            gain: gains.to_vec(),
            phase: vec![0.0; gains.len()],
            coherence: vec![1.0; gains.len()],
            window_len: 0,
            overlap: 0.5,
            segments: 1,
        }
    }

    #[test]
    fn identical_curves_cost_nothing() {
        let a = vec![curve("head.acc_z", &[1.0, 2.0, 1.5])];
        assert_eq!(frf_cost(&a, &a, [0.0, 10.0], |_| 1.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_ignores_mismatch() {
        let model = vec![curve("head.acc_z", &[1.0, 2.0]), curve("pelvis.acc_z", &[1.0, 1.0])];
        let refs = vec![curve("head.acc_z", &[1.0, 2.0]), curve("pelvis.acc_z", &[3.0, 3.0])];
        let w = |o: &str| if o.starts_with("pelvis") { 0.0 } else { 1.0 };
        assert_eq!(frf_cost(&model, &refs, [0.0, 10.0], w).unwrap(), 0.0);
        let c = frf_cost(&model, &refs, [0.0, 10.0], |_| 1.0).unwrap();
        assert!((c - 3f64.ln().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn head_share_grows_with_head_weight() {
        let model = vec![curve("head.acc_z", &[1.0, 2.0]), curve("trunk.acc_z", &[1.0, 1.0])];
        let refs = vec![curve("head.acc_z", &[2.0, 2.5]), curve("trunk.acc_z", &[1.5, 1.2])];
        let share = |wh: f64| {
            let total = frf_cost(&model, &refs, [0.0, 10.0], |o| if o.starts_with("head") { wh } else { 1.0 }).unwrap();
            let head = frf_cost(&model, &refs, [0.0, 10.0], |o| if o.starts_with("head") { wh } else { 0.0 }).unwrap();
            head / total
        };
        let mut prev = 0.0;
        for wh in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let s = share(wh);
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn missing_reference_channel() {
        let model = vec![curve("head.acc_z", &[1.0])];
        let refs = vec![curve("trunk.acc_z", &[1.0])];
        assert!(matches!(frf_cost(&model, &refs, [0.0, 10.0], |_| 1.0), Err(Error::MissingChannel(_))));
    }
}
