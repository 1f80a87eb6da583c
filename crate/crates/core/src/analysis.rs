//! Welch spectra, H1 transmissibility and the FRF table format.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::sim::TrajectoryLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Segment length, s.
    pub window_seconds: f64,
    /// Fraction of a segment shared with the next, in `[0, 1)`.
    pub overlap: f64,
    /// Reported band, Hz.
    pub band: [f64; 2],
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { window_seconds: 10.0, overlap: 0.5, band: [0.5, 12.0] }
    }
}

/// One-sided Welch estimates on the non-negative frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectra {
    pub freqs: Vec<f64>,
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<Complex<f64>>,
    pub segments: usize,
}

fn hann(n: usize) -> Vec<f64> {
    // periodic form, so 50% overlap sums to a constant
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect()
}

/// Hann-windowed, mean-removed, overlapped periodogram averages, scaled as
/// densities (units²/Hz) so that `Σ Sxx·df` equals the mean power.
pub fn welch_spectra(x: &[f64], y: &[f64], fs: f64, window_len: usize, overlap: f64) -> Result<CrossSpectra> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if window_len < 2 || window_len > x.len() {
        return Err(Error::SeriesTooShort { len: x.len(), window: window_len });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter { name: "overlap".into(), reason: format!("{overlap} not in [0, 1)") });
    }
    let hop = ((window_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let segments = (x.len() - window_len) / hop + 1;
    let w = hann(window_len);
    let u: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);
    let nf = window_len / 2 + 1;
    let (mut sxx, mut syy, mut sxy) = (vec![0.0; nf], vec![0.0; nf], vec![Complex::new(0.0, 0.0); nf]);
    let mut bx = vec![Complex::new(0.0, 0.0); window_len];
    let mut by = bx.clone();
    for s in 0..segments {
        let (xs, ys) = (&x[s * hop..s * hop + window_len], &y[s * hop..s * hop + window_len]);
        let (mx, my) = (xs.iter().sum::<f64>() / window_len as f64, ys.iter().sum::<f64>() / window_len as f64);
        for i in 0..window_len {
            bx[i] = Complex::new((xs[i] - mx) * w[i], 0.0);
            by[i] = Complex::new((ys[i] - my) * w[i], 0.0);
        }
        fft.process(&mut bx);
        fft.process(&mut by);
        for k in 0..nf {
            sxx[k] += bx[k].norm_sqr();
            syy[k] += by[k].norm_sqr();
            sxy[k] += bx[k].conj() * by[k];
        }
    }
    let base = 1.0 / (fs * u * segments as f64);
    for k in 0..nf {
        // double interior bins for the one-sided form
        let f = if k == 0 || (window_len % 2 == 0 && k == nf - 1) { base } else { 2.0 * base };
        sxx[k] *= f;
        syy[k] *= f;
        sxy[k] *= f;
    }
    let freqs = (0..nf).map(|k| k as f64 * fs / window_len as f64).collect();
    Ok(CrossSpectra { freqs, sxx, syy, sxy, segments })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub input: String,
    pub output: String,
    pub freqs: Vec<f64>,
    pub gain: Vec<f64>,
    pub phase: Vec<f64>,
    pub coherence: Vec<f64>,
    pub window_len: usize,
    pub overlap: f64,
    pub segments: usize,
}

impl FrequencyResponse {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn peak_gain(&self) -> f64 {
        self.gain.iter().cloned().fold(0.0, f64::max)
    }

    /// Gain linearly interpolated at `f`, `None` outside the grid.
    pub fn gain_at(&self, f: f64) -> Option<f64> {
        let i = self.freqs.partition_point(|&x| x < f);
        if i == 0 {
            return (self.freqs.first() == Some(&f)).then(|| self.gain[0]);
        }
        if i == self.freqs.len() {
            return None;
        }
        let (f0, f1) = (self.freqs[i - 1], self.freqs[i]);
        let a = (f - f0) / (f1 - f0);
        Some(self.gain[i - 1] * (1.0 - a) + self.gain[i] * a)
    }
}

/// H1 estimate restricted to `cfg.band`.
pub fn frf(
    input: &[f64],
    output: &[f64],
    fs: f64,
    cfg: &EstimatorConfig,
    input_name: &str,
    output_name: &str,
) -> Result<FrequencyResponse> {
    let [lo, hi] = cfg.band;
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::BandMismatch(format!("band [{lo}, {hi}] Hz is empty")));
    }
    let window_len = (cfg.window_seconds * fs).round() as usize;
    let sp = welch_spectra(input, output, fs, window_len, cfg.overlap)?;
    let mut r = FrequencyResponse {
        input: input_name.into(),
        output: output_name.into(),
        freqs: Vec::new(),
        gain: Vec::new(),
        phase: Vec::new(),
        coherence: Vec::new(),
        window_len,
        overlap: cfg.overlap,
        segments: sp.segments,
    };
    let peak_in = sp.sxx.iter().cloned().fold(0.0, f64::max);
    for k in 0..sp.freqs.len() {
        let f = sp.freqs[k];
        if f < lo || f > hi {
            continue;
        }
        let (sxx, syy, sxy) = (sp.sxx[k], sp.syy[k], sp.sxy[k]);
        // bins without input power carry no information
        if !(sxx > 1e-12 * peak_in) {
            continue;
        }
        r.freqs.push(f);
        r.gain.push(sxy.norm() / sxx);
        r.phase.push(sxy.arg());
        let coh = if syy > 0.0 { sxy.norm_sqr() / (sxx * syy) } else { 0.0 };
        r.coherence.push(coh.clamp(0.0, 1.0));
    }
    if r.is_empty() {
        return Err(Error::ZeroInputPower);
    }
    Ok(r)
}

pub fn rms(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    (series.iter().map(|x| x * x).sum::<f64>() / series.len() as f64).sqrt()
}

/// Input/output channel names of one transmissibility curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub input: String,
    pub output: String,
}

impl ChannelPair {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        Self { input: input.into(), output: output.into() }
    }

    pub fn file_name(&self) -> String {
        format!("{}__{}.csv", self.output, self.input)
    }
}

/// Translation gain along each excited axis plus the rotations it drives:
/// pitch for fore-aft and vertical, roll and yaw for lateral.
pub fn default_pairs(segments: &[&str]) -> Vec<ChannelPair> {
    let mut out = Vec::new();
    for s in segments {
        for (axis, outs) in [
            ("x", &["acc_x", "omega_y"][..]),
            ("z", &["acc_z", "omega_y"][..]),
            ("y", &["acc_y", "omega_x", "omega_z"][..]),
        ] {
            for o in outs {
                out.push(ChannelPair::new(format!("seat.acc_{axis}"), format!("{s}.{o}")));
            }
        }
    }
    out
}

/// Estimator settings and the curves to compute; an empty `pairs` list means
/// [`pairs_for`] the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub estimator: EstimatorConfig,
    pub pairs: Vec<ChannelPair>,
}

impl AnalysisConfig {
    pub fn pairs(&self, model: &Model) -> Vec<ChannelPair> {
        if self.pairs.is_empty() {
            pairs_for(model)
        } else {
            self.pairs.clone()
        }
    }
}

/// [`default_pairs`] for the model's reporting bodies, limited to driven seat
/// axes; rotational outputs only when the model can rotate.
pub fn pairs_for(model: &Model) -> Vec<ChannelPair> {
    let rotates = model
        .tree
        .bodies()
        .iter()
        .any(|b| (0..b.joint.kind.dof()).any(|k| !b.joint.kind.is_translational(k)));
    let segments: Vec<&str> = model.outputs.iter().map(|o| o.segment.as_str()).collect();
    let driven = |input: &str| {
        let axis = ["x", "y", "z"].iter().position(|a| input.ends_with(a)).unwrap_or(0);
        model.motion[axis]
    };
    default_pairs(&segments)
        .into_iter()
        .filter(|p| driven(&p.input) && (rotates || !p.output.contains(".omega_")))
        .collect()
}

/// FRFs of every pair over the log rows with `t ≥ start`.
pub fn log_frfs(log: &TrajectoryLog, pairs: &[ChannelPair], cfg: &EstimatorConfig, start: f64) -> Result<Vec<FrequencyResponse>> {
    let part = log.from_time(start);
    pairs
        .iter()
        .map(|p| frf(part.channel(&p.input)?, part.channel(&p.output)?, part.sample_rate, cfg, &p.input, &p.output))
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format { path: path.into(), reason: e.to_string() }
}

pub fn write_frf_csv(path: &Path, r: &FrequencyResponse) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["freq_hz", "gain", "phase_rad", "coherence"]).map_err(|e| csv_err(path, e))?;
    for i in 0..r.len() {
        w.write_record([r.freqs[i], r.gain[i], r.phase[i], r.coherence[i]].map(|v| v.to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_frf_csv(path: &Path, pair: &ChannelPair) -> Result<FrequencyResponse> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut r = FrequencyResponse {
        input: pair.input.clone(),
        output: pair.output.clone(),
        freqs: Vec::new(),
        gain: Vec::new(),
        phase: Vec::new(),
        coherence: Vec::new(),
        window_len: 0,
        overlap: 0.0,
        segments: 0,
    };
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format { path: path.into(), reason: format!("row {}: {e}", line + 2) })?;
        if v.len() != 4 {
            return Err(Error::Format { path: path.into(), reason: format!("row {} has {} fields", line + 2, v.len()) });
        }
        r.freqs.push(v[0]);
        r.gain.push(v[1]);
        r.phase.push(v[2]);
        r.coherence.push(v[3]);
    }
    Ok(r)
}

pub const INDEX_FILE: &str = "index.csv";

/// One CSV per curve plus `index.csv` (`file,input,output`).
pub fn write_frf_set(dir: &Path, set: &[FrequencyResponse]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let index = dir.join(INDEX_FILE);
    let mut w = csv::Writer::from_path(&index).map_err(|e| csv_err(&index, e))?;
    w.write_record(["file", "input", "output"]).map_err(|e| csv_err(&index, e))?;
    for r in set {
        let pair = ChannelPair::new(&r.input, &r.output);
        write_frf_csv(&dir.join(pair.file_name()), r)?;
        w.write_record([pair.file_name(), pair.input, pair.output]).map_err(|e| csv_err(&index, e))?;
    }
    w.flush().map_err(|e| Error::io(&index, e))
}

pub fn read_frf_set(dir: &Path) -> Result<Vec<FrequencyResponse>> {
    let index = dir.join(INDEX_FILE);
    if !index.exists() {
        return Err(Error::Io { path: index, source: std::io::Error::from(std::io::ErrorKind::NotFound) });
    }
    let mut rd = csv::Reader::from_path(&index).map_err(|e| csv_err(&index, e))?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| csv_err(&index, e))?;
        let (file, input, output) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""), rec.get(2).unwrap_or(""));
        out.push(read_frf_csv(&dir.join(file), &ChannelPair::new(input, output))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn static_gain_and_self_coherence() {
        let x = noise(20_000, 1);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let cfg = EstimatorConfig { window_seconds: 1.0, ..Default::default() };
        let r = frf(&x, &y, 1000.0, &cfg, "x", "y").unwrap();
        for i in 0..r.len() {
            assert!((r.gain[i] - 2.0).abs() < 1e-12);
            assert!(r.phase[i].abs() < 1e-12);
            assert!((r.coherence[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_delay_gives_linear_phase() {
        let fs = 1000.0;
        let d = 5;
        let x = noise(40_000, 2);
        let y: Vec<f64> = (0..x.len()).map(|i| if i >= d { x[i - d] } else { 0.0 }).collect();
        let cfg = EstimatorConfig { window_seconds: 2.0, ..Default::default() };
        let r = frf(&x, &y, fs, &cfg, "x", "y").unwrap();
        let tau = d as f64 / fs;
        for i in 0..r.len() {
            assert!((r.gain[i] - 1.0).abs() < 0.02, "{} {}", r.freqs[i], r.gain[i]);
            let expect = -2.0 * std::f64::consts::PI * r.freqs[i] * tau;
            let err = (r.phase[i] - expect + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
            assert!(err.abs() < 0.02, "{} {err}", r.freqs[i]);
        }
    }

    #[test]
    fn uncorrelated_noise_has_low_coherence() {
        let (x, y) = (noise(65 * 500, 3), noise(65 * 500, 4));
        let sp = welch_spectra(&x, &y, 1000.0, 1000, 0.5).unwrap();
        assert!(sp.segments >= 64);
        for k in 1..sp.freqs.len() {
            let c = sp.sxy[k].norm_sqr() / (sp.sxx[k] * sp.syy[k]);
            assert!(c < 0.3, "{k} {c}");
        }
    }

    #[test]
    fn parseval() {
        let x = noise(50_000, 5);
        let sp = welch_spectra(&x, &x, 1000.0, 2000, 0.5).unwrap();
        let df = sp.freqs[1];
        let power: f64 = sp.sxx.iter().sum::<f64>() * df;
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((power / var - 1.0).abs() < 0.02, "{power} {var}");
    }

    #[test]
    fn sine_at_bin_frequency() {
        let fs = 100.0;
        let n = 1000;
        let x: Vec<f64> = (0..4 * n).map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / fs).sin()).collect();
        let sp = welch_spectra(&x, &x, fs, n, 0.5).unwrap();
        let k = sp.sxx.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((sp.freqs[k] - 5.0).abs() < 1e-12);
        assert!((sp.sxy[k].norm_sqr() / (sp.sxx[k] * sp.syy[k]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rms_examples() {
        assert!((rms(&[-3.0; 10]) - 3.0).abs() < 1e-15);
        let s: Vec<f64> = (0..1000).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 100.0).sin()).collect();
        assert!((rms(&s) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn too_short_and_mismatched() {
        assert!(matches!(welch_spectra(&[0.0; 10], &[0.0; 10], 1.0, 20, 0.5), Err(Error::SeriesTooShort { .. })));
        assert!(matches!(welch_spectra(&[0.0; 10], &[0.0; 9], 1.0, 5, 0.5), Err(Error::LengthMismatch(10, 9))));
        let cfg = EstimatorConfig { window_seconds: 1.0, ..Default::default() };
        assert!(matches!(frf(&[0.0; 500], &[1.0; 500], 100.0, &cfg, "a", "b"), Err(Error::ZeroInputPower)));
    }

    #[test]
    fn set_round_trip() {
        let x = noise(5000, 6);
        let cfg = EstimatorConfig { window_seconds: 1.0, ..Default::default() };
        let r = frf(&x, &x, 500.0, &cfg, "seat.acc_z", "head.acc_z").unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_frf_set(dir.path(), std::slice::from_ref(&r)).unwrap();
        let back = read_frf_set(dir.path()).unwrap();
        assert_eq!(back[0].gain, r.gain);
        assert_eq!(back[0].freqs, r.freqs);
        assert_eq!(back[0].output, "head.acc_z");
    }
}
