//! Band-limited random seat motion.
//!
//! Acceleration is the ground truth. Velocity and displacement come from the
//! same spectrum divided by `iω` and `−ω²`, so all three are band-limited and
//! exactly consistent at the samples; a smooth fade-in after the quiet settling
//! window keeps the platform from jumping when excitation starts.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::PlatformState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationConfig {
    pub seed: u64,
    /// Pass band, Hz.
    pub band: [f64; 2],
    /// Per-axis RMS acceleration over the excited window, m/s².
    pub rms: f64,
    /// Total run length including settling, s.
    pub duration: f64,
    pub settle_time: f64,
    /// Length of the smooth ramp at the start of the excited window, s.
    #[serde(default = "default_fade_in")]
    pub fade_in: f64,
}

fn default_fade_in() -> f64 {
    1.0
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self { seed: 1, band: [0.3, 12.0], rms: 0.1941, duration: 35.0, settle_time: 5.0, fade_in: default_fade_in() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSignal {
    pub sample_rate: f64,
    pub duration: f64,
    pub settle_time: f64,
    pub seed: u64,
    pub band: [f64; 2],
    pub target_rms: f64,
    /// Per axis x, y, z; sample `n` is at `t = n / sample_rate`.
    pub acc: [Vec<f64>; 3],
    pub vel: [Vec<f64>; 3],
    pub disp: [Vec<f64>; 3],
}

/// Quintic smootherstep and its first two derivatives with respect to `x`.
fn smootherstep(x: f64) -> (f64, f64, f64) {
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let x2 = x * x;
    let x3 = x2 * x;
    (
        x3 * (10.0 - 15.0 * x + 6.0 * x2),
        30.0 * x2 * (1.0 - x) * (1.0 - x),
        60.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
    )
}

pub fn generate_excitation(cfg: &ExcitationConfig, sample_rate: f64) -> Result<ExcitationSignal> {
    let [f_lo, f_hi] = cfg.band;
    let bad = |m: String| Err(Error::InvalidExcitation(m));
    if !(f_lo > 0.0 && f_lo < f_hi && f_hi < sample_rate / 2.0) {
        return bad(format!("band [{f_lo}, {f_hi}] Hz is not inside (0, {}) Hz", sample_rate / 2.0));
    }
    if !(cfg.rms > 0.0 && cfg.rms.is_finite()) {
        return bad(format!("target RMS {} must be positive", cfg.rms));
    }
    if !(cfg.settle_time >= 0.0 && cfg.duration >= cfg.settle_time) {
        return bad(format!("duration {} must be at least the settle time {}", cfg.duration, cfg.settle_time));
    }
    let n_total = (cfg.duration * sample_rate).round() as usize;
    let n_settle = (cfg.settle_time * sample_rate).round() as usize;
    let zeros = vec![0.0; n_total + 1];
    let mut sig = ExcitationSignal {
        sample_rate,
        duration: cfg.duration,
        settle_time: cfg.settle_time,
        seed: cfg.seed,
        band: cfg.band,
        target_rms: cfg.rms,
        acc: [zeros.clone(), zeros.clone(), zeros.clone()],
        vel: [zeros.clone(), zeros.clone(), zeros.clone()],
        disp: [zeros.clone(), zeros.clone(), zeros],
    };
    let m = n_total - n_settle;
    if m == 0 {
        return Ok(sig);
    }
    let window = m as f64 / sample_rate;
    if window < 1.0 / f_lo {
        return bad(format!("excited window {window} s is shorter than one period of {f_lo} Hz"));
    }
    if !(cfg.fade_in >= 0.0 && cfg.fade_in < window) {
        return bad(format!("fade-in {} s must be shorter than the excited window", cfg.fade_in));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    for axis in 0..3 {
        let mut spec: Vec<Complex<f64>> =
            (0..m).map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0)).collect();
        fwd.process(&mut spec);
        let mut vel_spec = vec![Complex::new(0.0, 0.0); m];
        let mut disp_spec = vec![Complex::new(0.0, 0.0); m];
        for k in 0..m {
            // signed bin frequency
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let f = kk * sample_rate / m as f64;
            if f.abs() < f_lo || f.abs() > f_hi || (m % 2 == 0 && k == m / 2) {
                spec[k] = Complex::new(0.0, 0.0);
                continue;
            }
            let w = 2.0 * std::f64::consts::PI * f;
            vel_spec[k] = spec[k] / Complex::new(0.0, w);
            disp_spec[k] = -spec[k] / (w * w);
        }
        for buf in [&mut spec, &mut vel_spec, &mut disp_spec] {
            inv.process(buf);
        }
        let scale = 1.0 / m as f64;
        let (mut a, mut v, mut d) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 0..m {
            let tau = i as f64 / sample_rate;
            let (w, w1, w2) = if cfg.fade_in > 0.0 {
                let (s, s1, s2) = smootherstep(tau / cfg.fade_in);
                (s, s1 / cfg.fade_in, s2 / (cfg.fade_in * cfg.fade_in))
            } else {
                (1.0, 0.0, 0.0)
            };
            let (ar, vr, dr) = (spec[i].re * scale, vel_spec[i].re * scale, disp_spec[i].re * scale);
            a[i] = w * ar + 2.0 * w1 * vr + w2 * dr;
            v[i] = w * vr + w1 * dr;
            d[i] = w * dr;
        }
        let rms = (a.iter().map(|x| x * x).sum::<f64>() / m as f64).sqrt();
        if rms == 0.0 {
            return bad("band contains no frequency bins".into());
        }
        let g = cfg.rms / rms;
        // sample n_settle stays exactly zero: the fade starts there
        for i in 0..m {
            sig.acc[axis][n_settle + 1 + i] = g * a[i];
            sig.vel[axis][n_settle + 1 + i] = g * v[i];
            sig.disp[axis][n_settle + 1 + i] = g * d[i];
        }
    }
    Ok(sig)
}

impl ExcitationSignal {
    pub fn len(&self) -> usize {
        self.acc[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First sample of the excited window.
    pub fn settle_index(&self) -> usize {
        (self.settle_time * self.sample_rate).round() as usize
    }

    /// Platform state at sample `n` restricted to the driven axes.
    pub fn platform(&self, n: usize, axes: [bool; 3]) -> PlatformState {
        let n = n.min(self.len().saturating_sub(1));
        let pick = |s: &[Vec<f64>; 3]| {
            Vector3::new(
                if axes[0] { s[0][n] } else { 0.0 },
                if axes[1] { s[1][n] } else { 0.0 },
                if axes[2] { s[2][n] } else { 0.0 },
            )
        };
        PlatformState { displacement: pick(&self.disp), velocity: pick(&self.vel), acceleration: pick(&self.acc) }
    }

    /// Linear interpolation between samples, for intermediate stages.
    pub fn platform_between(&self, n: usize, frac: f64, axes: [bool; 3]) -> PlatformState {
        let a = self.platform(n, axes);
        let b = self.platform(n + 1, axes);
        let mix = |x: Vector3<f64>, y: Vector3<f64>| x + (y - x) * frac;
        PlatformState {
            displacement: mix(a.displacement, b.displacement),
            velocity: mix(a.velocity, b.velocity),
            acceleration: mix(a.acceleration, b.acceleration),
        }
    }

    /// RMS of one axis over the excited window.
    pub fn excited_rms(&self, axis: usize) -> f64 {
        let s = &self.acc[axis][self.settle_index() + 1..];
        (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt()
    }
}
