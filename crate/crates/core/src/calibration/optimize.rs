//! Bounded Nelder-Mead with restarts.
//!
//! Each coordinate is optimized through a logistic map onto its bounds (on
//! `ln x` for log-scaled parameters), so every evaluated point is feasible.
//! Batches (initial simplex, shrink) are evaluated in parallel and consumed in
//! submission order, which keeps traces identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
}

impl Bound {
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidParameter { name: name.into(), reason });
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return bad(format!("bounds [{}, {}] are not an interval", self.lower, self.upper));
        }
        if self.scale == Scale::Log && self.lower <= 0.0 {
            return bad(format!("log scale needs a positive lower bound, got {}", self.lower));
        }
        Ok(())
    }

    fn ends(&self) -> (f64, f64) {
        match self.scale {
            Scale::Linear => (self.lower, self.upper),
            Scale::Log => (self.lower.ln(), self.upper.ln()),
        }
    }

    /// Unbounded coordinate to parameter value.
    pub fn to_param(&self, z: f64) -> f64 {
        let (a, b) = self.ends();
        let s = a + (b - a) / (1.0 + (-z).exp());
        let x = match self.scale {
            Scale::Linear => s,
            Scale::Log => s.exp(),
        };
        x.clamp(self.lower, self.upper)
    }

    /// Inverse of [`Bound::to_param`]; values at or beyond a bound are pulled
    /// slightly inside.
    pub fn to_free(&self, x: f64) -> f64 {
        let (a, b) = self.ends();
        let s = match self.scale {
            Scale::Linear => x,
            Scale::Log => x.max(self.lower).ln(),
        };
        let p = ((s - a) / (b - a)).clamp(1e-6, 1.0 - 1e-6);
        (p / (1.0 - p)).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Total objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Fresh simplices built around the incumbent after convergence.
    pub max_restarts: usize,
    /// Initial simplex edge in the unbounded coordinates.
    pub initial_step: f64,
    /// Convergence on the spread of simplex costs.
    pub f_tol: f64,
    /// Convergence on the simplex diameter (unbounded coordinates).
    pub x_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { budget: 1500, seed: 1, max_restarts: 8, initial_step: 0.6, f_tol: 1e-12, x_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval: usize,
    pub cost: f64,
    pub best_cost: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub trace: Vec<TraceEntry>,
    pub restarts: usize,
}

struct Evaluator<'a, F> {
    f: &'a F,
    bounds: &'a [Bound],
    budget: usize,
    trace: Vec<TraceEntry>,
    best: (f64, Vec<f64>),
}

impl<F: Fn(&[f64]) -> f64 + Sync> Evaluator<'_, F> {
    fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    fn params(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.bounds).map(|(z, b)| b.to_param(*z)).collect()
    }

    /// Evaluates up to the remaining budget; returns costs for the evaluated prefix.
    fn batch(&mut self, zs: &[Vec<f64>]) -> Vec<f64> {
        let n = zs.len().min(self.remaining());
        let xs: Vec<Vec<f64>> = zs[..n].iter().map(|z| self.params(z)).collect();
        let f = self.f;
        let costs: Vec<f64> = xs
            .par_iter()
            .map(|x| {
                let c = f(x);
                if c.is_nan() {
                    f64::INFINITY
                } else {
                    c
                }
            })
            .collect();
        for (x, &c) in xs.into_iter().zip(&costs) {
            if c < self.best.0 {
                self.best = (c, x.clone());
            }
            self.trace.push(TraceEntry { eval: self.trace.len() + 1, cost: c, best_cost: self.best.0, params: x });
        }
        costs
    }

    fn one(&mut self, z: &[f64]) -> Option<f64> {
        self.batch(std::slice::from_ref(&z.to_vec())).first().copied()
    }
}

fn centroid(simplex: &[(f64, Vec<f64>)], skip_last: bool) -> Vec<f64> {
    let m = if skip_last { simplex.len() - 1 } else { simplex.len() };
    let n = simplex[0].1.len();
    let mut c = vec![0.0; n];
    for (_, z) in &simplex[..m] {
        for i in 0..n {
            c[i] += z[i] / m as f64;
        }
    }
    c
}

fn along(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b − a)
    a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` over the box given by `bounds`, starting at `x0`.
///
/// `f` should map failures to a finite penalty; NaN is treated as `+∞`.
pub fn optimize<F>(f: &F, bounds: &[Bound], x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = bounds.len();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if n == 0 {
        return Err(Error::InvalidParameter { name: "parameters".into(), reason: "no free parameters".into() });
    }
    for (i, b) in bounds.iter().enumerate() {
        b.validate(&format!("#{i}"))?;
    }
    if cfg.budget < n + 1 {
        return Err(Error::BudgetTooSmall { budget: cfg.budget, min: n + 1 });
    }
    if cfg.budget < 10 * n {
        log::warn!("budget {} is below the recommended {} (10 × dimension)", cfg.budget, 10 * n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ev = Evaluator { f, bounds, budget: cfg.budget, trace: Vec::new(), best: (f64::INFINITY, x0.to_vec()) };
    let mut start: Vec<f64> = x0.iter().zip(bounds).map(|(x, b)| b.to_free(*x)).collect();
    let mut restarts = 0;
    let mut step = cfg.initial_step;

    'outer: loop {
        // simplex around `start`; edge directions get random signs on restarts
        let mut pts = vec![start.clone()];
        for i in 0..n {
            let mut z = start.clone();
            let sign = if restarts == 0 || rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            // lean towards the interior so edges do not saturate the logistic map
            let toward = if z[i] > 2.0 { -1.0 } else { 1.0 };
            z[i] += sign * toward * step;
            pts.push(z);
        }
        let costs = ev.batch(&pts);
        if costs.len() < pts.len() {
            break;
        }
        let mut simplex: Vec<(f64, Vec<f64>)> = costs.into_iter().zip(pts).collect();

        loop {
            simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
            let spread = simplex[n].0 - simplex[0].0;
            let diameter = simplex[1..]
                .iter()
                .map(|(_, z)| z.iter().zip(&simplex[0].1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let scale = 1.0 + simplex[0].0.abs();
            if (spread <= cfg.f_tol * scale && simplex[0].0.is_finite()) || diameter <= cfg.x_tol {
                break;
            }
            if ev.remaining() == 0 {
                break 'outer;
            }
            let c = centroid(&simplex, true);
            let worst = simplex[n].clone();
            let xr = along(&c, &worst.1, -1.0);
            let Some(fr) = ev.one(&xr) else { break 'outer };
            if fr < simplex[0].0 {
                let xe = along(&c, &worst.1, -2.0);
                let Some(fe) = ev.one(&xe) else { break 'outer };
                simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
                continue;
            }
            if fr < simplex[n - 1].0 {
                simplex[n] = (fr, xr);
                continue;
            }
            // contraction: outside if the reflection improved on the worst
            let (xc, fc_ref) = if fr < worst.0 { (along(&c, &xr, 0.5), fr) } else { (along(&c, &worst.1, 0.5), worst.0) };
            let Some(fc) = ev.one(&xc) else { break 'outer };
            if fc < fc_ref {
                simplex[n] = (fc, xc);
                continue;
            }
            let best = simplex[0].1.clone();
            let shrunk: Vec<Vec<f64>> = simplex[1..].iter().map(|(_, z)| along(&best, z, 0.5)).collect();
            let costs = ev.batch(&shrunk);
            if costs.len() < shrunk.len() {
                break 'outer;
            }
            for (k, (c, z)) in costs.into_iter().zip(shrunk).enumerate() {
                simplex[k + 1] = (c, z);
            }
        }

        if restarts >= cfg.max_restarts || ev.remaining() < n + 1 {
            break;
        }
        restarts += 1;
        start = ev.best.1.iter().zip(bounds).map(|(x, b)| b.to_free(*x)).collect();
        step = (step * 0.5).max(cfg.initial_step * 0.05);
    }

    let (best_cost, best) = ev.best.clone();
    Ok(OptimizeResult { best, best_cost, trace: ev.trace, restarts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lin(lo: f64, hi: f64) -> Bound {
        Bound { lower: lo, upper: hi, scale: Scale::Linear }
    }

    #[test]
    fn quadratic_optimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let cfg = OptimizerConfig { budget: 200, ..Default::default() };
        let r = optimize(&f, &[lin(-5.0, 5.0), lin(-5.0, 5.0)], &[0.0, 0.0], &cfg).unwrap();
        assert!(r.trace.len() <= 200);
        assert!((r.best[0] - 1.0).abs() < 1e-4 && (r.best[1] + 2.0).abs() < 1e-4, "{:?}", r.best);
    }

    #[test]
    fn log_scale_round_trip() {
        let b = Bound { lower: 1e2, upper: 1e6, scale: Scale::Log };
        for x in [150.0, 1e3, 5e5] {
            assert!((b.to_param(b.to_free(x)) / x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_budget_rejected() {
        let f = |_: &[f64]| 0.0;
        let cfg = OptimizerConfig { budget: 0, ..Default::default() };
        assert!(matches!(optimize(&f, &[lin(0.0, 1.0)], &[0.5], &cfg), Err(Error::BudgetTooSmall { .. })));
    }

    #[test]
    fn reproducible_trace() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 3.0 * (x[1] - 0.7).powi(4) + (x[0] * x[1]).sin().abs();
        let cfg = OptimizerConfig { budget: 300, seed: 9, ..Default::default() };
        let b = [lin(-1.0, 1.0), lin(-1.0, 2.0)];
        let a = optimize(&f, &b, &[0.0, 0.0], &cfg).unwrap();
        let c = optimize(&f, &b, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(a.trace, c.trace);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn bounds_respected_and_best_monotone(
            lo in -10.0f64..0.0, w in 0.1f64..20.0, t in -30.0f64..30.0, budget in 10usize..150, seed in 0u64..100
        ) {
            let hi = lo + w;
            let f = move |x: &[f64]| (x[0] - t).powi(2) + (x[1] - t).abs();
            let cfg = OptimizerConfig { budget, seed, ..Default::default() };
            let b = [lin(lo, hi), Bound { lower: 0.01, upper: 100.0, scale: Scale::Log }];
            let r = optimize(&f, &b, &[lo, 1.0], &cfg).unwrap();
            prop_assert!(r.trace.len() <= budget);
            let mut prev = f64::INFINITY;
            for e in &r.trace {
                prop_assert!(e.params[0] >= lo && e.params[0] <= hi);
                prop_assert!(e.params[1] >= 0.01 && e.params[1] <= 100.0);
                prop_assert!(e.best_cost <= prev);
                prev = e.best_cost;
            }
        }
    }
}
