//! One-DoF analog of a controlled joint, used to choose integral gains.

use serde::{Deserialize, Serialize};

use super::{pid_torque, PidGains, PidState};

/// `I θ̈ = −(k − k_g) θ − c θ̇ + τ_pid + τ_dist`, where `k_g = m g l` is the
/// destabilizing gravity stiffness of an inverted load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningPlant {
    pub inertia: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub gravity_stiffness: f64,
}

impl TuningPlant {
    /// Net static stiffness seen by the integral loop.
    pub fn effective_stiffness(&self, gains: &PidGains) -> f64 {
        self.stiffness + gains.kp - self.gravity_stiffness
    }

    /// Integral gain placing the slow closed-loop pole so a step disturbance
    /// decays to 5 % in roughly `target` seconds (`e^{-3} ≈ 0.05`).
    pub fn integral_gain_for(&self, gains: &PidGains, target: f64) -> f64 {
        3.0 * self.effective_stiffness(gains) / target
    }

    /// Angle history for a constant disturbance torque applied at `t = 0`.
    pub fn step_response(&self, gains: &PidGains, disturbance: f64, h: f64, duration: f64) -> Vec<f64> {
        let n = (duration / h).round() as usize;
        let (mut q, mut u) = (0.0, 0.0);
        let mut pid = PidState::new(0.0);
        let mut out = Vec::with_capacity(n + 1);
        out.push(q);
        for _ in 0..n {
            let (tau, next) = pid_torque(gains, &pid, q, u, h);
            pid = next;
            let acc = (disturbance + tau - (self.stiffness - self.gravity_stiffness) * q - self.damping * u) / self.inertia;
            u += h * acc;
            q += h * u;
            out.push(q);
        }
        out
    }

    /// Last time the response is outside 5 % of its peak deviation.
    pub fn settling_time(&self, gains: &PidGains, disturbance: f64) -> f64 {
        let h = 1e-3;
        let resp = self.step_response(gains, disturbance, h, 20.0);
        let peak = resp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = resp.iter().rposition(|v| v.abs() > 0.05 * peak).unwrap_or(0);
        last as f64 * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::PidTerms;

    #[test]
    fn integral_action_removes_offset() {
        let plant = TuningPlant { inertia: 0.05, stiffness: 10.0, damping: 0.5, gravity_stiffness: 2.0 };
        let mut g = PidGains { kp: 20.0, ki: 0.0, kd: 1.0, integrator_limit: 10.0, enabled: PidTerms::ALL };
        g.ki = plant.integral_gain_for(&g, 3.0);
        let r = plant.step_response(&g, 1.0, 1e-3, 20.0);
        assert!(r.last().unwrap().abs() < 1e-4);
        g.enabled.i = false;
        let r = plant.step_response(&g, 1.0, 1e-3, 20.0);
        assert!((r.last().unwrap() - 1.0 / 28.0).abs() < 1e-6);
    }
}
