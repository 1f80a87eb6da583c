//! Per-DoF PID posture controllers.

pub mod tuning;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigidbody::KinematicTree;

/// Which PID terms contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidTerms {
    pub p: bool,
    pub i: bool,
    pub d: bool,
}

impl PidTerms {
    pub const ALL: Self = Self { p: true, i: true, d: true };
    pub const NONE: Self = Self { p: false, i: false, d: false };
}

impl Default for PidTerms {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup clamp on the error integral (rad·s, or m·s).
    pub integrator_limit: f64,
    #[serde(default)]
    pub enabled: PidTerms,
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite() && *g >= 0.0)
            && self.integrator_limit.is_finite()
            && self.integrator_limit > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid PID gains {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub reference: f64,
    pub integral: f64,
    pub last_update: f64,
}

impl PidState {
    pub fn new(reference: f64) -> Self {
        Self { reference, integral: 0.0, last_update: 0.0 }
    }
}

/// `τ = kp·e + ki·∫e − kd·u` with `e = reference − q`; the derivative acts on
/// the measured rate so capturing a new reference causes no kick.
pub fn pid_torque(gains: &PidGains, state: &PidState, q: f64, u: f64, dt: f64) -> (f64, PidState) {
    let e = state.reference - q;
    let mut next = *state;
    if gains.enabled.i {
        next.integral = (state.integral + e * dt).clamp(-gains.integrator_limit, gains.integrator_limit);
    }
    next.last_update = state.last_update + dt;
    let mut tau = 0.0;
    if gains.enabled.p {
        tau += gains.kp * e;
    }
    if gains.enabled.i {
        tau += gains.ki * next.integral;
    }
    if gains.enabled.d {
        tau -= gains.kd * u;
    }
    (tau, next)
}

/// Current values of the controlled coordinates.
pub fn capture_references(q: &[f64], dofs: &[usize]) -> Vec<f64> {
    dofs.iter().map(|&i| q[i]).collect()
}

/// Gains for every coordinate of one joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointControl {
    pub joint: String,
    pub gains: Vec<PidGains>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlChannel {
    pub name: String,
    pub dof: usize,
    pub gains: PidGains,
}

/// Independent PID loops over a subset of generalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBank {
    ndof: usize,
    channels: Vec<ControlChannel>,
    states: Vec<PidState>,
    captured: bool,
}

impl ControllerBank {
    pub fn new(tree: &KinematicTree, controls: &[JointControl]) -> Result<Self> {
        let names = tree.coordinate_names();
        let mut channels = Vec::new();
        for jc in controls {
            let body = tree
                .joint_body(&jc.joint)
                .ok_or_else(|| Error::Config(format!("controller on unknown joint `{}`", jc.joint)))?;
            let dofs = tree.bodies()[body].dofs.clone();
            if jc.gains.len() != dofs.len() {
                return Err(Error::Config(format!(
                    "controller on `{}` needs {} gain sets, got {}",
                    jc.joint,
                    dofs.len(),
                    jc.gains.len()
                )));
            }
            for (dof, gains) in dofs.zip(&jc.gains) {
                gains.validate()?;
                if channels.iter().any(|c: &ControlChannel| c.dof == dof) {
                    return Err(Error::Config(format!("coordinate `{}` controlled twice", names[dof])));
                }
                channels.push(ControlChannel { name: names[dof].clone(), dof, gains: *gains });
            }
        }
        let states = vec![PidState::new(0.0); channels.len()];
        Ok(Self { ndof: tree.dof(), channels, states, captured: false })
    }

    pub fn channels(&self) -> &[ControlChannel] {
        &self.channels
    }

    pub fn dofs(&self) -> Vec<usize> {
        self.channels.iter().map(|c| c.dof).collect()
    }

    pub fn states(&self) -> &[PidState] {
        &self.states
    }

    pub fn is_captured(&self) -> bool {
        self.captured
    }

    /// Sets references to the current coordinates, keeping integrals.
    pub fn capture(&mut self, q: &[f64]) {
        let refs = capture_references(q, &self.dofs());
        for (s, r) in self.states.iter_mut().zip(refs) {
            s.reference = r;
        }
        self.captured = true;
    }

    /// Restores references and integrals, e.g. from a restart snapshot.
    pub fn restore(&mut self, states: &[PidState]) -> Result<()> {
        if states.len() != self.states.len() {
            return Err(Error::DimensionMismatch { expected: self.states.len(), got: states.len() });
        }
        self.states.copy_from_slice(states);
        self.captured = true;
        Ok(())
    }

    /// Overrides which terms run on every channel.
    pub fn set_terms(&mut self, terms: PidTerms) {
        for c in &mut self.channels {
            c.gains.enabled = terms;
        }
    }

    /// Drops accumulated integrals.
    pub fn reset_integrals(&mut self) {
        self.states.iter_mut().for_each(|s| s.integral = 0.0);
    }

    /// Advances every loop by `dt` and returns the generalized torque vector.
    pub fn update(&mut self, q: &[f64], u: &[f64], dt: f64) -> Result<DVector<f64>> {
        let mut tau = DVector::zeros(self.ndof);
        self.update_into(q, u, dt, tau.as_mut_slice())?;
        Ok(tau)
    }

    pub fn update_into(&mut self, q: &[f64], u: &[f64], dt: f64, tau: &mut [f64]) -> Result<()> {
        if !self.captured {
            return Err(Error::ReferencesNotCaptured);
        }
        for (c, s) in self.channels.iter().zip(self.states.iter_mut()) {
            let (t, next) = pid_torque(&c.gains, s, q[c.dof], u[c.dof], dt);
            tau[c.dof] = t;
            *s = next;
        }
        Ok(())
    }
}

/// `controller_bank_update`: one update of all loops.
pub fn controller_bank_update(bank: &mut ControllerBank, q: &[f64], u: &[f64], dt: f64) -> Result<DVector<f64>> {
    bank.update(q, u, dt)
}
