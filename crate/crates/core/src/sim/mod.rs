//! Fixed-step time integration with prescribed seat motion, settling,
//! restart snapshots and trajectory logging.

pub mod ablation;
pub mod excitation;
pub mod log;
pub mod restart;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use ablation::{drift_report, DriftReport};
pub use excitation::{generate_excitation, ExcitationConfig, ExcitationSignal};
pub use log::{ChannelConfig, TrajectoryLog};
pub use restart::{load_restart, save_restart, RestartSnapshot, SNAPSHOT_VERSION};

use crate::control::{ControllerBank, PidTerms};
use crate::error::{Error, Result};
use crate::forces::{assemble_with_kinematics, ContactMemory, ForceOutput, ForceSet, PlatformState};
use crate::model::Model;
use crate::rigidbody::dynamics::aba_with_armature;
use crate::rigidbody::kinematics::{body_accelerations, point_acceleration};
use crate::rigidbody::{SystemState, TreeKinematics};
use crate::spatial::cardan_xyz_angles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Velocity first, then position with the new velocity. Linear joint
    /// damping (restraints and derivative gains) is taken at the new velocity.
    SemiImplicitEuler,
    /// Classical fourth order; controller torques held over the step.
    Rk4,
}

/// Controller variants compared in the posture-drift study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    FullPid,
    /// Integral terms dropped from the end of settling on.
    NoIntegrator,
    /// No controllers; restraints of controlled joints stiffened to
    /// `factor·(k + kp)` and `√factor·(c + kd)`, which keeps each joint's
    /// damping ratio, for the whole run.
    HighStiffnessPassive,
}

impl AblationMode {
    pub const ALL: [AblationMode; 3] =
        [AblationMode::FullPid, AblationMode::NoIntegrator, AblationMode::HighStiffnessPassive];

    pub fn label(&self) -> &'static str {
        match self {
            AblationMode::FullPid => "full_pid",
            AblationMode::NoIntegrator => "no_integrator",
            AblationMode::HighStiffnessPassive => "high_stiffness_passive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label() == s)
    }

    fn settle_variant(&self) -> &'static str {
        match self {
            AblationMode::HighStiffnessPassive => "passive",
            _ => "pid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Integration step, s.
    pub step: f64,
    /// Log sample rate, Hz; must divide `1/step`.
    pub output_rate: f64,
    pub integrator: Integrator,
    pub mode: AblationMode,
    /// Multiplier used by [`AblationMode::HighStiffnessPassive`].
    pub stiffness_factor: f64,
    pub channels: ChannelConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            output_rate: 200.0,
            integrator: Integrator::SemiImplicitEuler,
            mode: AblationMode::FullPid,
            stiffness_factor: 20.0,
            channels: ChannelConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn decimation(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step size {} must be positive", self.step)));
        }
        let ratio = 1.0 / (self.step * self.output_rate);
        let d = ratio.round();
        if !(d >= 1.0 && (ratio - d).abs() < 1e-9 * d) {
            return Err(Error::Config(format!(
                "output rate {} Hz must divide the integration rate {} Hz",
                self.output_rate,
                1.0 / self.step
            )));
        }
        Ok(d as usize)
    }
}

/// Which quantities a log row holds; built once per run.
#[derive(Debug, Clone)]
pub struct Recorder {
    seat: bool,
    segments: Vec<usize>,
    joints: bool,
    contacts: usize,
    controls: Vec<usize>,
    names: Vec<String>,
}

pub const SEGMENT_QUANTITIES: [&str; 15] = [
    "pos_x", "pos_y", "pos_z", "vel_x", "vel_y", "vel_z", "acc_x", "acc_y", "acc_z", "omega_x", "omega_y", "omega_z",
    "roll", "pitch", "yaw",
];

impl Recorder {
    pub fn new(model: &Model, cfg: &ChannelConfig) -> Result<Self> {
        let tree = &model.tree;
        let segments: Vec<usize> = if cfg.segments.is_empty() {
            model.outputs.iter().filter_map(|o| tree.body_index(&o.segment)).collect()
        } else if cfg.segments.iter().any(|s| s == "*") {
            (0..tree.len()).collect()
        } else {
            cfg.segments
                .iter()
                .map(|s| tree.body_index(s).ok_or_else(|| Error::Config(format!("unknown segment `{s}` in channels"))))
                .collect::<Result<_>>()?
        };
        let mut names = Vec::new();
        if cfg.seat {
            for q in ["acc", "vel", "disp"] {
                for a in ["x", "y", "z"] {
                    names.push(format!("seat.{q}_{a}"));
                }
            }
        }
        for &i in &segments {
            for q in SEGMENT_QUANTITIES {
                names.push(format!("{}.{q}", tree.bodies()[i].segment.name));
            }
        }
        let coords = tree.coordinate_names();
        if cfg.joints {
            names.extend(coords.iter().map(|c| format!("q.{c}")));
        }
        let contacts = if cfg.contacts { model.forces.contact_count() } else { 0 };
        if cfg.contacts {
            names.extend(model.forces.contact_names().map(|c| format!("contact.{c}.normal")));
        }
        let controls: Vec<usize> = if cfg.controls { model.controller_bank()?.dofs() } else { Vec::new() };
        names.extend(controls.iter().map(|&d| format!("control.{}", coords[d])));
        Ok(Self { seat: cfg.seat, segments, joints: cfg.joints, contacts, controls, names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn record(&self, model: &Model, ctx: &StepContext, row: &mut Vec<f64>) {
        row.clear();
        if self.seat {
            let p = &ctx.platform;
            row.extend(p.acceleration.iter().chain(p.velocity.iter()).chain(p.displacement.iter()));
        }
        if !self.segments.is_empty() {
            let acc = body_accelerations(&model.tree, ctx.kin, ctx.udot.as_slice());
            for &i in &self.segments {
                let bk = &ctx.kin.bodies[i];
                let com = &model.tree.bodies()[i].segment.com_offset;
                let pos = bk.world.transform_point(com);
                let vel = bk.point_velocity(com);
                let a = point_acceleration(bk, &acc[i], com);
                let w = bk.angular_velocity_world();
                let att = cardan_xyz_angles(&bk.world.rot);
                row.extend(pos.iter().chain(vel.iter()).chain(a.iter()).chain(w.iter()).chain(att.iter()));
            }
        }
        if self.joints {
            row.extend_from_slice(ctx.q);
        }
        for c in ctx.forces.contacts.iter().take(self.contacts) {
            row.push(c.force.normal.norm());
        }
        row.extend(self.controls.iter().map(|&d| ctx.tau_c[d]));
    }
}

struct StepContext<'a> {
    q: &'a [f64],
    kin: &'a TreeKinematics,
    udot: &'a DVector<f64>,
    forces: &'a ForceOutput,
    tau_c: &'a DVector<f64>,
    platform: PlatformState,
}

/// One simulation instance: model view, controller bank and state.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m Model,
    forces: ForceSet,
    bank: ControllerBank,
    control_active: bool,
    h: f64,
    integrator: Integrator,
    mode: AblationMode,
    pub state: SystemState,
    memory: ContactMemory,
    tau_c: DVector<f64>,
    /// `h·c` per coordinate for the implicit damping of the default step.
    armature: DVector<f64>,
}

impl<'m> Simulator<'m> {
    /// Starts from the model's initial posture at rest, controller references
    /// set to that posture.
    pub fn new(model: &'m Model, cfg: &SimConfig) -> Result<Self> {
        let mut bank = model.controller_bank()?;
        let mut forces = model.forces.clone();
        let mut control_active = !bank.channels().is_empty();
        if cfg.mode == AblationMode::HighStiffnessPassive {
            let f = cfg.stiffness_factor;
            if !(f > 0.0) {
                return Err(Error::Config(format!("stiffness factor {f} must be positive")));
            }
            let gains = model.controls.clone();
            forces = forces.map_restraints(|joint, i, k, c| {
                match gains.iter().find(|g| g.joint == joint) {
                    Some(g) => (f * (k + g.gains[i].kp), f.sqrt() * (c + g.gains[i].kd)),
                    None => (k, c),
                }
            });
            control_active = false;
        }
        let mut state = SystemState::zeros(&model.tree);
        state.q.copy_from(&model.initial_q);
        bank.capture(state.q.as_slice());
        Ok(Self {
            model,
            forces,
            memory: ContactMemory::new(model.forces.contact_count()),
            bank,
            control_active,
            h: cfg.step,
            integrator: cfg.integrator,
            mode: cfg.mode,
            state,
            tau_c: DVector::zeros(model.dof()),
            armature: DVector::zeros(model.dof()),
        }
        .with_armature())
    }

    /// Joint restraint damping and active derivative gains, scaled by `h`.
    fn with_armature(mut self) -> Self {
        let mut c = self.forces.joint_damping(&self.model.tree);
        if self.control_active {
            for ch in self.bank.channels() {
                if ch.gains.enabled.d {
                    c[ch.dof] += ch.gains.kd;
                }
            }
        }
        self.armature = match self.integrator {
            Integrator::SemiImplicitEuler => c * self.h,
            Integrator::Rk4 => DVector::zeros(c.len()),
        };
        self
    }

    /// Resumes from a settled snapshot; the end-of-settling mode switch is
    /// applied as it would have been in an uninterrupted run.
    pub fn from_snapshot(model: &'m Model, cfg: &SimConfig, snap: &RestartSnapshot) -> Result<Self> {
        snap.check_model(model)?;
        if snap.settle_variant != cfg.mode.settle_variant() {
            return Err(Error::Config(format!(
                "snapshot was settled as `{}`, mode `{}` needs `{}`",
                snap.settle_variant,
                cfg.mode.label(),
                cfg.mode.settle_variant()
            )));
        }
        if snap.step_size.to_bits() != cfg.step.to_bits() {
            return Err(Error::Config(format!("snapshot step {} differs from configured step {}", snap.step_size, cfg.step)));
        }
        let mut sim = Self::new(model, cfg)?;
        sim.state = snap.state.clone();
        sim.bank.restore(&snap.controllers)?;
        sim.memory = snap.contact_memory.clone();
        sim.apply_mode();
        Ok(sim)
    }

    pub fn snapshot(&self) -> RestartSnapshot {
        RestartSnapshot {
            version: SNAPSHOT_VERSION,
            model_hash: self.model.hash().to_string(),
            settle_variant: self.mode.settle_variant().to_string(),
            step_size: self.h,
            state: self.state.clone(),
            controllers: self.bank.states().to_vec(),
            contact_memory: self.memory.clone(),
        }
    }

    /// Captures references at the current posture, keeping integrals.
    pub fn capture_references(&mut self) {
        self.bank.capture(self.state.q.as_slice());
    }

    fn apply_mode(&mut self) {
        if self.mode == AblationMode::NoIntegrator {
            self.bank.set_terms(PidTerms { p: true, i: false, d: true });
            self.bank.reset_integrals();
        }
    }

    pub fn controller_bank(&self) -> &ControllerBank {
        &self.bank
    }

    fn accelerations(
        &mut self,
        q: &[f64],
        u: &[f64],
        platform: &PlatformState,
    ) -> Result<(DVector<f64>, TreeKinematics, ForceOutput)> {
        let tree = &self.model.tree;
        let kin = TreeKinematics::compute(tree, q, u)?;
        let out = assemble_with_kinematics(tree, &kin, q, u, &self.forces, platform, &mut self.memory);
        let tau = &out.generalized + &self.tau_c;
        // segments are validated at build time, so a singular articulated
        // inertia here means the state has blown up
        let udot = aba_with_armature(tree, &kin, tau.as_slice(), None, &[], Some(self.armature.as_slice())).map_err(|e| match e {
            Error::SingularInertia(joint) => Error::Diverged { time: self.state.t, channel: format!("joint {joint}") },
            e => e,
        })?;
        Ok((udot, kin, out))
    }

    fn platform(exc: Option<&ExcitationSignal>, n: usize, frac: f64, axes: [bool; 3]) -> PlatformState {
        match exc {
            None => PlatformState::default(),
            Some(e) if frac == 0.0 => e.platform(n, axes),
            Some(e) => e.platform_between(n, frac, axes),
        }
    }

    /// Advances one step of size `h`. When `record` is given, the row for the
    /// state at the start of the step is written into it.
    pub fn step(&mut self, exc: Option<&ExcitationSignal>, record: Option<(&Recorder, &mut Vec<f64>)>) -> Result<()> {
        let n = self.state.step as usize;
        let axes = self.model.motion;
        let h = self.h;
        let q0 = self.state.q.clone();
        let u0 = self.state.u.clone();
        if self.control_active {
            self.bank.update_into(q0.as_slice(), u0.as_slice(), h, self.tau_c.as_mut_slice())?;
        }
        let p0 = Self::platform(exc, n, 0.0, axes);
        let (a1, kin, out) = self.accelerations(q0.as_slice(), u0.as_slice(), &p0)?;
        if let Some((rec, row)) = record {
            let ctx = StepContext { q: q0.as_slice(), kin: &kin, udot: &a1, forces: &out, tau_c: &self.tau_c, platform: p0 };
            rec.record(self.model, &ctx, row);
        }
        match self.integrator {
            Integrator::SemiImplicitEuler => {
                self.state.u += h * &a1;
                self.state.q += h * &self.state.u;
            }
            Integrator::Rk4 => {
                let ph = Self::platform(exc, n, 0.5, axes);
                let p1 = Self::platform(exc, n + 1, 0.0, axes);
                let (q2, u2) = (&q0 + 0.5 * h * &u0, &u0 + 0.5 * h * &a1);
                let (a2, _, _) = self.accelerations(q2.as_slice(), u2.as_slice(), &ph)?;
                let (q3, u3) = (&q0 + 0.5 * h * &u2, &u0 + 0.5 * h * &a2);
                let (a3, _, _) = self.accelerations(q3.as_slice(), u3.as_slice(), &ph)?;
                let (q4, u4) = (&q0 + h * &u3, &u0 + h * &a3);
                let (a4, _, _) = self.accelerations(q4.as_slice(), u4.as_slice(), &p1)?;
                self.state.q = &q0 + (h / 6.0) * (&u0 + 2.0 * &u2 + 2.0 * &u3 + &u4);
                self.state.u = &u0 + (h / 6.0) * (&a1 + 2.0 * &a2 + 2.0 * &a3 + &a4);
            }
        }
        self.state.step += 1;
        self.state.t = self.state.step as f64 * h;
        self.check_finite()?;
        self.model.tree.check_gimbal(self.state.q.as_slice())
    }

    fn check_finite(&self) -> Result<()> {
        let bad = |v: &DVector<f64>| v.iter().position(|x| !x.is_finite());
        let which = bad(&self.state.q).map(|i| ("q", i)).or_else(|| bad(&self.state.u).map(|i| ("u", i)));
        match which {
            None => Ok(()),
            Some((kind, i)) => Err(Error::Diverged {
                time: self.state.t,
                channel: format!("{kind}.{}", self.model.tree.coordinate_names()[i]),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    /// Settled state, present unless the run itself started from a snapshot.
    pub snapshot: Option<RestartSnapshot>,
    pub final_state: SystemState,
    pub wall_time: f64,
    pub simulated_time: f64,
}

impl RunOutput {
    /// Simulated seconds per wall-clock second.
    pub fn real_time_factor(&self) -> f64 {
        self.simulated_time / self.wall_time.max(1e-12)
    }
}

/// Settling, reference capture at the end of it, then the excited phase.
///
/// With `restart`, the run resumes at the snapshot's step and the log starts
/// there; rows after that point match an uninterrupted run bit for bit.
pub fn run(
    model: &Model,
    cfg: &SimConfig,
    exc: &ExcitationSignal,
    restart: Option<&RestartSnapshot>,
) -> Result<RunOutput> {
    if (exc.sample_rate * cfg.step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidExcitation(format!(
            "excitation sampled at {} Hz but integration step is {} s",
            exc.sample_rate, cfg.step
        )));
    }
    let decim = cfg.decimation()?;
    let recorder = Recorder::new(model, &cfg.channels)?;
    let mut log = TrajectoryLog::new(recorder.names().to_vec(), 1.0 / (cfg.step * decim as f64));
    let total = exc.len() - 1;
    let settle = exc.settle_index();
    let started = Instant::now();
    let mut sim = match restart {
        Some(snap) => Simulator::from_snapshot(model, cfg, snap)?,
        None => Simulator::new(model, cfg)?,
    };
    let first = sim.state.step as usize;
    let mut snapshot = None;
    let mut row = Vec::with_capacity(recorder.names().len());
    for n in first..=total {
        if n == settle && restart.is_none() {
            sim.capture_references();
            snapshot = Some(sim.snapshot());
            sim.apply_mode();
        }
        if n == total {
            // final row only; the state is not advanced past the end
            if n % decim == 0 {
                let mut probe = sim.clone();
                probe.step(Some(exc), Some((&recorder, &mut row)))?;
                log.push(n as f64 * cfg.step, &row);
            }
            break;
        }
        if n % decim == 0 {
            sim.step(Some(exc), Some((&recorder, &mut row)))?;
            log.push(n as f64 * cfg.step, &row);
        } else {
            sim.step(Some(exc), None)?;
        }
    }
    let wall_time = started.elapsed().as_secs_f64();
    Ok(RunOutput {
        log,
        snapshot,
        final_state: sim.state.clone(),
        wall_time,
        simulated_time: (total - first) as f64 * cfg.step,
    })
}
