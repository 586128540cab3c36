//! Offline excess-of-passivity estimation from recorded hand traces.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::plant::OperatorModel;

/// Below this `sum v^2 dt` a trace carries no usable motion.
pub const MIN_MOTION: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentTrace {
    pub dt: f64,
    pub force: Vec<f64>,
    pub velocity: Vec<f64>,
    pub direction: String,
    pub grasp: String,
}

impl IdentTrace {
    pub fn new(dt: f64, force: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config("identification trace needs dt > 0"));
        }
        if force.len() != velocity.len() {
            return Err(Error::LengthMismatch {
                left: force.len(),
                right: velocity.len(),
            });
        }
        if force.is_empty() {
            return Err(Error::config("identification trace is empty"));
        }
        Ok(IdentTrace {
            dt,
            force,
            velocity,
            direction: String::new(),
            grasp: String::new(),
        })
    }

    pub fn with_labels(mut self, direction: impl Into<String>, grasp: impl Into<String>) -> Self {
        self.direction = direction.into();
        self.grasp = grasp.into();
        self
    }
}

/// `sum f v dt / sum v^2 dt`.
pub fn estimate_eop(trace: &IdentTrace) -> Result<f64> {
    let mut fv = 0.0;
    let mut vv = 0.0;
    for (f, v) in trace.force.iter().zip(&trace.velocity) {
        fv += f * v * trace.dt;
        vv += v * v * trace.dt;
    }
    if !(vv > MIN_MOTION) {
        return Err(Error::ZeroMotion(vv));
    }
    Ok(fv / vv)
}

/// Imposed sinusoidal displacement `x = amplitude sin(2 pi f t)` and the
/// hand impedance's reaction force `m a + b v + k x` along it.
pub fn perturbation_trace(
    model: &OperatorModel,
    frequency: f64,
    amplitude: f64,
    periods: usize,
    dt: f64,
) -> Result<IdentTrace> {
    if !(frequency > 0.0) || !(dt > 0.0) {
        return Err(Error::config("perturbation needs frequency > 0 and dt > 0"));
    }
    let w = 2.0 * PI * frequency;
    let n = (periods as f64 / (frequency * dt)).round() as usize;
    let mut force = Vec::with_capacity(n);
    let mut velocity = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        let x = amplitude * (w * t).sin();
        let v = amplitude * w * (w * t).cos();
        let a = -amplitude * w * w * (w * t).sin();
        force.push(model.reaction_force(x, v, a));
        velocity.push(v);
    }
    IdentTrace::new(dt, force, velocity)
}

/// Drive the discretized hand model with a sinusoidal force and record the
/// steady-state response over whole periods, after `settle` periods.
pub fn driven_trace(
    model: &OperatorModel,
    frequency: f64,
    force_amplitude: f64,
    settle: usize,
    periods: usize,
    dt: f64,
) -> Result<IdentTrace> {
    if !(frequency > 0.0) || !(dt > 0.0) {
        return Err(Error::config("driven trace needs frequency > 0 and dt > 0"));
    }
    let mut op = OperatorModel::new(model.mass(), model.damping(), model.stiffness())?;
    let w = 2.0 * PI * frequency;
    let per_period = 1.0 / (frequency * dt);
    let skip = (settle as f64 * per_period).round() as usize;
    let n = (periods as f64 * per_period).round() as usize;
    let mut force = Vec::with_capacity(n);
    let mut velocity = Vec::with_capacity(n);
    for k in 0..skip + n {
        let f = force_amplitude * (w * k as f64 * dt).sin();
        let v = op.step(f, dt);
        if k >= skip {
            force.push(f);
            velocity.push(v);
        }
    }
    IdentTrace::new(dt, force, velocity)
}

/// Per-direction relaxed/tight-grasp estimates with linear interpolation in
/// grasp level (0 = relaxed, 1 = tight). Values come from identification runs.
#[derive(Debug, Clone, Default)]
pub struct EopTable {
    entries: BTreeMap<String, (f64, f64)>,
}

impl EopTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, direction: impl Into<String>, relaxed: f64, tight: f64) {
        self.entries.insert(direction.into(), (relaxed, tight));
    }

    pub fn lookup(&self, direction: &str, grasp: f64) -> Result<f64> {
        let &(relaxed, tight) = self
            .entries
            .get(direction)
            .ok_or_else(|| Error::config(format!("no EoP entry for direction {direction:?}")))?;
        if !(0.0..=1.0).contains(&grasp) {
            return Err(Error::config(format!("grasp level {grasp} outside [0, 1]")));
        }
        Ok(relaxed + grasp * (tight - relaxed))
    }

    /// Smallest relaxed value over all directions: the conservative scalar
    /// bound a simulation should use.
    pub fn lower_bound(&self) -> Option<f64> {
        self.entries.values().map(|e| e.0).reduce(f64::min)
    }
}
