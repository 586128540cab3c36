//! Operator, environment and exogenous-force models for the fixed-step loop.
//!
//! The operator hand is a mass-damper-spring admittance driven by the net
//! force `f_p* - f0`; the environment is a spring-damper impedance driven by
//! the follower velocity. Both LTI blocks are discretized so that their
//! discrete energy balance stays passive when the continuous block is.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hand admittance `v0 / f = s / (m s^2 + b s + k)`, trapezoidal in time.
#[derive(Debug, Clone)]
pub struct OperatorModel {
    mass: f64,
    damping: f64,
    stiffness: f64,
    position: f64,
    velocity: f64,
    last_force: f64,
    coeffs: Option<Tustin>,
}

/// Cached bilinear transition `z' = P z + q (u + u_prev)`.
#[derive(Debug, Clone, Copy)]
struct Tustin {
    dt: f64,
    p: [[f64; 2]; 2],
    q: [f64; 2],
}

impl Tustin {
    fn new(mass: f64, damping: f64, stiffness: f64, dt: f64) -> Self {
        // A = [[0, 1], [-k/m, -b/m]], B = [0, 1/m]
        let a10 = -stiffness / mass;
        let a11 = -damping / mass;
        let h = 0.5 * dt;
        // M = I - hA
        let m00 = 1.0;
        let m01 = -h;
        let m10 = -h * a10;
        let m11 = 1.0 - h * a11;
        let det = m00 * m11 - m01 * m10;
        let inv = [[m11 / det, -m01 / det], [-m10 / det, m00 / det]];
        // N = I + hA
        let n = [[1.0, h], [h * a10, 1.0 + h * a11]];
        let mut p = [[0.0; 2]; 2];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = inv[i][0] * n[0][j] + inv[i][1] * n[1][j];
            }
        }
        let b1 = 1.0 / mass;
        let q = [inv[0][1] * b1 * h, inv[1][1] * b1 * h];
        Tustin { dt, p, q }
    }
}

impl OperatorModel {
    pub fn new(mass: f64, damping: f64, stiffness: f64) -> Result<Self> {
        if !(mass > 0.0) || !(damping >= 0.0) || !(stiffness >= 0.0) {
            return Err(Error::config(format!(
                "operator model needs mass > 0, damping >= 0, stiffness >= 0 (got {mass}, {damping}, {stiffness})"
            )));
        }
        Ok(OperatorModel {
            mass,
            damping,
            stiffness,
            position: 0.0,
            velocity: 0.0,
            last_force: 0.0,
            coeffs: None,
        })
    }

    /// Hand parameters used in the simulation study: `s / (0.5 s^2 + 50 s + 10)`.
    pub fn table_default() -> Self {
        Self::new(0.5, 50.0, 10.0).expect("default parameters are valid")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// Advance one sample with `net_force = f_p* - f0` and return `v0`.
    pub fn step(&mut self, net_force: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let c = match self.coeffs {
            Some(c) if c.dt == dt => c,
            _ => {
                let c = Tustin::new(self.mass, self.damping, self.stiffness, dt);
                self.coeffs = Some(c);
                c
            }
        };
        let u = net_force + self.last_force;
        let x = c.p[0][0] * self.position + c.p[0][1] * self.velocity + c.q[0] * u;
        let v = c.p[1][0] * self.position + c.p[1][1] * self.velocity + c.q[1] * u;
        self.position = x;
        self.velocity = v;
        self.last_force = net_force;
        v
    }

    /// Set the input sample at the current instant without advancing, so a
    /// step applied exactly at t = 0 is not averaged with a zero input.
    pub fn prime_input(&mut self, net_force: f64) {
        self.last_force = net_force;
    }

    /// Reaction force of the hand impedance for an imposed motion.
    pub fn reaction_force(&self, position: f64, velocity: f64, acceleration: f64) -> f64 {
        self.mass * acceleration + self.damping * velocity + self.stiffness * position
    }
}

/// Spring-damper environment `f3 = B_e v3 + K_e x3`. Negative damping is
/// assistive (energy injecting).
#[derive(Debug, Clone)]
pub struct EnvironmentModel {
    damping: f64,
    stiffness: f64,
    position: f64,
}

impl EnvironmentModel {
    pub fn new(damping: f64, stiffness: f64) -> Result<Self> {
        if !damping.is_finite() || !(stiffness >= 0.0) || !stiffness.is_finite() {
            return Err(Error::config(format!(
                "environment needs finite damping and stiffness >= 0 (got {damping}, {stiffness})"
            )));
        }
        Ok(EnvironmentModel {
            damping,
            stiffness,
            position: 0.0,
        })
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    /// Integrate `x3 += v3 dt`, then return the force at the new position.
    ///
    /// Evaluating the spring at the updated position makes the sampled
    /// `sum f3 v3 dt` equal `K/2 x^2 + K/2 sum (dx)^2 + B sum v^2 dt`, so a
    /// passive continuous environment stays passive in discrete time.
    pub fn force(&mut self, v3: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        self.position += v3 * dt;
        self.damping * v3 + self.stiffness * self.position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    SinusoidMix,
    AperiodicSquare,
    AperiodicSinusoid,
    Impulse,
    Zero,
}

/// Shape parameters for the seeded aperiodic signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AperiodicParams {
    /// Random segment length is drawn uniformly from `[min_hold, max_hold]` s.
    pub min_hold: f64,
    pub max_hold: f64,
    /// Frequency band for the aperiodic sinusoid, Hz.
    pub min_freq: f64,
    pub max_freq: f64,
}

impl Default for AperiodicParams {
    fn default() -> Self {
        AperiodicParams {
            min_hold: 1.0,
            max_hold: 4.0,
            min_freq: 0.1,
            max_freq: 0.6,
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    SinusoidMix,
    /// Segment start times and levels, alternating sign.
    Square {
        starts: Vec<f64>,
        levels: Vec<f64>,
    },
    /// Segment start times, angular rates and start phases (continuous phase).
    Sinusoid {
        starts: Vec<f64>,
        omegas: Vec<f64>,
        phases: Vec<f64>,
    },
    Impulse {
        width: f64,
    },
    Zero,
}

/// Operator's voluntary force `f_p*`.
#[derive(Debug, Clone)]
pub struct ExogenousForce {
    kind: ForceKind,
    amplitude: f64,
    shape: Shape,
}

impl ExogenousForce {
    /// Build a generator. `horizon` bounds the pre-drawn aperiodic schedule
    /// (the last segment is held past it); `dt` sets the impulse width.
    pub fn new(
        kind: ForceKind,
        amplitude: f64,
        params: AperiodicParams,
        seed: u64,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::config("force amplitude must be finite"));
        }
        let shape = match kind {
            ForceKind::SinusoidMix => Shape::SinusoidMix,
            ForceKind::Zero => Shape::Zero,
            ForceKind::Impulse => {
                if !(dt > 0.0) {
                    return Err(Error::config("impulse needs dt > 0"));
                }
                Shape::Impulse { width: dt }
            }
            ForceKind::AperiodicSquare | ForceKind::AperiodicSinusoid => {
                if !(params.min_hold > 0.0) || params.max_hold < params.min_hold {
                    return Err(Error::config(format!(
                        "aperiodic hold range must satisfy 0 < min <= max (got {}, {})",
                        params.min_hold, params.max_hold
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut starts = Vec::new();
                let mut t = 0.0;
                while t <= horizon || starts.is_empty() {
                    starts.push(t);
                    t += draw(&mut rng, params.min_hold, params.max_hold);
                }
                if kind == ForceKind::AperiodicSquare {
                    let levels = (0..starts.len())
                        .map(|i| if i % 2 == 0 { amplitude } else { -amplitude })
                        .collect();
                    Shape::Square { starts, levels }
                } else {
                    if !(params.min_freq > 0.0) || params.max_freq < params.min_freq {
                        return Err(Error::config(format!(
                            "aperiodic frequency band must satisfy 0 < min <= max (got {}, {})",
                            params.min_freq, params.max_freq
                        )));
                    }
                    let omegas: Vec<f64> = starts
                        .iter()
                        .map(|_| {
                            2.0 * std::f64::consts::PI
                                * draw(&mut rng, params.min_freq, params.max_freq)
                        })
                        .collect();
                    let mut phases = Vec::with_capacity(starts.len());
                    let mut phase = 0.0;
                    for i in 0..starts.len() {
                        phases.push(phase);
                        if i + 1 < starts.len() {
                            phase += omegas[i] * (starts[i + 1] - starts[i]);
                        }
                    }
                    Shape::Sinusoid {
                        starts,
                        omegas,
                        phases,
                    }
                }
            }
        };
        Ok(ExogenousForce {
            kind,
            amplitude,
            shape,
        })
    }

    pub fn sinusoid_mix(amplitude: f64) -> Self {
        ExogenousForce {
            kind: ForceKind::SinusoidMix,
            amplitude,
            shape: Shape::SinusoidMix,
        }
    }

    pub fn kind(&self) -> ForceKind {
        self.kind
    }

    pub fn at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match &self.shape {
            Shape::SinusoidMix => self.amplitude * ((0.5 * t).sin() + (5.0 * t).cos()),
            Shape::Zero => 0.0,
            Shape::Impulse { width } => {
                // Half-width slack keeps `k * dt` rounding from leaking into step 1.
                if t < 0.5 * width {
                    self.amplitude
                } else {
                    0.0
                }
            }
            Shape::Square { starts, levels } => levels[segment(starts, t)],
            Shape::Sinusoid {
                starts,
                omegas,
                phases,
            } => {
                let i = segment(starts, t);
                self.amplitude * (phases[i] + omegas[i] * (t - starts[i])).sin()
            }
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn segment(starts: &[f64], t: f64) -> usize {
    starts.partition_point(|&s| s <= t).saturating_sub(1)
}
