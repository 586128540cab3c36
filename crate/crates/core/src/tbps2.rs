//! Passivity controllers: leader force damping (alpha) and follower velocity
//! modification (beta) with drift compensation.

/// Default activation guards.
pub const EPSILON_V: f64 = 1e-9;
pub const EPSILON_F: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderPcOutput {
    pub alpha: f64,
    pub f_lc: f64,
    pub f0: f64,
    /// `f_Lc * v0 * dt`, added to `E_Lc`.
    pub dissipated: f64,
}

/// Adaptive damper on the leader force. `eta` already includes `E_Lc(k-1)`.
pub fn leader_pc_step(eta: f64, v0: f64, dt: f64, f1: f64, epsilon_v: f64) -> LeaderPcOutput {
    debug_assert!(dt > 0.0);
    if eta < 0.0 && v0.abs() >= epsilon_v {
        let alpha = eta / (-dt * v0 * v0);
        let f_lc = alpha * v0;
        LeaderPcOutput {
            alpha,
            f_lc,
            f0: f1 + f_lc,
            dissipated: f_lc * v0 * dt,
        }
    } else {
        LeaderPcOutput {
            alpha: 0.0,
            f_lc: 0.0,
            f0: f1,
            dissipated: 0.0,
        }
    }
}

pub fn compute_drift(x2: f64, x3: f64) -> f64 {
    x2 - x3
}

/// Largest drift correction the budget can pay for against `|f3|`.
/// `None` when the force is too small to carry a correction this step.
pub fn max_drift(e_total: f64, f3: f64, epsilon_f: f64) -> Option<f64> {
    if f3.abs() < epsilon_f {
        None
    } else {
        Some(e_total.max(0.0) / f3.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowerBranch {
    Idle,
    Dissipation,
    Compensation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerPcOutput {
    pub beta: f64,
    pub v_fc: f64,
    pub v3: f64,
    /// `f3 * v_Fc * dt`, added to `E_Fc`.
    pub energy: f64,
    pub branch: FollowerBranch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerPcParams {
    pub epsilon_f: f64,
    pub compensation: bool,
    /// Optional bound on `|v_Fc|` in the compensation branch.
    pub v_cap: Option<f64>,
}

impl Default for FollowerPcParams {
    fn default() -> Self {
        FollowerPcParams {
            epsilon_f: EPSILON_F,
            compensation: true,
            v_cap: None,
        }
    }
}

/// Follower velocity modifier. `eta` already includes `E_Fc(k-1)` and any
/// usable hand margin; `drift` is `x2 - x3` before this step's update.
pub fn follower_pc_step(
    eta: f64,
    drift: f64,
    f3: f64,
    v2: f64,
    dt: f64,
    params: FollowerPcParams,
) -> FollowerPcOutput {
    debug_assert!(dt > 0.0);
    let idle = FollowerPcOutput {
        beta: 0.0,
        v_fc: 0.0,
        v3: v2,
        energy: 0.0,
        branch: FollowerBranch::Idle,
    };
    if f3.abs() < params.epsilon_f {
        return idle;
    }
    if eta < 0.0 {
        let beta = eta / (-dt * f3 * f3);
        let v_fc = beta * f3;
        return FollowerPcOutput {
            beta,
            v_fc,
            v3: v2 - v_fc,
            energy: f3 * v_fc * dt,
            branch: FollowerBranch::Dissipation,
        };
    }
    if !params.compensation || drift == 0.0 {
        return idle;
    }
    let Some(budget) = max_drift(eta, f3, params.epsilon_f) else {
        return idle;
    };
    let mut step = drift.abs().min(budget);
    if let Some(cap) = params.v_cap {
        step = step.min(cap * dt);
    }
    if step == 0.0 {
        return idle;
    }
    // x2 - x3 moves by v_Fc * dt, so push against the drift's sign
    let v_fc = -drift.signum() * step / dt;
    FollowerPcOutput {
        beta: v_fc / f3,
        v_fc,
        v3: v2 - v_fc,
        energy: f3 * v_fc * dt,
        branch: FollowerBranch::Compensation,
    }
}

/// Leader-side PC state shared by both stabilizers.
#[derive(Debug, Clone)]
pub struct LeaderPcState {
    pub alpha: f64,
    pub e_lc: f64,
    pub epsilon_v: f64,
}

impl LeaderPcState {
    pub fn new(epsilon_v: f64) -> Self {
        LeaderPcState {
            alpha: 0.0,
            e_lc: 0.0,
            epsilon_v,
        }
    }

    /// `eta_obs` is the observed energy, which already carries `E_Lc`.
    pub fn step(&mut self, eta_obs: f64, v0: f64, dt: f64, f1: f64) -> LeaderPcOutput {
        let out = leader_pc_step(eta_obs, v0, dt, f1, self.epsilon_v);
        self.alpha = out.alpha;
        self.e_lc += out.dissipated;
        out
    }
}

#[derive(Debug, Clone)]
pub struct FollowerPcState {
    pub beta: f64,
    pub e_fc: f64,
    pub params: FollowerPcParams,
}

impl FollowerPcState {
    pub fn new(params: FollowerPcParams) -> Self {
        FollowerPcState {
            beta: 0.0,
            e_fc: 0.0,
            params,
        }
    }

    pub fn step(&mut self, eta: f64, drift: f64, f3: f64, v2: f64, dt: f64) -> FollowerPcOutput {
        let out = follower_pc_step(eta, drift, f3, v2, dt, self.params);
        self.beta = out.beta;
        self.e_fc += out.energy;
        out
    }
}

/// Both TBPS² controllers.
#[derive(Debug, Clone)]
pub struct Tbps2State {
    pub leader: LeaderPcState,
    pub follower: FollowerPcState,
}

impl Tbps2State {
    pub fn new(epsilon_v: f64, params: FollowerPcParams) -> Self {
        Tbps2State {
            leader: LeaderPcState::new(epsilon_v),
            follower: FollowerPcState::new(params),
        }
    }
}
