//! Fixed-step closed loop for one scenario and the delay x B_e grid runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::BaselineState;
use crate::channel::{BackwardPayload, DelayChannel, DelayProfile, ForwardPayload};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport};
use crate::observer::{Accounting, ObserverState};
use crate::plant::{AperiodicParams, EnvironmentModel, ExogenousForce, ForceKind, OperatorModel};
use crate::tbps2::{
    self, FollowerBranch, FollowerPcOutput, FollowerPcParams, LeaderPcOutput, Tbps2State,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilizerKind {
    None,
    BaselineTdpa,
    Tbps2,
}

impl StabilizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilizerKind::None => "none",
            StabilizerKind::BaselineTdpa => "baseline_tdpa",
            StabilizerKind::Tbps2 => "tbps2",
        }
    }
}

impl std::fmt::Display for StabilizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StabilizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StabilizerKind::None),
            "baseline_tdpa" => Ok(StabilizerKind::BaselineTdpa),
            "tbps2" => Ok(StabilizerKind::Tbps2),
            other => Err(Error::config(format!("unknown stabilizer {other:?}"))),
        }
    }
}

/// Every parameter of one trial. Field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dt: f64,
    pub duration: f64,
    /// Base one-way delay D, s.
    pub delay: f64,
    /// Relative cosine modulation of the delay; 0 gives a constant delay.
    pub delay_modulation: f64,
    /// Base delay of the follower-to-leader channel; defaults to `delay`.
    pub backward_delay: Option<f64>,
    pub operator_mass: f64,
    pub operator_damping: f64,
    pub operator_stiffness: f64,
    pub be: f64,
    pub ke: f64,
    pub force: ForceKind,
    /// Defaults to 100 N for the sinusoid mix and impulse, 50 N otherwise.
    pub force_amplitude: Option<f64>,
    pub min_hold: f64,
    pub max_hold: f64,
    pub min_freq: f64,
    pub max_freq: f64,
    pub stabilizer: StabilizerKind,
    pub eop_lower_bound: f64,
    pub epsilon_v: f64,
    pub epsilon_f: f64,
    pub v_cap: Option<f64>,
    pub drift_compensation: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let ap = AperiodicParams::default();
        ScenarioConfig {
            dt: 0.001,
            duration: 50.0,
            delay: 0.0,
            delay_modulation: 0.1,
            backward_delay: None,
            operator_mass: 0.5,
            operator_damping: 50.0,
            operator_stiffness: 10.0,
            be: 12.0,
            ke: 80.0,
            force: ForceKind::SinusoidMix,
            force_amplitude: None,
            min_hold: ap.min_hold,
            max_hold: ap.max_hold,
            min_freq: ap.min_freq,
            max_freq: ap.max_freq,
            stabilizer: StabilizerKind::Tbps2,
            eop_lower_bound: 25.0,
            epsilon_v: tbps2::EPSILON_V,
            epsilon_f: tbps2::EPSILON_F,
            v_cap: None,
            drift_compensation: true,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::config(format!(
                "duration must be >= 0 (got {})",
                self.duration
            )));
        }
        let n = (self.duration / self.dt).round();
        if (n * self.dt - self.duration).abs() > 1e-9 * self.duration.max(1.0) {
            return Err(Error::config(format!(
                "duration {} is not a whole number of {} s steps",
                self.duration, self.dt
            )));
        }
        Ok(n as usize)
    }

    pub fn amplitude(&self) -> f64 {
        self.force_amplitude.unwrap_or(match self.force {
            ForceKind::SinusoidMix | ForceKind::Impulse => 100.0,
            _ => 50.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        if !(self.eop_lower_bound >= 0.0) {
            return Err(Error::config("eop_lower_bound must be >= 0"));
        }
        if !(self.epsilon_v >= 0.0) || !(self.epsilon_f >= 0.0) {
            return Err(Error::config("activation guards must be >= 0"));
        }
        if let Some(cap) = self.v_cap {
            if !(cap > 0.0) {
                return Err(Error::config(format!("v_cap must be > 0 (got {cap})")));
            }
        }
        if let Some(d) = self.backward_delay {
            DelayProfile::new(d, self.delay_modulation)?;
        }
        DelayProfile::new(self.delay, self.delay_modulation)?;
        OperatorModel::new(
            self.operator_mass,
            self.operator_damping,
            self.operator_stiffness,
        )?;
        EnvironmentModel::new(self.be, self.ke)?;
        self.exogenous()?;
        Ok(())
    }

    fn aperiodic(&self) -> AperiodicParams {
        AperiodicParams {
            min_hold: self.min_hold,
            max_hold: self.max_hold,
            min_freq: self.min_freq,
            max_freq: self.max_freq,
        }
    }

    fn exogenous(&self) -> Result<ExogenousForce> {
        ExogenousForce::new(
            self.force,
            self.amplitude(),
            self.aperiodic(),
            self.seed,
            self.duration,
            self.dt,
        )
    }
}

/// One logged sample; field order is the trace CSV column order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub f_p: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub x2: f64,
    pub x3: f64,
    pub dx: f64,
    pub alpha: f64,
    pub beta: f64,
    pub v_fc: f64,
    pub f_lc: f64,
    pub e_obs_l: f64,
    pub e_obs_f: f64,
    pub hand_margin: f64,
    pub net_energy: f64,
}

/// Per-step observer quantities kept alongside the trace but not serialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// `hand_margin(delayed) + E_obs^L + E_obs^F`.
    pub combined: f64,
    pub leader_theoretical: f64,
    pub follower_theoretical: f64,
    /// Follower energy including the usable hand margin, after the PC.
    pub follower_eta: f64,
    pub follower_branch: FollowerBranch,
}

#[derive(Debug, Clone, Default)]
pub struct TraceRecord {
    pub rows: Vec<TraceRow>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl TraceRecord {
    pub fn column(&self, pick: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }

    pub fn min_combined(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.combined)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn metrics(&self) -> Result<MetricReport> {
        let v2 = self.column(|r| r.v2);
        let v3 = self.column(|r| r.v3);
        let f1 = self.column(|r| r.f1);
        let f0 = self.column(|r| r.f0);
        let x2 = self.column(|r| r.x2);
        let x3 = self.column(|r| r.x3);
        Ok(MetricReport {
            spearman_v2_v3: metrics::spearman(&v2, &v3)?,
            spearman_f1_f0: metrics::spearman(&f1, &f0)?,
            pearson_effort_leader: metrics::pearson(&f1, &f0)?,
            pearson_effort_follower: metrics::pearson(&v2, &v3)?,
            mean_abs_drift: metrics::mean_abs_drift(&x2, &x3)?,
            rmse_velocity: metrics::rmse(&self.column(|r| r.v0), &v3)?,
        })
    }
}

enum Controller {
    None,
    Baseline(BaselineState),
    Tbps2(Tbps2State),
}

impl Controller {
    fn leader(&mut self, eta: f64, v0: f64, dt: f64, f1: f64) -> (LeaderPcOutput, f64) {
        match self {
            Controller::None => (tbps2::leader_pc_step(0.0, v0, dt, f1, 0.0), 0.0),
            Controller::Baseline(s) => {
                let out = s.leader_step(eta, v0, dt, f1);
                (out, s.leader.e_lc)
            }
            Controller::Tbps2(s) => {
                let out = s.leader.step(eta, v0, dt, f1);
                (out, s.leader.e_lc)
            }
        }
    }

    fn follower(
        &mut self,
        eta: f64,
        drift: f64,
        f: f64,
        v2: f64,
        dt: f64,
    ) -> (FollowerPcOutput, f64) {
        match self {
            Controller::None => {
                let off = FollowerPcParams {
                    compensation: false,
                    ..FollowerPcParams::default()
                };
                (tbps2::follower_pc_step(0.0, 0.0, f, v2, dt, off), 0.0)
            }
            Controller::Baseline(s) => {
                let out = s.follower_step(eta, f, v2, dt);
                (out, s.follower.e_fc)
            }
            Controller::Tbps2(s) => {
                let out = s.follower.step(eta, drift, f, v2, dt);
                (out, s.follower.e_fc)
            }
        }
    }
}

/// Run one trial.
///
/// Per step: the leader reads the newest backward packet, its PC decides on
/// the last booked port pair, the hand integrates `f_p* - f0`, the new
/// velocity goes out with the T1 and hand-margin snapshots; the follower
/// reads the newest forward packet, books T2 against the last environment
/// force, applies its PC, advances the environment and sends `f3` back with
/// its return credit.
pub fn run_scenario(config: &ScenarioConfig) -> Result<TraceRecord> {
    config.validate()?;
    let n = config.steps()?;
    let dt = config.dt;
    let fwd = DelayProfile::new(config.delay, config.delay_modulation)?;
    let bwd = DelayProfile::new(
        config.backward_delay.unwrap_or(config.delay),
        config.delay_modulation,
    )?;
    let mut forward = DelayChannel::<ForwardPayload>::new(fwd);
    let mut backward = DelayChannel::<BackwardPayload>::new(bwd);
    let mut op = OperatorModel::new(
        config.operator_mass,
        config.operator_damping,
        config.operator_stiffness,
    )?;
    let mut env = EnvironmentModel::new(config.be, config.ke)?;
    let force = config.exogenous()?;

    let follower_params = FollowerPcParams {
        epsilon_f: config.epsilon_f,
        compensation: config.drift_compensation,
        v_cap: config.v_cap,
    };
    let (mut ctrl, accounting, xi) = match config.stabilizer {
        StabilizerKind::None => (Controller::None, Accounting::Classic, 0.0),
        StabilizerKind::BaselineTdpa => (
            Controller::Baseline(BaselineState::new(config.epsilon_v, config.epsilon_f)),
            Accounting::Classic,
            0.0,
        ),
        StabilizerKind::Tbps2 => (
            Controller::Tbps2(Tbps2State::new(config.epsilon_v, follower_params)),
            Accounting::HandMargin,
            config.eop_lower_bound,
        ),
    };
    let mut obs = ObserverState::new(dt, dt, xi, accounting);

    let mut rows = Vec::with_capacity(n);
    let mut diagnostics = Vec::with_capacity(n);
    let mut v0_prev = 0.0;
    let mut f3_prev = 0.0;
    let mut x2 = 0.0;

    for k in 0..n {
        let t = k as f64 * dt;
        let f_p = force.at(t);

        // leader side
        let back = backward.receive_latest(t).payload;
        let f1 = back.force;
        obs.credit_delayed = back.credit;
        let (lpc, e_lc) = ctrl.leader(obs.leader_observed(), v0_prev, dt, f1);
        obs.e_lc = e_lc;
        let e_obs_l = obs.leader_observed();
        let leader_theoretical = obs.leader_theoretical();
        let f0 = lpc.f0;

        let v0 = op.step(f_p - f0, dt);
        obs.hand_margin_step(v0);
        obs.t1.update(f1, v0, dt);
        forward.transmit(
            ForwardPayload {
                velocity: v0,
                energy_in_t1: obs.t1.energy_in,
                hand_margin: obs.hand_margin_local,
            },
            t,
        )?;

        // follower side
        let fwd_pkt = forward.receive_latest(t).payload;
        let v2 = fwd_pkt.velocity;
        obs.t1_in_delayed = fwd_pkt.energy_in_t1;
        obs.hand_margin_delayed = fwd_pkt.hand_margin;
        let f2 = f3_prev;
        obs.t2.update(f2, v2, dt);

        let x3_before = env.position();
        let drift = tbps2::compute_drift(x2, x3_before);
        let (fpc, e_fc) = ctrl.follower(obs.follower_eta(), drift, f2, v2, dt);
        obs.e_fc = e_fc;
        let v3 = fpc.v3;
        x2 += v2 * dt;
        let f3 = env.force(v3, dt);
        let x3 = env.position();
        obs.t3.update(f3, v3, dt);
        backward.transmit(
            BackwardPayload {
                force: f3,
                credit: obs.current_credit(),
            },
            t,
        )?;

        let e_obs_f = obs.follower_observed();
        let hand = obs.usable_margin();
        rows.push(TraceRow {
            t,
            f_p,
            f0,
            f1,
            f2,
            f3,
            v0,
            v1: v0,
            v2,
            v3,
            x2,
            x3,
            dx: x2 - x3,
            alpha: lpc.alpha,
            beta: fpc.beta,
            v_fc: fpc.v_fc,
            f_lc: lpc.f_lc,
            e_obs_l,
            e_obs_f,
            hand_margin: hand,
            net_energy: obs.net_theoretical(),
        });
        diagnostics.push(StepDiagnostics {
            combined: hand + e_obs_l + e_obs_f,
            leader_theoretical,
            follower_theoretical: obs.follower_theoretical(),
            follower_eta: obs.follower_eta(),
            follower_branch: fpc.branch,
        });

        v0_prev = v0;
        f3_prev = f3;
    }
    Ok(TraceRecord { rows, diagnostics })
}

/// Sweep of base delay x environment damping around a base scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub delay_min: f64,
    pub delay_max: f64,
    pub n_delay: usize,
    pub be_min: f64,
    pub be_max: f64,
    pub n_be: usize,
    pub base: ScenarioConfig,
}

impl GridConfig {
    /// 16 x 16 resistive grid: delay 0 to 0.3 s, B_e 0 to 90 N s/m.
    pub fn resistive(base: ScenarioConfig) -> Self {
        GridConfig {
            delay_min: 0.0,
            delay_max: 0.3,
            n_delay: 16,
            be_min: 0.0,
            be_max: 90.0,
            n_be: 16,
            base,
        }
    }

    /// 16 x 16 assistive grid: delay 0 to 0.3 s, B_e -90 to 0 N s/m.
    pub fn assistive(base: ScenarioConfig) -> Self {
        GridConfig {
            be_min: -90.0,
            be_max: 0.0,
            ..Self::resistive(base)
        }
    }

    pub fn delays(&self) -> Vec<f64> {
        linspace(self.delay_min, self.delay_max, self.n_delay)
    }

    pub fn dampings(&self) -> Vec<f64> {
        linspace(self.be_min, self.be_max, self.n_be)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_delay == 0 || self.n_be == 0 {
            return Err(Error::config(
                "grid needs at least one delay and one B_e value",
            ));
        }
        if !(self.delay_max >= self.delay_min) || !(self.be_max >= self.be_min) {
            return Err(Error::config("grid ranges must satisfy min <= max"));
        }
        for s in self.trials() {
            s.config.validate()?;
        }
        Ok(())
    }

    pub fn trials(&self) -> Vec<Trial> {
        let mut out = Vec::with_capacity(self.n_delay * self.n_be);
        for (i, &delay) in self.delays().iter().enumerate() {
            for (j, &be) in self.dampings().iter().enumerate() {
                let mut config = self.base.clone();
                config.delay = delay;
                config.be = be;
                out.push(Trial {
                    delay_index: i,
                    be_index: j,
                    config,
                });
            }
        }
        out
    }
}

/// Inclusive evenly spaced values; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub delay_index: usize,
    pub be_index: usize,
    pub config: ScenarioConfig,
}

/// One grid summary row; field order is the summary CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub delay_index: usize,
    pub be_index: usize,
    pub delay: f64,
    pub be: f64,
    pub stabilizer: StabilizerKind,
    pub seed: u64,
    pub spearman_v2_v3: Option<f64>,
    pub spearman_f1_f0: Option<f64>,
    pub pearson_effort_leader: Option<f64>,
    pub pearson_effort_follower: Option<f64>,
    pub mean_abs_drift: f64,
    pub rmse_velocity: f64,
    pub min_combined_energy: f64,
}

pub fn summarize(trial: &Trial, trace: &TraceRecord) -> Result<SummaryRow> {
    let m = trace.metrics()?;
    Ok(SummaryRow {
        delay_index: trial.delay_index,
        be_index: trial.be_index,
        delay: trial.config.delay,
        be: trial.config.be,
        stabilizer: trial.config.stabilizer,
        seed: trial.config.seed,
        spearman_v2_v3: m.spearman_v2_v3,
        spearman_f1_f0: m.spearman_f1_f0,
        pearson_effort_leader: m.pearson_effort_leader,
        pearson_effort_follower: m.pearson_effort_follower,
        mean_abs_drift: m.mean_abs_drift,
        rmse_velocity: m.rmse_velocity,
        min_combined_energy: trace.min_combined(),
    })
}

/// Run every trial, handing each finished trace to `sink` before it is
/// dropped. Rows come back in (delay index, B_e index) order whatever the
/// scheduling; `threads = Some(1)` runs sequentially.
pub fn run_grid_with<F>(
    config: &GridConfig,
    threads: Option<usize>,
    sink: F,
) -> Result<Vec<SummaryRow>>
where
    F: Fn(&Trial, &TraceRecord) -> Result<()> + Sync,
{
    config.validate()?;
    let trials = config.trials();
    let job = |trial: &Trial| -> Result<SummaryRow> {
        let trace = run_scenario(&trial.config)?;
        sink(trial, &trace)?;
        summarize(trial, &trace)
    };
    match threads {
        Some(1) => trials.iter().map(job).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(|| trials.par_iter().map(job).collect())
        }
    }
}

pub fn run_grid(config: &GridConfig, threads: Option<usize>) -> Result<Vec<SummaryRow>> {
    run_grid_with(config, threads, |_, _| Ok(()))
}
