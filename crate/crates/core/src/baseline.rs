//! Classic two-port TDPA used as the comparator: the same dampers as TBPS²
//! but dissipation-only, with no hand margin and no drift compensation.

use crate::tbps2::FollowerPcOutput;
use crate::tbps2::{FollowerPcParams, FollowerPcState, LeaderPcOutput, LeaderPcState};

#[derive(Debug, Clone)]
pub struct BaselineState {
    pub leader: LeaderPcState,
    pub follower: FollowerPcState,
}

impl BaselineState {
    pub fn new(epsilon_v: f64, epsilon_f: f64) -> Self {
        BaselineState {
            leader: LeaderPcState::new(epsilon_v),
            follower: FollowerPcState::new(FollowerPcParams {
                epsilon_f,
                compensation: false,
                v_cap: None,
            }),
        }
    }

    pub fn leader_step(&mut self, eta_obs: f64, v0: f64, dt: f64, f1: f64) -> LeaderPcOutput {
        self.leader.step(eta_obs, v0, dt, f1)
    }

    /// Drift is ignored: only the dissipation branch can fire.
    pub fn follower_step(&mut self, eta: f64, f3: f64, v2: f64, dt: f64) -> FollowerPcOutput {
        self.follower.step(eta, 0.0, f3, v2, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tbps2::{FollowerBranch, EPSILON_F, EPSILON_V};

    #[test]
    fn gains_vanish_on_non_negative_energy() {
        let mut b = BaselineState::new(EPSILON_V, EPSILON_F);
        for eta in [0.0, 1e-9, 3.0] {
            assert_eq!(b.leader_step(eta, 1.0, 0.001, 2.0).alpha, 0.0);
            let out = b.follower_step(eta, 2.0, 0.4, 0.001);
            assert_eq!(out.branch, FollowerBranch::Idle);
            assert_eq!(out.v3, 0.4);
        }
        assert_eq!(b.leader.e_lc, 0.0);
        assert_eq!(b.follower.e_fc, 0.0);
    }

    #[test]
    fn dissipates_deficits() {
        let mut b = BaselineState::new(EPSILON_V, EPSILON_F);
        assert!(b.leader_step(-0.02, 2.0, 0.001, 0.0).alpha > 0.0);
        assert!(b.follower_step(-0.01, 2.0, 0.0, 0.001).beta > 0.0);
    }
}
