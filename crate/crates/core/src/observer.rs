//! Terminal energy ledgers and observed/theoretical energies of the two-port.
//!
//! Power into the communication network is positive at every terminal.
//! `energy_out` accumulators are kept as the (non-positive) sums they are.

use serde::{Deserialize, Serialize};

/// In/out split of the energy seen at one observation terminal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TerminalLedger {
    pub energy_in: f64,
    pub energy_out: f64,
}

impl TerminalLedger {
    pub fn update(&mut self, f: f64, v: f64, dt: f64) {
        let p = f * v * dt;
        if p >= 0.0 {
            self.energy_in += p;
        } else {
            self.energy_out += p;
        }
    }

    pub fn total(&self) -> f64 {
        self.energy_in + self.energy_out
    }
}

/// Which side of the two-port may draw on the operator's hand margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accounting {
    /// Classic two-port bookkeeping, no hand margin.
    Classic,
    /// The delayed hand margin backs the follower observer and caps the
    /// return credit.
    HandMargin,
}

/// `E_T1^out + C + E_Lc`, where `C` is the (delayed) return credit.
pub fn leader_observed_energy(t1_out: f64, credit: f64, e_lc: f64) -> f64 {
    t1_out + credit + e_lc
}

/// `E_T1^in(delayed) - E_T2^in + E_Fc`.
pub fn follower_observed_energy(t1_in: f64, t2_in: f64, e_fc: f64) -> f64 {
    t1_in - t2_in + e_fc
}

/// Energy the follower port has handed back toward the leader that the
/// leader observer may offset against its own outflow.
///
/// Classic: everything that left the network at T2. With a hand margin, the
/// credit is capped by what T2 absorbed plus the margin, so energy injected
/// by an active environment is only credited as far as the hand can take it.
/// Both forms are non-decreasing in time, so a delayed snapshot never
/// exceeds the current one.
pub fn return_credit(t2: &TerminalLedger, hand_margin: f64, accounting: Accounting) -> f64 {
    match accounting {
        Accounting::Classic => -t2.energy_out,
        Accounting::HandMargin => (-t2.energy_out).min(t2.energy_in + hand_margin),
    }
}

/// Delay-free oracle `E_T1 - E_T2 + E_T3`.
pub fn net_theoretical_energy(
    t1: &TerminalLedger,
    t2: &TerminalLedger,
    t3: &TerminalLedger,
) -> f64 {
    t1.total() - t2.total() + t3.total()
}

/// All accumulators of one simulation's passivity observers.
#[derive(Debug, Clone)]
pub struct ObserverState {
    pub t1: TerminalLedger,
    pub t2: TerminalLedger,
    pub t3: TerminalLedger,
    pub e_lc: f64,
    pub e_fc: f64,
    pub hand_margin_local: f64,
    pub hand_margin_delayed: f64,
    /// Forward snapshot of `t1.energy_in` as received by the follower.
    pub t1_in_delayed: f64,
    /// Backward snapshot of the return credit as received by the leader.
    pub credit_delayed: f64,
    pub dt_leader: f64,
    pub dt_follower: f64,
    pub eop_lower_bound: f64,
    pub accounting: Accounting,
}

impl ObserverState {
    pub fn new(
        dt_leader: f64,
        dt_follower: f64,
        eop_lower_bound: f64,
        accounting: Accounting,
    ) -> Self {
        debug_assert!(eop_lower_bound >= 0.0);
        ObserverState {
            t1: TerminalLedger::default(),
            t2: TerminalLedger::default(),
            t3: TerminalLedger::default(),
            e_lc: 0.0,
            e_fc: 0.0,
            hand_margin_local: 0.0,
            hand_margin_delayed: 0.0,
            t1_in_delayed: 0.0,
            credit_delayed: 0.0,
            dt_leader,
            dt_follower,
            eop_lower_bound,
            accounting,
        }
    }

    pub fn hand_margin_step(&mut self, v0: f64) {
        self.hand_margin_local += self.eop_lower_bound * v0 * v0 * self.dt_leader;
    }

    pub fn leader_observed(&self) -> f64 {
        leader_observed_energy(self.t1.energy_out, self.credit_delayed, self.e_lc)
    }

    pub fn follower_observed(&self) -> f64 {
        follower_observed_energy(self.t1_in_delayed, self.t2.energy_in, self.e_fc)
    }

    /// Credit the follower would send right now.
    pub fn current_credit(&self) -> f64 {
        return_credit(&self.t2, self.hand_margin_delayed, self.accounting)
    }

    /// Credit as it would be with no delay on either side.
    pub fn undelayed_credit(&self) -> f64 {
        return_credit(&self.t2, self.hand_margin_local, self.accounting)
    }

    pub fn leader_theoretical(&self) -> f64 {
        leader_observed_energy(self.t1.energy_out, self.undelayed_credit(), self.e_lc)
    }

    pub fn follower_theoretical(&self) -> f64 {
        follower_observed_energy(self.t1.energy_in, self.t2.energy_in, self.e_fc)
    }

    /// Hand margin usable on the follower side (zero for classic bookkeeping).
    pub fn usable_margin(&self) -> f64 {
        match self.accounting {
            Accounting::Classic => 0.0,
            Accounting::HandMargin => self.hand_margin_delayed,
        }
    }

    /// Energy the follower PC sees: observed energy plus the usable margin.
    pub fn follower_eta(&self) -> f64 {
        self.follower_observed() + self.usable_margin()
    }

    /// `hand_margin(delayed) + E_obs^L + E_obs^F`.
    pub fn combined(&self) -> f64 {
        self.usable_margin() + self.leader_observed() + self.follower_observed()
    }

    pub fn net_theoretical(&self) -> f64 {
        net_theoretical_energy(&self.t1, &self.t2, &self.t3)
    }
}
