//! Variable-delay FIFO channel with zero-order hold at the receiver.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack for comparing delivery times against sample instants built as `k * dt`.
const TIME_EPS: f64 = 1e-12;

/// `d(t) = D + modulation * D * cos(t)`, evaluated at send time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub base: f64,
    pub modulation: f64,
}

impl DelayProfile {
    pub fn new(base: f64, modulation: f64) -> Result<Self> {
        if !(base >= 0.0) || !base.is_finite() || !modulation.is_finite() {
            return Err(Error::config(format!(
                "delay profile needs finite base >= 0 and finite modulation (got {base}, {modulation})"
            )));
        }
        Ok(DelayProfile { base, modulation })
    }

    /// Default time-varying profile around `base`.
    pub fn variable(base: f64) -> Result<Self> {
        Self::new(base, 0.1)
    }

    pub fn constant(base: f64) -> Result<Self> {
        Self::new(base, 0.0)
    }

    pub fn delay_at(&self, t: f64) -> f64 {
        self.base + self.modulation * self.base * t.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPacket<P> {
    pub send_time: f64,
    pub delivery_time: f64,
    pub payload: P,
}

/// Leader to follower: velocity plus accumulator snapshots.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForwardPayload {
    pub velocity: f64,
    pub energy_in_t1: f64,
    pub hand_margin: f64,
}

/// Follower to leader: environment force plus the energy credit the leader
/// observer may count as returned through the follower port.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BackwardPayload {
    pub force: f64,
    pub credit: f64,
}

#[derive(Debug, Clone)]
pub struct DelayChannel<P> {
    profile: DelayProfile,
    queue: VecDeque<ChannelPacket<P>>,
    held: Option<ChannelPacket<P>>,
    last_send: f64,
    last_delivery: f64,
}

impl<P: Copy + Default> DelayChannel<P> {
    pub fn new(profile: DelayProfile) -> Self {
        DelayChannel {
            profile,
            queue: VecDeque::new(),
            held: None,
            last_send: f64::NEG_INFINITY,
            last_delivery: f64::NEG_INFINITY,
        }
    }

    pub fn profile(&self) -> DelayProfile {
        self.profile
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn transmit(&mut self, payload: P, t_now: f64) -> Result<()> {
        let delay = self.profile.delay_at(t_now);
        if delay < 0.0 {
            return Err(Error::NegativeDelay { delay, time: t_now });
        }
        if t_now < self.last_send {
            return Err(Error::config(format!(
                "send time {t_now} precedes previous send {}",
                self.last_send
            )));
        }
        let delivery_time = (t_now + delay).max(self.last_delivery);
        self.last_send = t_now;
        self.last_delivery = delivery_time;
        self.queue.push_back(ChannelPacket {
            send_time: t_now,
            delivery_time,
            payload,
        });
        Ok(())
    }

    /// Newest packet delivered by `t_now`, the held one between arrivals, or a
    /// zero-payload packet if nothing has arrived yet.
    pub fn receive_latest(&mut self, t_now: f64) -> ChannelPacket<P> {
        while let Some(p) = self.queue.front() {
            if p.delivery_time <= t_now + TIME_EPS {
                self.held = self.queue.pop_front();
            } else {
                break;
            }
        }
        self.held.unwrap_or(ChannelPacket {
            send_time: 0.0,
            delivery_time: 0.0,
            payload: P::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DT: f64 = 0.001;

    #[test]
    fn zero_delay_delivers_same_step() {
        let mut ch = DelayChannel::<f64>::new(DelayProfile::variable(0.0).unwrap());
        for k in 0..10 {
            let t = k as f64 * DT;
            ch.transmit(k as f64, t).unwrap();
            assert_eq!(ch.receive_latest(t).payload, k as f64);
        }
    }

    #[test]
    fn modulated_delay_at_start() {
        let profile = DelayProfile::variable(0.2).unwrap();
        assert!((profile.delay_at(0.0) - 0.22).abs() < 1e-15);
        let mut ch = DelayChannel::<f64>::new(profile);
        ch.transmit(7.0, 0.0).unwrap();
        let mut first = None;
        for k in 0..400 {
            let t = k as f64 * DT;
            if ch.receive_latest(t).payload == 7.0 {
                first = Some(k);
                break;
            }
        }
        assert_eq!(first, Some(220));
    }

    #[test]
    fn fifo_clamp_prevents_overtaking() {
        // d(t) = 2 + 1.8 cos t falls faster than real time near t = pi/2
        let profile = DelayProfile::new(2.0, 0.9).unwrap();
        let (t0, t1) = (
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2 + 0.1,
        );
        assert!(t1 + profile.delay_at(t1) < t0 + profile.delay_at(t0));
        let mut ch = DelayChannel::<f64>::new(profile);
        ch.transmit(1.0, t0).unwrap();
        ch.transmit(2.0, t1).unwrap();
        let a = ch.queue[0].delivery_time;
        let b = ch.queue[1].delivery_time;
        assert_eq!(b, a);
        assert_eq!(ch.receive_latest(a).payload, 2.0);
    }

    #[test]
    fn hold_before_and_between_arrivals() {
        let mut ch = DelayChannel::<f64>::new(DelayProfile::constant(0.005).unwrap());
        assert_eq!(ch.receive_latest(0.0).payload, 0.0);
        ch.transmit(3.0, 0.0).unwrap();
        assert_eq!(ch.receive_latest(0.004).payload, 0.0);
        assert_eq!(ch.receive_latest(0.005).payload, 3.0);
        assert_eq!(ch.receive_latest(0.5).payload, 3.0);
    }

    #[test]
    fn negative_delay_rejected() {
        assert!(DelayProfile::new(-0.1, 0.0).is_err());
        let mut ch = DelayChannel::<f64>::new(DelayProfile::new(0.1, -2.0).unwrap());
        assert!(matches!(
            ch.transmit(1.0, 0.0),
            Err(Error::NegativeDelay { .. })
        ));
    }

    proptest! {
        #[test]
        fn causal_fifo_and_monotone_snapshots(
            base in 0.0f64..0.3,
            modulation in 0.0f64..1.0,
            steps in 50usize..800,
        ) {
            let mut ch = DelayChannel::<ForwardPayload>::new(DelayProfile::new(base, modulation).unwrap());
            let mut acc = 0.0;
            let mut last_send = f64::NEG_INFINITY;
            for k in 0..steps {
                let t = k as f64 * DT;
                acc += ((k * 7919) % 13) as f64 * 1e-3;
                ch.transmit(ForwardPayload { velocity: t, energy_in_t1: acc, hand_margin: 0.0 }, t).unwrap();
                let p = ch.receive_latest(t);
                if p.payload.energy_in_t1 > 0.0 {
                    prop_assert!(p.send_time + ch.profile().delay_at(p.send_time) <= t + 1e-9);
                    prop_assert!(p.send_time >= last_send);
                    last_send = p.send_time;
                }
                prop_assert!(p.payload.energy_in_t1 <= acc);
            }
        }
    }
}
