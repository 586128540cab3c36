use proptest::prelude::*;

use tbps2::plant::{EnvironmentModel, ForceKind, OperatorModel};
use tbps2::sim::{run_scenario, ScenarioConfig, StabilizerKind, TraceRecord};
use tbps2::tbps2::FollowerBranch;

const EPS_E: f64 = 1e-9;
const DT: f64 = 0.001;

fn scenario(stabilizer: StabilizerKind, delay: f64, be: f64, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        duration,
        delay,
        be,
        stabilizer,
        ..ScenarioConfig::default()
    }
}

fn max_abs(trace: &TraceRecord, pick: impl Fn(&tbps2::TraceRow) -> f64) -> f64 {
    trace.rows.iter().map(|r| pick(r).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_delay_tbps2_is_transparent() {
    let trace = run_scenario(&scenario(StabilizerKind::Tbps2, 0.0, 12.0, 10.0)).unwrap();
    assert_eq!(max_abs(&trace, |r| r.alpha), 0.0);
    assert_eq!(max_abs(&trace, |r| r.beta), 0.0);
    for (k, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.v3, r.v0);
        if k > 0 {
            assert_eq!(r.f0, trace.rows[k - 1].f3);
        }
    }
}

#[test]
fn zero_delay_observers_equal_oracle() {
    for stabilizer in [
        StabilizerKind::None,
        StabilizerKind::BaselineTdpa,
        StabilizerKind::Tbps2,
    ] {
        let trace = run_scenario(&scenario(stabilizer, 0.0, 30.0, 5.0)).unwrap();
        for (r, d) in trace.rows.iter().zip(&trace.diagnostics) {
            assert_eq!(r.e_obs_l, d.leader_theoretical);
            assert_eq!(r.e_obs_f, d.follower_theoretical);
            assert!(r.e_obs_l >= -EPS_E && r.e_obs_f >= -EPS_E);
        }
    }
}

#[test]
fn passive_interconnection_has_non_negative_oracle() {
    let trace = run_scenario(&scenario(StabilizerKind::None, 0.0, 12.0, 10.0)).unwrap();
    for r in &trace.rows {
        assert!(r.net_energy >= -EPS_E, "t = {}: {}", r.t, r.net_energy);
    }
}

#[test]
fn baseline_equals_tbps2_without_margin_or_compensation() {
    let base = scenario(StabilizerKind::BaselineTdpa, 0.2, 12.0, 20.0);
    let reduced = ScenarioConfig {
        stabilizer: StabilizerKind::Tbps2,
        eop_lower_bound: 0.0,
        drift_compensation: false,
        ..base.clone()
    };
    let a = run_scenario(&base).unwrap();
    let b = run_scenario(&reduced).unwrap();
    assert!(
        max_abs(&a, |r| r.beta) > 0.0,
        "the comparison should exercise the PCs"
    );
    assert_eq!(a.rows, b.rows);
}

#[test]
fn baseline_drift_accumulates_where_tbps2_stays_near_zero() {
    let cfg = ScenarioConfig {
        force: ForceKind::AperiodicSquare,
        seed: 1,
        ..scenario(StabilizerKind::BaselineTdpa, 0.2, 12.0, 50.0)
    };
    let mean_drift =
        |t: &TraceRecord| t.rows.iter().map(|r| r.dx.abs()).sum::<f64>() / t.rows.len() as f64;
    let base = run_scenario(&cfg).unwrap();
    let tbps = run_scenario(&ScenarioConfig {
        stabilizer: StabilizerKind::Tbps2,
        ..cfg
    })
    .unwrap();
    let (b, s) = (mean_drift(&base), mean_drift(&tbps));
    assert!(b > 0.1, "baseline mean drift {b}");
    assert!(b > 20.0 * s, "baseline {b}, tbps2 {s}");
    assert!(max_abs(&tbps, |r| r.dx) < 0.1);
    assert!(tbps.rows.last().unwrap().dx.abs() < 0.005);
}

#[test]
fn impulse_position_returns_to_rest_under_tbps2() {
    let cfg = ScenarioConfig {
        force: ForceKind::Impulse,
        ..scenario(StabilizerKind::Tbps2, 0.1, -100.0, 30.0)
    };
    let trace = run_scenario(&cfg).unwrap();
    let peak = max_abs(&trace, |r| r.x3);
    assert!(peak > 0.0);
    assert!(trace.rows.last().unwrap().x3.abs() < 1e-3 * peak);
}

#[test]
fn controller_branches_keep_their_contracts() {
    let cfg = ScenarioConfig {
        force: ForceKind::AperiodicSquare,
        seed: 3,
        ..scenario(StabilizerKind::Tbps2, 0.25, 60.0, 30.0)
    };
    let trace = run_scenario(&cfg).unwrap();
    let mut seen = (0, 0);
    let mut prev_dx: f64 = 0.0;
    for (r, d) in trace.rows.iter().zip(&trace.diagnostics) {
        assert!(r.alpha >= 0.0);
        if r.alpha > 0.0 {
            assert!(r.e_obs_l >= -EPS_E);
        }
        match d.follower_branch {
            FollowerBranch::Dissipation => {
                seen.0 += 1;
                assert!(r.beta >= 0.0);
                assert!(d.follower_eta >= -EPS_E);
            }
            FollowerBranch::Compensation => {
                seen.1 += 1;
                assert!(
                    r.dx.abs() <= prev_dx.abs() + 1e-12,
                    "drift grew at t = {}",
                    r.t
                );
                assert!(
                    r.dx * prev_dx >= 0.0 || r.dx.abs() < 1e-12,
                    "overshoot at t = {}: {} -> {}",
                    r.t,
                    prev_dx,
                    r.dx
                );
                assert!(d.follower_eta >= -EPS_E, "budget overspent at t = {}", r.t);
            }
            FollowerBranch::Idle => {}
        }
        prev_dx = r.dx;
    }
    assert!(seen.0 > 0 && seen.1 > 0, "branches exercised: {seen:?}");
}

#[test]
fn velocity_cap_bounds_correction_speed() {
    let cfg = ScenarioConfig {
        force: ForceKind::AperiodicSquare,
        seed: 2,
        v_cap: Some(0.05),
        ..scenario(StabilizerKind::Tbps2, 0.2, 12.0, 20.0)
    };
    let trace = run_scenario(&cfg).unwrap();
    for (r, d) in trace.rows.iter().zip(&trace.diagnostics) {
        if d.follower_branch == FollowerBranch::Compensation {
            assert!(r.v_fc.abs() <= 0.05 + 1e-12);
        }
    }
}

#[test]
fn hand_model_output_strict_passivity() {
    // Re{Z_h} = b, so the hand is output strictly passive with excess b and
    // finite L2 gain 1/b from force to velocity.
    let mut op = OperatorModel::table_default();
    let mut fv = 0.0;
    let mut vv = 0.0;
    let mut ff = 0.0;
    for k in 0..60_000 {
        let t = k as f64 * DT;
        let f = 40.0 * (2.1 * t).sin()
            + 25.0 * (13.0 * t).cos()
            + if (t as u64).is_multiple_of(3) {
                10.0
            } else {
                -5.0
            };
        let v = op.step(f, DT);
        fv += f * v * DT;
        vv += v * v * DT;
        ff += f * f * DT;
        assert!(fv >= -1e-9, "energy {fv} at t = {t}");
    }
    assert!(fv >= 0.99 * 50.0 * vv, "fv = {fv}, b*vv = {}", 50.0 * vv);
    assert!(vv.sqrt() <= ff.sqrt() / 50.0 * 1.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn combined_condition_holds(
        delay in 0.0f64..0.3,
        be in -120.0f64..100.0,
        ke in 0.0f64..150.0,
        kind in prop_oneof![
            Just(ForceKind::SinusoidMix),
            Just(ForceKind::AperiodicSquare),
            Just(ForceKind::AperiodicSinusoid),
            Just(ForceKind::Impulse),
        ],
        seed in 0u64..1000,
        xi in 0.0f64..40.0,
    ) {
        let cfg = ScenarioConfig {
            ke,
            force: kind,
            seed,
            eop_lower_bound: xi,
            ..scenario(StabilizerKind::Tbps2, delay, be, 5.0)
        };
        let trace = run_scenario(&cfg).unwrap();
        prop_assert!(trace.min_combined() >= -EPS_E, "min combined {}", trace.min_combined());
        for r in &trace.rows {
            prop_assert!(r.v3.is_finite() && r.f0.is_finite());
        }
    }

    #[test]
    fn hand_model_is_passive_from_rest(
        amps in prop::collection::vec(-100.0f64..100.0, 4),
        freqs in prop::collection::vec(0.1f64..30.0, 4),
    ) {
        let mut op = OperatorModel::table_default();
        let mut energy = 0.0;
        for k in 0..5000 {
            let t = k as f64 * DT;
            let f: f64 = amps.iter().zip(&freqs).map(|(a, w)| a * (w * t).sin()).sum();
            energy += f * op.step(f, DT) * DT;
            prop_assert!(energy >= -1e-9, "energy {}", energy);
        }
    }

    #[test]
    fn passive_environment_bounds_returned_energy(
        be in 0.0f64..100.0,
        ke in 0.0f64..200.0,
        v in prop::collection::vec(-3.0f64..3.0, 1..400),
    ) {
        let mut env = EnvironmentModel::new(be, ke).unwrap();
        let mut energy = 0.0;
        for x in v {
            energy += env.force(x, DT) * x * DT;
            prop_assert!(energy >= -1e-12);
        }
    }
}
