//! Delayed bilateral teleoperation simulator with a biomechanics-aware
//! two-port passivity stabilizer (TBPS²) and a classic two-port TDPA baseline.
//!
//! The loop is scalar, fixed-step and deterministic. [`sim::run_scenario`]
//! runs one trial; [`sim::run_grid`] sweeps delay against environment damping.

pub mod baseline;
pub mod channel;
pub mod config;
pub mod eop;
pub mod error;
pub mod io;
pub mod metrics;
pub mod observer;
pub mod plant;
pub mod sim;
pub mod tbps2;

pub use error::{Error, Result};
pub use sim::{
    run_grid, run_scenario, GridConfig, ScenarioConfig, StabilizerKind, SummaryRow, TraceRecord,
    TraceRow,
};
