//! Deterministic simulator and controller library for a two-joint planar
//! hopping leg riding a vertical rail, driven through series-elastic
//! cable-pulley transmissions.
//!
//! The crate models the rigid-body dynamics of the base/hip/knee chain, the
//! motor current loops and cable springs, penalty ground contact, the
//! stance/flight hopping controller and battery-level energy accounting,
//! plus a scenario harness with trajectory CSV output.

pub mod config;
pub mod contact;
pub mod control;
pub mod dynamics;
pub mod model;
pub mod powertrain;
pub mod sim;

pub use config::{ConfigError, ConfigMap};
pub use contact::GroundModel;
pub use control::{Controller, ControllerConfig, Phase};
pub use dynamics::GeneralizedState;
pub use model::{CableParams, LegModel, MotorParams, ValidationReport};
pub use powertrain::{EnergyLedger, EnergyReport, PowerSample, TestBench};
pub use sim::{
    run_scenario, Integrator, Scenario, ScenarioKind, ScenarioMetrics, SimConfig, SimError,
    TrajectoryRecord, World,
};
