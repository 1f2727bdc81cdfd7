//! Fixed-step closed-loop simulation binding dynamics, powertrain, contact
//! and control, with trajectory recording, apex detection and the energy
//! ledger.
//!
//! The mechanical plant integrated here carries the rotors as separate
//! states behind the cable springs, so the rigid-body part uses the
//! mass matrix without reflected rotor inertia; the controller's internal
//! model is the rigid one. Identical inputs produce bit-identical outputs.

use std::io::Write;

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{contact_force, detect_contact, penetration, GroundModel};
use crate::control::{Controller, ControllerConfig, Phase};
use crate::dynamics::{
    foot_jacobian, foot_position, leg_extension, mass_matrix_without_rotors,
    nonlinear_and_gravity, selection_matrix, solve_spd, DynamicsError,
};
use crate::model::{CableParams, LegModel, MotorParams};
use crate::powertrain::{
    current_loop_step, energy_report, power_sample, realized_torque, EnergyLedger, EnergyReport,
    PowerSample, PowertrainError, PowertrainState,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation unstable at t = {t:.4} s: {detail}")]
    Instability { t: f64, detail: String },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Powertrain(#[from] PowertrainError),
    #[error("trajectory write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("trajectory parse failed at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

/// Fixed-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    SemiImplicitEuler,
    Rk4,
}

/// Integration and recording settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub integrator: Integrator,
    /// Viscous friction of the rail carriage, N·s/m.
    pub rail_viscous_friction: f64,
    /// Record every n-th step.
    pub decimation: usize,
    /// Seed for the initial perturbation injection.
    pub seed: u64,
    /// Initial downward base speed disturbance, m/s.
    pub perturbation: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            duration: 30.0,
            integrator: Integrator::SemiImplicitEuler,
            rail_viscous_friction: 2.0,
            decimation: 10,
            seed: 1,
            perturbation: 0.1,
        }
    }
}

/// Built-in experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    Standing,
    Longevity,
    HighJump,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Standing => "standing",
            ScenarioKind::Longevity => "longevity",
            ScenarioKind::HighJump => "highjump",
        }
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub model: LegModel,
    pub motors: MotorParams,
    pub cable: CableParams,
    pub ground: GroundModel,
    pub controller: ControllerConfig,
    pub sim: SimConfig,
    /// Stop early after this many detected apexes.
    pub stop_apex_count: Option<usize>,
    /// Stop early once an apex at or above this base height is reached, m.
    pub stop_apex_height: Option<f64>,
}

/// One recorded sample; the CSV schema is the subset written by
/// [`write_trajectory_csv`], the extra fields feed the scenario metrics.
#[derive(Debug, Clone)]
pub struct Row {
    pub t: f64,
    pub q: Vector3<f64>,
    pub qd: Vector3<f64>,
    pub tau: [f64; 2],
    pub deflection: [f64; 2],
    pub f_c: Vector2<f64>,
    pub phase: Phase,
    pub power: PowerSample,
    pub contact: bool,
    pub foot: Vector2<f64>,
}

/// Recorded trajectory with strictly increasing timestamps.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub rows: Vec<Row>,
}

/// An apex of the base trajectory during flight.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Apex {
    pub t: f64,
    pub height: f64,
}

/// Closed-loop world state stepped by the simulator.
pub struct World {
    pub scenario: Scenario,
    pub controller: Controller,
    /// Commands pass through the controller; disabled only by tests that
    /// need the passive plant.
    pub controller_enabled: bool,
    pub t: f64,
    pub q: Vector3<f64>,
    pub qd: Vector3<f64>,
    pub powertrain: PowertrainState,
    pub realized: [f64; 2],
    pub ledger: EnergyLedger,
    step_index: usize,
    control_every: usize,
    prev_contact_store: f64,
    prev_zd: f64,
    pub apex_count: usize,
    pub highest_apex: f64,
}

/// Plant state vector layout used by the integrators:
/// `[q(3), qd(3), rotor_angle(2), rotor_speed(2)]`, rotor entries motor-side.
type PlantState = [f64; 10];

impl World {
    /// Builds the world in the scenario's initial state: a foot-down pose
    /// from the flight target (hopping) or the base target (standing), with
    /// rotors aligned and the seeded perturbation injected.
    pub fn new(scenario: Scenario) -> Self {
        let model = &scenario.model;
        let ctrl_cfg = &scenario.controller;
        let (q0, drop) = match scenario.kind {
            ScenarioKind::Standing => {
                // settle demonstration: released slightly above the target
                let reach = model.link_lengths[0] + model.link_lengths[1];
                let vertical = (ctrl_cfg.z_target - model.base_hip_offset - model.foot_radius)
                    .clamp(0.05, reach - 1e-4);
                let (hip, knee) = crouch_pose(model, vertical);
                (
                    Vector3::new(ctrl_cfg.z_target + 0.03, hip, knee),
                    true,
                )
            }
            ScenarioKind::Longevity | ScenarioKind::HighJump => {
                let (hip, knee) = (ctrl_cfg.flight_pose[0], ctrl_cfg.flight_pose[1]);
                let vertical = model.link_lengths[0] * hip.cos()
                    + model.link_lengths[1] * (hip + knee).cos();
                (
                    Vector3::new(
                        model.base_hip_offset + model.foot_radius + vertical,
                        hip,
                        knee,
                    ),
                    false,
                )
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(scenario.sim.seed);
        let jitter = if scenario.sim.perturbation > 0.0 {
            Vector3::new(
                0.0,
                rng.random_range(-1e-3..1e-3),
                rng.random_range(-1e-3..1e-3),
            )
        } else {
            Vector3::zeros()
        };
        let q = q0 + jitter;
        let qd = Vector3::new(
            if drop { 0.0 } else { -scenario.sim.perturbation },
            0.0,
            0.0,
        );

        let powertrain =
            PowertrainState::aligned([q[1], q[2]], scenario.model.gear_ratios);
        let contact = detect_contact(model, &scenario.ground, &q);
        let phase = if contact { Phase::Stance } else { Phase::Flight };
        let control_every =
            ((1.0 / (ctrl_cfg.rate_hz * scenario.sim.dt)).round() as usize).max(1);
        let estore = contact_store(model, &scenario.ground, &q);

        World {
            controller: Controller::new(ctrl_cfg.clone(), phase),
            controller_enabled: true,
            t: 0.0,
            q,
            qd,
            powertrain,
            realized: [0.0, 0.0],
            ledger: EnergyLedger::default(),
            step_index: 0,
            control_every,
            prev_contact_store: estore,
            prev_zd: qd[0],
            apex_count: 0,
            highest_apex: f64::NEG_INFINITY,
            scenario,
        }
    }

    fn pack(&self) -> PlantState {
        [
            self.q[0],
            self.q[1],
            self.q[2],
            self.qd[0],
            self.qd[1],
            self.qd[2],
            self.powertrain.joints[0].rotor_angle,
            self.powertrain.joints[1].rotor_angle,
            self.powertrain.joints[0].rotor_speed,
            self.powertrain.joints[1].rotor_speed,
        ]
    }

    fn unpack(&mut self, x: &PlantState) {
        self.q = Vector3::new(x[0], x[1], x[2]);
        self.qd = Vector3::new(x[3], x[4], x[5]);
        self.powertrain.joints[0].rotor_angle = x[6];
        self.powertrain.joints[1].rotor_angle = x[7];
        self.powertrain.joints[0].rotor_speed = x[8];
        self.powertrain.joints[1].rotor_speed = x[9];
    }

    /// Plant derivative with the realized motor torques held constant.
    fn derivative(&self, x: &PlantState, tau_r: &[f64; 2]) -> Result<PlantState, SimError> {
        let model = &self.scenario.model;
        let cable = &self.scenario.cable;
        let q = Vector3::new(x[0], x[1], x[2]);
        let qd = Vector3::new(x[3], x[4], x[5]);

        let mut transmitted = Vector2::zeros();
        let mut rotor_acc = [0.0; 2];
        for j in 0..2 {
            let ratio = model.gear_ratios[j];
            let tau_t = crate::powertrain::transmission_torque(
                x[6 + j],
                x[8 + j],
                ratio,
                q[1 + j],
                qd[1 + j],
                cable,
            );
            transmitted[j] = tau_t;
            // motor-side rotor dynamics; joint-side torques divide by the ratio
            rotor_acc[j] = (tau_r[j] - tau_t) / (ratio * model.rotor_inertias[j]);
        }

        let f_c = contact_force(model, &self.scenario.ground, &q, &qd);
        let (b, g) = nonlinear_and_gravity(model, &q, &qd);
        let rail = Vector3::new(
            -self.scenario.sim.rail_viscous_friction * qd[0],
            0.0,
            0.0,
        );
        let rhs = foot_jacobian(model, &q).transpose() * f_c
            + selection_matrix().transpose() * transmitted
            + rail
            - b
            - g;
        let m = mass_matrix_without_rotors(model, &q);
        let qdd = solve_spd(&m, &rhs).ok_or(DynamicsError::SingularMassMatrix {
            q: [q[0], q[1], q[2]],
        })?;

        Ok([
            qd[0], qd[1], qd[2], qdd[0], qdd[1], qdd[2], x[8], x[9], rotor_acc[0], rotor_acc[1],
        ])
    }

    /// One deterministic step: controller tick, current loop, plant
    /// integration, ledger accumulation and the instability guard.
    pub fn step(&mut self) -> Result<(), SimError> {
        let dt = self.scenario.sim.dt;
        let model = self.scenario.model.clone();
        let motors = self.scenario.motors.clone();

        if self.controller_enabled && self.step_index % self.control_every == 0 {
            let contact = detect_contact(&model, &self.scenario.ground, &self.q);
            let extension = leg_extension(&model, &self.q);
            let dt_control = dt * self.control_every as f64;
            let cmd = self.controller.update(
                &model,
                &self.q,
                &self.qd,
                contact,
                extension,
                motors.max_joint_torque,
                dt_control,
            );
            self.powertrain.joints[0].commanded_torque = cmd[0];
            self.powertrain.joints[1].commanded_torque = cmd[1];
        }

        // current loop lag, then output shaping held over the step
        for j in 0..2 {
            let drive = &mut self.powertrain.joints[j];
            drive.motor_torque =
                current_loop_step(drive.commanded_torque, drive.motor_torque, dt, &motors);
            self.realized[j] = realized_torque(drive.motor_torque, &motors);
        }
        let tau_r = self.realized;

        // dissipation powers from the pre-step state
        let f_c = contact_force(&model, &self.scenario.ground, &self.q, &self.qd);
        let v_foot = crate::dynamics::foot_velocity(&model, &self.q, &self.qd);
        let contact_power = -(f_c[0] * v_foot[0] + f_c[1] * v_foot[1]);
        let rail_power = self.scenario.sim.rail_viscous_friction * self.qd[0] * self.qd[0];
        let mut cable_power = 0.0;
        for j in 0..2 {
            let rate = self.powertrain.geared_speed(j, model.gear_ratios[j]) - self.qd[1 + j];
            cable_power += self.scenario.cable.damping * rate * rate;
        }

        let mut x = self.pack();
        match self.scenario.sim.integrator {
            Integrator::SemiImplicitEuler => {
                let k = self.derivative(&x, &tau_r)?;
                // velocities first, then positions with the new velocities
                for i in 0..3 {
                    x[3 + i] += dt * k[3 + i];
                }
                for i in 0..3 {
                    x[i] += dt * x[3 + i];
                }
                x[8] += dt * k[8];
                x[9] += dt * k[9];
                x[6] += dt * x[8];
                x[7] += dt * x[9];
            }
            Integrator::Rk4 => {
                let k1 = self.derivative(&x, &tau_r)?;
                let k2 = self.derivative(&state_add(&x, &k1, dt / 2.0), &tau_r)?;
                let k3 = self.derivative(&state_add(&x, &k2, dt / 2.0), &tau_r)?;
                let k4 = self.derivative(&state_add(&x, &k3, dt), &tau_r)?;
                for i in 0..10 {
                    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        self.unpack(&x);
        self.t += dt;
        self.step_index += 1;

        // the ledger integrates post-step samples, the same values a
        // full-rate CSV records, so a re-integration of the CSV reproduces it
        let speeds = [
            self.powertrain.geared_speed(0, model.gear_ratios[0]),
            self.powertrain.geared_speed(1, model.gear_ratios[1]),
        ];
        let sample = power_sample(&speeds, &tau_r, &motors);
        self.ledger.accumulate_per_joint(
            &sample,
            &[speeds[0] * tau_r[0], speeds[1] * tau_r[1]],
            dt,
        );

        // dissipation ledger: damper work plus any energy dropped by the
        // contact clamp (stored spring energy released outside of contact)
        let new_store = contact_store(&model, &self.scenario.ground, &self.q);
        let contact_dissipated = contact_power * dt - (new_store - self.prev_contact_store);
        self.prev_contact_store = new_store;
        self.ledger
            .add_dissipation(contact_dissipated, rail_power * dt, cable_power * dt);

        // apex bookkeeping on the full-rate trajectory
        if self.controller.state.phase == Phase::Flight
            && self.prev_zd > 0.0
            && self.qd[0] <= 0.0
        {
            self.apex_count += 1;
            self.highest_apex = self.highest_apex.max(self.q[0]);
        }
        self.prev_zd = self.qd[0];

        self.guard()
    }

    fn guard(&self) -> Result<(), SimError> {
        let motors = &self.scenario.motors;
        let finite = self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
            && self
                .powertrain
                .joints
                .iter()
                .all(|j| j.rotor_angle.is_finite() && j.rotor_speed.is_finite());
        if !finite {
            return Err(SimError::Instability {
                t: self.t,
                detail: "non-finite state".to_string(),
            });
        }
        let speed_cap = 10.0 * motors.max_joint_speed;
        if self.qd[1].abs() > speed_cap || self.qd[2].abs() > speed_cap {
            return Err(SimError::Instability {
                t: self.t,
                detail: format!(
                    "joint speed {:.1}/{:.1} rad/s beyond 10x the {} rad/s limit",
                    self.qd[1], self.qd[2], motors.max_joint_speed
                ),
            });
        }
        if self.qd[0].abs() > 100.0 || self.q[0].abs() > 100.0 {
            return Err(SimError::Instability {
                t: self.t,
                detail: format!("base state z = {:.3} m, zd = {:.3} m/s", self.q[0], self.qd[0]),
            });
        }
        Ok(())
    }

    /// Current sample row.
    pub fn row(&self) -> Row {
        let model = &self.scenario.model;
        let speeds = [
            self.powertrain.geared_speed(0, model.gear_ratios[0]),
            self.powertrain.geared_speed(1, model.gear_ratios[1]),
        ];
        Row {
            t: self.t,
            q: self.q,
            qd: self.qd,
            tau: self.realized,
            deflection: [
                self.powertrain.deflection(0, model.gear_ratios[0], self.q[1]),
                self.powertrain.deflection(1, model.gear_ratios[1], self.q[2]),
            ],
            f_c: contact_force(model, &self.scenario.ground, &self.q, &self.qd),
            phase: self.controller.state.phase,
            power: power_sample(&speeds, &self.realized, &self.scenario.motors),
            contact: detect_contact(model, &self.scenario.ground, &self.q),
            foot: foot_position(model, &self.q),
        }
    }
}

fn state_add(x: &PlantState, k: &PlantState, h: f64) -> PlantState {
    let mut out = *x;
    for i in 0..10 {
        out[i] += h * k[i];
    }
    out
}

fn contact_store(model: &LegModel, ground: &GroundModel, q: &Vector3<f64>) -> f64 {
    let pen = penetration(model, ground, q);
    if pen > 0.0 {
        0.5 * ground.stiffness * pen * pen
    } else {
        0.0
    }
}

/// Knee-down pose with the foot directly below the hip at the given
/// vertical hip-to-foot distance.
pub fn crouch_pose(model: &LegModel, vertical: f64) -> (f64, f64) {
    let [l1, l2] = model.link_lengths;
    let cos_knee = ((vertical * vertical - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let knee = cos_knee.acos();
    let hip = -(l2 * knee.sin()).atan2(l1 + l2 * knee.cos());
    (hip, knee)
}

/// Runs a scenario to its duration or early-stop condition.
pub fn run_scenario(
    scenario: &Scenario,
) -> Result<(TrajectoryRecord, EnergyReport, ScenarioMetrics), SimError> {
    let mut world = World::new(scenario.clone());
    let steps = (scenario.sim.duration / scenario.sim.dt).round() as usize;
    let mut record = TrajectoryRecord {
        rows: Vec::with_capacity(steps / scenario.sim.decimation + 2),
    };
    record.rows.push(world.row());
    let mut recorded_last = true;
    for k in 0..steps {
        world.step()?;
        recorded_last = (k + 1) % scenario.sim.decimation == 0;
        if recorded_last {
            record.rows.push(world.row());
        }
        let count_reached = scenario
            .stop_apex_count
            .is_some_and(|stop| world.apex_count >= stop);
        let height_reached = scenario
            .stop_apex_height
            .is_some_and(|h| world.highest_apex >= h);
        if count_reached || height_reached {
            break;
        }
    }
    if !recorded_last {
        record.rows.push(world.row());
    }
    let report = energy_report(&world.ledger)?;
    let metrics = ScenarioMetrics::from_record(&record, scenario);
    Ok((record, report, metrics))
}

/// Apexes of the recorded base trajectory: flight samples where the base
/// velocity crosses from positive to nonpositive.
pub fn apex_detector(record: &TrajectoryRecord) -> Vec<Apex> {
    let mut apexes = Vec::new();
    for pair in record.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.phase == Phase::Flight && a.qd[0] > 0.0 && b.qd[0] <= 0.0 {
            let (t, height) = if a.q[0] >= b.q[0] {
                (a.t, a.q[0])
            } else {
                (b.t, b.q[0])
            };
            apexes.push(Apex { t, height });
        }
    }
    apexes
}

/// Derived per-run quantities used by reports and the acceptance suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub kind: ScenarioKind,
    /// Base height at the start of the run, m.
    pub rest_height: f64,
    pub apex_count: usize,
    pub max_apex_height: f64,
    pub max_apex_above_rest: f64,
    /// Mean over hops of apex height minus the preceding crouch minimum, m.
    pub avg_base_height_change: f64,
    /// Mean over flights of the peak foot-bottom clearance, m.
    pub avg_foot_clearance: f64,
    pub peak_abs_torque: f64,
    pub peak_abs_joint_speed: f64,
    /// |z_b − z*| at the end of the run, m.
    pub final_height_error: f64,
    /// Mean contact normal force over the last fifth of the run, N.
    pub tail_normal_force: f64,
    pub contact_transition_count: usize,
}

impl ScenarioMetrics {
    pub fn from_record(record: &TrajectoryRecord, scenario: &Scenario) -> Self {
        let rows = &record.rows;
        let rest_height = rows.first().map_or(0.0, |r| r.q[0]);
        let apexes = apex_detector(record);

        let mut peak_abs_torque = 0.0f64;
        let mut peak_abs_joint_speed = 0.0f64;
        let mut contact_transition_count = 0;
        for (idx, row) in rows.iter().enumerate() {
            peak_abs_torque = peak_abs_torque.max(row.tau[0].abs()).max(row.tau[1].abs());
            peak_abs_joint_speed = peak_abs_joint_speed
                .max(row.qd[1].abs())
                .max(row.qd[2].abs());
            if idx > 0 && rows[idx - 1].contact != row.contact {
                contact_transition_count += 1;
            }
        }

        // crouch-to-apex height change per hop
        let mut changes = Vec::new();
        let mut prev_apex_t = rows.first().map_or(0.0, |r| r.t);
        for apex in &apexes {
            let min_z = rows
                .iter()
                .filter(|r| r.t >= prev_apex_t && r.t <= apex.t)
                .map(|r| r.q[0])
                .fold(f64::INFINITY, f64::min);
            if min_z.is_finite() {
                changes.push(apex.height - min_z);
            }
            prev_apex_t = apex.t;
        }
        let avg_base_height_change = mean(&changes);

        // peak foot-bottom clearance per flight segment
        let mut clearances = Vec::new();
        let mut current: Option<f64> = None;
        for row in rows {
            let clearance =
                row.foot[1] - scenario.model.foot_radius - scenario.ground.height;
            match (row.phase, &mut current) {
                (Phase::Flight, Some(best)) => *best = best.max(clearance),
                (Phase::Flight, None) => current = Some(clearance),
                (Phase::Stance, Some(best)) => {
                    clearances.push(*best);
                    current = None;
                }
                (Phase::Stance, None) => {}
            }
        }
        if let Some(best) = current {
            clearances.push(best);
        }
        let avg_foot_clearance = mean(&clearances);

        let tail_start = rows.len().saturating_sub(rows.len() / 5);
        let tail: Vec<f64> = rows[tail_start..].iter().map(|r| r.f_c[1]).collect();
        let max_apex_height = apexes.iter().map(|a| a.height).fold(0.0f64, f64::max);

        ScenarioMetrics {
            kind: scenario.kind,
            rest_height,
            apex_count: apexes.len(),
            max_apex_height,
            max_apex_above_rest: if apexes.is_empty() {
                0.0
            } else {
                max_apex_height - rest_height
            },
            avg_base_height_change,
            avg_foot_clearance,
            peak_abs_torque,
            peak_abs_joint_speed,
            final_height_error: rows
                .last()
                .map_or(f64::NAN, |r| (r.q[0] - scenario.controller.z_target).abs()),
            tail_normal_force: mean(&tail),
            contact_transition_count,
        }
    }

    pub fn key_values(&self) -> Vec<(String, String)> {
        let j = serde_json::to_value(self).expect("metrics serialize");
        let map = j.as_object().expect("metrics are a map");
        map.iter()
            .map(|(k, v)| {
                let rendered = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (format!("metrics.{k}"), rendered)
            })
            .collect()
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Exact column order of the trajectory CSV.
pub const TRAJECTORY_CSV_HEADER: &str = "t,z_b,phi_hfe,phi_kfe,zd_b,phid_hfe,phid_kfe,\
tau_hfe,tau_kfe,defl_hfe,defl_kfe,fc_x,fc_z,phase,P_b,P_J,P_mech,P_e,P_recup";

/// Writes the trajectory in the documented CSV schema; floats use the
/// shortest round-trip representation so re-parsing is lossless.
pub fn write_trajectory_csv<W: Write>(record: &TrajectoryRecord, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    for r in &record.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.q[0],
            r.q[1],
            r.q[2],
            r.qd[0],
            r.qd[1],
            r.qd[2],
            r.tau[0],
            r.tau[1],
            r.deflection[0],
            r.deflection[1],
            r.f_c[0],
            r.f_c[1],
            r.phase.label(),
            r.power.p_b,
            r.power.p_j,
            r.power.p_mech,
            r.power.p_e,
            r.power.p_recup
        )?;
    }
    Ok(())
}

/// Re-integrates the power columns of a trajectory CSV into an energy
/// ledger (mechanical-loss channels are not recoverable from the CSV and
/// stay zero).
pub fn ledger_from_trajectory_csv(text: &str) -> Result<EnergyLedger, SimError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(SimError::Parse {
        line: 1,
        detail: "empty file".to_string(),
    })?;
    if header.trim() != TRAJECTORY_CSV_HEADER {
        return Err(SimError::Parse {
            line: 1,
            detail: "unexpected header".to_string(),
        });
    }
    let mut ledger = EnergyLedger::default();
    let mut prev_t: Option<f64> = None;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 19 {
            return Err(SimError::Parse {
                line: idx + 1,
                detail: format!("expected 19 columns, got {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64, SimError> {
            fields[i].parse().map_err(|_| SimError::Parse {
                line: idx + 1,
                detail: format!("column {} is not a number: '{}'", i + 1, fields[i]),
            })
        };
        let t = num(0)?;
        let sample = PowerSample {
            p_b: num(14)?,
            p_j: num(15)?,
            p_mech: num(16)?,
            p_e: num(17)?,
            p_recup: num(18)?,
        };
        if let Some(prev) = prev_t {
            let dt = t - prev;
            if dt <= 0.0 {
                return Err(SimError::Parse {
                    line: idx + 1,
                    detail: format!("non-increasing timestamp {t}"),
                });
            }
            ledger.accumulate(&sample, dt);
        }
        prev_t = Some(t);
    }
    Ok(ledger)
}
