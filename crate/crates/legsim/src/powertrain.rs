//! Motor current loop, series-elastic cable transmission, the single-joint
//! torque test bench, and battery-level power accounting.
//!
//! Torques are referenced to the joint side throughout; rotor angles and
//! speeds are stored motor-side and divided by the gear ratio where the
//! transmission needs them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CableParams, MotorParams};

#[derive(Debug, Error)]
pub enum PowertrainError {
    #[error("duration and time step must be positive, got duration {duration}, dt {dt}")]
    InvalidTiming { duration: f64, dt: f64 },
    #[error("frequency list is empty")]
    EmptyFrequencyList,
    #[error("amplitude {amplitude} Nm exceeds the torque limit {limit} Nm")]
    AmplitudeExceedsLimit { amplitude: f64, limit: f64 },
    #[error("sample history is empty")]
    EmptyHistory,
}

/// Advances the first-order current-loop lag by `dt` toward the commanded
/// torque and returns the new internal motor torque (joint side). The input
/// command and the lag state are clamped to the torque limit.
pub fn current_loop_step(
    commanded_torque: f64,
    motor_torque: f64,
    dt: f64,
    motors: &MotorParams,
) -> f64 {
    let limit = motors.max_joint_torque;
    let cmd = commanded_torque.clamp(-limit, limit);
    let tau_c = 1.0 / (2.0 * std::f64::consts::PI * motors.current_loop_bandwidth_hz);
    let alpha = 1.0 - (-dt / tau_c).exp();
    (motor_torque + alpha * (cmd - motor_torque)).clamp(-limit, limit)
}

/// Output shaping of the realized torque: mapping scale error, static
/// offset, resolution quantization, limit clamp.
pub fn realized_torque(motor_torque: f64, motors: &MotorParams) -> f64 {
    let mut tau = motor_torque * motors.torque_scale + motors.static_torque_offset;
    if motors.quantization_enabled && motors.torque_resolution > 0.0 {
        tau = (tau / motors.torque_resolution).round() * motors.torque_resolution;
    }
    tau.clamp(-motors.max_joint_torque, motors.max_joint_torque)
}

/// Torque transmitted by the cable spring-damper at the joint:
/// `k_c·δ + d_c·δ̇` with `δ = rotor_angle/ratio − joint_angle`.
pub fn transmission_torque(
    rotor_angle: f64,
    rotor_speed: f64,
    gear_ratio: f64,
    joint_angle: f64,
    joint_speed: f64,
    cable: &CableParams,
) -> f64 {
    let deflection = rotor_angle / gear_ratio - joint_angle;
    let deflection_rate = rotor_speed / gear_ratio - joint_speed;
    cable.stiffness * deflection + cable.damping * deflection_rate
}

/// Per-joint drive state carried by the simulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriveState {
    /// Rotor angle, motor side, rad.
    pub rotor_angle: f64,
    /// Rotor speed, motor side, rad/s.
    pub rotor_speed: f64,
    /// Last commanded torque, joint side, Nm.
    pub commanded_torque: f64,
    /// Internal motor torque after the current loop, joint side, Nm.
    pub motor_torque: f64,
}

/// Drive states of the hip and knee actuators.
#[derive(Debug, Clone, Default)]
pub struct PowertrainState {
    pub joints: [DriveState; 2],
}

impl PowertrainState {
    /// State with rotors aligned to the joints (zero deflection) at rest.
    pub fn aligned(joint_angles: [f64; 2], gear_ratios: [f64; 2]) -> Self {
        let mut state = PowertrainState::default();
        for j in 0..2 {
            state.joints[j].rotor_angle = joint_angles[j] * gear_ratios[j];
        }
        state
    }

    /// Cable deflection at the joint side, rad.
    pub fn deflection(&self, joint: usize, gear_ratio: f64, joint_angle: f64) -> f64 {
        self.joints[joint].rotor_angle / gear_ratio - joint_angle
    }

    /// Rotor speed expressed at the joint side, rad/s.
    pub fn geared_speed(&self, joint: usize, gear_ratio: f64) -> f64 {
        self.joints[joint].rotor_speed / gear_ratio
    }
}

// ---------------------------------------------------------------------------
// Torque test bench
// ---------------------------------------------------------------------------

/// Single-actuator test bench: the motor drives its reflected rotor inertia
/// against the cable spring whose far side carries the link inertia. With
/// `output_locked` (the default) the link is held by the torque sensor and
/// the measured torque is the spring-damper torque.
#[derive(Debug, Clone)]
pub struct TestBench {
    /// Driven inertia (rotor reflected to the joint side), kg·m².
    pub rotor_inertia: f64,
    /// Load-side link inertia, kg·m².
    pub link_inertia: f64,
    /// Link held fixed by the torque sensor.
    pub output_locked: bool,
    pub cable: CableParams,
    pub motors: MotorParams,
    /// Integration step, s.
    pub dt: f64,
}

impl TestBench {
    /// Bench with the default knee-class drive: 8e-4 kg·m² rotor behind a
    /// 5:1 ratio, reference cable, quantization off.
    pub fn default_bench() -> Self {
        TestBench {
            rotor_inertia: 8.0e-4 * 25.0,
            link_inertia: 0.05,
            output_locked: true,
            cable: CableParams::default_cable(),
            motors: MotorParams::default_motors(),
            dt: 5.0e-6,
        }
    }

    /// Undamped series resonance of the locked bench, Hz.
    pub fn resonance_hz(&self) -> f64 {
        (self.cable.stiffness / self.rotor_inertia).sqrt() / (2.0 * std::f64::consts::PI)
    }

    /// Time derivative of the bench state for a fixed command.
    ///
    /// State layout: `[motor_torque, rotor_angle, rotor_speed, link_angle,
    /// link_speed]`, all joint side; the link entries stay zero when the
    /// output is locked.
    fn derivative(&self, x: &[f64; 5], command: f64) -> [f64; 5] {
        let tau_c = 1.0 / (2.0 * std::f64::consts::PI * self.motors.current_loop_bandwidth_hz);
        let tau_m = realized_torque(x[0], &self.motors);
        let transmitted =
            self.cable.stiffness * (x[1] - x[3]) + self.cable.damping * (x[2] - x[4]);
        let link_acc = if self.output_locked {
            0.0
        } else {
            transmitted / self.link_inertia
        };
        [
            (command.clamp(-self.motors.max_joint_torque, self.motors.max_joint_torque) - x[0])
                / tau_c,
            x[2],
            (tau_m - transmitted) / self.rotor_inertia,
            x[4],
            link_acc,
        ]
    }

    fn rk4_step(&self, x: &mut [f64; 5], command: f64) {
        let h = self.dt;
        let k1 = self.derivative(x, command);
        let k2 = self.derivative(&add_scaled(x, &k1, h / 2.0), command);
        let k3 = self.derivative(&add_scaled(x, &k2, h / 2.0), command);
        let k4 = self.derivative(&add_scaled(x, &k3, h), command);
        for i in 0..5 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn measured_torque(&self, x: &[f64; 5]) -> f64 {
        self.cable.stiffness * (x[1] - x[3]) + self.cable.damping * (x[2] - x[4])
    }
}

fn add_scaled(x: &[f64; 5], k: &[f64; 5], h: f64) -> [f64; 5] {
    let mut out = *x;
    for i in 0..5 {
        out[i] += h * k[i];
    }
    out
}

/// Link-side torque trajectory under a step command from rest.
#[derive(Debug, Clone)]
pub struct StepResponse {
    pub time: Vec<f64>,
    pub command: Vec<f64>,
    pub measured: Vec<f64>,
}

impl StepResponse {
    /// Steady-state error relative to the command, from the mean over the
    /// last tenth of the trajectory.
    pub fn steady_state_error(&self) -> f64 {
        let n = self.measured.len();
        let tail = &self.measured[n - n / 10..];
        let mean: f64 = tail.iter().sum::<f64>() / tail.len() as f64;
        let cmd = *self.command.last().unwrap();
        if cmd == 0.0 {
            mean.abs()
        } else {
            (mean - cmd).abs() / cmd.abs()
        }
    }
}

/// Simulates the bench under a torque step of `command` Nm.
pub fn testbench_step_response(
    bench: &TestBench,
    command: f64,
    duration: f64,
) -> Result<StepResponse, PowertrainError> {
    if duration <= 0.0 || bench.dt <= 0.0 {
        return Err(PowertrainError::InvalidTiming {
            duration,
            dt: bench.dt,
        });
    }
    let steps = (duration / bench.dt).round() as usize;
    let mut x = [0.0; 5];
    let mut response = StepResponse {
        time: Vec::with_capacity(steps + 1),
        command: Vec::with_capacity(steps + 1),
        measured: Vec::with_capacity(steps + 1),
    };
    response.time.push(0.0);
    response.command.push(command);
    response.measured.push(bench.measured_torque(&x));
    for k in 1..=steps {
        bench.rk4_step(&mut x, command);
        response.time.push(k as f64 * bench.dt);
        response.command.push(command);
        response.measured.push(bench.measured_torque(&x));
    }
    Ok(response)
}

/// Gain and phase of the measured torque at one drive frequency.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreqResponsePoint {
    pub freq_hz: f64,
    pub amplitude_in: f64,
    pub amplitude_out: f64,
    pub gain: f64,
    pub phase_deg: f64,
}

/// Drives the bench with torque sinusoids and fits gain and phase of the
/// link-side torque after the transient has settled.
pub fn testbench_freq_sweep(
    bench: &TestBench,
    amplitude: f64,
    freqs_hz: &[f64],
    cycles: u32,
) -> Result<Vec<FreqResponsePoint>, PowertrainError> {
    if freqs_hz.is_empty() {
        return Err(PowertrainError::EmptyFrequencyList);
    }
    if amplitude.abs() > bench.motors.max_joint_torque {
        return Err(PowertrainError::AmplitudeExceedsLimit {
            amplitude,
            limit: bench.motors.max_joint_torque,
        });
    }
    let cycles = cycles.max(1);
    let settle = 0.3;
    let mut out = Vec::with_capacity(freqs_hz.len());
    for &freq in freqs_hz {
        if freq == 0.0 {
            let response = testbench_step_response(bench, amplitude, settle + 0.2)?;
            let n = response.measured.len();
            let tail = &response.measured[n - n / 10..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            out.push(FreqResponsePoint {
                freq_hz: 0.0,
                amplitude_in: amplitude,
                amplitude_out: mean,
                gain: mean / amplitude,
                phase_deg: 0.0,
            });
            continue;
        }
        let omega = 2.0 * std::f64::consts::PI * freq;
        let measure_window = f64::from(cycles) / freq;
        let duration = settle + measure_window;
        let steps = (duration / bench.dt).round() as usize;
        let mut x = [0.0; 5];
        // Accumulate the least-squares normal equations for y ≈ a sin + b cos + c.
        let mut ata = [[0.0f64; 3]; 3];
        let mut aty = [0.0f64; 3];
        for k in 0..steps {
            let t = k as f64 * bench.dt;
            let u = amplitude * (omega * t).sin();
            bench.rk4_step(&mut x, u);
            let t_next = t + bench.dt;
            if t_next >= settle {
                let y = bench.measured_torque(&x);
                let basis = [(omega * t_next).sin(), (omega * t_next).cos(), 1.0];
                for r in 0..3 {
                    for c in 0..3 {
                        ata[r][c] += basis[r] * basis[c];
                    }
                    aty[r] += basis[r] * y;
                }
            }
        }
        let coeffs = solve3(&ata, &aty);
        let amplitude_out = (coeffs[0] * coeffs[0] + coeffs[1] * coeffs[1]).sqrt();
        out.push(FreqResponsePoint {
            freq_hz: freq,
            amplitude_in: amplitude,
            amplitude_out,
            gain: amplitude_out / amplitude,
            phase_deg: coeffs[1].atan2(coeffs[0]).to_degrees(),
        });
    }
    Ok(out)
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let m = nalgebra::Matrix3::from_fn(|r, c| a[r][c]);
    let v = nalgebra::Vector3::new(b[0], b[1], b[2]);
    let x = m.lu().solve(&v).expect("normal equations are full rank");
    [x[0], x[1], x[2]]
}

// ---------------------------------------------------------------------------
// Power accounting
// ---------------------------------------------------------------------------

/// Instantaneous power channels of one sample.
///
/// By construction `p_recup = p_j + p_mech + p_e − p_b` holds exactly:
/// `p_recup` is the rectified electrical return scaled by the regeneration
/// efficiency, and `p_b` is defined through that ledger identity.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PowerSample {
    /// Battery output power, W.
    pub p_b: f64,
    /// Joule (winding) losses, W.
    pub p_j: f64,
    /// Mechanical power of the motors, signed, W.
    pub p_mech: f64,
    /// Electronics idle power, W.
    pub p_e: f64,
    /// Power harvested at the battery from the electrical return, W.
    pub p_recup: f64,
}

/// Computes the power channels from geared rotor speeds and realized motor
/// torques (both joint side).
pub fn power_sample(omega: &[f64; 2], tau: &[f64; 2], motors: &MotorParams) -> PowerSample {
    let p_mech = omega[0] * tau[0] + omega[1] * tau[1];
    let p_j = (tau[0] / motors.motor_constants[0]).powi(2)
        + (tau[1] / motors.motor_constants[1]).powi(2);
    let p_e = motors.electronics_power;
    let electrical = p_mech + p_j;
    let p_recup = motors.regen_efficiency * (-electrical).max(0.0);
    PowerSample {
        p_b: p_j + p_mech + p_e - p_recup,
        p_j,
        p_mech,
        p_e,
        p_recup,
    }
}

/// Cumulative energy ledger over a run, all channels integrated with the
/// same rectangle rule so the per-sample identity carries over to energies.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub duration: f64,
    pub e_b: f64,
    pub e_j: f64,
    pub e_mech: f64,
    pub e_e: f64,
    pub e_recup: f64,
    /// Rectified mechanical work of the motors, J.
    pub positive_work: f64,
    pub negative_work: f64,
    /// Dissipation bookkeeping, J.
    pub loss_contact: f64,
    pub loss_rail: f64,
    pub loss_cable: f64,
}

impl EnergyLedger {
    /// Accumulates one sample, rectifying the aggregate mechanical power
    /// into the work counters. Used when only channel totals are available
    /// (e.g. re-integrating a trajectory CSV); simultaneous motoring on one
    /// joint and braking on the other partially cancels here, so the work
    /// split is approximate.
    pub fn accumulate(&mut self, sample: &PowerSample, dt: f64) {
        self.accumulate_per_joint(sample, &[sample.p_mech, 0.0], dt);
    }

    /// Accumulates one sample with per-motor mechanical powers, rectifying
    /// each motor's work separately.
    pub fn accumulate_per_joint(&mut self, sample: &PowerSample, joint_mech: &[f64; 2], dt: f64) {
        self.duration += dt;
        self.e_b += sample.p_b * dt;
        self.e_j += sample.p_j * dt;
        self.e_mech += sample.p_mech * dt;
        self.e_e += sample.p_e * dt;
        self.e_recup += sample.p_recup * dt;
        for p in joint_mech {
            self.positive_work += p.max(0.0) * dt;
            self.negative_work += (-p).max(0.0) * dt;
        }
    }

    pub fn add_dissipation(&mut self, contact: f64, rail: f64, cable: f64) {
        self.loss_contact += contact;
        self.loss_rail += rail;
        self.loss_cable += cable;
    }

    pub fn mechanical_losses(&self) -> f64 {
        self.loss_contact + self.loss_rail + self.loss_cable
    }
}

/// Reference recuperation rate measured on the physical prototype during
/// continuous hopping; reports print it next to the simulated value.
pub const REFERENCE_RECUPERATION_RATE: f64 = 0.965;

/// Summary report over a run: totals, averages, the recuperation rate and
/// the loss breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub duration: f64,
    pub battery_energy: f64,
    pub joule_energy: f64,
    pub mech_energy: f64,
    pub electronics_energy: f64,
    pub recuperated_energy: f64,
    pub battery_avg_power: f64,
    pub joule_avg_power: f64,
    pub mech_avg_power: f64,
    pub electronics_avg_power: f64,
    pub recuperated_avg_power: f64,
    pub positive_work: f64,
    pub negative_work: f64,
    pub positive_work_avg_power: f64,
    pub negative_work_avg_power: f64,
    /// |negative work| / positive work.
    pub recuperation_rate: f64,
    pub recuperation_rate_reference: f64,
    pub mechanical_loss_contact: f64,
    pub mechanical_loss_rail: f64,
    pub mechanical_loss_cable: f64,
    pub mechanical_loss_total: f64,
    /// Fractions of joule / electronics / mechanical losses; they sum to 1.
    pub loss_fraction_joule: f64,
    pub loss_fraction_electronics: f64,
    pub loss_fraction_mechanical: f64,
}

/// Builds the summary report from a ledger.
pub fn energy_report(ledger: &EnergyLedger) -> Result<EnergyReport, PowertrainError> {
    if ledger.duration <= 0.0 {
        return Err(PowertrainError::EmptyHistory);
    }
    let d = ledger.duration;
    let recuperation_rate = if ledger.positive_work > 0.0 {
        ledger.negative_work / ledger.positive_work
    } else {
        0.0
    };
    let mech_total = ledger.mechanical_losses();
    let loss_sum = ledger.e_j + ledger.e_e + mech_total;
    let frac = |x: f64| if loss_sum > 0.0 { x / loss_sum } else { 0.0 };
    Ok(EnergyReport {
        duration: d,
        battery_energy: ledger.e_b,
        joule_energy: ledger.e_j,
        mech_energy: ledger.e_mech,
        electronics_energy: ledger.e_e,
        recuperated_energy: ledger.e_recup,
        battery_avg_power: ledger.e_b / d,
        joule_avg_power: ledger.e_j / d,
        mech_avg_power: ledger.e_mech / d,
        electronics_avg_power: ledger.e_e / d,
        recuperated_avg_power: ledger.e_recup / d,
        positive_work: ledger.positive_work,
        negative_work: ledger.negative_work,
        positive_work_avg_power: ledger.positive_work / d,
        negative_work_avg_power: ledger.negative_work / d,
        recuperation_rate,
        recuperation_rate_reference: REFERENCE_RECUPERATION_RATE,
        mechanical_loss_contact: ledger.loss_contact,
        mechanical_loss_rail: ledger.loss_rail,
        mechanical_loss_cable: ledger.loss_cable,
        mechanical_loss_total: mech_total,
        loss_fraction_joule: frac(ledger.e_j),
        loss_fraction_electronics: frac(ledger.e_e),
        loss_fraction_mechanical: frac(mech_total),
    })
}

impl EnergyReport {
    /// Flat key-value view used by the text report and the config echo.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let j = serde_json::to_value(self).expect("report serializes");
        let map = j.as_object().expect("report is a map");
        map.iter()
            .map(|(k, v)| (format!("report.{k}"), v.to_string()))
            .collect()
    }
}
