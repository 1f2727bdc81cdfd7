//! Hopping controller: a virtual spring-damper on the base during stance,
//! joint-space inverse-dynamics tracking of a retracted pose during flight,
//! and the extension/contact switching heuristic between the two.
//!
//! Stance sign conventions are fixed by the static-equilibrium closure
//! requirement: at `z_b = z*` and rest, the stance torques fed back through
//! the forward dynamics together with the weight-supporting contact force
//! must produce zero acceleration.

use nalgebra::{Vector2, Vector3};

use crate::dynamics::{
    foot_jacobian, mass_matrix, nonlinear_and_gravity, selection_matrix,
};
use crate::model::LegModel;

/// Gains and targets of the two-phase controller.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Virtual spring stiffness on the base, N/m.
    pub k_s: f64,
    /// Virtual spring damping on the base, N·s/m.
    pub d_s: f64,
    /// Base height target of the virtual spring, m.
    pub z_target: f64,
    /// Flight PID gains, diagonal, per joint.
    pub kp: [f64; 2],
    pub ki: [f64; 2],
    pub kd: [f64; 2],
    /// Flight joint-pose target (hip, knee), rad.
    pub flight_pose: [f64; 2],
    /// Leg extension beyond which stance hands over to flight, m.
    pub extension_switch: f64,
    /// Symmetric clamp on the flight integral accumulator, rad·s.
    pub integral_clamp: f64,
    /// Controller evaluation rate, Hz.
    pub rate_hz: f64,
}

impl Default for ControllerConfig {
    /// The canonical continuous-hopping gains: a soft virtual spring with
    /// low damping so the stance oscillation pumps the hop, a deeply folded
    /// flight pose for a gentle catch, and a retraction fast enough to clear
    /// the foot by apex.
    fn default() -> Self {
        ControllerConfig {
            k_s: 300.0,
            d_s: 15.0,
            z_target: 0.495,
            kp: [170.0, 170.0],
            ki: [50.0, 50.0],
            kd: [27.0, 27.0],
            flight_pose: [-1.141, 2.20],
            extension_switch: 0.4,
            integral_clamp: 0.5,
            rate_hz: 2500.0,
        }
    }
}

/// Controller phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Stance,
    Flight,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Stance => "stance",
            Phase::Flight => "flight",
        }
    }
}

/// Mutable controller state: phase, flight integral and time in phase.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub phase: Phase,
    pub integral: Vector2<f64>,
    pub time_in_phase: f64,
}

impl PhaseState {
    pub fn new(phase: Phase) -> Self {
        PhaseState {
            phase,
            integral: Vector2::zeros(),
            time_in_phase: 0.0,
        }
    }
}

/// Vertical force of the virtual base spring, `k_s (z* − z_b) − d_s ż_b`;
/// the horizontal components are identically zero.
pub fn virtual_spring_force(z_b: f64, zd_b: f64, config: &ControllerConfig) -> f64 {
    config.k_s * (config.z_target - z_b) - config.d_s * zd_b
}

/// Stance torques realizing the virtual spring on top of quasi-static weight
/// support: the contact force is taken as the weight reaction plus the
/// virtual force, and the joint rows of the quasi-static balance are solved
/// for the torques.
pub fn vmc_stance_torque(
    model: &LegModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
    config: &ControllerConfig,
    torque_limit: f64,
) -> Vector2<f64> {
    let f_s = virtual_spring_force(q[0], qd[0], config);
    let f_desired = Vector2::new(0.0, model.total_mass() * model.gravity + f_s);
    let (_, g) = nonlinear_and_gravity(model, q, &Vector3::zeros());
    let generalized = g - foot_jacobian(model, q).transpose() * f_desired;
    clamp_torque(selection_matrix() * generalized, torque_limit)
}

/// Flight PID acceleration law on the joint pose target with zero velocity
/// reference; the integral term is passed in pre-clamped.
pub fn pid_accel(
    q_joints: &Vector2<f64>,
    qd_joints: &Vector2<f64>,
    integral: &Vector2<f64>,
    config: &ControllerConfig,
) -> Vector2<f64> {
    let err = Vector2::new(
        config.flight_pose[0] - q_joints[0],
        config.flight_pose[1] - q_joints[1],
    );
    Vector2::new(
        config.kp[0] * err[0] + config.ki[0] * integral[0] - config.kd[0] * qd_joints[0],
        config.kp[1] * err[1] + config.ki[1] * integral[1] - config.kd[1] * qd_joints[1],
    )
}

/// Inverse-dynamics torques realizing a desired joint acceleration in
/// flight, `τ = S(M qdd* + b + g)`.
///
/// The base is unactuated and ballistic, so its acceleration entry of the
/// desired vector is not free: it is solved from the base row with zero
/// contact force. With an exact model, the realized joint accelerations then
/// equal the request exactly.
pub fn idc_flight_torque(
    model: &LegModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
    qdd_joints: &Vector2<f64>,
    torque_limit: f64,
) -> Vector2<f64> {
    let m = mass_matrix(model, q);
    let (b, g) = nonlinear_and_gravity(model, q, qd);
    // Base row: M00 zdd + M01 qdd1 + M02 qdd2 + b0 + g0 = 0.
    let zdd = -(m[(0, 1)] * qdd_joints[0] + m[(0, 2)] * qdd_joints[1] + b[0] + g[0]) / m[(0, 0)];
    let qdd = Vector3::new(zdd, qdd_joints[0], qdd_joints[1]);
    let generalized = m * qdd + b + g;
    clamp_torque(selection_matrix() * generalized, torque_limit)
}

/// Pure two-state phase transition: flight is enforced whenever the leg
/// extends past the threshold, otherwise contact selects stance. The
/// extension rule taking priority keeps the machine from chattering during
/// lift-off, when the extended foot is still brushing the ground.
pub fn phase_switch(
    phase: Phase,
    contact: bool,
    extension: f64,
    config: &ControllerConfig,
) -> Phase {
    if extension > config.extension_switch {
        Phase::Flight
    } else if contact {
        Phase::Stance
    } else {
        phase
    }
}

fn clamp_torque(tau: Vector2<f64>, limit: f64) -> Vector2<f64> {
    Vector2::new(tau[0].clamp(-limit, limit), tau[1].clamp(-limit, limit))
}

/// Stateful wrapper the simulator ticks at the controller rate.
#[derive(Debug, Clone)]
pub struct Controller {
    pub config: ControllerConfig,
    pub state: PhaseState,
}

impl Controller {
    pub fn new(config: ControllerConfig, initial: Phase) -> Self {
        Controller {
            config,
            state: PhaseState::new(initial),
        }
    }

    /// One controller tick: update phase, integrate the flight error and
    /// return joint torque commands.
    pub fn update(
        &mut self,
        model: &LegModel,
        q: &Vector3<f64>,
        qd: &Vector3<f64>,
        contact: bool,
        extension: f64,
        torque_limit: f64,
        dt: f64,
    ) -> Vector2<f64> {
        let next = phase_switch(self.state.phase, contact, extension, &self.config);
        if next != self.state.phase {
            self.state.integral = Vector2::zeros();
            self.state.time_in_phase = 0.0;
        }
        self.state.phase = next;
        self.state.time_in_phase += dt;

        match self.state.phase {
            Phase::Stance => vmc_stance_torque(model, q, qd, &self.config, torque_limit),
            Phase::Flight => {
                let q_j = Vector2::new(q[1], q[2]);
                let qd_j = Vector2::new(qd[1], qd[2]);
                let clamp = self.config.integral_clamp;
                let err = Vector2::new(
                    self.config.flight_pose[0] - q_j[0],
                    self.config.flight_pose[1] - q_j[1],
                );
                self.state.integral = Vector2::new(
                    (self.state.integral[0] + err[0] * dt).clamp(-clamp, clamp),
                    (self.state.integral[1] + err[1] * dt).clamp(-clamp, clamp),
                );
                let qdd = pid_accel(&q_j, &qd_j, &self.state.integral, &self.config);
                idc_flight_torque(model, q, qd, &qdd, torque_limit)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact;
    use crate::dynamics::{forward_dynamics, leg_extension};
    use crate::model::LegModel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn model() -> LegModel {
        LegModel::default_leg()
    }

    fn config() -> ControllerConfig {
        ControllerConfig::default()
    }

    #[test]
    fn spring_force_cases() {
        let mut cfg = config();
        cfg.k_s = 1000.0;
        cfg.d_s = 123.0;
        cfg.z_target = 0.5;
        assert_eq!(virtual_spring_force(0.5, 0.0, &cfg), 0.0);
        assert_relative_eq!(virtual_spring_force(0.45, 0.0, &cfg), 50.0, max_relative = 1e-12);
        cfg.k_s = 0.0;
        cfg.d_s = 30.0;
        assert_relative_eq!(virtual_spring_force(0.7, -1.0, &cfg), 30.0, max_relative = 1e-12);
    }

    #[test]
    fn stance_torques_close_the_static_equilibrium() {
        let model = model();
        let mut cfg = config();
        for (hip, knee) in [(-0.4, 0.9), (-0.7, 1.5), (-0.2, 0.5)] {
            let q = Vector3::new(0.5, hip, knee);
            cfg.z_target = q[0]; // spring relaxed at this height
            let qd = Vector3::zeros();
            let tau = vmc_stance_torque(&model, &q, &qd, &cfg, 70.0);
            let weight = Vector2::new(0.0, model.total_mass() * model.gravity);
            let qdd = forward_dynamics(&model, &q, &qd, &tau, &weight).unwrap();
            assert!(qdd.norm() <= 1e-6, "qdd = {qdd:?} at pose ({hip}, {knee})");
        }
    }

    #[test]
    fn stance_torques_match_a_hand_rolled_jacobian_product() {
        // Gravity-free model, relaxed spring: only the weight-reaction term
        // is left, which is −S·J_cᵀ·(0, m·g)... with g = 0 the total mass
        // term also vanishes, so drive the check with an explicit force via
        // the spring instead.
        let mut model = model();
        model.gravity = 0.0;
        let mut cfg = config();
        cfg.k_s = 100.0;
        cfg.d_s = 0.0;
        cfg.z_target = 0.6;
        let q = Vector3::new(0.5, -0.3, 0.8);
        let tau = vmc_stance_torque(&model, &q, &Vector3::zeros(), &cfg, 70.0);
        // By hand: f = (0, k(z*−z)) = (0, 10), τ_j = −J_c[:,j]·f.
        let [l1, l2] = model.link_lengths;
        let dz_dhip = l1 * (-0.3f64).sin() + l2 * (0.5f64).sin();
        let dz_dknee = l2 * (0.5f64).sin();
        assert_relative_eq!(tau[0], -10.0 * dz_dhip, max_relative = 1e-12);
        assert_relative_eq!(tau[1], -10.0 * dz_dknee, max_relative = 1e-12);
    }

    #[test]
    fn stretched_singularity_decouples_vertical_force_from_the_joints() {
        let model = model();
        let mut cfg = config();
        let q = Vector3::new(0.6, 0.0, 0.0);
        cfg.z_target = 0.7; // spring pushes, but the z-rows of J vanish
        let tau = vmc_stance_torque(&model, &q, &Vector3::zeros(), &cfg, 70.0);
        assert_abs_diff_eq!(tau[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tau[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn stance_torque_is_affine_in_height_error_and_base_rate() {
        let model = model();
        let cfg = config();
        let q0 = Vector3::new(0.5, -0.5, 1.1);
        let tau_at = |dz: f64, zd: f64| {
            let q = Vector3::new(cfg.z_target - dz, q0[1], q0[2]);
            vmc_stance_torque(&model, &q, &Vector3::new(zd, 0.0, 0.0), &cfg, 1e9)
        };
        let base = tau_at(0.0, 0.0);
        let slope_dz = (tau_at(0.02, 0.0) - base) / 0.02;
        let slope_zd = (tau_at(0.0, 0.5) - base) / 0.5;
        // affine: the same slope at other magnitudes
        assert_relative_eq!((tau_at(0.07, 0.0) - base)[1], 0.07 * slope_dz[1], max_relative = 1e-9);
        assert_relative_eq!((tau_at(0.0, 1.7) - base)[1], 1.7 * slope_zd[1], max_relative = 1e-9);
        // and the two coefficients are k_s/d_s multiples of the same Jacobian column
        assert_relative_eq!(slope_dz[1] / cfg.k_s, -slope_zd[1] / cfg.d_s, max_relative = 1e-9);
    }

    #[test]
    fn pid_cases() {
        let mut cfg = config();
        cfg.kp = [100.0, 100.0];
        cfg.ki = [0.0, 0.0];
        cfg.kd = [0.0, 0.0];
        cfg.flight_pose = [0.0, 0.0];
        let zero = pid_accel(
            &Vector2::zeros(),
            &Vector2::zeros(),
            &Vector2::zeros(),
            &cfg,
        );
        assert_eq!(zero, Vector2::zeros());
        let p_only = pid_accel(
            &Vector2::new(-0.1, 0.2),
            &Vector2::zeros(),
            &Vector2::zeros(),
            &cfg,
        );
        assert_relative_eq!(p_only[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(p_only[1], -20.0, max_relative = 1e-12);
    }

    #[test]
    fn integral_saturates_at_the_clamp() {
        let model = model();
        let mut cfg = config();
        cfg.flight_pose = [1.0, 1.0]; // constant unit error from the zero pose
        cfg.integral_clamp = 0.05;
        let mut ctrl = Controller::new(cfg, Phase::Flight);
        let q = Vector3::new(2.0, 0.0, 0.0);
        for _ in 0..10_000 {
            ctrl.update(&model, &q, &Vector3::zeros(), false, 0.49, 70.0, 1e-3);
        }
        assert_eq!(ctrl.state.integral[0], 0.05);
        assert_eq!(ctrl.state.integral[1], 0.05);
    }

    #[test]
    fn massless_links_reduce_idc_to_reflected_rotor_inertia() {
        let mut model = model();
        model.link_masses = [0.0, 0.0];
        model.link_inertias = [0.0, 0.0];
        let q = Vector3::new(0.8, 0.4, 0.9);
        let qdd = Vector2::new(3.0, -7.0);
        let tau = idc_flight_torque(&model, &q, &Vector3::zeros(), &qdd, 1e9);
        assert_relative_eq!(tau[0], model.reflected_rotor_inertia(0) * 3.0, max_relative = 1e-12);
        assert_relative_eq!(tau[1], model.reflected_rotor_inertia(1) * -7.0, max_relative = 1e-12);
    }

    #[test]
    fn idc_holds_the_joints_during_ballistic_flight() {
        // qdd* = 0 at rest: the torque is joint gravity compensation that is
        // consistent with the falling base, so the joints must not drift.
        let model = model();
        let q0 = Vector3::new(2.0, -0.5, 1.2);
        let mut q = q0;
        let mut qd = Vector3::zeros();
        let dt = 1e-4;
        for _ in 0..2000 {
            let tau = idc_flight_torque(&model, &q, &qd, &Vector2::zeros(), 70.0);
            let qdd = forward_dynamics(&model, &q, &qd, &tau, &Vector2::zeros()).unwrap();
            qd += qdd * dt;
            q += qd * dt;
        }
        let drift_deg = ((q[1] - q0[1]).abs().max((q[2] - q0[2]).abs())).to_degrees();
        assert!(drift_deg < 0.5, "joint drift {drift_deg}° over 0.2 s");
    }

    #[test]
    fn idc_tracks_a_knee_sine_in_flight() {
        // 2 Hz knee reference tracked with the exact model; error < 2 % of
        // the amplitude. PD on the reference with feedforward acceleration.
        let model = model();
        let amp = 0.3;
        let omega = 2.0 * std::f64::consts::PI * 2.0;
        let (kp, kd) = (900.0, 60.0);
        let dt = 1e-4;
        let mut q = Vector3::new(3.0, 0.0, 0.0);
        let mut qd = Vector3::zeros();
        let mut worst: f64 = 0.0;
        for k in 0..5000 {
            let t = k as f64 * dt;
            let r = amp * (1.0 - (omega * t).cos()) / 2.0;
            let rd = amp * omega * (omega * t).sin() / 2.0;
            let rdd = amp * omega * omega * (omega * t).cos() / 2.0;
            let qdd_des = Vector2::new(
                kp * (0.0 - q[1]) + kd * (0.0 - qd[1]),
                rdd + kp * (r - q[2]) + kd * (rd - qd[2]),
            );
            let tau = idc_flight_torque(&model, &q, &qd, &qdd_des, 70.0);
            let qdd = forward_dynamics(&model, &q, &qd, &tau, &Vector2::zeros()).unwrap();
            qd += qdd * dt;
            q += qd * dt;
            if t > 0.5 {
                worst = worst.max((q[2] - r).abs());
            }
        }
        assert!(worst < 0.02 * amp, "tracking error {worst} rad");
    }

    #[test]
    fn phase_switch_table() {
        let cfg = config();
        assert_eq!(phase_switch(Phase::Flight, true, 0.3, &cfg), Phase::Stance);
        assert_eq!(phase_switch(Phase::Stance, true, 0.41, &cfg), Phase::Flight);
        assert_eq!(phase_switch(Phase::Stance, true, 0.39, &cfg), Phase::Stance);
        assert_eq!(phase_switch(Phase::Stance, false, 0.39, &cfg), Phase::Stance);
        assert_eq!(phase_switch(Phase::Flight, false, 0.45, &cfg), Phase::Flight);
    }

    #[test]
    fn transitions_reset_the_integral() {
        let model = model();
        let cfg = config();
        let mut ctrl = Controller::new(cfg, Phase::Flight);
        let q = Vector3::new(2.0, 0.0, 0.0);
        for _ in 0..100 {
            ctrl.update(&model, &q, &Vector3::zeros(), false, 0.49, 70.0, 1e-3);
        }
        assert!(ctrl.state.integral.norm() > 0.0);
        // touchdown
        ctrl.update(&model, &q, &Vector3::zeros(), true, 0.39, 70.0, 1e-3);
        assert_eq!(ctrl.state.phase, Phase::Stance);
        assert_eq!(ctrl.state.integral, Vector2::zeros());
    }

    #[test]
    fn controller_outputs_respect_the_torque_limit() {
        let model = model();
        let mut cfg = config();
        cfg.k_s = 1e6; // absurd spring to force saturation
        cfg.z_target = 2.0;
        let q = Vector3::new(0.4, -0.6, 1.3);
        let tau = vmc_stance_torque(&model, &q, &Vector3::zeros(), &cfg, 70.0);
        assert!(tau[0].abs() <= 70.0 && tau[1].abs() <= 70.0);
        assert!(tau.amax() == 70.0, "expected saturation, got {tau:?}");
    }

    #[test]
    fn hopping_pose_is_reachable_and_inside_the_switch_band() {
        // The default flight pose must keep the leg shorter than the switch
        // threshold, otherwise stance would end immediately at touchdown.
        let model = model();
        let cfg = config();
        let q = Vector3::new(1.0, cfg.flight_pose[0], cfg.flight_pose[1]);
        assert!(model.within_rom(q[1], q[2]));
        assert!(leg_extension(&model, &q) < cfg.extension_switch);
        // and the touchdown pose actually reaches the ground when falling
        let ground = contact::GroundModel::default();
        let q_td = Vector3::new(0.3, cfg.flight_pose[0], cfg.flight_pose[1]);
        assert!(contact::detect_contact(&model, &ground, &q_td));
    }
}
