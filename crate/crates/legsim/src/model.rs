//! Physical parameters of the leg, the motors and the cable transmission,
//! plus calibration against the prototype reference specifications.
//!
//! The reference figures the default model is calibrated to:
//! 4.0 kg leg mass (6.0 kg with the 2.0 kg payload), 0.24 m / 0.25 m link
//! lengths, 0.062 kg·m² hip-axis inertia of the stretched leg (links only),
//! gear ratios 5.0 / 5.33, 70 Nm torque and 40 rad/s speed limits, 0.07 Nm
//! torque resolution, 4.58 Nm/√W knee motor constant and a 1614 Nm/rad
//! cable spring constant at the output pulley.

use thiserror::Error;

/// Joint index for the hip flexion-extension joint.
pub const HIP: usize = 0;
/// Joint index for the knee flexion-extension joint.
pub const KNEE: usize = 1;

/// Reference leg-only mass in kg.
pub const REF_LEG_MASS: f64 = 4.0;
/// Reference link lengths (thigh, shank) in m.
pub const REF_LINK_LENGTHS: [f64; 2] = [0.24, 0.25];
/// Reference hip-axis inertia of the fully stretched leg, links only, kg·m².
pub const REF_STRETCHED_HIP_INERTIA: f64 = 0.062;
/// Reference cable torsional stiffness at the output pulley, Nm/rad.
pub const REF_CABLE_STIFFNESS: f64 = 1614.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("infeasible inertia target: {detail}")]
    InfeasibleInertia { detail: String },
}

/// Rigid-body parameters of the rail-mounted two-joint leg.
///
/// Angle convention: zero joint angle is the fully stretched, straight-down
/// pose; positive angles swing the foot forward (+x). The hip pivot sits
/// `base_hip_offset` below the base coordinate `z_b`, so the stretched leg
/// spans `base_hip_offset + link_lengths[0] + link_lengths[1]` = 0.57 m
/// from base to foot center with the defaults.
#[derive(Debug, Clone)]
pub struct LegModel {
    /// Carriage, stators and structure rigidly attached to the rail carriage, kg.
    pub base_mass: f64,
    /// Extra payload fixed to the base, kg.
    pub payload_mass: f64,
    /// Thigh and shank lengths, m.
    pub link_lengths: [f64; 2],
    /// Thigh and shank masses, kg.
    pub link_masses: [f64; 2],
    /// CoM distance from the proximal joint along each link, m.
    pub link_com_offsets: [f64; 2],
    /// Link inertias about their own CoM, kg·m².
    pub link_inertias: [f64; 2],
    /// Rotor inertias at the rotor, before gearing, kg·m².
    pub rotor_inertias: [f64; 2],
    /// Gear ratios (hip, knee).
    pub gear_ratios: [f64; 2],
    /// Vertical distance from the base coordinate to the hip pivot, m.
    pub base_hip_offset: f64,
    /// Radius of the foot contact sphere, m.
    pub foot_radius: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Joint range of motion, radians, `[min, max]` per joint.
    /// Hip is symmetric (300° total), knee is flexion-only (180° total).
    pub rom_limits: [[f64; 2]; 2],
}

impl LegModel {
    /// Total mass carried by the rail carriage coordinate, kg.
    pub fn total_mass(&self) -> f64 {
        self.base_mass + self.payload_mass + self.link_masses[0] + self.link_masses[1]
    }

    /// Leg-only mass (everything except payload), kg.
    pub fn leg_mass(&self) -> f64 {
        self.base_mass + self.link_masses[0] + self.link_masses[1]
    }

    /// Rotor inertia reflected to the joint side, `I_r * ratio^2`.
    pub fn reflected_rotor_inertia(&self, joint: usize) -> f64 {
        self.rotor_inertias[joint] * self.gear_ratios[joint] * self.gear_ratios[joint]
    }

    /// Hip-axis inertia of the fully stretched leg, links only.
    pub fn stretched_hip_inertia(&self) -> f64 {
        let [l1, _] = self.link_lengths;
        let [m1, m2] = self.link_masses;
        let [c1, c2] = self.link_com_offsets;
        let [i1, i2] = self.link_inertias;
        (i1 + m1 * c1 * c1) + (i2 + m2 * (l1 + c2) * (l1 + c2))
    }

    /// Leg length from base to foot center at full stretch, m.
    pub fn stretched_length(&self) -> f64 {
        self.base_hip_offset + self.link_lengths[0] + self.link_lengths[1]
    }

    /// True if both joint angles lie within the range of motion.
    pub fn within_rom(&self, q_hip: f64, q_knee: f64) -> bool {
        let ok = |q: f64, lim: [f64; 2]| q >= lim[0] && q <= lim[1];
        ok(q_hip, self.rom_limits[0]) && ok(q_knee, self.rom_limits[1])
    }

    /// Default leg calibrated to the reference figures, with the 2.0 kg payload.
    pub fn default_leg() -> Self {
        let mut model = calibrate_mass_distribution(
            REF_LEG_MASS,
            REF_STRETCHED_HIP_INERTIA,
            REF_LINK_LENGTHS,
        )
        .expect("reference calibration is feasible");
        model.payload_mass = 2.0;
        model
    }
}

/// Fraction of the link mass budget assigned to the shank.
pub const DEFAULT_SHANK_MASS_FRACTION: f64 = 0.4;
/// Link CoM position as a fraction of link length from the proximal joint.
pub const DEFAULT_COM_FRACTION: f64 = 0.45;
/// Default rotor inertia before gearing, kg·m² (115 mm class frameless rotor).
pub const DEFAULT_ROTOR_INERTIA: f64 = 8.0e-4;

/// Solves a leg mass distribution that reproduces a total leg mass and a
/// stretched hip-axis inertia.
///
/// Each link is modeled as a point mass at `com_fraction` of its length plus
/// a rod-like rotary inertia `m l²/12` about the CoM. With the shank carrying
/// `shank_fraction` of the link mass budget, the stretched hip inertia is
/// linear in the total link mass, which is solved in closed form; the
/// remainder of the leg mass goes to the base.
pub fn calibrate_mass_distribution(
    total_leg_mass: f64,
    stretched_hip_inertia: f64,
    link_lengths: [f64; 2],
) -> Result<LegModel, ModelError> {
    calibrate_with_fractions(
        total_leg_mass,
        stretched_hip_inertia,
        link_lengths,
        DEFAULT_SHANK_MASS_FRACTION,
        DEFAULT_COM_FRACTION,
    )
}

/// [`calibrate_mass_distribution`] with explicit mass-split and CoM fractions.
pub fn calibrate_with_fractions(
    total_leg_mass: f64,
    stretched_hip_inertia: f64,
    link_lengths: [f64; 2],
    shank_fraction: f64,
    com_fraction: f64,
) -> Result<LegModel, ModelError> {
    check_positive("total_leg_mass", total_leg_mass)?;
    check_positive("link_lengths[0]", link_lengths[0])?;
    check_positive("link_lengths[1]", link_lengths[1])?;
    if !(0.0..=1.0).contains(&shank_fraction) || !(0.0..1.0).contains(&com_fraction) {
        return Err(ModelError::InfeasibleInertia {
            detail: format!(
                "fractions out of range: shank {shank_fraction}, com {com_fraction}"
            ),
        });
    }

    let [l1, l2] = link_lengths;
    let rod = 1.0 / 12.0;
    // Per-unit-mass hip inertia of each link at full stretch.
    let thigh_coef = l1 * l1 * (rod + com_fraction * com_fraction);
    let shank_coef = l2 * l2 * rod + (l1 + com_fraction * l2) * (l1 + com_fraction * l2);
    let coef = (1.0 - shank_fraction) * thigh_coef + shank_fraction * shank_coef;

    if stretched_hip_inertia <= 0.0 {
        return Err(ModelError::InfeasibleInertia {
            detail: format!(
                "target {stretched_hip_inertia} kg·m² needs zero link mass; point masses at \
                 nonzero radii cannot reproduce it"
            ),
        });
    }
    let link_mass_total = stretched_hip_inertia / coef;
    if link_mass_total > total_leg_mass {
        return Err(ModelError::InfeasibleInertia {
            detail: format!(
                "target {stretched_hip_inertia} kg·m² needs {link_mass_total:.4} kg of link \
                 mass but only {total_leg_mass} kg is available"
            ),
        });
    }

    let m2 = shank_fraction * link_mass_total;
    let m1 = link_mass_total - m2;
    Ok(LegModel {
        base_mass: total_leg_mass - link_mass_total,
        payload_mass: 0.0,
        link_lengths,
        link_masses: [m1, m2],
        link_com_offsets: [com_fraction * l1, com_fraction * l2],
        link_inertias: [m1 * l1 * l1 * rod, m2 * l2 * l2 * rod],
        rotor_inertias: [DEFAULT_ROTOR_INERTIA; 2],
        gear_ratios: [5.0, 5.33],
        base_hip_offset: 0.08,
        foot_radius: 0.02,
        gravity: 9.81,
        rom_limits: [
            [-150f64.to_radians(), 150f64.to_radians()],
            [0.0, 180f64.to_radians()],
        ],
    })
}

/// Motor, drive and battery parameters, torques referenced to the joint side.
#[derive(Debug, Clone)]
pub struct MotorParams {
    /// Torque constants K_T at the joint side, Nm/A.
    pub torque_constants: [f64; 2],
    /// Motor constants K_m at the joint side, Nm/√W.
    pub motor_constants: [f64; 2],
    /// Torque limit at the joint, Nm.
    pub max_joint_torque: f64,
    /// Speed limit at the joint, rad/s.
    pub max_joint_speed: f64,
    /// Smallest realizable torque increment, Nm.
    pub torque_resolution: f64,
    /// Current loop bandwidth, Hz.
    pub current_loop_bandwidth_hz: f64,
    /// Nominal battery bus voltage, V.
    pub bus_voltage: f64,
    /// Idle power of the motor controllers and communication, W.
    pub electronics_power: f64,
    /// Fraction of returned electrical power absorbed by the battery.
    pub regen_efficiency: f64,
    /// Quantize realized torque to `torque_resolution` steps.
    pub quantization_enabled: bool,
    /// Constant torque bias at the output, Nm.
    pub static_torque_offset: f64,
    /// Multiplicative current-to-torque mapping error (1.0 = nominal).
    pub torque_scale: f64,
}

impl MotorParams {
    pub fn default_motors() -> Self {
        // Knee motor constant is the published joint-side figure; the hip
        // shares the same motor behind a 5.0 instead of 5.33 ratio.
        let km_knee = 4.58;
        let km_motor = km_knee / 5.33;
        // Motor-side torque constant of the 115 mm servo kit class.
        let kt_motor = 0.28;
        MotorParams {
            torque_constants: [kt_motor * 5.0, kt_motor * 5.33],
            motor_constants: [km_motor * 5.0, km_knee],
            max_joint_torque: 70.0,
            max_joint_speed: 40.0,
            torque_resolution: 0.07,
            current_loop_bandwidth_hz: 1000.0,
            bus_voltage: 53.0,
            electronics_power: 9.0,
            regen_efficiency: 1.0,
            quantization_enabled: false,
            static_torque_offset: 0.0,
            torque_scale: 1.0,
        }
    }
}

/// Cable-pulley transmission parameters.
///
/// The torsional stiffness follows from the cable geometry via
/// [`compute_cable_stiffness`]; the damping was not derivable from geometry
/// and is a tuned configuration value.
#[derive(Debug, Clone)]
pub struct CableParams {
    /// Cable Young's modulus, Pa.
    pub youngs_modulus: f64,
    /// Cable cross section, m².
    pub cross_section: f64,
    /// Loaded free length of one cable side, m.
    pub free_length: f64,
    /// Rotor-hub pulley radius, m.
    pub pulley_radius_in: f64,
    /// Output pulley radius, m.
    pub pulley_radius_out: f64,
    /// Load-bearing strands; the pretensioned antagonistic pair counts as 2.
    pub strand_count: u32,
    /// Torsional stiffness at the output pulley, Nm/rad.
    pub stiffness: f64,
    /// Torsional damping at the output pulley, Nm·s/rad.
    pub damping: f64,
}

impl CableParams {
    /// Default transmission: geometry solved so the antagonistic pair gives
    /// exactly the 1614 Nm/rad reference stiffness at a 45 mm output pulley.
    pub fn default_cable() -> Self {
        let youngs_modulus = 50e9; // high-modulus polyethylene fiber
        let diameter = 3.0e-3;
        let cross_section = std::f64::consts::PI * (diameter / 2.0) * (diameter / 2.0);
        let pulley_radius_out = 0.045;
        let strand_count = 2u32;
        let free_length = f64::from(strand_count) * youngs_modulus * cross_section
            * pulley_radius_out
            * pulley_radius_out
            / REF_CABLE_STIFFNESS;
        let stiffness = compute_cable_stiffness(
            youngs_modulus,
            cross_section,
            free_length,
            pulley_radius_out,
            strand_count,
        )
        .expect("default cable geometry is positive");
        CableParams {
            youngs_modulus,
            cross_section,
            free_length,
            pulley_radius_in: pulley_radius_out / 5.0,
            pulley_radius_out,
            strand_count,
            stiffness,
            damping: 2.3,
        }
    }
}

/// Torsional stiffness of the cable transmission at the output pulley:
/// `k = strands · (E·A/L) · r_out²` in Nm/rad.
pub fn compute_cable_stiffness(
    youngs_modulus: f64,
    cross_section: f64,
    free_length: f64,
    pulley_radius_out: f64,
    strands: u32,
) -> Result<f64, ModelError> {
    check_positive("youngs_modulus", youngs_modulus)?;
    check_positive("cross_section", cross_section)?;
    check_positive("free_length", free_length)?;
    check_positive("pulley_radius_out", pulley_radius_out)?;
    check_positive("strands", f64::from(strands))?;
    let axial = youngs_modulus * cross_section / free_length;
    Ok(f64::from(strands) * axial * pulley_radius_out * pulley_radius_out)
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

/// Outcome of one validation check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Pass/fail report over the reference-specification constraints.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for check in &self.checks {
            let mark = if check.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {}: {}", check.name, check.detail)?;
        }
        Ok(())
    }
}

/// Checks a parameter set against the reference specifications and basic
/// physical plausibility. Returns a report, never an error.
pub fn validate(model: &LegModel, motors: &MotorParams, cable: &CableParams) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    let leg_mass = model.leg_mass();
    push(
        "leg mass 4.0 kg",
        (leg_mass - REF_LEG_MASS).abs() < 1e-6,
        format!("leg-only mass {leg_mass:.6} kg (payload {:.3} kg excluded)", model.payload_mass),
    );
    push(
        "link lengths 0.24 m / 0.25 m",
        (model.link_lengths[0] - REF_LINK_LENGTHS[0]).abs() < 1e-9
            && (model.link_lengths[1] - REF_LINK_LENGTHS[1]).abs() < 1e-9,
        format!("thigh {} m, shank {} m", model.link_lengths[0], model.link_lengths[1]),
    );
    let hip_inertia = model.stretched_hip_inertia();
    push(
        "stretched hip inertia 0.062 kg·m² (links only, 1%)",
        (hip_inertia - REF_STRETCHED_HIP_INERTIA).abs() <= 0.01 * REF_STRETCHED_HIP_INERTIA,
        format!("calibrated value {hip_inertia:.6} kg·m²"),
    );
    let positives = [
        ("base mass", model.base_mass),
        ("thigh mass", model.link_masses[0]),
        ("shank mass", model.link_masses[1]),
        ("thigh inertia", model.link_inertias[0]),
        ("shank inertia", model.link_inertias[1]),
        ("rotor inertia hip", model.rotor_inertias[0]),
        ("rotor inertia knee", model.rotor_inertias[1]),
        ("gravity", model.gravity),
        ("foot radius", model.foot_radius),
    ];
    let bad: Vec<&str> = positives
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(n, _)| *n)
        .collect();
    push(
        "masses, lengths and inertias strictly positive",
        bad.is_empty(),
        if bad.is_empty() {
            "all positive".to_string()
        } else {
            format!("nonpositive: {}", bad.join(", "))
        },
    );
    push(
        "gear ratios at least 1",
        model.gear_ratios.iter().all(|&r| r >= 1.0),
        format!("hip {}, knee {}", model.gear_ratios[0], model.gear_ratios[1]),
    );
    push(
        "range of motion 300° / 180°",
        {
            let span_hip = (model.rom_limits[0][1] - model.rom_limits[0][0]).to_degrees();
            let span_knee = (model.rom_limits[1][1] - model.rom_limits[1][0]).to_degrees();
            (span_hip - 300.0).abs() < 1e-6 && (span_knee - 180.0).abs() < 1e-6
        },
        format!(
            "hip [{:.0}°, {:.0}°], knee [{:.0}°, {:.0}°]",
            model.rom_limits[0][0].to_degrees(),
            model.rom_limits[0][1].to_degrees(),
            model.rom_limits[1][0].to_degrees(),
            model.rom_limits[1][1].to_degrees()
        ),
    );

    push(
        "motor constants positive",
        motors.motor_constants.iter().all(|&k| k > 0.0),
        format!("hip {:.4}, knee {:.4} Nm/√W", motors.motor_constants[0], motors.motor_constants[1]),
    );
    push(
        "torque limit 70 Nm, resolution 0.07 Nm",
        motors.max_joint_torque == 70.0 && (motors.torque_resolution - 0.07).abs() < 1e-12,
        format!("limit {} Nm, resolution {} Nm", motors.max_joint_torque, motors.torque_resolution),
    );
    push(
        "joint speed limit 40 rad/s",
        motors.max_joint_speed == 40.0,
        format!("{} rad/s", motors.max_joint_speed),
    );
    push(
        "regeneration efficiency in [0, 1]",
        (0.0..=1.0).contains(&motors.regen_efficiency),
        format!("{}", motors.regen_efficiency),
    );

    push(
        "cable stiffness positive, damping nonnegative",
        cable.stiffness > 0.0 && cable.damping >= 0.0,
        format!("k_c {} Nm/rad, d_c {} Nm·s/rad", cable.stiffness, cable.damping),
    );
    let geometric = compute_cable_stiffness(
        cable.youngs_modulus,
        cable.cross_section,
        cable.free_length,
        cable.pulley_radius_out,
        cable.strand_count,
    );
    push(
        "cable stiffness consistent with geometry (1e-9 relative)",
        match geometric {
            Ok(k) => (k - cable.stiffness).abs() <= 1e-9 * cable.stiffness,
            Err(_) => false,
        },
        match geometric {
            Ok(k) => format!("geometry gives {k:.9} Nm/rad vs stored {:.9}", cable.stiffness),
            Err(ref e) => format!("geometry invalid: {e}"),
        },
    );

    // Series resonance of the reflected rotor against the cable spring; the
    // fixed-step integrators need this well below their stability limit.
    let worst = model
        .reflected_rotor_inertia(HIP)
        .min(model.reflected_rotor_inertia(KNEE));
    let resonance_hz = (cable.stiffness / worst).sqrt() / (2.0 * std::f64::consts::PI);
    push(
        "cable resonance below 1 kHz",
        resonance_hz < 1000.0,
        format!("highest series resonance {resonance_hz:.1} Hz"),
    );

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_calibration_hits_mass_and_inertia() {
        let model = calibrate_mass_distribution(4.0, 0.062, [0.24, 0.25]).unwrap();
        assert_relative_eq!(model.leg_mass(), 4.0, max_relative = 1e-12);
        assert_relative_eq!(model.stretched_hip_inertia(), 0.062, max_relative = 1e-9);
        // within the 1% calibration budget with margin
        assert!((model.stretched_hip_inertia() - 0.062).abs() <= 0.00062);
    }

    #[test]
    fn calibration_round_trips_over_a_parameter_grid() {
        for &mass in &[1.0, 2.5, 4.0, 8.0] {
            for &inertia in &[0.01, 0.062, 0.15] {
                let model = calibrate_mass_distribution(mass, inertia, [0.24, 0.25]);
                let Ok(model) = model else { continue };
                assert_relative_eq!(model.stretched_hip_inertia(), inertia, max_relative = 1e-9);
                assert_relative_eq!(model.leg_mass(), mass, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zero_inertia_target_is_infeasible() {
        let err = calibrate_mass_distribution(4.0, 0.0, [0.24, 0.25]).unwrap_err();
        assert!(matches!(err, ModelError::InfeasibleInertia { .. }));
    }

    #[test]
    fn oversized_inertia_target_is_infeasible() {
        // All 2 kg as a point mass at the foot gives m·(l1+l2)² = 2·0.49²;
        // anything above that bound must be rejected for a 2 kg leg.
        let bound = 2.0 * 0.49 * 0.49;
        let err = calibrate_mass_distribution(2.0, bound * 1.5, [0.24, 0.25]).unwrap_err();
        assert!(matches!(err, ModelError::InfeasibleInertia { .. }));
    }

    #[test]
    fn point_mass_hand_formula_matches_calibration_coefficient() {
        // Independent route: rebuild the stretched hip inertia from the
        // returned model by summing point-mass and rod terms by hand.
        let model = calibrate_mass_distribution(2.0, 0.05, [0.24, 0.25]).unwrap();
        let [m1, m2] = model.link_masses;
        let [c1, c2] = model.link_com_offsets;
        let hand = m1 * c1 * c1
            + m1 * 0.24 * 0.24 / 12.0
            + m2 * (0.24 + c2) * (0.24 + c2)
            + m2 * 0.25 * 0.25 / 12.0;
        assert_relative_eq!(hand, 0.05, max_relative = 1e-9);
    }

    #[test]
    fn stiffness_is_linear_in_strands() {
        let single = compute_cable_stiffness(50e9, 7.1e-6, 0.9, 0.045, 1).unwrap();
        let pair = compute_cable_stiffness(50e9, 7.1e-6, 0.9, 0.045, 2).unwrap();
        assert_eq!(pair, 2.0 * single);
    }

    #[test]
    fn stiffness_unit_case() {
        // E·A/L = 1 N/m equivalent at a 1 m pulley radius, single strand.
        let k = compute_cable_stiffness(1.0, 1.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn stiffness_scales_with_radius_squared_and_inverse_length() {
        let base = compute_cable_stiffness(50e9, 7.1e-6, 0.9, 0.045, 2).unwrap();
        let double_r = compute_cable_stiffness(50e9, 7.1e-6, 0.9, 0.090, 2).unwrap();
        let half_l = compute_cable_stiffness(50e9, 7.1e-6, 0.45, 0.045, 2).unwrap();
        assert_relative_eq!(double_r, 4.0 * base, max_relative = 1e-12);
        assert_relative_eq!(half_l, 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn stiffness_rejects_nonpositive_arguments() {
        assert!(compute_cable_stiffness(0.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(compute_cable_stiffness(1.0, -1.0, 1.0, 1.0, 1).is_err());
        assert!(compute_cable_stiffness(1.0, 1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn default_cable_reproduces_reference_stiffness() {
        let cable = CableParams::default_cable();
        assert_relative_eq!(cable.stiffness, 1614.0, max_relative = 1e-9);
    }

    #[test]
    fn default_configuration_validates() {
        let report = validate(
            &LegModel::default_leg(),
            &MotorParams::default_motors(),
            &CableParams::default_cable(),
        );
        assert!(report.all_passed(), "failures:\n{report}");
    }

    #[test]
    fn wrong_link_length_fails_the_length_check() {
        let mut model = LegModel::default_leg();
        model.link_lengths = [0.30, 0.25];
        let report = validate(
            &model,
            &MotorParams::default_motors(),
            &CableParams::default_cable(),
        );
        assert!(report
            .failures()
            .any(|c| c.name.contains("link lengths")));
    }

    #[test]
    fn wrong_leg_mass_fails_the_weight_check() {
        let mut model = LegModel::default_leg();
        model.base_mass += 0.5; // 4.5 kg leg, no payload change
        let report = validate(
            &model,
            &MotorParams::default_motors(),
            &CableParams::default_cable(),
        );
        assert!(report.failures().any(|c| c.name.contains("leg mass")));
    }

    #[test]
    fn knee_motor_constant_is_the_published_value() {
        let motors = MotorParams::default_motors();
        assert_eq!(motors.motor_constants[KNEE], 4.58);
        // same motor behind the hip ratio
        assert_relative_eq!(
            motors.motor_constants[HIP],
            4.58 * 5.0 / 5.33,
            max_relative = 1e-12
        );
    }
}
