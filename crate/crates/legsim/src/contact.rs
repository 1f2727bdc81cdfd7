//! Penalty-based foot-ground contact.
//!
//! A single compliant contact at the foot-sphere bottom: the normal force is
//! a spring-damper on penetration, clamped at zero so the ground never pulls;
//! the tangential force is viscous and capped by a friction cone. Impact
//! losses show up as damper dissipation, which the simulator books under
//! mechanical losses.

use nalgebra::{Vector2, Vector3};

use crate::dynamics::{foot_position, foot_velocity};
use crate::model::LegModel;

/// Compliant ground parameters.
#[derive(Debug, Clone)]
pub struct GroundModel {
    /// Normal stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m.
    pub damping: f64,
    /// Friction coefficient capping the tangential force.
    pub friction_mu: f64,
    /// Viscous tangential damping, N·s/m.
    pub tangential_damping: f64,
    /// Ground height, m.
    pub height: f64,
}

impl Default for GroundModel {
    fn default() -> Self {
        // Standing penetration ≈ 1.2 mm at 6 kg; impacts settle within ~20 ms.
        GroundModel {
            stiffness: 5.0e4,
            damping: 500.0,
            friction_mu: 0.8,
            tangential_damping: 200.0,
            height: 0.0,
        }
    }
}

/// Penetration depth of the foot-sphere bottom into the ground; negative
/// when the foot is airborne.
pub fn penetration(model: &LegModel, ground: &GroundModel, q: &Vector3<f64>) -> f64 {
    let foot_z = foot_position(model, q)[1];
    ground.height - (foot_z - model.foot_radius)
}

/// True iff the foot sphere touches or penetrates the ground (boundary
/// included).
pub fn detect_contact(model: &LegModel, ground: &GroundModel, q: &Vector3<f64>) -> bool {
    penetration(model, ground, q) >= 0.0
}

/// Planar contact force `(f_x, f_z)` acting on the foot.
pub fn contact_force(
    model: &LegModel,
    ground: &GroundModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
) -> Vector2<f64> {
    let pen = penetration(model, ground, q);
    if pen < 0.0 {
        return Vector2::zeros();
    }
    let v = foot_velocity(model, q, qd);
    let pen_rate = -v[1];
    let normal = (ground.stiffness * pen + ground.damping * pen_rate).max(0.0);
    let tangential_raw = -ground.tangential_damping * v[0];
    let cap = ground.friction_mu * normal;
    let tangential = tangential_raw.clamp(-cap, cap);
    Vector2::new(tangential, normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LegModel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn setup() -> (LegModel, GroundModel) {
        (LegModel::default_leg(), GroundModel::default())
    }

    #[test]
    fn airborne_foot_produces_no_force() {
        let (model, ground) = setup();
        let q = Vector3::new(1.2, 0.0, 0.0);
        assert!(!detect_contact(&model, &ground, &q));
        assert_eq!(contact_force(&model, &ground, &q, &Vector3::zeros()), Vector2::zeros());
    }

    #[test]
    fn boundary_contact_is_inclusive() {
        let (model, mut ground) = setup();
        // place the ground exactly at the foot-sphere bottom
        let q = Vector3::new(model.stretched_length() + model.foot_radius, 0.0, 0.0);
        ground.height = crate::dynamics::foot_position(&model, &q)[1] - model.foot_radius;
        assert_eq!(penetration(&model, &ground, &q), 0.0);
        assert!(detect_contact(&model, &ground, &q));
        // one micron above: no contact
        ground.height -= 1e-6;
        assert!(!detect_contact(&model, &ground, &q));
    }

    #[test]
    fn static_penetration_gives_pure_spring_force() {
        let (model, ground) = setup();
        let delta = 2.0e-3;
        let q = Vector3::new(model.stretched_length() + model.foot_radius - delta, 0.0, 0.0);
        let f = contact_force(&model, &ground, &q, &Vector3::zeros());
        assert_relative_eq!(f[1], ground.stiffness * delta, max_relative = 1e-12);
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn normal_force_never_pulls() {
        let (model, ground) = setup();
        // shallow penetration, foot separating fast: damper would go negative
        let delta = 1.0e-4;
        let q = Vector3::new(model.stretched_length() + model.foot_radius - delta, 0.0, 0.0);
        let qd = Vector3::new(2.0, 0.0, 0.0); // base (and foot) moving up
        let f = contact_force(&model, &ground, &q, &qd);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn tangential_force_respects_the_friction_cone() {
        let (model, ground) = setup();
        let delta = 1.0e-3;
        // bent pose so joint rates move the foot horizontally
        let q = Vector3::new(
            model.base_hip_offset + model.foot_radius + 0.44 - delta,
            -0.4,
            0.9,
        );
        for vx in [-5.0f64, -0.01, 0.0, 0.01, 5.0] {
            // pick joint rates producing roughly that foot x velocity
            let jac = crate::dynamics::foot_jacobian(&model, &q);
            let qd = Vector3::new(0.0, vx / jac[(0, 1)], 0.0);
            let f = contact_force(&model, &ground, &q, &qd);
            assert!(f[1] >= 0.0);
            assert!(f[0].abs() <= ground.friction_mu * f[1] + 1e-12);
            if vx != 0.0 && f[1] > 0.0 {
                assert!(f[0] * vx <= 0.0, "tangential force must oppose sliding");
            }
        }
    }
}
